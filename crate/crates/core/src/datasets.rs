//! Synthetic datasets (noisy helix, noisy Swiss roll, Lorenz trajectory) and
//! CSV ingestion.
//!
//! All generators draw from [`ChaCha8Rng`] seeded with `seed_from_u64`, whose
//! stream is fixed across platforms and releases, so the same seed always
//! yields bitwise-identical data.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Default standard deviation of the additive Gaussian noise, in manifold units.
pub const DEFAULT_NOISE_STD: f64 = 0.05;

/// Seeded generator used by every randomized component of the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense `n x p` data set, one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    n: usize,
    p: usize,
}

impl DataMatrix {
    /// Builds a matrix from row-major values. Requires `n >= 2`, `p >= 1` and
    /// finite entries.
    pub fn from_row_major(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", format!("need at least 2 observations, got {n}")));
        }
        if p == 0 {
            return Err(Error::param("p", "need at least one variable"));
        }
        if values.len() != n * p {
            return Err(Error::Dimension {
                context: "DataMatrix::from_row_major",
                expected: n * p,
                actual: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "non-finite entry at row {}, column {}",
                k / p,
                k % p
            )));
        }
        Ok(Self { values, n, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Dimension {
                context: "DataMatrix::from_rows",
                expected: p,
                actual: rows[i].len(),
            });
        }
        Self::from_row_major(rows.len(), p, rows.concat())
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.p)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Keeps `n` rows at evenly spaced positions, always including the first
    /// and last. Returns a copy of `self` when `n >= nrows`.
    pub fn subsample_uniform(&self, n: usize) -> Result<Self> {
        if n >= self.n {
            return Ok(self.clone());
        }
        if n < 2 {
            return Err(Error::param("n", format!("cannot subsample to {n} rows")));
        }
        let last = (self.n - 1) as u128;
        let mut values = Vec::with_capacity(n * self.p);
        for k in 0..n {
            let idx = (k as u128 * last / (n as u128 - 1)) as usize;
            values.extend_from_slice(self.row(idx));
        }
        Self::from_row_major(n, self.p, values)
    }
}

fn check_generator_args(n: usize, noise_std: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::param("n", format!("need at least 2 points, got {n}")));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::param(
            "noise_std",
            format!("must be finite and non-negative, got {noise_std}"),
        ));
    }
    Ok(())
}

fn add_noise(values: &mut [f64], noise_std: f64, rng: &mut ChaCha8Rng) {
    if noise_std == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, noise_std).expect("noise_std validated");
    for v in values {
        *v += normal.sample(rng);
    }
}

/// Two turns of a unit-radius helix: `s` evenly spaced over `[0, 4pi]`,
/// `(cos s, sin s, s / 4pi)`, plus i.i.d. Gaussian noise per coordinate.
pub fn generate_helix(n: usize, noise_std: f64, seed: u64) -> Result<DataMatrix> {
    check_generator_args(n, noise_std)?;
    let span = 4.0 * PI;
    let mut values = Vec::with_capacity(3 * n);
    for i in 0..n {
        let s = span * i as f64 / (n - 1) as f64;
        values.extend_from_slice(&[s.cos(), s.sin(), s / span]);
    }
    add_noise(&mut values, noise_std, &mut seeded_rng(seed));
    DataMatrix::from_row_major(n, 3, values)
}

/// Swiss roll together with the roll parameter of every point.
#[derive(Debug, Clone)]
pub struct SwissRoll {
    pub data: DataMatrix,
    /// Position along the spiral; before noise `x^2 + z^2 = s^2`.
    pub s: Vec<f64>,
}

/// Height range of the roll along `y`.
pub const SWISS_ROLL_HEIGHT: f64 = 21.0;

/// Standard Swiss roll: `s = 1.5 pi (1 + 2u)`, `u ~ U(0, 1)`,
/// `(s cos s, h, s sin s)` with `h ~ U(0, 21)`, plus Gaussian noise.
pub fn generate_swiss_roll(n: usize, noise_std: f64, seed: u64) -> Result<SwissRoll> {
    check_generator_args(n, noise_std)?;
    let mut rng = seeded_rng(seed);
    let mut values = Vec::with_capacity(3 * n);
    let mut params = Vec::with_capacity(n);
    for _ in 0..n {
        let s = 1.5 * PI * (1.0 + 2.0 * rng.random::<f64>());
        let h = SWISS_ROLL_HEIGHT * rng.random::<f64>();
        values.extend_from_slice(&[s * s.cos(), h, s * s.sin()]);
        params.push(s);
    }
    add_noise(&mut values, noise_std, &mut rng);
    Ok(SwissRoll {
        data: DataMatrix::from_row_major(n, 3, values)?,
        s: params,
    })
}

/// Parameters of a fixed-step Lorenz integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub x0: [f64; 3],
    pub t_end: f64,
    pub dt: f64,
}

impl Default for LorenzParams {
    /// The classic chaotic regime started at `(-8, 8, 27)`, integrated over
    /// `[0, 5]` with `dt = 1e-4`.
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            x0: [-8.0, 8.0, 27.0],
            t_end: 5.0,
            dt: 1e-4,
        }
    }
}

impl LorenzParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::param("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if self.dt >= self.t_end {
            return Err(Error::param("dt", "must be smaller than t_end"));
        }
        if ![self.sigma, self.rho, self.beta].iter().chain(&self.x0).all(|v| v.is_finite()) {
            return Err(Error::param("lorenz", "coefficients and x0 must be finite"));
        }
        Ok(())
    }

    /// Number of integration steps, `floor(t_end / dt)`.
    pub fn steps(&self) -> usize {
        // Absorb the representation error of e.g. 5.0 / 1e-4.
        (self.t_end / self.dt * (1.0 + 4.0 * f64::EPSILON)).floor() as usize
    }
}

/// Right-hand side of the Lorenz system.
#[inline]
pub fn lorenz_derivative([x, y, z]: [f64; 3], p: &LorenzParams) -> [f64; 3] {
    [p.sigma * (y - x), x * (p.rho - z) - y, x * y - p.beta * z]
}

#[inline]
fn axpy(a: f64, x: [f64; 3], y: [f64; 3]) -> [f64; 3] {
    [y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2]]
}

fn rk4_step(state: [f64; 3], dt: f64, p: &LorenzParams) -> [f64; 3] {
    let k1 = lorenz_derivative(state, p);
    let k2 = lorenz_derivative(axpy(0.5 * dt, k1, state), p);
    let k3 = lorenz_derivative(axpy(0.5 * dt, k2, state), p);
    let k4 = lorenz_derivative(axpy(dt, k3, state), p);
    let w = dt / 6.0;
    std::array::from_fn(|c| state[c] + w * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]))
}

/// Integrates the Lorenz system with classical fourth-order Runge-Kutta.
/// Row 0 is the initial condition; there are `floor(t_end / dt) + 1` rows.
pub fn integrate_lorenz(params: &LorenzParams) -> Result<DataMatrix> {
    params.validate()?;
    let steps = params.steps();
    let mut values = Vec::with_capacity(3 * (steps + 1));
    let mut state = params.x0;
    values.extend_from_slice(&state);
    for step in 1..=steps {
        state = rk4_step(state, params.dt, params);
        if !state.iter().all(|v| v.is_finite()) {
            return Err(Error::Integration { step });
        }
        values.extend_from_slice(&state);
    }
    DataMatrix::from_row_major(steps + 1, 3, values)
}

/// Reads a rectangular numeric CSV file. With `has_header` the first row is
/// skipped. Errors carry the 1-based line number of the offending row.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<DataMatrix> {
    let path = path.as_ref();
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => parse_err(0, format!("{other:?}")),
        })?;

    let mut values = Vec::new();
    let mut width = None;
    let mut n = 0usize;
    let mut record = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_err(
                    line,
                    format!("expected {w} fields, found {}", record.len()),
                ));
            }
            Some(_) => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(line, format!("column {}: `{cell}` is not a number", col + 1))
            })?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {}: non-finite value", col + 1)));
            }
            values.push(v);
        }
        n += 1;
    }
    let p = width.ok_or_else(|| parse_err(1, "file contains no data rows".into()))?;
    if n < 2 {
        return Err(parse_err(1, format!("need at least 2 data rows, found {n}")));
    }
    DataMatrix::from_row_major(n, p, values)
}

/// Formats a value with 17 significant digits.
pub(crate) fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes rows as CSV (LF line endings, 17 significant digits), with an
/// optional header row.
pub fn write_csv_rows<'a>(
    path: impl AsRef<Path>,
    header: Option<&[String]>,
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_csv(path: impl AsRef<Path>, data: &DataMatrix) -> Result<()> {
    write_csv_rows(
        path,
        None,
        data.rows().map(|r| r.iter().copied().map(format_f64).collect()),
    )
}
