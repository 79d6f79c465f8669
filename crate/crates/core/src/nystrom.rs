//! Nystrom approximation `A ~ C W^+ C^T` of the symmetric diffusion operator.
//!
//! Two ways of forming `C` and `W` are provided:
//!
//! * uniform column sampling: `C = A(:, J)`, `W = A(J, J)`, built from kernel
//!   columns streamed on demand and scaled by the degrees, so neither `K`
//!   nor `A` is ever materialized;
//! * Gaussian projection: `Q = orth((A A^T)^q A Omega)` computed by subspace
//!   iteration, then `C = A Q`, `W = Q^T C`.
//!
//! Eigenpairs follow from the factor `F = C W^-1/2`: if `F = U S V^T` then
//! `F F^T = U S^2 U^T`, so the left singular vectors approximate the leading
//! eigenvectors of `A` and the squared singular values its eigenvalues.

use faer::{Mat, MatRef};
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::datasets::seeded_rng;
use crate::error::{Error, Result};
use crate::kernel::{DegreeVector, GaussianKernel, KernelMatrix};
use crate::linalg::{
    fix_signs, identity, mul, mul_tn, orthogonalize_against, select_columns, sym_eigen_desc,
    symmetrize, thin_qr, SymmetricOperator,
};
use crate::spectral::{recover_markov_eigvecs, Method, SpectralModel};

pub const DEFAULT_OVERSAMPLING: usize = 10;
pub const DEFAULT_POWER_ITERATIONS: usize = 2;
pub const DEFAULT_PINV_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchStrategy {
    UniformColumns,
    GaussianProjection,
}

impl SketchStrategy {
    pub fn method(self) -> Method {
        match self {
            SketchStrategy::UniformColumns => Method::NystromColumns,
            SketchStrategy::GaussianProjection => Method::NystromProjection,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    pub target_rank: usize,
    /// Extra sketch columns; the sketch width is `target_rank + oversampling`.
    pub oversampling: usize,
    /// Ignored by column sampling.
    pub power_iterations: usize,
    pub strategy: SketchStrategy,
    pub seed: u64,
    /// Relative eigenvalue cutoff used when inverting `W`.
    pub pinv_tolerance: f64,
}

impl SketchConfig {
    pub fn new(target_rank: usize, strategy: SketchStrategy, seed: u64) -> Self {
        Self {
            target_rank,
            oversampling: DEFAULT_OVERSAMPLING,
            power_iterations: DEFAULT_POWER_ITERATIONS,
            strategy,
            seed,
            pinv_tolerance: DEFAULT_PINV_TOLERANCE,
        }
    }

    /// Sketch width `l`.
    pub fn width(&self) -> usize {
        self.target_rank + self.oversampling
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.target_rank == 0 {
            return Err(Error::param("target_rank", "must be at least 1"));
        }
        if self.width() > n {
            return Err(Error::param(
                "oversampling",
                format!("sketch width {} exceeds n = {n}", self.width()),
            ));
        }
        if !(self.pinv_tolerance > 0.0 && self.pinv_tolerance < 1.0) {
            return Err(Error::param(
                "pinv_tolerance",
                format!("must lie in (0, 1), got {}", self.pinv_tolerance),
            ));
        }
        Ok(())
    }
}

/// Anything that can hand out columns of the kernel matrix `K`.
pub trait ColumnProvider {
    fn n(&self) -> usize;
    fn columns(&self, idx: &[usize]) -> Result<Mat<f64>>;
}

impl ColumnProvider for GaussianKernel<'_> {
    fn n(&self) -> usize {
        GaussianKernel::n(self)
    }

    fn columns(&self, idx: &[usize]) -> Result<Mat<f64>> {
        GaussianKernel::columns(self, idx)
    }
}

impl ColumnProvider for KernelMatrix {
    fn n(&self) -> usize {
        KernelMatrix::n(self)
    }

    fn columns(&self, idx: &[usize]) -> Result<Mat<f64>> {
        if let Some(&j) = idx.iter().find(|&&j| j >= self.n()) {
            return Err(Error::Index(format!("column index {j} out of range")));
        }
        Ok(select_columns(self.values().as_ref(), idx))
    }
}

/// The two Nystrom factors.
#[derive(Debug, Clone)]
pub struct NystromFactors {
    /// `n x l`.
    pub c: Mat<f64>,
    /// `l x l`, symmetric.
    pub w: Mat<f64>,
}

impl NystromFactors {
    /// `C W^+ C^T`, for checking reconstructions on small problems.
    pub fn reconstruct(&self, tol: f64) -> Result<Mat<f64>> {
        let f = mul(self.c.as_ref(), psd_inverse_sqrt(self.w.as_ref(), tol)?.as_ref());
        Ok(mul(f.as_ref(), f.transpose()))
    }
}

/// Uniform column sampling. Returns the factors and the sampled indices `J`.
pub fn sample_columns(
    kernel: &impl ColumnProvider,
    deg: &DegreeVector,
    l: usize,
    seed: u64,
) -> Result<(NystromFactors, Vec<usize>)> {
    let n = kernel.n();
    if deg.len() != n {
        return Err(Error::Dimension {
            context: "sample_columns",
            expected: n,
            actual: deg.len(),
        });
    }
    if l == 0 || l > n {
        return Err(Error::param("l", format!("need 1 <= l <= n = {n}, got {l}")));
    }
    let mut rng = seeded_rng(seed);
    let idx = index::sample(&mut rng, n, l).into_vec();
    let kcols = kernel.columns(&idx)?;
    let d = deg.as_slice();
    // Same expression as the dense A, so entries agree bitwise.
    let c = Mat::from_fn(n, l, |i, j| kcols[(i, j)] / (d[i] * d[idx[j]]).sqrt());
    let w = Mat::from_fn(l, l, |a, b| c[(idx[a], b)]);
    Ok((NystromFactors { c, w }, idx))
}

/// Orthonormal sketch basis plus any rank-collapse warnings.
#[derive(Debug, Clone)]
pub struct SketchBasis {
    pub q: Mat<f64>,
    pub warnings: Vec<String>,
}

/// Orthonormalizes `y`, replacing numerically dependent directions with
/// fresh random ones.
fn orthonormal_basis(
    y: MatRef<'_, f64>,
    rng: &mut rand_chacha::ChaCha8Rng,
    stage: &str,
    warnings: &mut Vec<String>,
) -> Mat<f64> {
    let (n, l) = (y.nrows(), y.ncols());
    let (mut q, rdiag) = thin_qr(y);
    let rmax = rdiag.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = rmax * (n.max(l) as f64) * f64::EPSILON;
    let deficient: Vec<usize> = (0..l).filter(|&j| !(rdiag[j] > cutoff)).collect();
    if deficient.is_empty() {
        return q;
    }
    warnings.push(format!(
        "rank collapse in {stage}: numerical rank {} < {l}; padded with random directions",
        l - deficient.len()
    ));
    for &j in &deficient {
        loop {
            let mut v = Mat::from_fn(n, 1, |_, _| StandardNormal.sample(rng));
            let others: Vec<usize> = (0..l).filter(|&c| c != j).collect();
            let basis = select_columns(q.as_ref(), &others);
            let norm = orthogonalize_against(basis.as_ref(), &mut v);
            if norm > 1e-8 {
                v /= faer::Scale(norm);
                q.col_mut(j).copy_from(v.col(0));
                break;
            }
        }
    }
    q
}

/// Range finder: `Q = orth(A^(2q+1) Omega)` via subspace iteration, with a
/// re-orthonormalization after every multiply.
pub fn gaussian_sketch_basis(
    op: &impl SymmetricOperator,
    l: usize,
    q: usize,
    seed: u64,
) -> Result<SketchBasis> {
    let n = op.dim();
    if l == 0 || l > n {
        return Err(Error::param("l", format!("need 1 <= l <= n = {n}, got {l}")));
    }
    let mut rng = seeded_rng(seed);
    let omega = Mat::from_fn(n, l, |_, _| StandardNormal.sample(&mut rng));
    let mut warnings = Vec::new();
    let mut basis = orthonormal_basis(op.apply(omega.as_ref()).as_ref(), &mut rng, "sketch", &mut warnings);
    for pass in 1..=q {
        for half in 0..2 {
            let stage = format!("power iteration {pass}.{}", half + 1);
            basis = orthonormal_basis(op.apply(basis.as_ref()).as_ref(), &mut rng, &stage, &mut warnings);
        }
    }
    Ok(SketchBasis { q: basis, warnings })
}

/// `C = A Q`, `W = Q^T C` (symmetrized).
pub fn project(op: &impl SymmetricOperator, q: MatRef<'_, f64>) -> Result<NystromFactors> {
    let n = op.dim();
    if q.nrows() != n {
        return Err(Error::Dimension {
            context: "project",
            expected: n,
            actual: q.nrows(),
        });
    }
    let gram = mul_tn(q, q);
    let defect = (&gram - &identity(q.ncols())).norm_max();
    if defect > 1e-8 {
        return Err(Error::Contract(format!("Q is not orthonormal (max |Q^T Q - I| = {defect:e})")));
    }
    let c = op.apply(q);
    let w = symmetrize(mul_tn(q, c.as_ref()).as_ref());
    Ok(NystromFactors { c, w })
}

/// `W^-1/2` restricted to the numerical range of `W`, and that range's
/// dimension.
pub fn psd_inverse_sqrt_with_rank(w: MatRef<'_, f64>, tol: f64) -> Result<(Mat<f64>, usize)> {
    if w.nrows() != w.ncols() {
        return Err(Error::Dimension {
            context: "psd_inverse_sqrt",
            expected: w.nrows(),
            actual: w.ncols(),
        });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::param("tol", format!("must lie in (0, 1), got {tol}")));
    }
    let (vals, vecs) = sym_eigen_desc(w)?;
    let top = vals.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::Degenerate(
            "sketch matrix W has no positive eigenvalue; the sketch captured nothing".into(),
        ));
    }
    let cutoff = tol * top;
    let weights: Vec<f64> = vals
        .iter()
        .map(|&v| if v > cutoff { v.sqrt().recip() } else { 0.0 })
        .collect();
    let rank = weights.iter().filter(|&&x| x > 0.0).count();
    let scaled = Mat::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * weights[j]);
    let m = mul(scaled.as_ref(), vecs.transpose());
    Ok((symmetrize(m.as_ref()), rank))
}

/// Pseudo-inverse square root of a symmetric positive semidefinite matrix.
pub fn psd_inverse_sqrt(w: MatRef<'_, f64>, tol: f64) -> Result<Mat<f64>> {
    psd_inverse_sqrt_with_rank(w, tol).map(|(m, _)| m)
}

/// Eigenpairs of `C W^+ C^T` via the SVD of `F = C W^-1/2`.
pub fn nystrom_eigs(
    factors: &NystromFactors,
    d: usize,
    deg: &DegreeVector,
    tol: f64,
    method: Method,
) -> Result<SpectralModel> {
    let (n, l) = (factors.c.nrows(), factors.c.ncols());
    if factors.w.nrows() != l {
        return Err(Error::Dimension {
            context: "nystrom_eigs",
            expected: l,
            actual: factors.w.nrows(),
        });
    }
    if d == 0 || d > l {
        return Err(Error::param("d", format!("need 1 <= d <= l = {l}, got {d}")));
    }
    if deg.len() != n {
        return Err(Error::Dimension {
            context: "nystrom_eigs",
            expected: n,
            actual: deg.len(),
        });
    }
    let (w_isqrt, w_rank) = psd_inverse_sqrt_with_rank(factors.w.as_ref(), tol)?;
    let f = mul(factors.c.as_ref(), w_isqrt.as_ref());
    let svd = f
        .thin_svd()
        .map_err(|e| Error::Numeric(format!("SVD of the Nystrom factor failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let lambda: Vec<f64> = s.iter().map(|v| v * v).collect();
    let top = lambda.first().copied().unwrap_or(0.0);
    let effective_rank = lambda
        .iter()
        .take(w_rank)
        .take_while(|&&v| v > tol * top)
        .count();

    let mut warnings = Vec::new();
    let keep = d.min(effective_rank);
    if keep < d {
        warnings.push(format!(
            "requested {d} components but the Nystrom factor has numerical rank {effective_rank}; result truncated"
        ));
    }
    let mut u = svd.U().subcols(0, keep).to_owned();
    fix_signs(&mut u);
    let markov = recover_markov_eigvecs(u.as_ref(), deg)?;
    Ok(SpectralModel {
        eigenvalues: lambda[..keep].to_vec(),
        eigenvectors_sym: u,
        eigenvectors_markov: markov,
        degrees: deg.clone(),
        method,
        rank_d: keep,
        effective_rank,
        warnings,
    })
}

/// Projection Nystrom end to end: sketch, project, decompose.
pub fn nystrom_projection_model(
    op: &impl SymmetricOperator,
    deg: &DegreeVector,
    cfg: &SketchConfig,
) -> Result<SpectralModel> {
    cfg.validate(op.dim())?;
    let basis = gaussian_sketch_basis(op, cfg.width(), cfg.power_iterations, cfg.seed)?;
    let factors = project(op, basis.q.as_ref())?;
    let mut model = nystrom_eigs(&factors, cfg.target_rank, deg, cfg.pinv_tolerance, Method::NystromProjection)?;
    let mut warnings = basis.warnings;
    warnings.append(&mut model.warnings);
    model.warnings = warnings;
    Ok(model)
}

/// Column-sampling Nystrom end to end.
pub fn nystrom_columns_model(
    kernel: &impl ColumnProvider,
    deg: &DegreeVector,
    cfg: &SketchConfig,
) -> Result<SpectralModel> {
    cfg.validate(kernel.n())?;
    let (factors, _) = sample_columns(kernel, deg, cfg.width(), cfg.seed)?;
    nystrom_eigs(&factors, cfg.target_rank, deg, cfg.pinv_tolerance, Method::NystromColumns)
}
