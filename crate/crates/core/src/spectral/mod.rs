//! Diffusion operators and their eigendecomposition.
//!
//! `P = D^-1 K` is the row-stochastic Markov matrix and
//! `A = D^-1/2 K D^-1/2` its symmetric conjugate. Both share eigenvalues;
//! if `A u = lambda u` then `P (D^-1/2 u) = lambda (D^-1/2 u)`.

pub mod lanczos;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{DegreeVector, KernelMatrix};
use crate::linalg::{fix_signs, max_asymmetry, sym_eigen_desc, DenseOperator};

pub use lanczos::{lanczos_top, LanczosOptions};

/// How a spectral model was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Deterministic,
    NystromColumns,
    NystromProjection,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Deterministic => "deterministic",
            Method::NystromColumns => "nystrom_columns",
            Method::NystromProjection => "nystrom_projection",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which symmetric eigensolver `eigendecompose` uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenSolver {
    /// Dense for small problems or large `d / n`, Lanczos otherwise.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Leading eigenpairs of the symmetric diffusion operator.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of `A`, one per column.
    pub eigenvectors_sym: Mat<f64>,
    /// Unit-norm eigenvectors of `P`.
    pub eigenvectors_markov: Mat<f64>,
    pub degrees: DegreeVector,
    pub method: Method,
    pub rank_d: usize,
    /// Number of components backed by a numerically nonzero spectrum.
    pub effective_rank: usize,
    pub warnings: Vec<String>,
}

fn check_degrees(n: usize, deg: &DegreeVector, context: &'static str) -> Result<()> {
    if deg.len() != n {
        return Err(Error::Dimension {
            context,
            expected: n,
            actual: deg.len(),
        });
    }
    Ok(())
}

/// `P = D^-1 K`.
pub fn markov_matrix(k: &KernelMatrix, deg: &DegreeVector) -> Result<Mat<f64>> {
    let n = k.n();
    check_degrees(n, deg, "markov_matrix")?;
    if let Some(i) = deg.0.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Degenerate(format!("degree {i} is not positive")));
    }
    let kv = k.values();
    Ok(Mat::from_fn(n, n, |i, j| kv[(i, j)] / deg.0[i]))
}

/// `A = D^-1/2 K D^-1/2`, entry `K_ij / sqrt(d_i d_j)`.
pub fn symmetric_matrix(k: &KernelMatrix, deg: &DegreeVector) -> Result<Mat<f64>> {
    into_symmetric_matrix(k.clone(), deg)
}

/// As [`symmetric_matrix`], reusing the kernel's storage.
pub fn into_symmetric_matrix(k: KernelMatrix, deg: &DegreeVector) -> Result<Mat<f64>> {
    let n = k.n();
    check_degrees(n, deg, "symmetric_matrix")?;
    if let Some(i) = deg.0.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Degenerate(format!("degree {i} is not positive")));
    }
    let d = &deg.0;
    let mut a = k.into_values();
    for j in 0..n {
        let dj = d[j];
        for (i, v) in a.col_mut(j).iter_mut().enumerate() {
            *v /= (d[i] * dj).sqrt();
        }
    }
    Ok(a)
}

/// Symmetric eigenpairs, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
    pub warnings: Vec<String>,
}

const SYMMETRY_TOL: f64 = 1e-10;

/// Restart budget for Lanczos under `Auto` before falling back to the dense
/// solver. Tightly clustered top spectra (e.g. a kernel that is nearly the
/// identity) stall Krylov methods; the matrix is in memory anyway.
const AUTO_MAX_RESTARTS: usize = 30;

fn use_dense(n: usize, d: usize, solver: EigenSolver) -> bool {
    match solver {
        EigenSolver::Dense => true,
        EigenSolver::Lanczos => (2 * d + 1).max(d + 20) >= n,
        EigenSolver::Auto => n <= 500 || 4 * d >= n,
    }
}

/// Top-`d` eigenpairs of a symmetric matrix by algebraic value, with the
/// column sign convention applied.
pub fn eigendecompose(a: MatRef<'_, f64>, d: usize, solver: EigenSolver) -> Result<SymEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension {
            context: "eigendecompose",
            expected: n,
            actual: a.ncols(),
        });
    }
    if d == 0 || d > n {
        return Err(Error::param("d", format!("need 1 <= d <= {n}, got {d}")));
    }
    let asym = max_asymmetry(a);
    if asym > SYMMETRY_TOL {
        return Err(Error::Contract(format!("matrix is not symmetric (max |A - A^T| = {asym:e})")));
    }
    let dense = || -> Result<(Vec<f64>, Mat<f64>)> {
        let (vals, vecs) = sym_eigen_desc(a)?;
        Ok((vals[..d].to_vec(), vecs.as_ref().subcols(0, d).to_owned()))
    };
    let mut warnings = Vec::new();
    let (values, mut vectors) = if use_dense(n, d, solver) {
        dense()?
    } else if solver == EigenSolver::Auto {
        let opts = LanczosOptions {
            max_restarts: AUTO_MAX_RESTARTS,
            ..LanczosOptions::default()
        };
        match lanczos_top(&DenseOperator(a), d, &opts) {
            Err(Error::NoConvergence {
                iterations, converged, ..
            }) => {
                warnings.push(format!(
                    "Lanczos converged {converged}/{d} pairs after {iterations} products; used the dense solver"
                ));
                dense()?
            }
            other => other?,
        }
    } else {
        lanczos_top(&DenseOperator(a), d, &LanczosOptions::default())?
    };
    fix_signs(&mut vectors);
    Ok(SymEigen {
        values,
        vectors,
        warnings,
    })
}

/// Eigenvectors of `P` from those of `A`: scale rows by `D^-1/2`, then
/// renormalize each column and fix its sign.
pub fn recover_markov_eigvecs(u_sym: MatRef<'_, f64>, deg: &DegreeVector) -> Result<Mat<f64>> {
    check_degrees(u_sym.nrows(), deg, "recover_markov_eigvecs")?;
    let scale: Vec<f64> = deg.0.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut out = Mat::from_fn(u_sym.nrows(), u_sym.ncols(), |i, j| u_sym[(i, j)] * scale[i]);
    for j in 0..out.ncols() {
        let norm = out.col(j).norm_l2();
        if norm > 0.0 {
            for v in out.col_mut(j).iter_mut() {
                *v /= norm;
            }
        }
    }
    fix_signs(&mut out);
    Ok(out)
}

/// Deterministic spectral model from a materialized `A`.
pub fn deterministic_model(
    a: MatRef<'_, f64>,
    deg: &DegreeVector,
    d: usize,
    solver: EigenSolver,
) -> Result<SpectralModel> {
    check_degrees(a.nrows(), deg, "deterministic_model")?;
    let eig = eigendecompose(a, d, solver)?;
    let markov = recover_markov_eigvecs(eig.vectors.as_ref(), deg)?;
    Ok(SpectralModel {
        eigenvalues: eig.values,
        eigenvectors_sym: eig.vectors,
        eigenvectors_markov: markov,
        degrees: deg.clone(),
        method: Method::Deterministic,
        rank_d: d,
        effective_rank: d,
        warnings: eig.warnings,
    })
}
