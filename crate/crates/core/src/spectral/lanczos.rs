//! Thick-restart Lanczos with full reorthogonalization for the largest
//! eigenpairs of a symmetric operator.
//!
//! The projected matrix `H = V^T A V` is kept dense and filled from the
//! reorthogonalization coefficients, which covers both the tridiagonal
//! Lanczos part and the arrowhead coupling left behind by a restart.

use faer::Mat;
use rand_distr::{Distribution, StandardNormal};

use crate::datasets::seeded_rng;
use crate::error::{Error, Result};
use crate::linalg::{mul, orthogonalize_against, sym_eigen_desc, SymmetricOperator};

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov subspace size; defaults to `max(2 nev + 1, nev + 20)`.
    pub ncv: Option<usize>,
    /// Residual tolerance relative to the largest Ritz value magnitude.
    pub tol: f64,
    pub max_restarts: usize,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            ncv: None,
            tol: 1e-11,
            max_restarts: 500,
            seed: 0x5eed,
        }
    }
}

fn random_unit(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Mat<f64> {
    let mut v = Mat::from_fn(n, 1, |_, _| StandardNormal.sample(rng));
    let norm = v.norm_l2();
    v /= faer::Scale(norm);
    v
}

/// Top-`nev` eigenpairs (descending) of `op`. Requires `ncv < n`; callers
/// handle the case where the subspace would cover the whole space.
pub fn lanczos_top(
    op: &impl SymmetricOperator,
    nev: usize,
    opts: &LanczosOptions,
) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = op.dim();
    let m = opts.ncv.unwrap_or((2 * nev + 1).max(nev + 20)).min(n - 1);
    if nev == 0 || m <= nev {
        return Err(Error::param("ncv", format!("subspace size {m} must exceed nev = {nev}")));
    }
    let mut rng = seeded_rng(opts.seed);
    let mut basis = Mat::<f64>::zeros(n, m + 1);
    let mut h = Mat::<f64>::zeros(m, m);
    basis.col_mut(0).copy_from(random_unit(n, &mut rng).col(0));

    let mut kept = 0usize;
    let mut beta = 0.0;
    let mut matvecs = 0usize;
    let mut converged = 0usize;

    for _restart in 0..=opts.max_restarts {
        for j in kept..m {
            let w0 = op.apply(basis.as_ref().subcols(j, 1));
            matvecs += 1;
            let mut w = w0.clone();
            let prev = basis.as_ref().subcols(0, j + 1);
            // Two classical Gram-Schmidt passes; the summed coefficients
            // are the entries v_i^T A v_j of the projected matrix.
            let mut coeff = Mat::<f64>::zeros(j + 1, 1);
            for _ in 0..2 {
                let c = mul(prev.transpose(), w.as_ref());
                w -= mul(prev, c.as_ref());
                coeff += &c;
            }
            for i in 0..=j {
                h[(i, j)] = coeff[(i, 0)];
                h[(j, i)] = coeff[(i, 0)];
            }
            beta = w.norm_l2();
            let scale = w0.norm_l2().max(f64::MIN_POSITIVE);
            if beta <= 1e-14 * scale || beta == 0.0 {
                // Invariant subspace found: continue from a fresh direction
                // with zero coupling.
                beta = 0.0;
                let mut fresh = random_unit(n, &mut rng);
                let rest = orthogonalize_against(basis.as_ref().subcols(0, j + 1), &mut fresh);
                fresh /= faer::Scale(rest);
                basis.col_mut(j + 1).copy_from(fresh.col(0));
            } else {
                w /= faer::Scale(beta);
                basis.col_mut(j + 1).copy_from(w.col(0));
            }
        }

        let (theta, y) = sym_eigen_desc(h.as_ref())?;
        let anorm = theta.iter().fold(0.0f64, |a, t| a.max(t.abs())).max(f64::MIN_POSITIVE);
        converged = (0..nev)
            .filter(|&i| (beta * y[(m - 1, i)]).abs() <= opts.tol * anorm)
            .count();
        let vm = basis.as_ref().subcols(0, m);
        if converged == nev {
            let ritz = mul(vm, y.as_ref().subcols(0, nev));
            return Ok((theta[..nev].to_vec(), ritz));
        }

        let keep = (nev + (m - nev) / 2).clamp(nev, m - 1);
        let ritz = mul(vm, y.as_ref().subcols(0, keep));
        let residual = basis.col(m).to_owned();
        basis.as_mut().subcols_mut(0, keep).copy_from(&ritz);
        basis.col_mut(keep).copy_from(residual.as_ref());
        h.fill(0.0);
        for (i, t) in theta.iter().take(keep).enumerate() {
            h[(i, i)] = *t;
        }
        kept = keep;
    }
    Err(Error::NoConvergence {
        iterations: matvecs,
        converged,
        wanted: nev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mul_tn;

    fn test_matrix(n: usize) -> Mat<f64> {
        // Symmetric with a decaying, well-separated top spectrum.
        let mut rng = seeded_rng(11);
        let g = Mat::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        let (q, _) = crate::linalg::thin_qr(g.as_ref());
        let vals: Vec<f64> = (0..n).map(|i| 0.8f64.powi(i as i32)).collect();
        let scaled = Mat::from_fn(n, n, |i, j| q[(i, j)] * vals[j]);
        crate::linalg::symmetrize(mul(scaled.as_ref(), q.transpose()).as_ref())
    }

    #[test]
    fn matches_dense_eigenvalues() {
        let a = test_matrix(150);
        let (dense, _) = sym_eigen_desc(a.as_ref()).unwrap();
        let (vals, vecs) = lanczos_top(&a, 8, &LanczosOptions::default()).unwrap();
        for i in 0..8 {
            assert!((vals[i] - dense[i]).abs() < 1e-10, "{i}: {} vs {}", vals[i], dense[i]);
        }
        let gram = mul_tn(vecs.as_ref(), vecs.as_ref());
        let eye = crate::linalg::identity(8);
        assert!((&gram - &eye).norm_l2() < 1e-10);
        let av = mul(a.as_ref(), vecs.as_ref());
        for i in 0..8 {
            let r: f64 = (0..150).map(|k| (av[(k, i)] - vals[i] * vecs[(k, i)]).powi(2)).sum();
            assert!(r.sqrt() < 1e-9);
        }
    }

    #[test]
    fn low_rank_operator_hits_invariant_subspace() {
        // rank-3 projector: Krylov space is exhausted after a few steps.
        let n = 60;
        let a = Mat::from_fn(n, n, |i, j| if i == j && i < 3 { 1.0 } else { 0.0 });
        let (vals, _) = lanczos_top(&a, 5, &LanczosOptions::default()).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[2] - 1.0).abs() < 1e-12);
        assert!(vals[3].abs() < 1e-12 && vals[4].abs() < 1e-12);
    }

    #[test]
    fn restarts_when_subspace_is_small() {
        let a = test_matrix(200);
        let (dense, _) = sym_eigen_desc(a.as_ref()).unwrap();
        let opts = LanczosOptions {
            ncv: Some(14),
            ..Default::default()
        };
        let (vals, _) = lanczos_top(&a, 6, &opts).unwrap();
        for i in 0..6 {
            assert!((vals[i] - dense[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let a = test_matrix(100);
        let opts = LanczosOptions {
            ncv: Some(12),
            max_restarts: 0,
            tol: 1e-15,
            ..Default::default()
        };
        match lanczos_top(&a, 10, &opts) {
            Err(Error::NoConvergence { iterations, wanted, .. }) => {
                assert_eq!(wanted, 10);
                assert_eq!(iterations, 12);
            }
            other => panic!("{other:?}"),
        }
    }
}
