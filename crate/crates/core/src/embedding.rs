//! Diffusion-map coordinates, diffusion distances, clustering and error
//! scoring.

use std::path::Path;

use faer::Mat;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{format_f64, seeded_rng, write_csv_rows};
use crate::error::{Error, Result};
use crate::spectral::SpectralModel;

/// Eigenvalues this far below zero are treated as zero.
const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-10;

/// How the eigenvalue of each component weights its eigenvector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `sqrt(lambda^t)`.
    #[default]
    SqrtPower,
    /// `lambda^t`, the convention of most diffusion-map implementations.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingParams {
    pub t: f64,
    pub d: usize,
    /// Skip the leading (constant, eigenvalue 1) component.
    pub drop_trivial: bool,
    pub weighting: Weighting,
}

impl EmbeddingParams {
    pub fn new(t: f64, d: usize) -> Self {
        Self {
            t,
            d,
            drop_trivial: false,
            weighting: Weighting::SqrtPower,
        }
    }

    pub fn drop_trivial(mut self, drop: bool) -> Self {
        self.drop_trivial = drop;
        self
    }

    pub fn weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }
}

/// Row `i` of `coords` is the diffusion-map image of observation `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionEmbedding {
    pub coords: Mat<f64>,
    pub t: f64,
    pub component_eigenvalues: Vec<f64>,
}

impl DiffusionEmbedding {
    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn d(&self) -> usize {
        self.coords.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.d()).map(|c| self.coords[(i, c)]).collect()
    }

    /// Writes `c1..cd` columns, plus a `label` column when labels are given.
    pub fn write_csv(&self, path: impl AsRef<Path>, labels: Option<&[usize]>) -> Result<()> {
        if let Some(l) = labels {
            if l.len() != self.n() {
                return Err(Error::Dimension {
                    context: "DiffusionEmbedding::write_csv",
                    expected: self.n(),
                    actual: l.len(),
                });
            }
        }
        let mut header: Vec<String> = (1..=self.d()).map(|c| format!("c{c}")).collect();
        if labels.is_some() {
            header.push("label".into());
        }
        let rows = (0..self.n()).map(|i| {
            let mut row: Vec<String> = self.row(i).into_iter().map(format_f64).collect();
            if let Some(l) = labels {
                row.push(l[i].to_string());
            }
            row
        });
        write_csv_rows(path, Some(&header), rows)
    }
}

/// Weight of a component with eigenvalue `lambda` at time `t`.
fn component_weight(lambda: f64, t: f64, weighting: Weighting) -> Result<f64> {
    let exponent = match weighting {
        Weighting::SqrtPower => 0.5 * t,
        Weighting::Power => t,
    };
    if lambda > 0.0 {
        return Ok((exponent * lambda.ln()).exp());
    }
    if lambda >= -NEGATIVE_EIGENVALUE_TOL {
        return Ok(0.0);
    }
    // lambda^t is real and positive only for even integer t.
    if t.fract() == 0.0 && (t as i64) % 2 == 0 {
        return Ok((exponent * lambda.abs().ln()).exp());
    }
    Err(Error::Numeric(format!(
        "eigenvalue {lambda:e} is negative; lambda^t is not real for t = {t}"
    )))
}

/// Diffusion-map coordinates `sqrt(lambda_i^t) * psi_i` from the Markov
/// eigenvectors of `model`.
pub fn diffusion_map(model: &SpectralModel, params: &EmbeddingParams) -> Result<DiffusionEmbedding> {
    let EmbeddingParams {
        t,
        d,
        drop_trivial,
        weighting,
    } = *params;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("diffusion time must be positive, got {t}")));
    }
    let offset = usize::from(drop_trivial);
    let available = model.eigenvalues.len();
    if d == 0 || d + offset > available {
        return Err(Error::param(
            "d",
            format!(
                "need 1 <= d{} <= {available} available components, got d = {d}",
                if drop_trivial { " + 1" } else { "" }
            ),
        ));
    }
    let lambdas = &model.eigenvalues[offset..offset + d];
    let weights = lambdas
        .iter()
        .map(|&l| component_weight(l, t, weighting))
        .collect::<Result<Vec<_>>>()?;
    let vecs = &model.eigenvectors_markov;
    let coords = Mat::from_fn(vecs.nrows(), d, |i, c| weights[c] * vecs[(i, c + offset)]);
    if coords.as_ref().has_nan() || !coords.as_ref().is_all_finite() {
        return Err(Error::Numeric("diffusion coordinates are not finite".into()));
    }
    Ok(DiffusionEmbedding {
        coords,
        t,
        component_eigenvalues: lambdas.iter().map(|&l| l.max(0.0)).collect(),
    })
}

/// Squared diffusion distance between observations `i` and `j`.
pub fn diffusion_distance(emb: &DiffusionEmbedding, i: usize, j: usize) -> Result<f64> {
    let n = emb.n();
    if i >= n || j >= n {
        return Err(Error::Index(format!("pair ({i}, {j}) out of range for n = {n}")));
    }
    Ok((0..emb.d())
        .map(|c| {
            let diff = emb.coords[(i, c)] - emb.coords[(j, c)];
            diff * diff
        })
        .sum())
}

/// `|| |ref| - |approx| ||_F / || |ref| ||_F`; absolute values make the score
/// blind to per-component sign flips.
pub fn relative_embedding_error(reference: &DiffusionEmbedding, approx: &DiffusionEmbedding) -> Result<f64> {
    if reference.n() != approx.n() || reference.d() != approx.d() {
        return Err(Error::Dimension {
            context: "relative_embedding_error",
            expected: reference.n() * reference.d(),
            actual: approx.n() * approx.d(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for c in 0..reference.d() {
        for i in 0..reference.n() {
            let r = reference.coords[(i, c)].abs();
            let a = approx.coords[(i, c)].abs();
            num += (r - a) * (r - a);
            den += r * r;
        }
    }
    if den == 0.0 {
        return Err(Error::Degenerate("reference embedding is identically zero".into()));
    }
    Ok((num / den).sqrt())
}

/// Output of [`kmeans_cluster`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLabels {
    pub labels: Vec<usize>,
    pub k: usize,
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means on the embedding rows with k-means++ seeding.
pub fn kmeans_cluster(emb: &DiffusionEmbedding, k: usize, seed: u64, max_iters: usize) -> Result<ClusterLabels> {
    let n = emb.n();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("need 1 <= k <= n = {n}, got {k}")));
    }
    if max_iters == 0 {
        return Err(Error::param("max_iters", "must be at least 1"));
    }
    let points: Vec<Vec<f64>> = (0..n).map(|i| emb.row(i)).collect();
    let dim = emb.d();
    let mut rng = seeded_rng(seed);

    // k-means++ seeding.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            if nearest[chosen] == 0.0 {
                chosen = nearest.iter().rposition(|&w| w > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            nearest[i] = nearest[i].min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }

    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (best, dist) = centroids
                .iter()
                .enumerate()
                .map(|(c, m)| (c, sq_dist(p, m)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
            inertia += dist;
        }
        history.push(inertia);
        if !changed && iterations > 1 {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // Re-seed empty clusters at the point farthest from its centroid.
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(&points[a], &centroids[labels[a]])
                        .total_cmp(&sq_dist(&points[b], &centroids[labels[b]]))
                })
                .ok_or_else(|| Error::Numeric("cannot re-seed empty cluster".into()))?;
            counts[labels[far]] -= 1;
            counts[c] = 1;
            labels[far] = c;
            centroids[c] = points[far].clone();
        }
    }
    let inertia = *history.last().expect("at least one iteration");
    Ok(ClusterLabels {
        labels,
        k,
        inertia,
        inertia_history: history,
        iterations,
    })
}
