#![allow(dead_code)]

use diffmap::linalg::{mul, thin_qr};
use diffmap::DataMatrix;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Mat<f64> {
    let mut r = rng(seed);
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut r))
}

/// Random orthonormal `n x k` matrix.
pub fn random_orthonormal(n: usize, k: usize, seed: u64) -> Mat<f64> {
    thin_qr(gaussian(n, k, seed).as_ref()).0
}

/// `G G^T` with `G` an `n x r` Gaussian matrix.
pub fn low_rank_psd(n: usize, r: usize, seed: u64) -> Mat<f64> {
    let g = gaussian(n, r, seed);
    let a = mul(g.as_ref(), g.transpose());
    Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Uniform random points in the unit cube.
pub fn random_points(n: usize, p: usize, seed: u64) -> DataMatrix {
    let mut r = rng(seed);
    let values = (0..n * p).map(|_| r.random::<f64>()).collect();
    DataMatrix::from_row_major(n, p, values).unwrap()
}

/// Plain scalar evaluation of the Gaussian kernel, independent of the
/// library's kernel code.
pub fn kernel_entry(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    let mut d2 = 0.0;
    for k in 0..x.len() {
        d2 += (x[k] - y[k]).powi(2);
    }
    (-d2 / sigma).exp()
}

/// Dense `A = D^-1/2 K D^-1/2` built entry by entry.
pub fn dense_symmetric_operator(x: &DataMatrix, sigma: f64) -> (Mat<f64>, Vec<f64>) {
    let n = x.nrows();
    let k = Mat::from_fn(n, n, |i, j| kernel_entry(x.row(i), x.row(j), sigma));
    let deg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[(i, j)]).sum()).collect();
    let a = Mat::from_fn(n, n, |i, j| k[(i, j)] / (deg[i] * deg[j]).sqrt());
    (a, deg)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Adjusted Rand index between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |v: u64| (v * v.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().flatten().map(|&v| c2(v)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(a.len() as u64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Two Gaussian blobs in the plane, `n / 2` points each, with labels.
pub fn two_blobs(n: usize, separation: f64, spread: f64, seed: u64) -> (DataMatrix, Vec<usize>) {
    let mut r = rng(seed);
    let mut values = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let group = usize::from(i >= n / 2);
        let cx = if group == 0 { 0.0 } else { separation };
        let dx: f64 = StandardNormal.sample(&mut r);
        let dy: f64 = StandardNormal.sample(&mut r);
        values.push(cx + spread * dx);
        values.push(spread * dy);
        labels.push(group);
    }
    (DataMatrix::from_row_major(n, 2, values).unwrap(), labels)
}
