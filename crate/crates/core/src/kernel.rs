//! Gaussian similarity kernel `exp(-|x - y|^2 / sigma)` and graph degrees.
//!
//! Every entry is evaluated from the direct sum of squared coordinate
//! differences, so `k(x, y)` and `k(y, x)` are bitwise equal and the
//! streamed paths reproduce the materialized matrix exactly.

use faer::Mat;
use rayon::prelude::*;

use crate::datasets::DataMatrix;
use crate::error::{Error, Result};

/// Default number of rows per block when streaming kernel rows.
pub const DEFAULT_BLOCK_SIZE: usize = 1024;

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::param("sigma", format!("kernel width must be positive, got {sigma}")))
    }
}

/// Returns an error unless an `rows x cols` f64 matrix can be allocated.
pub(crate) fn ensure_capacity(rows: usize, cols: usize) -> Result<()> {
    let bytes = rows as u128 * cols as u128 * 8;
    let fail = || Error::Capacity { rows, cols, bytes };
    let len = rows.checked_mul(cols).ok_or_else(fail)?;
    if bytes > isize::MAX as u128 {
        return Err(fail());
    }
    let mut probe: Vec<f64> = Vec::new();
    probe.try_reserve_exact(len).map_err(|_| fail())?;
    Ok(())
}

/// Gaussian kernel evaluated lazily on a data set.
#[derive(Debug, Clone, Copy)]
pub struct GaussianKernel<'a> {
    data: &'a DataMatrix,
    sigma: f64,
}

impl<'a> GaussianKernel<'a> {
    pub fn new(data: &'a DataMatrix, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self { data, sigma })
    }

    pub fn data(&self) -> &'a DataMatrix {
        self.data
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn eval(&self, i: usize, j: usize) -> f64 {
        (-squared_distance(self.data.row(i), self.data.row(j)) / self.sigma).exp()
    }

    /// Full symmetric kernel matrix; each unordered pair is evaluated once.
    pub fn matrix(&self) -> Result<KernelMatrix> {
        let n = self.n();
        ensure_capacity(n, n)?;
        let mut values = Mat::<f64>::zeros(n, n);
        values.par_col_iter_mut().enumerate().for_each(|(j, mut col)| {
            col[j] = 1.0;
            for i in j + 1..n {
                col[i] = self.eval(i, j);
            }
        });
        for j in 1..n {
            for i in 0..j {
                values[(i, j)] = values[(j, i)];
            }
        }
        Ok(KernelMatrix {
            values,
            sigma: self.sigma,
        })
    }

    /// Columns `idx` of the kernel matrix, without forming the whole matrix.
    pub fn columns(&self, idx: &[usize]) -> Result<Mat<f64>> {
        let n = self.n();
        check_indices(idx, n)?;
        ensure_capacity(n, idx.len())?;
        let mut out = Mat::<f64>::zeros(n, idx.len());
        out.par_col_iter_mut().zip(idx.par_iter()).for_each(|(mut col, &j)| {
            for i in 0..n {
                col[i] = self.eval(i, j);
            }
        });
        Ok(out)
    }

    /// Row sums of the kernel, streamed in blocks of `block_size` rows so
    /// at most `block_size x n` kernel entries are live at once. Each row is
    /// summed in index order, so the result does not depend on threading.
    pub fn degrees(&self, block_size: usize) -> Result<DegreeVector> {
        if block_size == 0 {
            return Err(Error::param("block_size", "must be positive"));
        }
        let n = self.n();
        let mut sums = vec![0.0; n];
        sums.par_chunks_mut(block_size)
            .enumerate()
            .for_each(|(b, chunk)| {
                let start = b * block_size;
                let mut row = vec![0.0; n];
                for (offset, out) in chunk.iter_mut().enumerate() {
                    let i = start + offset;
                    for (j, r) in row.iter_mut().enumerate() {
                        *r = self.eval(i, j);
                    }
                    *out = row.iter().sum();
                }
            });
        Ok(DegreeVector(sums))
    }
}

fn check_indices(idx: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &j in idx {
        if j >= n {
            return Err(Error::Index(format!("column index {j} out of range for n = {n}")));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::Index(format!("duplicate column index {j}")));
        }
    }
    Ok(())
}

/// Symmetric Gaussian kernel matrix with the width used to build it.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    values: Mat<f64>,
    sigma: f64,
}

impl KernelMatrix {
    /// Wraps an arbitrary symmetric nonnegative matrix; used for hand-made
    /// kernels in tests and for externally computed similarities.
    pub fn from_matrix(values: Mat<f64>, sigma: f64) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Dimension {
                context: "KernelMatrix::from_matrix",
                expected: values.nrows(),
                actual: values.ncols(),
            });
        }
        let n = values.nrows();
        for j in 0..n {
            for i in 0..j {
                if values[(i, j)] != values[(j, i)] {
                    return Err(Error::Contract(format!("kernel not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { values, sigma })
    }

    pub fn values(&self) -> &Mat<f64> {
        &self.values
    }

    pub fn into_values(self) -> Mat<f64> {
        self.values
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Row sums in index order.
    pub fn row_sums(&self) -> DegreeVector {
        let n = self.n();
        // Column sums of a symmetric matrix, read contiguously.
        DegreeVector((0..n).map(|j| self.values.col(j).iter().sum()).collect())
    }
}

/// Degrees `D_ii = sum_j K_ij` of the kernel graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector(pub Vec<f64>);

impl DegreeVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }
}

pub fn gaussian_kernel_matrix(data: &DataMatrix, sigma: f64) -> Result<KernelMatrix> {
    GaussianKernel::new(data, sigma)?.matrix()
}

pub fn gaussian_kernel_columns(data: &DataMatrix, sigma: f64, idx: &[usize]) -> Result<Mat<f64>> {
    GaussianKernel::new(data, sigma)?.columns(idx)
}

pub fn degree_vector(data: &DataMatrix, sigma: f64) -> Result<DegreeVector> {
    GaussianKernel::new(data, sigma)?.degrees(DEFAULT_BLOCK_SIZE)
}
