//! Dense row-major matrices and the vector newtypes used by the attention
//! kernels.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense matrix in row-major order.
///
/// Rows are the natural unit here: caches append rows, the column-wise
/// Kronecker product combines rows, and attention mixes rows. Entries are
/// validated to be finite on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::from_vec",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("DenseMatrix::from_vec"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equal-length rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("DenseMatrix::from_rows"));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "DenseMatrix::from_rows",
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    /// A matrix with zero rows, ready for incremental appends.
    pub fn empty(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row `r` as a slice.
    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// All entries in row-major order.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Appends one row, growing the matrix in place.
    pub fn push_row(&mut self, row: &[T]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::push_row",
                expected: self.cols,
                actual: row.len(),
            });
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("DenseMatrix::push_row"));
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Iterator over row slices.
    pub fn row_iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.cols)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|&x| x * x)
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }
}

/// Query vector for one attention step.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryVector<T> {
    data: Vec<T>,
}

impl<T: Scalar> QueryVector<T> {
    pub fn new(data: Vec<T>) -> Result<Self> {
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("QueryVector::new"));
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

/// Attention output: a softmax-weighted combination of value rows, so each
/// coordinate lies within the range of the corresponding value column.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput<T> {
    data: Vec<T>,
}

impl<T: Scalar> AttentionOutput<T> {
    pub(crate) fn from_vec(data: Vec<T>) -> Self {
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Largest absolute coordinate difference against another output.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    /// Euclidean distance to another output.
    pub fn l2_distance(&self, other: &Self) -> T {
        crate::scalar::dist_sq(&self.data, &other.data).sqrt()
    }
}
