//! Exact tensor-attention kernels: column-wise Kronecker product, softmax,
//! and attention under both cache layouts.
//!
//! Row pairs are flattened in row-major order: the pair `(a, b)` with
//! `a ∈ [n1]`, `b ∈ [n2]` lands at row `a * n2 + b` (zero-based). Every
//! routine in this crate that touches flattened pairs uses this one
//! convention, so four-cache and two-cache results agree coordinatewise.

use crate::error::{Error, Result};
use crate::matrix::{AttentionOutput, DenseMatrix, QueryVector};
use crate::scalar::{dot, Scalar};

/// Column-wise Kronecker product of two matrices with equal column counts.
///
/// The output has `a.rows() * b.rows()` rows; the row for pair `(i1, i2)`
/// is the entrywise product of row `i1` of `a` and row `i2` of `b`.
///
/// ```
/// use tensorkv::{kron_colwise, DenseMatrix};
///
/// let a = DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
/// let b = DenseMatrix::from_vec(2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap();
/// let k = kron_colwise(&a, &b).unwrap();
/// assert_eq!(k.rows(), 4);
/// assert_eq!(k.row(0), &[5.0, 12.0]);  // row 0 of a ⊙ row 0 of b
/// ```
pub fn kron_colwise<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            context: "kron_colwise",
            expected: a.cols(),
            actual: b.cols(),
        });
    }
    let cols = a.cols();
    let mut data = Vec::with_capacity(a.rows() * b.rows() * cols);
    for ra in a.row_iter() {
        for rb in b.row_iter() {
            for j in 0..cols {
                data.push(ra[j] * rb[j]);
            }
        }
    }
    DenseMatrix::from_vec(a.rows() * b.rows(), cols, data)
}

/// Softmax with max-subtraction for overflow safety.
///
/// Output entries are positive and sum to one.
pub fn softmax<T: Scalar>(logits: &[T]) -> Result<Vec<T>> {
    if logits.is_empty() {
        return Err(Error::EmptyInput("softmax"));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("softmax"));
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: T = out.iter().copied().sum();
    for w in &mut out {
        *w = *w / total;
    }
    Ok(out)
}

/// Tensor attention over the four-matrix cache layout.
///
/// Materializes both column-wise Kronecker products, then computes
/// `(V1 ⊘ V2)ᵀ · softmax((K1 ⊘ K2) · q)`.
pub fn attn_four<T: Scalar>(
    query: &QueryVector<T>,
    k1: &DenseMatrix<T>,
    k2: &DenseMatrix<T>,
    v1: &DenseMatrix<T>,
    v2: &DenseMatrix<T>,
) -> Result<AttentionOutput<T>> {
    check_four_shapes(query, k1, k2, v1, v2)?;
    let k_tilde = kron_colwise(k1, k2)?;
    let v_tilde = kron_colwise(v1, v2)?;
    attn_two(query, &k_tilde, &v_tilde)
}

/// Tensor attention over the two-matrix cache layout:
/// `Ṽᵀ · softmax(K̃ · q)`.
pub fn attn_two<T: Scalar>(
    query: &QueryVector<T>,
    k_tilde: &DenseMatrix<T>,
    v_tilde: &DenseMatrix<T>,
) -> Result<AttentionOutput<T>> {
    if k_tilde.rows() != v_tilde.rows() || k_tilde.cols() != v_tilde.cols() {
        return Err(Error::DimensionMismatch {
            context: "attn_two: key/value caches",
            expected: k_tilde.rows() * k_tilde.cols(),
            actual: v_tilde.rows() * v_tilde.cols(),
        });
    }
    if query.dim() != k_tilde.cols() {
        return Err(Error::DimensionMismatch {
            context: "attn_two: query",
            expected: k_tilde.cols(),
            actual: query.dim(),
        });
    }
    if k_tilde.rows() == 0 {
        return Err(Error::EmptyInput("attn_two: empty cache"));
    }
    let logits: Vec<T> = k_tilde
        .row_iter()
        .map(|row| dot(row, query.as_slice()))
        .collect();
    let weights = softmax(&logits)?;
    Ok(AttentionOutput::from_vec(weighted_row_sum(
        &weights, v_tilde,
    )))
}

/// Softmax-weighted sum of the rows of `values`.
fn weighted_row_sum<T: Scalar>(weights: &[T], values: &DenseMatrix<T>) -> Vec<T> {
    let mut out = vec![T::zero(); values.cols()];
    for (w, row) in weights.iter().zip(values.row_iter()) {
        for (o, &v) in out.iter_mut().zip(row.iter()) {
            *o += *w * v;
        }
    }
    out
}

fn check_four_shapes<T: Scalar>(
    query: &QueryVector<T>,
    k1: &DenseMatrix<T>,
    k2: &DenseMatrix<T>,
    v1: &DenseMatrix<T>,
    v2: &DenseMatrix<T>,
) -> Result<()> {
    let (rows, cols) = (k1.rows(), k1.cols());
    for (m, context) in [
        (k2, "attn_four: k2"),
        (v1, "attn_four: v1"),
        (v2, "attn_four: v2"),
    ] {
        if m.rows() != rows || m.cols() != cols {
            return Err(Error::DimensionMismatch {
                context,
                expected: rows * cols,
                actual: m.rows() * m.cols(),
            });
        }
    }
    if query.dim() != cols {
        return Err(Error::DimensionMismatch {
            context: "attn_four: query",
            expected: cols,
            actual: query.dim(),
        });
    }
    if rows == 0 {
        return Err(Error::EmptyInput("attn_four: empty cache"));
    }
    Ok(())
}
