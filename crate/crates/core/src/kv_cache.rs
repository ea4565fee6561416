//! Decoding-session caches for both layouts, with incremental append and
//! deterministic accounting of scalar operations and logical memory.
//!
//! The four-matrix cache stores the key/value factor rows and pays for the
//! Kronecker materialization at every attend; the two-matrix cache stores the
//! expanded pair grid and pays for it in memory instead. Scalar-op counters
//! track multiply-accumulates and entrywise products only, so the per-step
//! attend difference between the layouts is exactly the two materializations:
//! `2·i²·d`.

use crate::attention::{attn_four, softmax};
use crate::error::{Error, Result};
use crate::matrix::{AttentionOutput, DenseMatrix, QueryVector};
use crate::scalar::{dot, Scalar};

/// Deterministic cost of one cache step.
///
/// `append_scalar_ops` and `attend_scalar_ops` count scalar writes,
/// multiply-accumulates, and entrywise products; `logical_bytes` is the
/// number of stored cache scalars times the scalar width, independent of
/// allocator behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepCost {
    pub append_scalar_ops: u64,
    pub attend_scalar_ops: u64,
    pub logical_bytes: u64,
}

/// One decoding step for the four-matrix layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Quintuple<T> {
    pub query: Vec<T>,
    pub k1: Vec<T>,
    pub k2: Vec<T>,
    pub v1: Vec<T>,
    pub v2: Vec<T>,
}

/// One decoding step for the two-matrix layout, with pre-combined rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple<T> {
    pub query: Vec<T>,
    pub k_tilde: Vec<T>,
    pub v_tilde: Vec<T>,
}

/// Four-matrix KV cache: the growing factor matrices `K1, K2, V1, V2`.
///
/// Memory is linear in the sequence length (`4·i·d` scalars); every attend
/// recomputes both column-wise Kronecker products on the fly. Memoizing them
/// would turn this into [`TwoCache`] and erase the trade-off being measured.
#[derive(Debug, Clone)]
pub struct FourCache<T> {
    d: usize,
    k1: DenseMatrix<T>,
    k2: DenseMatrix<T>,
    v1: DenseMatrix<T>,
    v2: DenseMatrix<T>,
}

impl<T: Scalar> FourCache<T> {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            k1: DenseMatrix::empty(d),
            k2: DenseMatrix::empty(d),
            v1: DenseMatrix::empty(d),
            v2: DenseMatrix::empty(d),
        }
    }

    /// Current sequence length `i`.
    pub fn len(&self) -> usize {
        self.k1.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Stored scalars times scalar width: `4·i·d` scalars.
    pub fn logical_bytes(&self) -> u64 {
        4 * self.len() as u64 * self.d as u64 * T::LOGICAL_BYTES
    }

    /// Appends one token's factor rows. Costs `4·d` scalar writes.
    pub fn append(&mut self, k1: &[T], k2: &[T], v1: &[T], v2: &[T]) -> Result<StepCost> {
        self.k1.push_row(k1)?;
        self.k2.push_row(k2)?;
        self.v1.push_row(v1)?;
        self.v2.push_row(v2)?;
        Ok(StepCost {
            append_scalar_ops: 4 * self.d as u64,
            attend_scalar_ops: 0,
            logical_bytes: self.logical_bytes(),
        })
    }

    /// Attention over the current history.
    ///
    /// Counts `4·i²·d` scalar ops: `2·i²·d` for materializing the two
    /// Kronecker products plus `2·i²·d` for the logit matvec and the
    /// weighted value sum.
    pub fn attend(&self, query: &QueryVector<T>) -> Result<(AttentionOutput<T>, StepCost)> {
        if self.is_empty() {
            return Err(Error::EmptyInput("FourCache::attend: empty cache"));
        }
        let output = attn_four(query, &self.k1, &self.k2, &self.v1, &self.v2)?;
        let i = self.len() as u64;
        let d = self.d as u64;
        Ok((
            output,
            StepCost {
                append_scalar_ops: 0,
                attend_scalar_ops: 4 * i * i * d,
                logical_bytes: self.logical_bytes(),
            },
        ))
    }

    pub fn k1(&self) -> &DenseMatrix<T> {
        &self.k1
    }
    pub fn k2(&self) -> &DenseMatrix<T> {
        &self.k2
    }
    pub fn v1(&self) -> &DenseMatrix<T> {
        &self.v1
    }
    pub fn v2(&self) -> &DenseMatrix<T> {
        &self.v2
    }
}

/// Two-matrix KV cache: the expanded `(a, b)` pair grids for `K̃` and `Ṽ`.
///
/// Cell `(a, b)` of the key grid holds `k_{1,a} ⊙ k_{2,b}`. The grid uses
/// stable per-`a` rows so existing cells never move as the session grows;
/// appending token `i+1` writes exactly the `2i+1` new cells per grid. Flat
/// row-major views are built lazily only when a caller asks for one.
///
/// The factor rows are kept privately to make incremental appends `Θ(i·d)`;
/// logical-memory accounting covers the `2·i²·d` grid scalars, which is the
/// quantity the layout trades for attend speed.
#[derive(Debug, Clone)]
pub struct TwoCache<T> {
    d: usize,
    grid_k: PairGrid<T>,
    grid_v: PairGrid<T>,
    factors: FourCache<T>,
}

/// Grid of `d`-vectors indexed by `(a, b)`, stored as one growable row per `a`.
#[derive(Debug, Clone)]
struct PairGrid<T> {
    rows: Vec<Vec<T>>,
    d: usize,
}

impl<T: Scalar> PairGrid<T> {
    fn new(d: usize) -> Self {
        Self {
            rows: Vec::new(),
            d,
        }
    }

    #[inline]
    fn cell(&self, a: usize, b: usize) -> &[T] {
        &self.rows[a][b * self.d..(b + 1) * self.d]
    }

    /// Extends the grid from `i×i` to `(i+1)×(i+1)` given the two factor
    /// histories and the new factor rows. Returns scalars written.
    fn grow(
        &mut self,
        left_history: &DenseMatrix<T>,
        right_history: &DenseMatrix<T>,
        new_left: &[T],
        new_right: &[T],
    ) -> u64 {
        let i = self.rows.len();
        let d = self.d;
        // Existing rows a < i gain cell (a, i): left_a ⊙ new_right.
        for (a, row) in self.rows.iter_mut().enumerate() {
            let left = left_history.row(a);
            row.extend((0..d).map(|j| left[j] * new_right[j]));
        }
        // New row a = i: new_left ⊙ right_b for b <= i.
        let mut row = Vec::with_capacity((i + 1) * d);
        for b in 0..i {
            let right = right_history.row(b);
            row.extend((0..d).map(|j| new_left[j] * right[j]));
        }
        row.extend((0..d).map(|j| new_left[j] * new_right[j]));
        self.rows.push(row);
        (2 * i as u64 + 1) * d as u64
    }

    /// Flat `i² × d` matrix in row-major pair order.
    fn flatten(&self) -> DenseMatrix<T> {
        let i = self.rows.len();
        let mut data = Vec::with_capacity(i * i * self.d);
        for row in &self.rows {
            data.extend_from_slice(row);
        }
        DenseMatrix::from_vec(i * i, self.d, data).expect("grid rows are validated on append")
    }
}

impl<T: Scalar> TwoCache<T> {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            grid_k: PairGrid::new(d),
            grid_v: PairGrid::new(d),
            factors: FourCache::new(d),
        }
    }

    /// Current sequence length `i` (the grid holds `i²` cells).
    pub fn len(&self) -> usize {
        self.grid_k.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Stored scalars times scalar width: `2·i²·d` grid scalars.
    pub fn logical_bytes(&self) -> u64 {
        let i = self.len() as u64;
        2 * i * i * self.d as u64 * T::LOGICAL_BYTES
    }

    /// Appends one token, writing the `2i+1` new cells in each grid.
    ///
    /// Costs `2·(2i+1)·d` scalar writes where `i` is the length before the
    /// append.
    pub fn append(&mut self, k1: &[T], k2: &[T], v1: &[T], v2: &[T]) -> Result<StepCost> {
        for (row, context) in [
            (k1, "TwoCache::append: k1"),
            (k2, "TwoCache::append: k2"),
            (v1, "TwoCache::append: v1"),
            (v2, "TwoCache::append: v2"),
        ] {
            if row.len() != self.d {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: self.d,
                    actual: row.len(),
                });
            }
        }
        let written_k = self
            .grid_k
            .grow(self.factors.k1(), self.factors.k2(), k1, k2);
        let written_v = self
            .grid_v
            .grow(self.factors.v1(), self.factors.v2(), v1, v2);
        self.factors.append(k1, k2, v1, v2)?;
        Ok(StepCost {
            append_scalar_ops: written_k + written_v,
            attend_scalar_ops: 0,
            logical_bytes: self.logical_bytes(),
        })
    }

    /// Attention over the stored grids, with no Kronecker materialization.
    ///
    /// Counts `2·i²·d` scalar ops: the logit matvec plus the weighted value
    /// sum. Iterates the grid cells directly in row-major pair order, so the
    /// result is identical to `attn_two` on the flattened grids.
    pub fn attend(&self, query: &QueryVector<T>) -> Result<(AttentionOutput<T>, StepCost)> {
        let i = self.len();
        if i == 0 {
            return Err(Error::EmptyInput("TwoCache::attend: empty cache"));
        }
        if query.dim() != self.d {
            return Err(Error::DimensionMismatch {
                context: "TwoCache::attend: query",
                expected: self.d,
                actual: query.dim(),
            });
        }
        let mut logits = Vec::with_capacity(i * i);
        for a in 0..i {
            for b in 0..i {
                logits.push(dot(self.grid_k.cell(a, b), query.as_slice()));
            }
        }
        let weights = softmax(&logits)?;
        let mut out = vec![T::zero(); self.d];
        for a in 0..i {
            for b in 0..i {
                let w = weights[a * i + b];
                for (o, &v) in out.iter_mut().zip(self.grid_v.cell(a, b).iter()) {
                    *o += w * v;
                }
            }
        }
        let id = (i * i) as u64 * self.d as u64;
        Ok((
            AttentionOutput::from_vec(out),
            StepCost {
                append_scalar_ops: 0,
                attend_scalar_ops: 2 * id,
                logical_bytes: self.logical_bytes(),
            },
        ))
    }

    /// Lazily flattened `i² × d` key matrix in row-major pair order.
    pub fn flattened_k(&self) -> DenseMatrix<T> {
        self.grid_k.flatten()
    }

    /// Lazily flattened `i² × d` value matrix in row-major pair order.
    pub fn flattened_v(&self) -> DenseMatrix<T> {
        self.grid_v.flatten()
    }

    /// Key-grid cell `(a, b)`.
    pub fn key_cell(&self, a: usize, b: usize) -> &[T] {
        self.grid_k.cell(a, b)
    }

    /// Value-grid cell `(a, b)`.
    pub fn value_cell(&self, a: usize, b: usize) -> &[T] {
        self.grid_v.cell(a, b)
    }
}
