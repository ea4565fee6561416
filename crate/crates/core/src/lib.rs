//! Tensor-attention decoding under two KV-cache layouts, plus the machinery
//! to measure what each layout trades away.
//!
//! Attention here takes two key streams and two value streams: the effective
//! keys are all pairwise entrywise products of rows, so a length-`i` session
//! has `i²` of them. That leaves two ways to cache the history:
//!
//! * [`FourCache`] keeps the factor matrices — `4·i·d` scalars of memory,
//!   but every attend rebuilds both `i²·d` pair products on the fly;
//! * [`TwoCache`] keeps the expanded pair grids — `2·i²·d` scalars of
//!   memory, but attends skip the rebuild entirely.
//!
//! Both paths produce identical outputs; [`StepCost`] instruments the scalar
//! work and logical bytes so the trade-off is measurable rather than
//! asserted. Around the kernels sit:
//!
//! * [`jl`] — seeded Gaussian projections with a deviation verifier, for
//!   building near-orthonormal key families;
//! * [`subgen`] — streaming leader-clustered cache compression with an
//!   approximate attention estimator;
//! * [`witness`] — adversarial bit-recovery sessions that demonstrate how
//!   much information a decoding cache must retain.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the `f64` instantiations that the calibrated constants
//! and the benchmark CLI assume.
//!
//! ```
//! use tensorkv::{FourCacheF64, QueryVector, TwoCacheF64};
//!
//! let mut four = FourCacheF64::new(2);
//! let mut two = TwoCacheF64::new(2);
//! for (k1, k2, v1, v2) in [
//!     ([0.4, 0.6], [1.0, -1.0], [2.0, 0.0], [1.0, 1.0]),
//!     ([0.1, 0.9], [0.5, 0.5], [0.0, 3.0], [1.0, -1.0]),
//!     ([0.7, 0.2], [0.3, -0.4], [1.0, 1.0], [0.5, 2.0]),
//! ] {
//!     four.append(&k1, &k2, &v1, &v2).unwrap();
//!     two.append(&k1, &k2, &v1, &v2).unwrap();
//! }
//! let q = QueryVector::new(vec![0.3, -0.2]).unwrap();
//! let (out_four, cost_four) = four.attend(&q).unwrap();
//! let (out_two, cost_two) = two.attend(&q).unwrap();
//! assert!(out_four.max_abs_diff(&out_two) <= 1e-12);
//! assert!(cost_four.attend_scalar_ops > cost_two.attend_scalar_ops);
//! assert!(two.logical_bytes() > four.logical_bytes());
//! ```

mod attention;
mod error;
pub mod jl;
mod kv_cache;
mod matrix;
mod rng;
mod scalar;
pub mod stats;
pub mod subgen;
pub mod synthetic;
pub mod witness;

pub use attention::{attn_four, attn_two, kron_colwise, softmax};
pub use error::{Error, Result};
pub use kv_cache::{FourCache, Quintuple, StepCost, Triple, TwoCache};
pub use matrix::{AttentionOutput, DenseMatrix, QueryVector};
pub use scalar::Scalar;

/// `f64` instantiations: the canonical scalar for calibrated tolerances.
pub type DenseMatrixF64 = DenseMatrix<f64>;
pub type QueryVectorF64 = QueryVector<f64>;
pub type AttentionOutputF64 = AttentionOutput<f64>;
pub type FourCacheF64 = FourCache<f64>;
pub type TwoCacheF64 = TwoCache<f64>;
pub type ClusteredCacheF64 = subgen::ClusteredCache<f64>;

/// `f32` instantiations, for storage-halved experiments.
pub type DenseMatrixF32 = DenseMatrix<f32>;
pub type QueryVectorF32 = QueryVector<f32>;
pub type AttentionOutputF32 = AttentionOutput<f32>;
pub type FourCacheF32 = FourCache<f32>;
pub type TwoCacheF32 = TwoCache<f32>;
