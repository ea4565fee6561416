//! Seeded Gaussian random projections and a pairwise-deviation verifier.
//!
//! A [`JlProjector`] materializes the images of the standard basis of
//! `R^n` under `S = (1/√d)·R`, where `R` has independent standard-normal
//! entries drawn from a ChaCha8 stream (see the `rng` module for the exact
//! transform). The projected family is near-orthonormal: inner products
//! deviate from the identity by at most `ε` with high probability once
//! `d ≳ ε⁻²·ln n`.
//!
//! Projected vectors are not renormalized by default; the `±ε` norm
//! deviation is part of what downstream consumers measure. A renormalizing
//! variant exists for experiments.

use crate::error::{Error, Result};
use crate::rng::SeededSource;
use crate::scalar::{dot, norm, Scalar};

/// Seeded Gaussian projection from dimension `n` down to dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JlProjector {
    source_dim: usize,
    target_dim: usize,
    seed: u64,
}

/// Worst pairwise deviations of a vector family from exact orthonormality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationReport<T> {
    /// Largest `|⟨v_i, v_j⟩|` over `i ≠ j`.
    pub max_cross: T,
    /// Largest `|⟨v_i, v_i⟩ − 1|`.
    pub max_norm_dev: T,
    /// Tolerance the report was checked against.
    pub epsilon: T,
    /// True when either statistic exceeds `epsilon`.
    pub violated: bool,
}

impl JlProjector {
    pub fn new(source_dim: usize, target_dim: usize, seed: u64) -> Result<Self> {
        if source_dim == 0 || target_dim == 0 {
            return Err(Error::InvalidParameter(
                "JlProjector dimensions must be at least 1".into(),
            ));
        }
        Ok(Self {
            source_dim,
            target_dim,
            seed,
        })
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Projections of the standard basis: vector `t` is `(1/√d)` times
    /// column `t` of the Gaussian matrix, i.e. `S·e_t`.
    ///
    /// Identical `(n, d, seed)` triples reproduce identical output
    /// bit-for-bit.
    pub fn project_basis<T: Scalar>(&self) -> Vec<Vec<T>> {
        self.project_basis_impl(false)
    }

    /// Like [`Self::project_basis`], with each output renormalized to unit
    /// length. Intended for experiments; the deviation guarantees refer to
    /// the unnormalized family.
    pub fn project_basis_renormalized<T: Scalar>(&self) -> Vec<Vec<T>> {
        self.project_basis_impl(true)
    }

    fn project_basis_impl<T: Scalar>(&self, renormalize: bool) -> Vec<Vec<T>> {
        let mut source = SeededSource::new(self.seed);
        let inv_sqrt_d = 1.0 / (self.target_dim as f64).sqrt();
        (0..self.source_dim)
            .map(|_| {
                let mut column: Vec<f64> = (0..self.target_dim)
                    .map(|_| source.standard_normal() * inv_sqrt_d)
                    .collect();
                if renormalize {
                    let len = column.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if len > 0.0 {
                        for x in &mut column {
                            *x /= len;
                        }
                    }
                }
                column.into_iter().map(T::from_f64_lossy).collect()
            })
            .collect()
    }
}

/// Target dimension `⌈multiplier · ε⁻² · ln n⌉` for projecting `n` vectors
/// at tolerance `ε`.
pub fn jl_dimension(n: usize, epsilon: f64, multiplier: f64) -> usize {
    ((multiplier * (n as f64).ln()) / (epsilon * epsilon)).ceil() as usize
}

/// Exhaustive `O(n²)` scan of all pairwise inner products.
pub fn check_deviation<T: Scalar>(vectors: &[Vec<T>], epsilon: T) -> Result<DeviationReport<T>> {
    if vectors.is_empty() {
        return Err(Error::EmptyInput("check_deviation"));
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "check_deviation",
                expected: dim,
                actual: v.len(),
            });
        }
    }
    let mut max_cross = T::zero();
    let mut max_norm_dev = T::zero();
    for (i, vi) in vectors.iter().enumerate() {
        max_norm_dev = max_norm_dev.max((dot(vi, vi) - T::one()).abs());
        for vj in vectors.iter().skip(i + 1) {
            max_cross = max_cross.max(dot(vi, vj).abs());
        }
    }
    Ok(DeviationReport {
        max_cross,
        max_norm_dev,
        epsilon,
        violated: max_cross > epsilon || max_norm_dev > epsilon,
    })
}

/// Fraction of seeds in `seed_start..seed_start + seeds` whose projected
/// basis violates the `ε` deviation bound.
pub fn violation_rate(n: usize, d: usize, epsilon: f64, seeds: u64, seed_start: u64) -> f64 {
    let mut violations = 0u64;
    for seed in seed_start..seed_start + seeds {
        let basis = JlProjector::new(n, d, seed)
            .expect("dimensions are nonzero")
            .project_basis::<f64>();
        if check_deviation(&basis, epsilon)
            .expect("basis is nonempty")
            .violated
        {
            violations += 1;
        }
    }
    violations as f64 / seeds as f64
}

/// Largest norm in a vector family; the witness uses this to report the
/// measured query-scale `r` rather than assuming one.
pub fn max_norm<T: Scalar>(vectors: &[Vec<T>]) -> T {
    vectors.iter().map(|v| norm(v)).fold(T::zero(), T::max)
}
