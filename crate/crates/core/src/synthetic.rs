//! Seeded generators for clusterable decode streams with known ground truth.
//!
//! Keys are drawn from `m_true` balls of radius `delta/4` whose centers are
//! pairwise at least `1.25·delta` apart inside the unit ball, so greedy
//! leader clustering at diameter `delta` recovers exactly `m_true` clusters:
//! two keys from one ball are within `delta/2` of each other, keys from
//! different balls are at least `0.75·delta` apart. Every ball is hit at
//! least once by construction.
//!
//! `m_true = 1` degenerates to a point mass (no perturbation): the
//! single-cluster stream is the one whose compressed estimate is exactly
//! lossless.

use crate::error::{Error, Result};
use crate::kv_cache::{Quintuple, Triple};
use crate::matrix::QueryVector;
use crate::rng::SeededSource;

/// Shape of a generated stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSpec {
    /// Number of decoding steps.
    pub n: usize,
    /// Embedding dimension.
    pub d: usize,
    /// Ground-truth cluster count per key stream.
    pub m_true: usize,
    /// Clustering diameter the stream is built for.
    pub delta: f64,
    /// Euclidean norm of the final query.
    pub query_norm: f64,
    pub seed: u64,
}

impl StreamSpec {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.m_true == 0 {
            return Err(Error::InvalidParameter(
                "stream spec requires n, d, m_true >= 1".into(),
            ));
        }
        if self.n < self.m_true {
            return Err(Error::InvalidParameter(format!(
                "stream length {} cannot cover {} clusters",
                self.n, self.m_true
            )));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidParameter("delta must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Quintuple stream whose `k1` and `k2` streams are each
/// `(m_true, delta)`-clusterable, plus the final query.
pub fn four_stream(spec: &StreamSpec) -> Result<(Vec<Quintuple<f64>>, QueryVector<f64>)> {
    spec.validate()?;
    let mut src = SeededSource::new(spec.seed);
    let centers_left = separated_centers(&mut src, spec)?;
    let centers_right = separated_centers(&mut src, spec)?;
    let mut stream = Vec::with_capacity(spec.n);
    for t in 0..spec.n {
        let ball_left = t % spec.m_true;
        let ball_right = if t < spec.m_true {
            t
        } else {
            src.uniform_index(spec.m_true)
        };
        stream.push(Quintuple {
            query: vec![0.0; spec.d],
            k1: perturbed(&mut src, &centers_left[ball_left], spec),
            k2: perturbed(&mut src, &centers_right[ball_right], spec),
            v1: value_row(&mut src, spec.d),
            v2: value_row(&mut src, spec.d),
        });
    }
    let query = final_query(&mut src, spec)?;
    Ok((stream, query))
}

/// Triple stream whose combined key stream is `(m_true, delta)`-clusterable,
/// plus the final query.
pub fn two_stream(spec: &StreamSpec) -> Result<(Vec<Triple<f64>>, QueryVector<f64>)> {
    spec.validate()?;
    let mut src = SeededSource::new(spec.seed);
    let centers = separated_centers(&mut src, spec)?;
    let mut stream = Vec::with_capacity(spec.n);
    for t in 0..spec.n {
        let ball = t % spec.m_true;
        stream.push(Triple {
            query: vec![0.0; spec.d],
            k_tilde: perturbed(&mut src, &centers[ball], spec),
            v_tilde: value_row(&mut src, spec.d),
        });
    }
    let query = final_query(&mut src, spec)?;
    Ok((stream, query))
}

/// Rejection-samples `m_true` centers in the unit ball, pairwise at least
/// `1.25·delta` apart and with enough margin that perturbed keys stay
/// inside the unit ball.
fn separated_centers(src: &mut SeededSource, spec: &StreamSpec) -> Result<Vec<Vec<f64>>> {
    let margin = spec.delta / 4.0;
    let max_center_norm = (1.0 - margin).max(0.0);
    let min_separation = 1.25 * spec.delta;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(spec.m_true);
    let mut attempts = 0usize;
    while centers.len() < spec.m_true {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::InvalidParameter(format!(
                "could not place {} centers {} apart in the unit ball (d = {})",
                spec.m_true, min_separation, spec.d
            )));
        }
        let candidate = src.uniform_in_ball(spec.d, max_center_norm);
        let separated = centers.iter().all(|c| {
            let dist_sq: f64 = c
                .iter()
                .zip(candidate.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dist_sq >= min_separation * min_separation
        });
        if separated {
            centers.push(candidate);
        }
    }
    Ok(centers)
}

fn perturbed(src: &mut SeededSource, center: &[f64], spec: &StreamSpec) -> Vec<f64> {
    if spec.m_true == 1 {
        return center.to_vec();
    }
    let noise = src.uniform_in_ball(spec.d, spec.delta / 4.0);
    center
        .iter()
        .zip(noise.iter())
        .map(|(c, n)| c + n)
        .collect()
}

fn value_row(src: &mut SeededSource, d: usize) -> Vec<f64> {
    (0..d).map(|_| 2.0 * src.uniform01() - 1.0).collect()
}

fn final_query(src: &mut SeededSource, spec: &StreamSpec) -> Result<QueryVector<f64>> {
    let mut q: Vec<f64> = (0..spec.d).map(|_| src.standard_normal()).collect();
    let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut q {
            *x *= spec.query_norm / norm;
        }
    }
    QueryVector::new(q)
}
