//! Streaming clustered compression of attention caches, with an approximate
//! attention estimator and clusterability utilities.
//!
//! Keys are absorbed by greedy leader clustering: a key joins the earliest
//! cluster whose leader is within `δ/2`, otherwise it opens a new cluster
//! with itself as leader. Each cluster keeps its leader, a member count, and
//! the running sum of the associated value rows, so the state grows with the
//! number of clusters rather than the stream length.
//!
//! Attention is estimated with one logit per cluster, `⟨leader, q⟩`, weighted
//! by the member count. Two exact limits hold by construction: a single
//! cluster is lossless, and `δ = 0` (every distinct key its own leader)
//! reproduces exact attention.
//!
//! For the four-matrix layout, clustering the `i²` combined keys directly
//! would cost `Θ(i)` work per token, so [`FactoredClusteredCache`] clusters
//! the two key streams separately and forms the cluster-pair grid only at
//! query time: pair counts multiply and value sums combine entrywise, which
//! is exact within each cluster pair because `Σ_{a,b} v1_a ⊙ v2_b =
//! (Σ_a v1_a) ⊙ (Σ_b v2_b)`.

use crate::attention::{attn_four, attn_two, kron_colwise, softmax};
use crate::error::{Error, Result};
use crate::kv_cache::{Quintuple, Triple};
use crate::matrix::{AttentionOutput, DenseMatrix, QueryVector};
use crate::scalar::{dist_sq, dot, norm, Scalar};

/// One leader cluster: the first key assigned, the member count, and the
/// running sum of associated value rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T> {
    center: Vec<T>,
    count: u64,
    value_sum: Vec<T>,
}

impl<T: Scalar> Cluster<T> {
    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn value_sum(&self) -> &[T] {
        &self.value_sum
    }
}

/// Leader-clustered compression of a single (key, value) stream.
#[derive(Debug, Clone)]
pub struct ClusteredCache<T> {
    d: usize,
    delta: T,
    clusters: Vec<Cluster<T>>,
    total_keys: u64,
}

impl<T: Scalar> ClusteredCache<T> {
    /// `delta` is the clustering diameter: keys join a leader within `δ/2`.
    pub fn new(d: usize, delta: T) -> Self {
        Self {
            d,
            delta,
            clusters: Vec::new(),
            total_keys: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn total_keys(&self) -> u64 {
        self.total_keys
    }

    pub fn clusters(&self) -> &[Cluster<T>] {
        &self.clusters
    }

    /// Stored state: per cluster, a `d`-vector leader, a `d`-vector value
    /// sum, and one count word. Grows with the cluster count only.
    pub fn logical_bytes(&self) -> u64 {
        self.clusters.len() as u64 * (2 * self.d as u64 + 1) * T::LOGICAL_BYTES
    }

    /// Absorbs one (key, value) pair and returns the cluster index it
    /// joined. Ties go to the earliest-created cluster.
    pub fn insert(&mut self, key: &[T], value: &[T]) -> Result<usize> {
        if key.len() != self.d {
            return Err(Error::DimensionMismatch {
                context: "ClusteredCache::insert: key",
                expected: self.d,
                actual: key.len(),
            });
        }
        if value.len() != self.d {
            return Err(Error::DimensionMismatch {
                context: "ClusteredCache::insert: value",
                expected: self.d,
                actual: value.len(),
            });
        }
        self.total_keys += 1;
        let join_radius_sq = (self.delta * self.delta) / T::from_f64_lossy(4.0);
        let joined = self
            .clusters
            .iter()
            .position(|c| dist_sq(&c.center, key) <= join_radius_sq);
        match joined {
            Some(idx) => {
                let cluster = &mut self.clusters[idx];
                cluster.count += 1;
                for (sum, &v) in cluster.value_sum.iter_mut().zip(value.iter()) {
                    *sum += v;
                }
                Ok(idx)
            }
            None => {
                self.clusters.push(Cluster {
                    center: key.to_vec(),
                    count: 1,
                    value_sum: value.to_vec(),
                });
                Ok(self.clusters.len() - 1)
            }
        }
    }

    /// Estimated attention output: one logit per cluster at the leader,
    /// weighted by member count, with max-subtraction on the logits.
    pub fn attend(&self, query: &QueryVector<T>) -> Result<AttentionOutput<T>> {
        if self.clusters.is_empty() {
            return Err(Error::EmptyInput("ClusteredCache::attend"));
        }
        if query.dim() != self.d {
            return Err(Error::DimensionMismatch {
                context: "ClusteredCache::attend: query",
                expected: self.d,
                actual: query.dim(),
            });
        }
        let logits: Vec<T> = self
            .clusters
            .iter()
            .map(|c| dot(&c.center, query.as_slice()))
            .collect();
        let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let mut denom = T::zero();
        let mut out = vec![T::zero(); self.d];
        for (cluster, &logit) in self.clusters.iter().zip(logits.iter()) {
            let scale = (logit - max).exp();
            denom += T::from_f64_lossy(cluster.count as f64) * scale;
            for (o, &s) in out.iter_mut().zip(cluster.value_sum.iter()) {
                *o += scale * s;
            }
        }
        for o in &mut out {
            *o = *o / denom;
        }
        Ok(AttentionOutput::from_vec(out))
    }
}

/// SubGen-style compression of the four-matrix layout: the two key streams
/// are clustered separately and combined as a cluster-pair grid at query
/// time.
#[derive(Debug, Clone)]
pub struct FactoredClusteredCache<T> {
    left: ClusteredCache<T>,
    right: ClusteredCache<T>,
}

impl<T: Scalar> FactoredClusteredCache<T> {
    pub fn new(d: usize, delta: T) -> Self {
        Self {
            left: ClusteredCache::new(d, delta),
            right: ClusteredCache::new(d, delta),
        }
    }

    /// Absorbs one decoding step's factor rows.
    pub fn insert(&mut self, k1: &[T], v1: &[T], k2: &[T], v2: &[T]) -> Result<()> {
        self.left.insert(k1, v1)?;
        self.right.insert(k2, v2)?;
        Ok(())
    }

    pub fn left(&self) -> &ClusteredCache<T> {
        &self.left
    }

    pub fn right(&self) -> &ClusteredCache<T> {
        &self.right
    }

    pub fn logical_bytes(&self) -> u64 {
        self.left.logical_bytes() + self.right.logical_bytes()
    }

    /// Estimate over the cluster-pair grid: pair `(c1, c2)` contributes the
    /// logit `⟨leader_1 ⊙ leader_2, q⟩` with multiplicity
    /// `count_1 · count_2` and value mass `value_sum_1 ⊙ value_sum_2`.
    pub fn attend(&self, query: &QueryVector<T>) -> Result<AttentionOutput<T>> {
        if self.left.clusters.is_empty() {
            return Err(Error::EmptyInput("FactoredClusteredCache::attend"));
        }
        let d = self.left.d;
        if query.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "FactoredClusteredCache::attend: query",
                expected: d,
                actual: query.dim(),
            });
        }
        let q = query.as_slice();
        let mut logits = Vec::with_capacity(self.left.clusters.len() * self.right.clusters.len());
        for c1 in &self.left.clusters {
            for c2 in &self.right.clusters {
                let mut logit = T::zero();
                for ((&a, &b), &qj) in c1.center.iter().zip(c2.center.iter()).zip(q.iter()) {
                    logit += a * b * qj;
                }
                logits.push(logit);
            }
        }
        let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let mut denom = T::zero();
        let mut out = vec![T::zero(); d];
        let mut pair = 0;
        for c1 in &self.left.clusters {
            for c2 in &self.right.clusters {
                let scale = (logits[pair] - max).exp();
                pair += 1;
                denom += T::from_f64_lossy((c1.count * c2.count) as f64) * scale;
                for ((o, &a), &b) in out
                    .iter_mut()
                    .zip(c1.value_sum.iter())
                    .zip(c2.value_sum.iter())
                {
                    *o += scale * a * b;
                }
            }
        }
        for o in &mut out {
            *o = *o / denom;
        }
        Ok(AttentionOutput::from_vec(out))
    }
}

/// How far a clustered estimate landed from the exact output, against the
/// scale-aware bound `ε · ‖softmax(K̃·q)‖₂ · ‖Ṽ‖_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxError {
    pub abs_error: f64,
    pub bound: f64,
    pub within_bound: bool,
}

impl ApproxError {
    fn new(abs_error: f64, bound: f64) -> Self {
        Self {
            abs_error,
            bound,
            within_bound: abs_error <= bound,
        }
    }
}

/// Streams a four-matrix decode through a [`FactoredClusteredCache`] and
/// estimates the final attention output, reporting the error against the
/// exact result at tolerance scale `epsilon`.
pub fn subgen_attend_four<T: Scalar>(
    stream: &[Quintuple<T>],
    delta: T,
    query: &QueryVector<T>,
    epsilon: f64,
) -> Result<(AttentionOutput<T>, ApproxError)> {
    if stream.is_empty() {
        return Err(Error::EmptyInput("subgen_attend_four"));
    }
    let d = query.dim();
    let mut cache = FactoredClusteredCache::new(d, delta);
    let mut k1 = DenseMatrix::empty(d);
    let mut k2 = DenseMatrix::empty(d);
    let mut v1 = DenseMatrix::empty(d);
    let mut v2 = DenseMatrix::empty(d);
    for step in stream {
        cache.insert(&step.k1, &step.v1, &step.k2, &step.v2)?;
        k1.push_row(&step.k1)?;
        k2.push_row(&step.k2)?;
        v1.push_row(&step.v1)?;
        v2.push_row(&step.v2)?;
    }
    let estimate = cache.attend(query)?;
    let exact = attn_four(query, &k1, &k2, &v1, &v2)?;
    let k_tilde = kron_colwise(&k1, &k2)?;
    let v_tilde = kron_colwise(&v1, &v2)?;
    let error = approx_error(&estimate, &exact, query, &k_tilde, &v_tilde, epsilon)?;
    Ok((estimate, error))
}

/// Streams pre-combined (key, value) rows through a [`ClusteredCache`] and
/// estimates the final attention output, as [`subgen_attend_four`] does for
/// factor streams.
pub fn subgen_attend_two<T: Scalar>(
    stream: &[Triple<T>],
    delta: T,
    query: &QueryVector<T>,
    epsilon: f64,
) -> Result<(AttentionOutput<T>, ApproxError)> {
    if stream.is_empty() {
        return Err(Error::EmptyInput("subgen_attend_two"));
    }
    let d = query.dim();
    let mut cache = ClusteredCache::new(d, delta);
    let mut k_tilde = DenseMatrix::empty(d);
    let mut v_tilde = DenseMatrix::empty(d);
    for step in stream {
        cache.insert(&step.k_tilde, &step.v_tilde)?;
        k_tilde.push_row(&step.k_tilde)?;
        v_tilde.push_row(&step.v_tilde)?;
    }
    let estimate = cache.attend(query)?;
    let exact = attn_two(query, &k_tilde, &v_tilde)?;
    let error = approx_error(&estimate, &exact, query, &k_tilde, &v_tilde, epsilon)?;
    Ok((estimate, error))
}

fn approx_error<T: Scalar>(
    estimate: &AttentionOutput<T>,
    exact: &AttentionOutput<T>,
    query: &QueryVector<T>,
    k_tilde: &DenseMatrix<T>,
    v_tilde: &DenseMatrix<T>,
    epsilon: f64,
) -> Result<ApproxError> {
    let logits: Vec<T> = k_tilde
        .row_iter()
        .map(|row| dot(row, query.as_slice()))
        .collect();
    let weights = softmax(&logits)?;
    let weight_norm = norm(&weights).to_f64().unwrap_or(f64::NAN);
    let value_norm = v_tilde.frobenius_norm().to_f64().unwrap_or(f64::NAN);
    let abs = estimate.l2_distance(exact).to_f64().unwrap_or(f64::NAN);
    Ok(ApproxError::new(abs, epsilon * weight_norm * value_norm))
}

/// Greedy leader clustering of a unit-ball point set at diameter `delta`.
///
/// Returns the cluster count and the per-point assignment. Points with norm
/// above `1 + 1e-9` break the unit-ball contract and are rejected.
pub fn greedy_clusterability<T: Scalar>(
    points: &[Vec<T>],
    delta: T,
) -> Result<(usize, Vec<usize>)> {
    if points.is_empty() {
        return Err(Error::EmptyInput("greedy_clusterability"));
    }
    let d = points[0].len();
    const NORM_LIMIT: f64 = 1.0 + 1e-9;
    for p in points {
        let n = norm(p).to_f64().unwrap_or(f64::INFINITY);
        if n > NORM_LIMIT {
            return Err(Error::NormBoundExceeded {
                norm: n,
                limit: NORM_LIMIT,
            });
        }
    }
    let zero_value = vec![T::zero(); d];
    let mut cache = ClusteredCache::new(d, delta);
    let mut assignment = Vec::with_capacity(points.len());
    for p in points {
        assignment.push(cache.insert(p, &zero_value)?);
    }
    Ok((cache.num_clusters(), assignment))
}

/// Closed-form covering bound for the unit ball: `(3/δ)^d` balls of radius
/// `δ ∈ (0, 1)` suffice.
pub fn covering_bound(d: u32, delta: f64) -> f64 {
    (3.0 / delta).powi(d as i32)
}

/// Frozen empirical tolerances for the bound audits.
///
/// The scale-aware error bound takes `ε` as an input; rather than invent a
/// constant, each evaluation configuration gets an `ε` calibrated once from
/// a pre-registered run: the maximum observed ratio
/// `‖estimate − exact‖₂ / (‖softmax(K̃·q)‖₂ · ‖Ṽ‖_F)` over calibration
/// seeds `1000..1100`, doubled as a safety factor and rounded up at two
/// significant digits. Audits run on the disjoint seed range `2000..2100`.
///
/// Regenerate with
/// `cargo test -p tensorkv calibrate_epsilons -- --ignored --nocapture`.
pub mod calibration {
    /// Factor streams, `m_true = 4`, `δ = 0.1`, `n = 64`, `d = 8`, `r = 2`.
    /// Calibrated max ratio 3.41e-4.
    pub const EPSILON_FOUR_M4_N64_D8: f64 = 6.9e-4;

    /// Factor streams, `m_true = 5`, `δ = 0.1`, `n = 200`, `d = 8`, `r = 2`.
    /// Calibrated max ratio 1.08e-4.
    pub const EPSILON_FOUR_M5_N200_D8: f64 = 2.2e-4;

    /// Combined streams, `m_true = 4`, `δ = 0.1`, `n = 64`, `d = 8`, `r = 2`.
    /// Calibrated max ratio 5.27e-3.
    pub const EPSILON_TWO_M4_N64_D8: f64 = 1.1e-2;

    /// Combined streams, `m_true = 5`, `δ = 0.1`, `n = 200`, `d = 8`, `r = 2`.
    /// Calibrated max ratio 3.13e-3.
    pub const EPSILON_TWO_M5_N200_D8: f64 = 6.3e-3;

    /// Seed ranges of the protocol.
    pub const CALIBRATION_SEEDS: std::ops::Range<u64> = 1000..1100;
    pub const AUDIT_SEEDS: std::ops::Range<u64> = 2000..2100;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededSource;
    use crate::synthetic::{four_stream, two_stream, StreamSpec};

    /// Calibration runner for the constants in [`calibration`]: prints the
    /// max observed error ratio per configuration over the calibration
    /// seeds.
    #[test]
    #[ignore = "regenerates the frozen calibration constants"]
    fn calibrate_epsilons() {
        for (label, m_true, n) in [
            ("four m=4 n=64", 4usize, 64usize),
            ("four m=5 n=200", 5, 200),
        ] {
            let mut max_ratio: f64 = 0.0;
            for seed in calibration::CALIBRATION_SEEDS {
                let spec = StreamSpec {
                    n,
                    d: 8,
                    m_true,
                    delta: 0.1,
                    query_norm: 2.0,
                    seed,
                };
                let (stream, query) = four_stream(&spec).unwrap();
                let (_, err) = subgen_attend_four(&stream, 0.1, &query, 1.0).unwrap();
                max_ratio = max_ratio.max(err.abs_error / err.bound);
            }
            println!(
                "{label}: max ratio {max_ratio:.6e}, epsilon {:.6e}",
                2.0 * max_ratio
            );
        }
        for (label, m_true, n) in [("two m=4 n=64", 4usize, 64usize), ("two m=5 n=200", 5, 200)] {
            let mut max_ratio: f64 = 0.0;
            for seed in calibration::CALIBRATION_SEEDS {
                let spec = StreamSpec {
                    n,
                    d: 8,
                    m_true,
                    delta: 0.1,
                    query_norm: 2.0,
                    seed,
                };
                let (stream, query) = two_stream(&spec).unwrap();
                let (_, err) = subgen_attend_two(&stream, 0.1, &query, 1.0).unwrap();
                max_ratio = max_ratio.max(err.abs_error / err.bound);
            }
            println!(
                "{label}: max ratio {max_ratio:.6e}, epsilon {:.6e}",
                2.0 * max_ratio
            );
        }
    }

    #[test]
    fn duplicate_key_merges() {
        let mut cache = ClusteredCache::new(2, 0.5_f64);
        cache.insert(&[0.1, 0.2], &[1.0, 2.0]).unwrap();
        cache.insert(&[0.1, 0.2], &[1.0, 2.0]).unwrap();
        assert_eq!(cache.num_clusters(), 1);
        assert_eq!(cache.clusters()[0].count(), 2);
        assert_eq!(cache.clusters()[0].value_sum(), &[2.0, 4.0]);
    }

    #[test]
    fn distant_keys_split() {
        let mut cache = ClusteredCache::new(2, 0.5_f64);
        cache.insert(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        cache.insert(&[0.9, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(cache.num_clusters(), 2);
    }

    #[test]
    fn tie_goes_to_earliest_cluster() {
        let mut cache = ClusteredCache::new(1, 1.0_f64);
        cache.insert(&[0.0], &[1.0]).unwrap();
        cache.insert(&[0.8], &[1.0]).unwrap();
        // 0.4 is within delta/2 = 0.5 of both leaders.
        let idx = cache.insert(&[0.4], &[1.0]).unwrap();
        assert_eq!(idx, 0);
    }

    #[test]
    fn separated_balls_recover_true_cluster_count() {
        let delta = 0.2_f64;
        let mut src = SeededSource::new(11);
        let centers = [
            vec![0.6, 0.0, 0.0],
            vec![-0.6, 0.0, 0.0],
            vec![0.0, 0.6, 0.0],
            vec![0.0, -0.6, 0.0],
            vec![0.0, 0.0, 0.6],
        ];
        let mut cache = ClusteredCache::new(3, delta);
        for t in 0..200usize {
            let center = &centers[t % centers.len()];
            let noise = src.uniform_in_ball(3, delta / 4.0);
            let key: Vec<f64> = center
                .iter()
                .zip(noise.iter())
                .map(|(c, n)| c + n)
                .collect();
            cache.insert(&key, &[1.0, 1.0, 1.0]).unwrap();
        }
        assert_eq!(cache.num_clusters(), 5);
        assert_eq!(cache.total_keys(), 200);
    }

    #[test]
    fn logical_bytes_track_cluster_count_only() {
        let mut cache = ClusteredCache::new(4, 0.5_f64);
        cache.insert(&[0.0; 4], &[1.0; 4]).unwrap();
        let one_cluster = cache.logical_bytes();
        assert_eq!(one_cluster, (2 * 4 + 1) * 8);
        for _ in 0..999 {
            cache.insert(&[0.0; 4], &[1.0; 4]).unwrap();
        }
        assert_eq!(cache.logical_bytes(), one_cluster);
    }

    #[test]
    fn single_cluster_estimate_is_lossless() {
        // All keys identical: the estimate must equal exact attention.
        let d = 3;
        let mut src = SeededSource::new(5);
        let key = vec![0.3, -0.4, 0.5];
        let stream: Vec<Triple<f64>> = (0..20)
            .map(|_| Triple {
                query: vec![0.0; d],
                k_tilde: key.clone(),
                v_tilde: (0..d).map(|_| src.standard_normal()).collect(),
            })
            .collect();
        let q = QueryVector::new(vec![1.0, 2.0, -0.5]).unwrap();
        let (_, err) = subgen_attend_two(&stream, 0.5, &q, 1e-6).unwrap();
        assert!(err.abs_error <= 1e-12, "abs error {}", err.abs_error);
    }

    #[test]
    fn zero_delta_estimate_is_exact() {
        let d = 4;
        let mut src = SeededSource::new(17);
        let stream: Vec<Triple<f64>> = (0..30)
            .map(|_| Triple {
                query: vec![0.0; d],
                k_tilde: (0..d).map(|_| src.standard_normal() * 0.4).collect(),
                v_tilde: (0..d).map(|_| src.standard_normal()).collect(),
            })
            .collect();
        let q = QueryVector::new(vec![0.7, -0.3, 0.1, 0.9]).unwrap();
        let (_, err) = subgen_attend_two(&stream, 0.0, &q, 1e-6).unwrap();
        assert!(err.abs_error <= 1e-12, "abs error {}", err.abs_error);
    }

    #[test]
    fn zero_delta_factored_estimate_is_exact() {
        let d = 3;
        let mut src = SeededSource::new(23);
        let mut vector =
            |scale: f64| -> Vec<f64> { (0..d).map(|_| src.standard_normal() * scale).collect() };
        let stream: Vec<Quintuple<f64>> = (0..12)
            .map(|_| Quintuple {
                query: vec![0.0; d],
                k1: vector(0.4),
                k2: vector(0.4),
                v1: vector(1.0),
                v2: vector(1.0),
            })
            .collect();
        let q = QueryVector::new(vec![0.2, -0.6, 0.4]).unwrap();
        let (_, err) = subgen_attend_four(&stream, 0.0, &q, 1e-6).unwrap();
        assert!(err.abs_error <= 1e-12, "abs error {}", err.abs_error);
    }

    #[test]
    fn empty_stream_rejected() {
        let q = QueryVector::new(vec![0.0; 2]).unwrap();
        assert!(matches!(
            subgen_attend_two::<f64>(&[], 0.1, &q, 1e-3),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn clusterability_all_identical_is_one_cluster() {
        let points = vec![vec![0.2_f64, 0.1]; 50];
        let (m, assignment) = greedy_clusterability(&points, 0.3).unwrap();
        assert_eq!(m, 1);
        assert!(assignment.iter().all(|&a| a == 0));
    }

    #[test]
    fn clusterability_rejects_points_outside_unit_ball() {
        let points = vec![vec![1.2_f64, 0.0]];
        assert!(matches!(
            greedy_clusterability(&points, 0.5),
            Err(Error::NormBoundExceeded { .. })
        ));
    }

    #[test]
    fn covering_bound_values() {
        assert_eq!(covering_bound(2, 1.0), 9.0);
        assert_eq!(covering_bound(3, 0.5), 216.0);
        assert_eq!(covering_bound(1, 3.0), 1.0);
    }

    #[test]
    fn cluster_count_monotone_in_delta() {
        let mut src = SeededSource::new(31);
        let points: Vec<Vec<f64>> = (0..400).map(|_| src.uniform_in_ball(3, 1.0)).collect();
        let mut previous = usize::MAX;
        for delta in [0.05, 0.1, 0.2, 0.4, 0.8, 1.6] {
            let (m, _) = greedy_clusterability(&points, delta).unwrap();
            assert!(
                m <= previous,
                "m grew from {previous} to {m} at delta {delta}"
            );
            previous = m;
        }
    }
}
