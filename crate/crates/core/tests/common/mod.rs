//! Shared test support: an independent scalar attention oracle and a
//! self-contained random source.
//!
//! Nothing here calls into the library's numeric paths: the oracle is a
//! plain triple loop with its own softmax, and the generator is splitmix64
//! with its own Box–Muller step, so agreement with the library is evidence
//! rather than tautology.

// Each integration test compiles this module separately and uses a subset;
// the oracles stay index-based on purpose.
#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use tensorkv::DenseMatrixF64;

/// splitmix64 stream, independent of the library's ChaCha-based source.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform point in the unit ball of dimension `d`.
    pub fn unit_ball_point(&mut self, d: usize) -> Vec<f64> {
        let direction: Vec<f64> = (0..d).map(|_| self.normal()).collect();
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        let radius = self.uniform().powf(1.0 / d as f64);
        direction.iter().map(|x| x * radius / norm).collect()
    }
}

pub fn random_vec(rng: &mut TestRng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.range(lo, hi)).collect()
}

pub fn random_matrix(
    rng: &mut TestRng,
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
) -> DenseMatrixF64 {
    DenseMatrixF64::from_vec(rows, cols, random_vec(rng, rows * cols, lo, hi)).unwrap()
}

/// Triple-loop scalar attention oracle.
///
/// For every row pair `(a, b)` the logit is `Σ_j k1[a][j]·k2[b][j]·q[j]`;
/// weights come from a hand-rolled softmax; the output coordinate `j` is
/// `Σ_{a,b} w_{ab}·v1[a][j]·v2[b][j]`.
#[allow(dead_code)]
pub fn attn_oracle(
    q: &[f64],
    k1: &DenseMatrixF64,
    k2: &DenseMatrixF64,
    v1: &DenseMatrixF64,
    v2: &DenseMatrixF64,
) -> Vec<f64> {
    let i = k1.rows();
    let d = k1.cols();
    let mut logits = vec![0.0; i * i];
    for a in 0..i {
        for b in 0..i {
            let mut s = 0.0;
            for j in 0..d {
                s += k1.row(a)[j] * k2.row(b)[j] * q[j];
            }
            logits[a * i + b] = s;
        }
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let mut out = vec![0.0; d];
    for a in 0..i {
        for b in 0..i {
            let w = exps[a * i + b] / total;
            for (j, o) in out.iter_mut().enumerate() {
                *o += w * v1.row(a)[j] * v2.row(b)[j];
            }
        }
    }
    out
}

/// Brute-force pairwise deviation statistics, reimplemented with index
/// loops for comparison against the library's scan.
#[allow(dead_code)]
pub fn deviation_scan(vectors: &[Vec<f64>]) -> (f64, f64) {
    let mut max_cross: f64 = 0.0;
    let mut max_norm_dev: f64 = 0.0;
    for i in 0..vectors.len() {
        for j in 0..vectors.len() {
            let mut inner = 0.0;
            for t in 0..vectors[i].len() {
                inner += vectors[i][t] * vectors[j][t];
            }
            if i == j {
                max_norm_dev = max_norm_dev.max((inner - 1.0).abs());
            } else {
                max_cross = max_cross.max(inner.abs());
            }
        }
    }
    (max_cross, max_norm_dev)
}
