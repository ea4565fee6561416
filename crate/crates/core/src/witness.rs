//! Adversarial INDEX-recovery instances and the softmax-spike decoder.
//!
//! An instance packs a bit matrix into the value rows of a decoding session
//! whose keys are near-orthonormal random projections of the standard basis.
//! Scaling the final query by the spike constant `C` concentrates the
//! softmax on the target row, so the target bit separates the output
//! coordinate into two disjoint ranges: at most `δ` when the bit is 0, at
//! least `Δ` when the bit is 1. Decoding thresholds at the midpoint.
//!
//! Two bound flavors are provided. [`spike_bounds_four`] and
//! [`spike_bounds_two`] are the asymptotic closed forms, which ignore the
//! trailing all-zero step the decoder appends. The `_exact` variants
//! account for those zero-logit rows and for the two-sided inner-product
//! deviation, and are the bounds the decoder and the sandwich checks
//! actually use. Whenever the projected keys pass their deviation check,
//! decoding succeeds deterministically.

use crate::error::{Error, Result};
use crate::jl::{check_deviation, JlProjector};
use crate::kv_cache::{FourCache, Quintuple, Triple};
use crate::matrix::{DenseMatrix, QueryVector};
use crate::rng::SeededSource;

/// Which cache layout the reduction drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Factor rows layout; the bit matrix has `n` rows.
    Four,
    /// Pre-combined rows layout; the bit matrix has `n²` rows.
    Two,
}

impl Protocol {
    pub fn bit_rows(&self, n: usize) -> usize {
        match self {
            Protocol::Four => n,
            Protocol::Two => n * n,
        }
    }

    /// The spike constant used in the constructions: `2·ln n` for the
    /// four-matrix protocol, `4·ln n` for the two-matrix protocol.
    pub fn default_spike_constant(&self, n: usize) -> f64 {
        match self {
            Protocol::Four => 2.0 * (n as f64).ln(),
            Protocol::Two => 4.0 * (n as f64).ln(),
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "four" => Ok(Protocol::Four),
            "two" => Ok(Protocol::Two),
            other => Err(Error::InvalidParameter(format!(
                "unknown protocol '{other}' (expected 'four' or 'two')"
            ))),
        }
    }
}

/// Bit-0 upper bound and bit-1 lower bound on the decoded coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeBounds {
    /// `δ`: the output coordinate stays at or below this when the target
    /// bit is 0.
    pub bit0_upper: f64,
    /// `Δ`: the output coordinate stays at or above this when the target
    /// bit is 1.
    pub bit1_lower: f64,
}

impl SpikeBounds {
    /// Midpoint decoding threshold.
    pub fn threshold(&self) -> f64 {
        0.5 * (self.bit0_upper + self.bit1_lower)
    }

    /// True when the two ranges are disjoint.
    pub fn separated(&self) -> bool {
        self.bit0_upper < self.bit1_lower
    }
}

fn check_bound_params(n: usize, c: f64, epsilon: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "spike bounds need n >= 2, got {n}"
        )));
    }
    if !(0.0 < epsilon && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "spike bounds need epsilon in (0, 0.5), got {epsilon}"
        )));
    }
    if c <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "spike bounds need a positive spike constant, got {c}"
        )));
    }
    Ok(())
}

/// Asymptotic spike bounds for the four-matrix protocol:
/// `δ = n²·e^{Cε} / (n·e^{C(1−ε)} + n(n−1)·e^{Cε})` and
/// `Δ = n·e^{C(1−ε)}` over the same denominator.
pub fn spike_bounds_four(n: usize, c: f64, epsilon: f64) -> Result<SpikeBounds> {
    check_bound_params(n, c, epsilon)?;
    let nf = n as f64;
    let hot = nf * (c * (1.0 - epsilon)).exp();
    let cold = nf * (nf - 1.0) * (c * epsilon).exp();
    let denom = hot + cold;
    Ok(SpikeBounds {
        bit0_upper: nf * nf * (c * epsilon).exp() / denom,
        bit1_lower: hot / denom,
    })
}

/// Asymptotic spike bounds for the two-matrix protocol:
/// `δ = n²·e^{Cε} / (e^{C(1−ε)} + n²·e^{Cε})` and
/// `Δ = e^{C(1−ε)}` over the same denominator.
pub fn spike_bounds_two(n: usize, c: f64, epsilon: f64) -> Result<SpikeBounds> {
    check_bound_params(n, c, epsilon)?;
    let nf = n as f64;
    let hot = (c * (1.0 - epsilon)).exp();
    let cold = nf * nf * (c * epsilon).exp();
    let denom = hot + cold;
    Ok(SpikeBounds {
        bit0_upper: cold / denom,
        bit1_lower: hot / denom,
    })
}

/// Exact spike bounds for the four-matrix protocol, accounting for the
/// `2n+1` zero-logit rows the trailing all-zero step contributes to the
/// softmax denominator. These hold deterministically whenever the projected
/// keys satisfy the `ε` deviation bound.
pub fn spike_bounds_four_exact(n: usize, c: f64, epsilon: f64) -> Result<SpikeBounds> {
    check_bound_params(n, c, epsilon)?;
    let nf = n as f64;
    let hot = nf * (c * (1.0 - epsilon)).exp();
    let cold = nf * (nf - 1.0) * (c * epsilon).exp();
    let zero_mass = 2.0 * nf + 1.0;
    let denom = hot + cold + zero_mass;
    Ok(SpikeBounds {
        bit0_upper: cold / denom,
        bit1_lower: hot / denom,
    })
}

/// Exact spike bounds for the two-matrix protocol, accounting for the one
/// zero-logit row of the trailing step.
pub fn spike_bounds_two_exact(n: usize, c: f64, epsilon: f64) -> Result<SpikeBounds> {
    check_bound_params(n, c, epsilon)?;
    let rows = (n * n) as f64;
    let hot = (c * (1.0 - epsilon)).exp();
    let cold = (rows - 1.0) * (c * epsilon).exp();
    let denom = hot + cold + 1.0;
    Ok(SpikeBounds {
        bit0_upper: cold / denom,
        bit1_lower: hot / denom,
    })
}

/// Adversarial instance: the hidden bit matrix, the target cell, and the
/// reduction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexInstance {
    n: usize,
    d: usize,
    bits: Vec<u8>,
    rows: usize,
    target: (usize, usize),
    epsilon: f64,
    spike_constant: f64,
    seed: u64,
}

impl IndexInstance {
    /// Builds an instance from explicit bits. `bits` is `rows × d`
    /// row-major with entries in `{0, 1}`; `rows` must match the protocol
    /// (`n` or `n²`).
    pub fn from_bits(
        protocol: Protocol,
        n: usize,
        d: usize,
        bits: Vec<u8>,
        target: (usize, usize),
        epsilon: f64,
        seed: u64,
    ) -> Result<Self> {
        let rows = protocol.bit_rows(n);
        if bits.len() != rows * d {
            return Err(Error::DimensionMismatch {
                context: "IndexInstance bits",
                expected: rows * d,
                actual: bits.len(),
            });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("bits must be 0 or 1".into()));
        }
        if target.0 >= rows || target.1 >= d {
            return Err(Error::InvalidParameter(format!(
                "target {:?} outside a {rows}x{d} bit matrix",
                target
            )));
        }
        let instance = Self {
            n,
            d,
            bits,
            rows,
            target,
            epsilon,
            spike_constant: protocol.default_spike_constant(n),
            seed,
        };
        instance.check_separation()?;
        Ok(instance)
    }

    /// Samples uniform bits and a uniform target cell.
    pub fn sample(protocol: Protocol, n: usize, d: usize, epsilon: f64, seed: u64) -> Result<Self> {
        let rows = protocol.bit_rows(n);
        let mut src = SeededSource::new(seed);
        let bits: Vec<u8> = (0..rows * d).map(|_| src.bit()).collect();
        let target = (src.uniform_index(rows), src.uniform_index(d));
        Self::from_bits(protocol, n, d, bits, target, epsilon, seed)
    }

    /// Overrides the spike constant (the constructors pick the protocol
    /// default). The separation requirement is re-checked on build.
    pub fn with_spike_constant(mut self, c: f64) -> Self {
        self.spike_constant = c;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn target(&self) -> (usize, usize) {
        self.target
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn spike_constant(&self) -> f64 {
        self.spike_constant
    }

    pub fn bit(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.d + col]
    }

    fn bit_row_f64(&self, row: usize) -> Vec<f64> {
        (0..self.d).map(|j| self.bit(row, j) as f64).collect()
    }

    /// The projected near-orthonormal key family this instance uses.
    pub fn jl_basis(&self) -> Vec<Vec<f64>> {
        JlProjector::new(self.rows, self.d, self.seed)
            .expect("instance dimensions are validated")
            .project_basis::<f64>()
    }

    /// Separation requirement `C > ln(rows) / (1 − 2ε)`; instances that
    /// fail it cannot distinguish the two bit values even in principle.
    pub fn check_separation(&self) -> Result<()> {
        if !(0.0 < self.epsilon && self.epsilon < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            )));
        }
        let required = (self.rows as f64).ln() / (1.0 - 2.0 * self.epsilon);
        if self.spike_constant <= required {
            return Err(Error::SeparationViolated {
                c: self.spike_constant,
                required,
            });
        }
        Ok(())
    }
}

/// The `n` payload quintuples followed by the probe step for the
/// four-matrix protocol: keys are projected basis vectors crossed with
/// all-ones, values carry the bit rows, and the final query is `C` times
/// the target key.
pub fn build_four(instance: &IndexInstance) -> Result<Vec<Quintuple<f64>>> {
    if instance.rows != instance.n {
        return Err(Error::DimensionMismatch {
            context: "build_four: bit rows",
            expected: instance.n,
            actual: instance.rows,
        });
    }
    instance.check_separation()?;
    let basis = instance.jl_basis();
    let d = instance.d;
    let ones = vec![1.0; d];
    let mut stream = Vec::with_capacity(instance.n + 1);
    for (t, key) in basis.iter().enumerate() {
        stream.push(Quintuple {
            query: vec![0.0; d],
            k1: key.clone(),
            k2: ones.clone(),
            v1: instance.bit_row_f64(t),
            v2: ones.clone(),
        });
    }
    let (target_row, _) = instance.target;
    stream.push(Quintuple {
        query: basis[target_row]
            .iter()
            .map(|x| x * instance.spike_constant)
            .collect(),
        k1: vec![0.0; d],
        k2: vec![0.0; d],
        v1: vec![0.0; d],
        v2: vec![0.0; d],
    });
    Ok(stream)
}

/// The `n²` payload triples followed by the probe step for the two-matrix
/// protocol.
pub fn build_two(instance: &IndexInstance) -> Result<Vec<Triple<f64>>> {
    if instance.rows != instance.n * instance.n {
        return Err(Error::DimensionMismatch {
            context: "build_two: bit rows",
            expected: instance.n * instance.n,
            actual: instance.rows,
        });
    }
    instance.check_separation()?;
    let basis = instance.jl_basis();
    let d = instance.d;
    let mut stream = Vec::with_capacity(instance.rows + 1);
    for (t, key) in basis.iter().enumerate() {
        stream.push(Triple {
            query: vec![0.0; d],
            k_tilde: key.clone(),
            v_tilde: instance.bit_row_f64(t),
        });
    }
    let (target_row, _) = instance.target;
    stream.push(Triple {
        query: basis[target_row]
            .iter()
            .map(|x| x * instance.spike_constant)
            .collect(),
        k_tilde: vec![0.0; d],
        v_tilde: vec![0.0; d],
    });
    Ok(stream)
}

/// Outcome of decoding one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessReport {
    pub recovered_bit: u8,
    pub true_bit: u8,
    /// The probed output coordinate.
    pub output_coordinate: f64,
    /// Exact bit-0 upper bound `δ` used for decoding.
    pub bit0_upper: f64,
    /// Exact bit-1 lower bound `Δ` used for decoding.
    pub bit1_lower: f64,
    /// Midpoint of the two bounds.
    pub threshold: f64,
    pub success: bool,
    /// True when the instance's projected keys failed their deviation
    /// check, voiding the deterministic guarantee for this trial.
    pub jl_violated: bool,
}

/// Decodes one four-protocol instance through a real [`FourCache`] session.
pub fn decode_four(instance: &IndexInstance) -> Result<WitnessReport> {
    let stream = build_four(instance)?;
    let mut cache = FourCache::<f64>::new(instance.d);
    for step in &stream {
        cache.append(&step.k1, &step.k2, &step.v1, &step.v2)?;
    }
    let probe = QueryVector::new(stream.last().expect("stream is nonempty").query.clone())?;
    let (output, _) = cache.attend(&probe)?;
    let bounds = spike_bounds_four_exact(instance.n, instance.spike_constant, instance.epsilon)?;
    finish_report(instance, output.as_slice(), bounds)
}

/// Decodes one two-protocol instance by appending the combined rows
/// incrementally and attending through the shared two-cache attention
/// kernel.
pub fn decode_two(instance: &IndexInstance) -> Result<WitnessReport> {
    let stream = build_two(instance)?;
    let mut k_tilde = DenseMatrix::empty(instance.d);
    let mut v_tilde = DenseMatrix::empty(instance.d);
    for step in &stream {
        k_tilde.push_row(&step.k_tilde)?;
        v_tilde.push_row(&step.v_tilde)?;
    }
    let probe = QueryVector::new(stream.last().expect("stream is nonempty").query.clone())?;
    let output = crate::attention::attn_two(&probe, &k_tilde, &v_tilde)?;
    let bounds = spike_bounds_two_exact(instance.n, instance.spike_constant, instance.epsilon)?;
    finish_report(instance, output.as_slice(), bounds)
}

fn finish_report(
    instance: &IndexInstance,
    output: &[f64],
    bounds: SpikeBounds,
) -> Result<WitnessReport> {
    let (row, col) = instance.target;
    let coordinate = output[col];
    let threshold = bounds.threshold();
    let recovered = u8::from(coordinate > threshold);
    let true_bit = instance.bit(row, col);
    let jl_report = check_deviation(&instance.jl_basis(), instance.epsilon)?;
    Ok(WitnessReport {
        recovered_bit: recovered,
        true_bit,
        output_coordinate: coordinate,
        bit0_upper: bounds.bit0_upper,
        bit1_lower: bounds.bit1_lower,
        threshold,
        success: recovered == true_bit,
        jl_violated: jl_report.violated,
    })
}

/// Configuration for a Monte-Carlo run of independent recovery trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub protocol: Protocol,
    pub n: usize,
    /// Projection dimension; `None` picks
    /// `⌈jl_constant · ε⁻² · ln(rows)⌉`.
    pub d: Option<usize>,
    pub trials: usize,
    pub epsilon: f64,
    pub jl_constant: f64,
    pub seed: u64,
}

impl TrialConfig {
    pub fn new(protocol: Protocol, n: usize) -> Self {
        Self {
            protocol,
            n,
            d: None,
            trials: 200,
            epsilon: 0.1,
            jl_constant: 8.0,
            seed: 0,
        }
    }

    /// The projection dimension trials will run at.
    pub fn dimension(&self) -> usize {
        let rows = self.protocol.bit_rows(self.n);
        self.d
            .unwrap_or_else(|| crate::jl::jl_dimension(rows, self.epsilon, self.jl_constant))
    }

    fn validate(&self) -> Result<usize> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "witness trials need n >= 2, got {}",
                self.n
            )));
        }
        let rows = self.protocol.bit_rows(self.n);
        let minimum = crate::jl::jl_dimension(rows, self.epsilon, self.jl_constant);
        let d = self.dimension();
        if d < minimum {
            return Err(Error::InvalidParameter(format!(
                "projection dimension {d} below the required {minimum}"
            )));
        }
        Ok(d)
    }
}

/// Aggregate of a trial run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub reports: Vec<WitnessReport>,
    pub dimension: usize,
}

impl TrialSummary {
    pub fn trials(&self) -> usize {
        self.reports.len()
    }

    pub fn successes(&self) -> usize {
        self.reports.iter().filter(|r| r.success).count()
    }

    pub fn success_rate(&self) -> f64 {
        self.successes() as f64 / self.trials() as f64
    }

    /// Trials whose projected keys passed the deviation check.
    pub fn jl_clean_trials(&self) -> usize {
        self.reports.iter().filter(|r| !r.jl_violated).count()
    }

    /// Success rate among JL-clean trials; `None` when every trial
    /// violated the deviation bound.
    pub fn jl_clean_success_rate(&self) -> Option<f64> {
        let clean = self.jl_clean_trials();
        if clean == 0 {
            return None;
        }
        let clean_successes = self
            .reports
            .iter()
            .filter(|r| !r.jl_violated && r.success)
            .count();
        Some(clean_successes as f64 / clean as f64)
    }
}

/// Runs independent recovery trials: each samples fresh bits, a fresh
/// target, and a fresh projection seed, then decodes through the full
/// cache session.
pub fn run_trials(config: &TrialConfig) -> Result<TrialSummary> {
    let d = config.validate()?;
    let mut master = SeededSource::new(config.seed);
    let mut reports = Vec::with_capacity(config.trials);
    for _ in 0..config.trials {
        let instance_seed = master.next_u64();
        let instance =
            IndexInstance::sample(config.protocol, config.n, d, config.epsilon, instance_seed)?;
        let report = match config.protocol {
            Protocol::Four => decode_four(&instance)?,
            Protocol::Two => decode_two(&instance)?,
        };
        reports.push(report);
    }
    Ok(TrialSummary {
        reports,
        dimension: d,
    })
}
