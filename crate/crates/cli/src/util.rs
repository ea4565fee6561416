//! Small helpers: parse types for list-valued flags, a token generator for
//! benchmark streams, and the CLI error split that drives exit codes.

use std::fmt;
use std::str::FromStr;

/// Errors split by exit code: usage problems exit 64, everything else
/// (constraint violations, I/O) exits 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Constraint(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Constraint(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<tensorkv::Error> for CliError {
    fn from(err: tensorkv::Error) -> Self {
        CliError::Constraint(err.to_string())
    }
}

/// Comma-separated list of counts, e.g. `64,128,256`.
#[derive(Debug, Clone)]
pub struct UsizeList(pub Vec<usize>);

impl FromStr for UsizeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s
            .split(',')
            .map(|part| part.trim().parse::<usize>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() || values.contains(&0) {
            return Err("all counts must be at least 1".into());
        }
        Ok(Self(values))
    }
}

/// Comma-separated list of reals, e.g. `2,4,8`.
#[derive(Debug, Clone)]
pub struct F64List(pub Vec<f64>);

impl FromStr for F64List {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s
            .split(',')
            .map(|part| part.trim().parse::<f64>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err("list must be nonempty".into());
        }
        Ok(Self(values))
    }
}

/// Which cache layouts a bench run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutChoice {
    Four,
    Two,
    Both,
}

impl LayoutChoice {
    pub fn includes_four(self) -> bool {
        matches!(self, LayoutChoice::Four | LayoutChoice::Both)
    }

    pub fn includes_two(self) -> bool {
        matches!(self, LayoutChoice::Two | LayoutChoice::Both)
    }
}

impl FromStr for LayoutChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "four" => Ok(LayoutChoice::Four),
            "two" => Ok(LayoutChoice::Two),
            "both" => Ok(LayoutChoice::Both),
            other => Err(format!(
                "unknown layout '{other}' (expected four, two, or both)"
            )),
        }
    }
}

/// Clustering diameter: a float literal or the `e/3` preset.
#[derive(Debug, Clone, Copy)]
pub struct Delta(pub f64);

impl FromStr for Delta {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "e/3" {
            return Ok(Delta(std::f64::consts::E / 3.0));
        }
        let value: f64 = s
            .parse()
            .map_err(|e: std::num::ParseFloatError| e.to_string())?;
        if !(value.is_finite() && value >= 0.0) {
            return Err("delta must be a finite nonnegative number".into());
        }
        Ok(Delta(value))
    }
}

/// splitmix64 stream for benchmark token rows; independent of the library's
/// seeded sources so cache inputs are plain data, not shared state.
pub struct TokenRng(u64);

impl TokenRng {
    /// Mixes cell coordinates into a stream seed so every (n, d) cell gets
    /// the same tokens in both layouts.
    pub fn for_cell(seed: u64, n: usize, d: usize, rep: usize) -> Self {
        let mut mixed = seed ^ 0x6A09E667F3BCC909;
        for part in [n as u64, d as u64, rep as u64] {
            mixed = (mixed ^ part).wrapping_mul(0x100000001B3);
        }
        Self(mixed)
    }

    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    pub fn unit_interval(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn row(&mut self, d: usize) -> Vec<f64> {
        (0..d).map(|_| 2.0 * self.unit_interval() - 1.0).collect()
    }
}
