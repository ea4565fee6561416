//! `jl-check`: deviation-violation rates across a dimension-multiplier sweep.

use std::path::PathBuf;

use serde_json::json;
use tensorkv::jl::{jl_dimension, violation_rate};

use crate::output::{fmt_f64, write_csv, write_summary};
use crate::util::CliError;

pub const CSV_HEADER: &str = "multiplier,n,epsilon,d,seeds,violations,violation_rate";

pub struct JlCheckParams {
    pub n: usize,
    pub epsilon: f64,
    pub multipliers: Vec<f64>,
    pub seeds: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub summary_path: Option<PathBuf>,
}

pub fn run(params: &JlCheckParams) -> Result<(), CliError> {
    if params.seeds == 0 {
        return Err(CliError::Usage("seeds must be at least 1".into()));
    }
    if !(params.epsilon > 0.0 && params.epsilon < 1.0) {
        return Err(CliError::Usage(format!(
            "epsilon must lie in (0, 1), got {}",
            params.epsilon
        )));
    }

    let mut lines = vec![CSV_HEADER.to_string()];
    let mut table = Vec::new();
    println!(
        "jl-check: n = {}, epsilon = {}, {} seeds",
        params.n, params.epsilon, params.seeds
    );
    println!(
        "{:>10} {:>8} {:>12} {:>15}",
        "multiplier", "d", "violations", "violation rate"
    );
    for &multiplier in &params.multipliers {
        let d = jl_dimension(params.n, params.epsilon, multiplier);
        let rate = violation_rate(params.n, d, params.epsilon, params.seeds, params.seed);
        let violations = (rate * params.seeds as f64).round() as u64;
        println!("{multiplier:>10} {d:>8} {violations:>12} {rate:>15.3}");
        lines.push(format!(
            "{},{},{},{},{},{},{}",
            fmt_f64(multiplier),
            params.n,
            fmt_f64(params.epsilon),
            d,
            params.seeds,
            violations,
            fmt_f64(rate),
        ));
        table.push(json!({
            "multiplier": multiplier,
            "d": d,
            "violations": violations,
            "violation_rate": rate,
        }));
    }
    write_csv(&params.out, &lines)?;
    write_summary(
        params.summary_path.as_deref(),
        &json!({
            "command": "jl-check",
            "n": params.n,
            "epsilon": params.epsilon,
            "seeds": params.seeds,
            "seed": params.seed,
            "rates": table,
        }),
    )?;
    Ok(())
}
