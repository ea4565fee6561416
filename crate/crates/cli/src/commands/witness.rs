//! `witness`: Monte-Carlo bit-recovery trials with per-trial CSV and a
//! success-rate gate.

use std::path::PathBuf;

use serde_json::json;
use tensorkv::witness::{run_trials, Protocol, TrialConfig, TrialSummary};

use crate::output::{fmt_f64, write_csv, write_summary};
use crate::util::CliError;

pub const CSV_HEADER: &str = "trial,protocol,n,d,true_bit,recovered_bit,output_coordinate,\
bit0_upper,bit1_lower,threshold,jl_violated,success";

pub struct WitnessParams {
    pub protocol: Protocol,
    pub n: usize,
    pub d: Option<usize>,
    pub trials: usize,
    pub epsilon: f64,
    pub jl_multiplier: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub summary_path: Option<PathBuf>,
}

/// Success-rate gate: runs exit nonzero below this.
pub const SUCCESS_GATE: f64 = 0.90;

pub fn run(params: &WitnessParams) -> Result<(), CliError> {
    if params.trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let config = TrialConfig {
        protocol: params.protocol,
        n: params.n,
        d: params.d,
        trials: params.trials,
        epsilon: params.epsilon,
        jl_constant: params.jl_multiplier,
        seed: params.seed,
    };
    let summary = run_trials(&config)?;

    let protocol_name = match params.protocol {
        Protocol::Four => "four",
        Protocol::Two => "two",
    };
    let mut lines = vec![CSV_HEADER.to_string()];
    for (index, report) in summary.reports.iter().enumerate() {
        lines.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            index,
            protocol_name,
            params.n,
            summary.dimension,
            report.true_bit,
            report.recovered_bit,
            fmt_f64(report.output_coordinate),
            fmt_f64(report.bit0_upper),
            fmt_f64(report.bit1_lower),
            fmt_f64(report.threshold),
            report.jl_violated,
            report.success,
        ));
    }
    write_csv(&params.out, &lines)?;

    let json_summary = summarize(params, protocol_name, &summary);
    write_summary(params.summary_path.as_deref(), &json_summary)?;

    let rate = summary.success_rate();
    println!(
        "witness: {protocol_name} protocol, n = {}, d = {}, {} trials -> {}; success rate {:.3}, \
JL-clean {}/{} at rate {}",
        params.n,
        summary.dimension,
        summary.trials(),
        params.out.display(),
        rate,
        summary.jl_clean_trials(),
        summary.trials(),
        summary
            .jl_clean_success_rate()
            .map_or("n/a".to_string(), |r| format!("{r:.3}")),
    );

    if rate < SUCCESS_GATE {
        return Err(CliError::Constraint(format!(
            "success rate {rate:.3} below the {SUCCESS_GATE} gate"
        )));
    }
    Ok(())
}

/// Signed decoding margin: distance from the coordinate to the threshold in
/// the direction of the true bit; positive means the correct side.
fn margin(report: &tensorkv::witness::WitnessReport) -> f64 {
    if report.true_bit == 1 {
        report.output_coordinate - report.threshold
    } else {
        report.threshold - report.output_coordinate
    }
}

fn summarize(
    params: &WitnessParams,
    protocol_name: &str,
    summary: &TrialSummary,
) -> serde_json::Value {
    let clean_margins: Vec<f64> = summary
        .reports
        .iter()
        .filter(|r| !r.jl_violated)
        .map(margin)
        .collect();
    let min_margin = clean_margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean_margin = if clean_margins.is_empty() {
        f64::NAN
    } else {
        clean_margins.iter().sum::<f64>() / clean_margins.len() as f64
    };
    json!({
        "command": "witness",
        "protocol": protocol_name,
        "n": params.n,
        "d": summary.dimension,
        "trials": summary.trials(),
        "epsilon": params.epsilon,
        "seed": params.seed,
        "success_rate": summary.success_rate(),
        "jl_clean_trials": summary.jl_clean_trials(),
        "jl_clean_success_rate": summary.jl_clean_success_rate(),
        "min_clean_margin": if min_margin.is_finite() { Some(min_margin) } else { None },
        "mean_clean_margin": if mean_margin.is_nan() { None } else { Some(mean_margin) },
    })
}
