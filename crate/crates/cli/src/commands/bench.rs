//! `bench`: full n-token decodes per (n, d, layout) cell, CSV records, and
//! fitted scaling exponents.

use std::path::PathBuf;
use std::time::Instant;

use serde_json::json;
use tensorkv::stats::log_log_slope;
use tensorkv::{FourCacheF64, QueryVector, StepCost, TwoCacheF64};

use crate::output::{write_csv, write_summary};
use crate::util::{CliError, LayoutChoice, TokenRng};

pub const CSV_HEADER: &str =
    "layout,n,d,step,append_ns,attend_ns,append_ops,attend_ops,logical_bytes";

pub struct BenchParams {
    pub n_values: Vec<usize>,
    pub d_values: Vec<usize>,
    pub layout: LayoutChoice,
    pub repetitions: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub summary_path: Option<PathBuf>,
}

struct Record {
    layout: &'static str,
    n: usize,
    d: usize,
    step: usize,
    append_ns: u128,
    attend_ns: u128,
    cost: StepCost,
}

impl Record {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.layout,
            self.n,
            self.d,
            self.step,
            self.append_ns,
            self.attend_ns,
            self.cost.append_scalar_ops,
            self.cost.attend_scalar_ops,
            self.cost.logical_bytes
        )
    }
}

/// A cache driven through the decode loop, erased over the layout.
trait Session {
    fn append(
        &mut self,
        k1: &[f64],
        k2: &[f64],
        v1: &[f64],
        v2: &[f64],
    ) -> Result<StepCost, tensorkv::Error>;
    fn attend(&self, query: &QueryVector<f64>) -> Result<StepCost, tensorkv::Error>;
}

impl Session for FourCacheF64 {
    fn append(
        &mut self,
        k1: &[f64],
        k2: &[f64],
        v1: &[f64],
        v2: &[f64],
    ) -> Result<StepCost, tensorkv::Error> {
        FourCacheF64::append(self, k1, k2, v1, v2)
    }

    fn attend(&self, query: &QueryVector<f64>) -> Result<StepCost, tensorkv::Error> {
        FourCacheF64::attend(self, query).map(|(_, cost)| cost)
    }
}

impl Session for TwoCacheF64 {
    fn append(
        &mut self,
        k1: &[f64],
        k2: &[f64],
        v1: &[f64],
        v2: &[f64],
    ) -> Result<StepCost, tensorkv::Error> {
        TwoCacheF64::append(self, k1, k2, v1, v2)
    }

    fn attend(&self, query: &QueryVector<f64>) -> Result<StepCost, tensorkv::Error> {
        TwoCacheF64::attend(self, query).map(|(_, cost)| cost)
    }
}

/// One full decode: append then attend at every step, timing each call.
/// The attend is repeated `repetitions` times and the minimum wall time
/// kept; op counts are wall-time independent.
fn decode_cell(
    layout: &'static str,
    n: usize,
    d: usize,
    seed: u64,
    repetitions: usize,
    session: &mut dyn Session,
) -> Result<Vec<Record>, CliError> {
    let mut tokens = TokenRng::for_cell(seed, n, d, 0);
    let mut records = Vec::with_capacity(n);
    for step in 1..=n {
        let k1 = tokens.row(d);
        let k2 = tokens.row(d);
        let v1 = tokens.row(d);
        let v2 = tokens.row(d);
        let query = QueryVector::new(tokens.row(d))?;

        let append_start = Instant::now();
        let append_cost = session.append(&k1, &k2, &v1, &v2)?;
        let append_ns = append_start.elapsed().as_nanos();

        let mut attend_ns = u128::MAX;
        let mut attend_cost = StepCost::default();
        for _ in 0..repetitions {
            let attend_start = Instant::now();
            attend_cost = session.attend(&query)?;
            attend_ns = attend_ns.min(attend_start.elapsed().as_nanos());
        }

        records.push(Record {
            layout,
            n,
            d,
            step,
            append_ns,
            attend_ns,
            cost: StepCost {
                append_scalar_ops: append_cost.append_scalar_ops,
                attend_scalar_ops: attend_cost.attend_scalar_ops,
                logical_bytes: attend_cost.logical_bytes,
            },
        });
    }
    Ok(records)
}

pub fn run(params: &BenchParams) -> Result<(), CliError> {
    let mut records: Vec<Record> = Vec::new();
    for &n in &params.n_values {
        for &d in &params.d_values {
            if params.layout.includes_four() {
                let mut cache = FourCacheF64::new(d);
                records.extend(decode_cell(
                    "four",
                    n,
                    d,
                    params.seed,
                    params.repetitions,
                    &mut cache,
                )?);
            }
            if params.layout.includes_two() {
                let mut cache = TwoCacheF64::new(d);
                records.extend(decode_cell(
                    "two",
                    n,
                    d,
                    params.seed,
                    params.repetitions,
                    &mut cache,
                )?);
            }
        }
    }
    records.sort_by(|a, b| (a.layout, a.n, a.d, a.step).cmp(&(b.layout, b.n, b.d, b.step)));

    let mut lines = vec![CSV_HEADER.to_string()];
    lines.extend(records.iter().map(Record::csv_line));
    write_csv(&params.out, &lines)?;

    let summary = summarize(params, &records);
    write_summary(params.summary_path.as_deref(), &summary)?;

    println!(
        "bench: {} rows -> {}; memory slopes {}; kron cumulative-op slope {}",
        records.len(),
        params.out.display(),
        describe_slopes(&summary["memory_slopes"]),
        describe_slopes(&summary["kron_cumulative_ops_slopes"]),
    );
    Ok(())
}

fn describe_slopes(value: &serde_json::Value) -> String {
    match value.as_array() {
        Some(rows) if !rows.is_empty() => rows
            .iter()
            .map(|row| {
                format!(
                    "{} d={}: {:.3}",
                    row["layout"].as_str().unwrap_or("-"),
                    row["d"],
                    row["slope"].as_f64().unwrap_or(f64::NAN)
                )
            })
            .collect::<Vec<_>>()
            .join(", "),
        _ => "n/a".to_string(),
    }
}

fn summarize(params: &BenchParams, records: &[Record]) -> serde_json::Value {
    let final_bytes = |layout: &str, n: usize, d: usize| -> Option<f64> {
        records
            .iter()
            .find(|r| r.layout == layout && r.n == n && r.d == d && r.step == n)
            .map(|r| r.cost.logical_bytes as f64)
    };
    let cumulative_gap = |n: usize, d: usize| -> Option<f64> {
        let mut total = 0i128;
        for step in 1..=n {
            let four = records
                .iter()
                .find(|r| r.layout == "four" && r.n == n && r.d == d && r.step == step)?;
            let two = records
                .iter()
                .find(|r| r.layout == "two" && r.n == n && r.d == d && r.step == step)?;
            total += four.cost.attend_scalar_ops as i128 - two.cost.attend_scalar_ops as i128;
        }
        Some(total as f64)
    };

    let mut memory_slopes = Vec::new();
    let mut kron_slopes = Vec::new();
    let mut final_gap_exact = true;
    for &d in &params.d_values {
        for layout in ["four", "two"] {
            let points: Vec<(f64, f64)> = params
                .n_values
                .iter()
                .filter_map(|&n| final_bytes(layout, n, d).map(|bytes| (n as f64, bytes)))
                .collect();
            if points.len() >= 2 {
                memory_slopes.push(json!({
                    "layout": layout,
                    "d": d,
                    "slope": log_log_slope(&points),
                }));
            }
        }
        if params.layout == LayoutChoice::Both {
            let points: Vec<(f64, f64)> = params
                .n_values
                .iter()
                .filter_map(|&n| cumulative_gap(n, d).map(|gap| (n as f64, gap)))
                .collect();
            if points.len() >= 2 {
                kron_slopes.push(json!({
                    "layout": "both",
                    "d": d,
                    "slope": log_log_slope(&points),
                }));
            }
            for &n in &params.n_values {
                if let (Some(four), Some(two)) = (
                    records
                        .iter()
                        .find(|r| r.layout == "four" && r.n == n && r.d == d && r.step == n),
                    records
                        .iter()
                        .find(|r| r.layout == "two" && r.n == n && r.d == d && r.step == n),
                ) {
                    let gap = four.cost.attend_scalar_ops - two.cost.attend_scalar_ops;
                    final_gap_exact &= gap == 2 * (n * n * d) as u64;
                }
            }
        }
    }

    json!({
        "command": "bench",
        "seed": params.seed,
        "n_values": params.n_values,
        "d_values": params.d_values,
        "rows": records.len(),
        "memory_slopes": memory_slopes,
        "kron_cumulative_ops_slopes": kron_slopes,
        "final_step_gap_exact": final_gap_exact,
    })
}
