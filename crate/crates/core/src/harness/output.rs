//! CSV traces and a JSON run summary.
//!
//! Consensus runs write
//! - `trace.csv`: `k, agent, x0..x{n-1}, e_norm` (`e_norm` empty on the final state)
//! - `summary.csv`: `k, disagreement, err_sq_sum, dist_y_x, lyapunov_x, lyapunov_w`
//!
//! Optimize runs write
//! - `trace.csv`: `k, agent, x0..x{n-1}, d_norm, phi_norm, alpha`
//! - `summary.csv`: `k, objective_gap, disagreement, dist_y_x`
//!
//! Floats use Rust's shortest round-trip formatting and files carry no
//! timestamps, so equal runs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::consensus::ConsensusTrace;
use crate::subgradient_opt::OptTrace;
use crate::vector::{self, Vector};

use super::engine::Outcome;
use super::reference::ReferenceSolution;
use super::scenario::{Scenario, ScenarioKind};
use super::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub rounds: usize,
    pub converged: bool,
    /// Average of the final iterates.
    pub estimate: Vector,
    pub final_disagreement: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist_to_intersection: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSolution>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a header and rows with `\n` line endings.
fn write_csv<R>(path: &Path, header: Vec<String>, rows: R) -> Result<(), HarnessError>
where
    R: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let err = |e: csv::Error| HarnessError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    w.write_record(&header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(io_err(path))
}

fn header(fixed: &[&str], n: usize, tail: &[&str]) -> Vec<String> {
    fixed
        .iter()
        .map(|s| s.to_string())
        .chain((0..n).map(|d| format!("x{d}")))
        .chain(tail.iter().map(|s| s.to_string()))
        .collect()
}

fn sum_sq_dist(points: &[Vector], z: &[f64]) -> f64 {
    points.iter().map(|p| vector::dist_sq(p, z)).sum()
}

fn write_consensus(
    trace: &ConsensusTrace,
    probe: Option<&Vector>,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let n = trace.states[0][0].len();
    let trace_path = dir.join("trace.csv");
    let rows = trace.states.iter().enumerate().flat_map(|(k, xs)| {
        xs.iter().enumerate().map(move |(i, x)| {
            let e = trace.steps.get(k).map(|s| vector::norm(&s.e[i]));
            let mut row = vec![k.to_string(), i.to_string()];
            row.extend(x.iter().map(|v| num(*v)));
            row.push(opt_num(e));
            row
        })
    });
    write_csv(&trace_path, header(&["k", "agent"], n, &["e_norm"]), rows)?;

    let summary_path = dir.join("summary.csv");
    let rows = trace.summaries.iter().map(|row| {
        let lyap_x = probe.map(|z| sum_sq_dist(&trace.states[row.k], z));
        let lyap_w = probe.and_then(|z| trace.steps.get(row.k).map(|s| sum_sq_dist(&s.w, z)));
        vec![
            row.k.to_string(),
            num(row.disagreement),
            opt_num(row.err_sq_sum),
            opt_num(row.dist_y),
            opt_num(lyap_x),
            opt_num(lyap_w),
        ]
    });
    let cols = ["k", "disagreement", "err_sq_sum", "dist_y_x", "lyapunov_x", "lyapunov_w"];
    write_csv(&summary_path, header(&cols, 0, &[]), rows)?;
    Ok(vec![trace_path, summary_path])
}

fn write_optimize(trace: &OptTrace, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let n = trace.states[0][0].len();
    let trace_path = dir.join("trace.csv");
    let rows = trace.states.iter().enumerate().flat_map(|(k, xs)| {
        let step = trace.steps.get(k);
        xs.iter().enumerate().map(move |(i, x)| {
            let mut row = vec![k.to_string(), i.to_string()];
            row.extend(x.iter().map(|v| num(*v)));
            row.push(opt_num(step.map(|s| vector::norm(&s.d[i]))));
            row.push(opt_num(step.map(|s| vector::norm(&s.phi[i]))));
            row.push(opt_num(step.map(|s| s.alpha)));
            row
        })
    });
    write_csv(&trace_path, header(&["k", "agent"], n, &["d_norm", "phi_norm", "alpha"]), rows)?;

    let summary_path = dir.join("summary.csv");
    let rows = trace.summaries.iter().map(|row| {
        vec![
            row.k.to_string(),
            opt_num(trace.f_star.map(|f| row.objective - f)),
            num(row.disagreement),
            num(row.dist_y),
        ]
    });
    let cols = ["k", "objective_gap", "disagreement", "dist_y_x"];
    write_csv(&summary_path, header(&cols, 0, &[]), rows)?;
    Ok(vec![trace_path, summary_path])
}

/// The `run.json` record for a finished run.
pub fn run_summary(scenario: &Scenario, outcome: &Outcome) -> RunSummary {
    match outcome {
        Outcome::Consensus(trace) => RunSummary {
            kind: scenario.kind,
            seed: scenario.seed,
            m: scenario.m,
            n: scenario.n,
            rounds: trace.rounds(),
            converged: trace.status.converged(),
            estimate: trace.limit.clone(),
            final_disagreement: trace.final_disagreement(),
            dist_to_intersection: trace.limit_distance,
            objective: None,
            reference: None,
            warnings: Vec::new(),
        },
        Outcome::Optimize { trace, reference } => {
            let last = trace.summaries.last().expect("summary rows");
            RunSummary {
                kind: scenario.kind,
                seed: scenario.seed,
                m: scenario.m,
                n: scenario.n,
                rounds: trace.steps.len(),
                converged: true,
                estimate: trace.x_hat.clone(),
                final_disagreement: last.disagreement,
                dist_to_intersection: Some(last.dist_y),
                objective: Some(trace.f_hat),
                reference: reference.clone(),
                warnings: trace.warnings.clone(),
            }
        }
    }
}

/// Writes the trace, summary and `run.json` into `dir`, creating it if needed.
pub fn write_outputs(
    scenario: &Scenario,
    outcome: &Outcome,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut paths = match outcome {
        Outcome::Consensus(trace) => {
            let probe = scenario.witness.as_ref().map(|w| &w.xbar);
            write_consensus(trace, probe, dir)?
        }
        Outcome::Optimize { trace, .. } => write_optimize(trace, dir)?,
    };
    let summary = run_summary(scenario, outcome);
    let json_path = dir.join("run.json");
    let mut file = BufWriter::new(File::create(&json_path).map_err(io_err(&json_path))?);
    serde_json::to_writer_pretty(&mut file, &summary)
        .map_err(|e| HarnessError::Io {
            path: json_path.clone(),
            source: std::io::Error::other(e),
        })?;
    writeln!(file).map_err(io_err(&json_path))?;
    file.flush().map_err(io_err(&json_path))?;
    paths.push(json_path);
    Ok(paths)
}
