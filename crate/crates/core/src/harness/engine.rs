use std::fmt;

use crate::consensus::{self, ConsensusOptions, ConsensusTrace};
use crate::convex_sets;
use crate::network::check_ergodicity;
use crate::subgradient_opt::{self, OptProblem, OptTrace, Regime};
use crate::vector::Vector;

use super::reference::{solve_reference, ReferenceSolution};
use super::scenario::{Scenario, ScenarioKind};
use super::{HarnessError, THREADS_ENV};

/// Objective gap accepted as converged by `check`.
pub const OPT_GAP_TOL: f64 = 1e-3;
/// Tail disagreement accepted as converged by `check`.
pub const OPT_TAIL_TOL: f64 = 1e-4;
/// Rounds scanned by the ergodicity check.
const ERGODICITY_HORIZON: usize = 200;

#[derive(Debug, Clone)]
pub enum Outcome {
    Consensus(ConsensusTrace),
    Optimize {
        trace: OptTrace,
        reference: Option<ReferenceSolution>,
    },
}

impl Outcome {
    /// Consensus runs must meet the stopping rule; optimize runs always
    /// run to the horizon.
    pub fn converged(&self) -> bool {
        match self {
            Outcome::Consensus(t) => t.status.converged(),
            Outcome::Optimize { .. } => true,
        }
    }
}

/// Worker pool sized from `CCLAB_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool, HarnessError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| HarnessError::Threads(v.clone()))?,
        _ => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Threads(e.to_string()))
}

/// Runs the scenario's algorithm. Validation is repeated here so that
/// scenarios edited in memory are held to the same rules as loaded ones.
pub fn execute(scenario: &Scenario) -> Result<Outcome, HarnessError> {
    scenario.validate()?;
    let schedule = scenario.schedule()?;
    let initial = scenario.initial_points();
    match scenario.kind {
        ScenarioKind::Consensus => {
            let opts = ConsensusOptions {
                tol: scenario.tol,
                horizon: scenario.horizon,
                allow_empty_intersection: scenario.allow_empty_intersection,
                dykstra_tol: scenario.dykstra_tol,
            };
            let trace = consensus::run_consensus(&scenario.sets, &schedule, initial, &opts)?;
            Ok(Outcome::Consensus(trace))
        }
        ScenarioKind::Optimize => {
            let reference = match solve_reference(scenario) {
                Ok(r) => Some(r),
                Err(HarnessError::NoReference(why)) => {
                    log::warn!("no reference solution: {why}");
                    None
                }
                Err(e) => return Err(e),
            };
            let problem = OptProblem {
                sets: scenario.sets.clone(),
                functions: scenario.functions.clone().unwrap_or_default(),
                schedule,
                stepsize: scenario.stepsize.clone().expect("validated"),
                initial,
                horizon: scenario.horizon,
                regime: scenario.regime.expect("validated"),
                witness: scenario.witness.as_ref().map(|w| (w.xbar.clone(), w.delta)),
                f_star: reference.as_ref().map(|r| r.f_star),
            };
            let trace = subgradient_opt::run_subgradient(&problem)?;
            Ok(Outcome::Optimize { trace, reference })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Hypotheses of the check do not hold; reported, not enforced.
    Skipped,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "skip",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn passes(&self) -> bool {
        self.entries.iter().all(|e| e.status != CheckStatus::Fail)
    }

    fn add(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.entries.push(CheckEntry {
            name: name.into(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            detail: detail.into(),
        });
    }

    fn skip(&mut self, name: impl Into<String>, detail: impl Into<String>) {
        self.entries.push(CheckEntry {
            name: name.into(),
            status: CheckStatus::Skipped,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{:<20} {:<5} {}", e.name, e.status, e.detail)?;
        }
        Ok(())
    }
}

/// Feasible points used as probes `z in X`.
fn probes(scenario: &Scenario, candidates: &[Vector]) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::new();
    if let Some(w) = &scenario.witness {
        out.push(w.xbar.clone());
    }
    if !scenario.allow_empty_intersection {
        for c in candidates {
            if let Ok(p) = convex_sets::project_intersection(&scenario.sets, c, scenario.dykstra_tol)
            {
                if scenario.sets.iter().all(|s| s.contains(&p, convex_sets::FEAS_TOL).unwrap_or(false))
                    && !out.contains(&p)
                {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Runs the scenario and every certificate that applies to it.
pub fn check_scenario(scenario: &Scenario) -> Result<(Outcome, CheckReport), HarnessError> {
    let outcome = execute(scenario)?;
    let mut report = CheckReport::default();
    let schedule = scenario.schedule()?;
    let erg = check_ergodicity(&schedule, scenario.horizon.min(ERGODICITY_HORIZON));
    report.add(
        "ergodicity",
        erg.passes(),
        format!(
            "{:?}, {} pairs, worst ratio {:.3e}",
            erg.mode, erg.pairs_checked, erg.worst_ratio
        ),
    );

    match &outcome {
        Outcome::Consensus(trace) => {
            report.add(
                "convergence",
                trace.status.converged(),
                format!(
                    "{:?}, disagreement {:.3e}, dist(limit, X) {}",
                    trace.status,
                    trace.final_disagreement(),
                    trace.limit_distance.map_or("n/a".into(), |d| format!("{d:.3e}"))
                ),
            );
            let zs = probes(scenario, std::slice::from_ref(&trace.limit));
            if zs.is_empty() {
                report.skip("lyapunov", "no feasible probe");
            }
            for (idx, z) in zs.iter().enumerate() {
                let lyap = consensus::lyapunov_check(trace, z)?;
                report.add(
                    format!("lyapunov[{idx}]"),
                    lyap.passes(),
                    format!("{} violations", lyap.violations.len()),
                );
            }
            match (&scenario.witness, trace.uniform_weights) {
                (Some(w), true) if trace.status.converged() => {
                    let rate = consensus::rate_certificate(trace, &w.xbar, w.delta)?;
                    report.add(
                        "rate",
                        rate.passes(),
                        format!("R = {}, q = {}, {} violations", rate.r, rate.q, rate.violations.len()),
                    );
                }
                (Some(_), true) => report.skip("rate", "run did not converge"),
                (None, _) => report.skip("rate", "no interior witness"),
                (_, false) => report.skip("rate", "weights are not constant uniform"),
            }
        }
        Outcome::Optimize { trace, reference } => {
            let mut candidates = vec![trace.x_hat.clone()];
            if let Some(r) = reference {
                candidates.push(r.x_star.clone());
            }
            let zs = probes(scenario, &candidates);
            if zs.is_empty() {
                report.skip("basic_relation", "no feasible probe");
            }
            for (idx, z) in zs.iter().enumerate() {
                let basic = subgradient_opt::basic_relation_check(trace, z)?;
                report.add(
                    format!("basic_relation[{idx}]"),
                    basic.passes(),
                    format!("{} violations, max excess {:.3e}", basic.violations.len(), basic.max_excess),
                );
            }
            if trace.regime == Regime::IdenticalSets {
                let bounds =
                    subgradient_opt::agent_bounds(&trace.functions, &trace.sets, trace.regime);
                match bounds {
                    Ok(ls) => {
                        let l = ls.iter().copied().fold(0.0, f64::max);
                        let phi = subgradient_opt::phi_bound_check(trace, l)?;
                        report.add(
                            "phi_bound",
                            phi.passes(),
                            format!("L = {l}, worst ratio {:.3}", phi.worst_ratio),
                        );
                    }
                    Err(e) => report.skip("phi_bound", e.to_string()),
                }
            } else {
                report.skip("phi_bound", "sets are not identical");
            }
            let decay = subgradient_opt::disagreement_decay_check(trace, OPT_TAIL_TOL);
            match decay.passes() {
                Some(ok) => report.add("disagreement", ok, format!("tail max {:.3e}", decay.tail_max)),
                None => report.skip(
                    "disagreement",
                    format!("stepsize hypothesis unmet, tail max {:.3e}", decay.tail_max),
                ),
            }
            match trace.objective_gap() {
                Some(gap) => report.add(
                    "objective_gap",
                    gap.abs() <= OPT_GAP_TOL,
                    format!("f(x_hat) - f* = {gap:.3e}"),
                ),
                None => report.skip("objective_gap", "no reference solution"),
            }
        }
    }
    Ok((outcome, report))
}
