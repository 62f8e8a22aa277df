//! Projected consensus: each agent averages its neighbours' estimates with
//! its own weight vector and projects the result onto its private set,
//! `x^i(k+1) = P_{X_i}[ sum_j a^i_j(k) x^j(k) ]`.
//!
//! Every step is recorded as `w^i(k)` (the average), `e^i(k)` (the projection
//! error) and `y(k)` (the network average of the `w^i`), with the exact
//! decomposition `x^i(k+1) = w^i(k) + e^i(k)`.

use rayon::prelude::*;
use thiserror::Error;

use crate::convex_sets::{self, ConvexSet, SetError, DYKSTRA_TOL, FEAS_TOL};
use crate::network::{validate_schedule, WeightMatrix, WeightSchedule};
use crate::vector::{self, Vector};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_HORIZON: usize = 100_000;
/// Slack for the monotonicity checks in [`lyapunov_check`].
pub const LYAPUNOV_SLACK: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ConsensusError {
    #[error(transparent)]
    Set(#[from] SetError),
    #[error("expected {expected} agents, got {got} {what}")]
    AgentCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid weight matrix: {0}")]
    InvalidWeights(String),
    #[error("agent {agent} starts {distance:e} outside its set")]
    InfeasibleStart { agent: usize, distance: f64 },
    #[error("probe lies {distance:e} outside set {set}")]
    InfeasibleProbe { set: usize, distance: f64 },
    #[error("rate certificate requires constant uniform weights")]
    NonUniformWeights,
    #[error("trace did not converge; no limit point available")]
    NotConverged,
}

/// Estimates `x^i(k)` of all agents at round `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusState {
    pub iterates: Vec<Vector>,
    pub k: usize,
}

/// Decomposition of one projected consensus round.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// `w^i(k) = sum_j a^i_j(k) x^j(k)`
    pub w: Vec<Vector>,
    /// `e^i(k) = x^i(k+1) - w^i(k)`
    pub e: Vec<Vector>,
    /// `y(k) = (1/m) sum_i w^i(k)`
    pub y: Vector,
}

fn check_shapes(
    iterates: &[Vector],
    a: &WeightMatrix,
    sets: &[ConvexSet],
) -> Result<(), ConsensusError> {
    let m = iterates.len();
    if sets.len() != m {
        return Err(ConsensusError::AgentCount {
            what: "sets",
            expected: m,
            got: sets.len(),
        });
    }
    if a.m() != m {
        return Err(ConsensusError::AgentCount {
            what: "weight matrix rows",
            expected: m,
            got: a.m(),
        });
    }
    if let Some(first) = iterates.first() {
        let n = first.len();
        for (x, set) in iterates.iter().zip(sets) {
            if x.len() != n {
                return Err(SetError::DimensionMismatch {
                    expected: n,
                    got: x.len(),
                }
                .into());
            }
            if let Some(d) = set.dim() {
                if d != n {
                    return Err(SetError::DimensionMismatch { expected: d, got: n }.into());
                }
            }
        }
    }
    Ok(())
}

fn check_stochastic(a: &WeightMatrix) -> Result<(), ConsensusError> {
    let report = crate::network::validate_weights(a, 0.0);
    if report.is_valid_stochastic() {
        Ok(())
    } else {
        Err(ConsensusError::InvalidWeights(format!("{:?}", report.violations)))
    }
}

/// One round with shapes and weights already validated.
pub(crate) fn step_unchecked(
    iterates: &[Vector],
    a: &WeightMatrix,
    sets: &[ConvexSet],
) -> (Vec<Vector>, StepRecord) {
    let per_agent: Vec<(Vector, Vector, Vector)> = (0..iterates.len())
        .into_par_iter()
        .map(|i| {
            let w = vector::combine(a.weights_of(i), iterates);
            let projected = sets[i].project_unchecked(&w);
            let e = vector::sub(&projected, &w);
            // Rebuild the iterate from the decomposition so it holds bitwise.
            let next = vector::add(&w, &e);
            (w, e, next)
        })
        .collect();
    let mut w = Vec::with_capacity(per_agent.len());
    let mut e = Vec::with_capacity(per_agent.len());
    let mut next = Vec::with_capacity(per_agent.len());
    for (wi, ei, xi) in per_agent {
        w.push(wi);
        e.push(ei);
        next.push(xi);
    }
    let y = vector::mean(&w);
    (next, StepRecord { w, e, y })
}

/// `x^i(k+1) = P_{X_i}[w^i(k)]` for every agent.
pub fn consensus_step(
    state: &ConsensusState,
    a: &WeightMatrix,
    sets: &[ConvexSet],
) -> Result<(ConsensusState, StepRecord), ConsensusError> {
    check_shapes(&state.iterates, a, sets)?;
    check_stochastic(a)?;
    let (iterates, record) = step_unchecked(&state.iterates, a, sets);
    Ok((
        ConsensusState {
            iterates,
            k: state.k + 1,
        },
        record,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusOptions {
    /// Stop once disagreement <= tol and `sum_i |e^i(k)|^2 <= tol^2`.
    pub tol: f64,
    pub horizon: usize,
    /// Permit sets without a common point; the run then reports
    /// non-convergence instead of failing on the intersection oracle.
    pub allow_empty_intersection: bool,
    pub dykstra_tol: f64,
}

impl Default for ConsensusOptions {
    fn default() -> Self {
        ConsensusOptions {
            tol: DEFAULT_TOL,
            horizon: DEFAULT_HORIZON,
            allow_empty_intersection: false,
            dykstra_tol: DYKSTRA_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Stopping rule fired after this many rounds.
    Converged { rounds: usize },
    HorizonExhausted,
}

impl RunStatus {
    pub fn converged(&self) -> bool {
        matches!(self, RunStatus::Converged { .. })
    }
}

/// Per-round metrics. Row `k` describes state `x(k)` and, for `k` below the
/// final round, step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSummary {
    pub k: usize,
    /// `max_{i,j} |x^i(k) - x^j(k)|`
    pub disagreement: f64,
    /// `sum_i |e^i(k)|^2`
    pub err_sq_sum: Option<f64>,
    /// `dist(y(k), X)`
    pub dist_y: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConsensusTrace {
    pub sets: Vec<ConvexSet>,
    /// `x(0), ..., x(K)`
    pub states: Vec<Vec<Vector>>,
    /// Steps `0..K`.
    pub steps: Vec<StepRecord>,
    pub summaries: Vec<RoundSummary>,
    pub uniform_weights: bool,
    pub doubly_stochastic: bool,
    pub status: RunStatus,
    /// Average of the final iterates.
    pub limit: Vector,
    /// `dist(limit, X)` from the intersection oracle.
    pub limit_distance: Option<f64>,
}

impl ConsensusTrace {
    pub fn rounds(&self) -> usize {
        self.steps.len()
    }

    pub fn m(&self) -> usize {
        self.sets.len()
    }

    pub fn final_disagreement(&self) -> f64 {
        vector::max_pairwise_dist(self.states.last().expect("trace has a state"))
    }

    /// `max_i |x^i(k) - mean_j x^j(k)|`.
    pub fn max_deviation_from_average(&self, k: usize) -> f64 {
        let xs = &self.states[k];
        let avg = vector::mean(xs);
        xs.iter().map(|x| vector::dist(x, &avg)).fold(0.0, f64::max)
    }

    /// Largest `|y(k+1) - y(k) - (1/m) sum_i e^i(k)|_inf` over the run.
    pub fn average_drift_residual(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|pair| {
                let predicted = vector::add(&pair[0].y, &vector::mean(&pair[0].e));
                predicted
                    .iter()
                    .zip(&pair[1].y)
                    .map(|(p, y)| (p - y).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|e^i(k)|` over the last `fraction` of the recorded steps.
    pub fn tail_error_max(&self, fraction: f64) -> f64 {
        let start = tail_start(self.steps.len(), fraction);
        self.steps[start..]
            .iter()
            .flat_map(|s| s.e.iter().map(|e| vector::norm(e)))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn tail_start(len: usize, fraction: f64) -> usize {
    let tail = ((len as f64) * fraction).ceil() as usize;
    len - tail.clamp(len.min(1), len)
}

fn validate_start(sets: &[ConvexSet], initial: &[Vector]) -> Result<(), ConsensusError> {
    for (agent, (set, x)) in sets.iter().zip(initial).enumerate() {
        let distance = set.distance(x)?;
        if distance > FEAS_TOL || !vector::is_finite(x) {
            return Err(ConsensusError::InfeasibleStart { agent, distance });
        }
    }
    Ok(())
}

pub(crate) fn validate_run_inputs(
    sets: &[ConvexSet],
    schedule: &WeightSchedule,
    initial: &[Vector],
    horizon: usize,
) -> Result<bool, ConsensusError> {
    if initial.is_empty() {
        return Err(ConsensusError::AgentCount {
            what: "initial points",
            expected: sets.len().max(1),
            got: 0,
        });
    }
    if schedule.m() != initial.len() {
        return Err(ConsensusError::AgentCount {
            what: "schedule agents",
            expected: initial.len(),
            got: schedule.m(),
        });
    }
    check_shapes(initial, &schedule.matrix(0), sets)?;
    validate_start(sets, initial)?;
    let report = validate_schedule(schedule, horizon.max(schedule.window()));
    if !report.weight_failures.is_empty() {
        return Err(ConsensusError::InvalidWeights(format!(
            "slot {} violates the weights rule: {:?}",
            report.weight_failures[0].0, report.weight_failures[0].1
        )));
    }
    Ok(report.doubly_stochastic)
}

/// Runs projected consensus from `initial` until the joint stopping rule
/// fires or the horizon is reached.
pub fn run_consensus(
    sets: &[ConvexSet],
    schedule: &WeightSchedule,
    initial: Vec<Vector>,
    opts: &ConsensusOptions,
) -> Result<ConsensusTrace, ConsensusError> {
    let doubly_stochastic = validate_run_inputs(sets, schedule, &initial, opts.horizon)?;
    let intersection_distance = |y: &[f64]| -> Result<Option<f64>, ConsensusError> {
        if opts.allow_empty_intersection {
            return Ok(None);
        }
        Ok(Some(convex_sets::intersection_distance(
            sets,
            y,
            opts.dykstra_tol,
        )?))
    };

    let mut states = vec![initial];
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut summaries = Vec::new();
    let mut status = RunStatus::HorizonExhausted;
    let mut disagreement = vector::max_pairwise_dist(&states[0]);
    if disagreement <= opts.tol {
        status = RunStatus::Converged { rounds: 0 };
    }

    while !status.converged() && steps.len() < opts.horizon {
        let k = steps.len();
        let a = schedule.matrix(k);
        let (next, record) = step_unchecked(&states[k], &a, sets);
        let err_sq_sum: f64 = record.e.iter().map(|e| vector::norm_sq(e)).sum();
        summaries.push(RoundSummary {
            k,
            disagreement,
            err_sq_sum: Some(err_sq_sum),
            dist_y: intersection_distance(&record.y)?,
        });
        disagreement = vector::max_pairwise_dist(&next);
        states.push(next);
        steps.push(record);
        if disagreement <= opts.tol && err_sq_sum <= opts.tol * opts.tol {
            status = RunStatus::Converged {
                rounds: steps.len(),
            };
        }
    }

    let last = states.last().expect("at least the initial state");
    let limit = vector::mean(last);
    let final_y = if doubly_stochastic {
        intersection_distance(&limit)?
    } else {
        None
    };
    summaries.push(RoundSummary {
        k: steps.len(),
        disagreement,
        err_sq_sum: None,
        dist_y: final_y,
    });
    let limit_distance = if opts.allow_empty_intersection {
        None
    } else {
        Some(convex_sets::intersection_distance(sets, &limit, opts.dykstra_tol)?)
    };

    Ok(ConsensusTrace {
        sets: sets.to_vec(),
        states,
        steps,
        summaries,
        uniform_weights: schedule.is_uniform(),
        doubly_stochastic,
        status,
        limit,
        limit_distance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum LyapunovViolation {
    /// `sum_i |x^i(k+1) - z|^2 > sum_i |x^i(k) - z|^2`
    StateIncrease { k: usize, before: f64, after: f64 },
    /// `sum_i |w^i(k+1) - z|^2 > sum_i |w^i(k) - z|^2`
    AverageIncrease { k: usize, before: f64, after: f64 },
    /// `sum_i |w^i(k) - z|^2 > sum_i |x^i(k) - z|^2`
    AverageAboveState { k: usize, average: f64, state: f64 },
    /// `sum_k sum_i |e^i(k)|^2 > sum_i |x^i(0) - z|^2`
    CumulativeError { total: f64, initial: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    /// `sum_i |x^i(k) - z|^2` for every recorded state.
    pub state_sums: Vec<f64>,
    /// `sum_i |w^i(k) - z|^2` for every recorded step.
    pub average_sums: Vec<f64>,
    pub cumulative_error: f64,
    pub violations: Vec<LyapunovViolation>,
}

impl LyapunovReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

pub(crate) fn check_probe(sets: &[ConvexSet], probe: &[f64]) -> Result<(), ConsensusError> {
    for (set_index, set) in sets.iter().enumerate() {
        let distance = set.distance(probe)?;
        if distance > FEAS_TOL {
            return Err(ConsensusError::InfeasibleProbe {
                set: set_index,
                distance,
            });
        }
    }
    Ok(())
}

fn sum_sq_dist(points: &[Vector], z: &[f64]) -> f64 {
    points.iter().map(|p| vector::dist_sq(p, z)).sum()
}

/// Monotonicity of the squared-distance sums to a common point `probe` and
/// summability of the projection errors.
pub fn lyapunov_check(
    trace: &ConsensusTrace,
    probe: &[f64],
) -> Result<LyapunovReport, ConsensusError> {
    check_probe(&trace.sets, probe)?;
    let state_sums: Vec<f64> = trace.states.iter().map(|xs| sum_sq_dist(xs, probe)).collect();
    let average_sums: Vec<f64> = trace.steps.iter().map(|s| sum_sq_dist(&s.w, probe)).collect();
    let cumulative_error: f64 = trace
        .steps
        .iter()
        .flat_map(|s| s.e.iter().map(|e| vector::norm_sq(e)))
        .sum();

    let mut violations = Vec::new();
    for (k, pair) in state_sums.windows(2).enumerate() {
        if pair[1] > pair[0] + LYAPUNOV_SLACK {
            violations.push(LyapunovViolation::StateIncrease {
                k,
                before: pair[0],
                after: pair[1],
            });
        }
    }
    for (k, pair) in average_sums.windows(2).enumerate() {
        if pair[1] > pair[0] + LYAPUNOV_SLACK {
            violations.push(LyapunovViolation::AverageIncrease {
                k,
                before: pair[0],
                after: pair[1],
            });
        }
    }
    for (k, (&average, &state)) in average_sums.iter().zip(&state_sums).enumerate() {
        if average > state + LYAPUNOV_SLACK {
            violations.push(LyapunovViolation::AverageAboveState { k, average, state });
        }
    }
    if cumulative_error > state_sums[0] + LYAPUNOV_SLACK {
        violations.push(LyapunovViolation::CumulativeError {
            total: cumulative_error,
            initial: state_sums[0],
        });
    }
    Ok(LyapunovReport {
        state_sums,
        average_sums,
        cumulative_error,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `R = (1/delta) sum_i |x^i(0) - xbar|`
    pub r: f64,
    /// `q = 1 - 1/(4 R^2)`
    pub q: f64,
    pub limit: Vector,
    /// `sum_i |x^i(k) - limit|^2` per recorded state.
    pub lhs: Vec<f64>,
    /// `q^k sum_i |x^i(0) - limit|^2`
    pub rhs: Vec<f64>,
    pub violations: Vec<usize>,
}

impl RateReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Geometric-rate certificate for constant uniform weights under an
/// interior-point witness `(xbar, delta)` valid for every set.
///
/// The limit is the average of the final iterates of a converged trace.
pub fn rate_certificate(
    trace: &ConsensusTrace,
    xbar: &[f64],
    delta: f64,
) -> Result<RateReport, ConsensusError> {
    if !trace.uniform_weights {
        return Err(ConsensusError::NonUniformWeights);
    }
    convex_sets::validate_witness(&trace.sets, xbar, delta)?;
    if !trace.status.converged() {
        return Err(ConsensusError::NotConverged);
    }
    let limit = trace.limit.clone();
    let r: f64 = trace.states[0]
        .iter()
        .map(|x| vector::dist(x, xbar))
        .sum::<f64>()
        / delta;
    let q = 1.0 - 1.0 / (4.0 * r * r);
    // For R < 1/2 the recursion forces exact agreement after one round.
    let ratio = q.max(0.0);
    let lhs: Vec<f64> = trace.states.iter().map(|xs| sum_sq_dist(xs, &limit)).collect();
    let mut rhs = Vec::with_capacity(lhs.len());
    let mut factor = 1.0;
    for k in 0..lhs.len() {
        if k > 0 {
            factor *= ratio;
        }
        rhs.push(factor * lhs[0]);
    }
    let violations = lhs
        .iter()
        .zip(&rhs)
        .enumerate()
        .filter(|(_, (l, r))| l > r)
        .map(|(k, _)| k)
        .collect();
    Ok(RateReport {
        r,
        q,
        limit,
        lhs,
        rhs,
        violations,
    })
}
