//! Distributed projected subgradient method for
//! `minimize sum_i f_i(x)` over `x in X_1 ∩ ... ∩ X_m`.
//!
//! Agent `i` averages with its weight vector, takes a subgradient step on its
//! own `f_i` and projects onto its own `X_i`:
//!
//! ```text
//! v^i(k)   = sum_j a^i_j(k) x^j(k)
//! x^i(k+1) = P_{X_i}[v^i(k) - alpha_k d_i(k)] = v^i(k) - alpha_k d_i(k) + phi^i(k)
//! ```

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{self, check_probe, tail_start, ConsensusError};
use crate::convex_sets::{self, ConvexSet, SetError, DYKSTRA_TOL};
use crate::network::{WeightMatrix, WeightSchedule};
use crate::vector::{self, Vector};

/// Eigenvalue floor accepted as positive semidefinite.
pub const PSD_FLOOR: f64 = -1e-10;
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Slack for [`basic_relation_check`].
pub const BASIC_RELATION_SLACK: f64 = 1e-9;
/// Slack for [`phi_bound_check`].
pub const PHI_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OptError {
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("invalid stepsize: {0}")]
    InvalidStepsize(String),
    #[error("quadratic objective needs a bounded set for a subgradient bound")]
    UnboundedSet,
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
    #[error("check requires the identical-sets regime")]
    WrongRegime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinePiece {
    pub a: Vector,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexFunction {
    /// `x'Qx + b'x + c`, `q` given row-major.
    Quadratic { q: Vec<Vec<f64>>, b: Vector, c: f64 },
    /// `|x - center|`
    NormDist { center: Vector },
    /// `sum_d |x_d - center_d|`
    AbsDev { center: Vector },
    /// `max_r a_r'x + b_r`
    MaxAffine { rows: Vec<AffinePiece> },
}

fn check_dim(expected: usize, x: &[f64]) -> Result<(), SetError> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(SetError::DimensionMismatch {
            expected,
            got: x.len(),
        })
    }
}

fn spectral_norm(q: &[Vec<f64>]) -> f64 {
    let n = q.len();
    let mat = DMatrix::from_fn(n, n, |r, c| q[r][c]);
    SymmetricEigen::new(mat)
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

impl ConvexFunction {
    pub fn quadratic(q: Vec<Vec<f64>>, b: Vector, c: f64) -> Result<Self, OptError> {
        let f = ConvexFunction::Quadratic { q, b, c };
        f.validate()?;
        Ok(f)
    }

    /// `(x - center)'(x - center)`
    pub fn squared_dist(center: &[f64]) -> Self {
        let n = center.len();
        let q = (0..n)
            .map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
            .collect();
        ConvexFunction::Quadratic {
            q,
            b: vector::scale(center, -2.0),
            c: vector::norm_sq(center),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFunction::Quadratic { b, .. } => b.len(),
            ConvexFunction::NormDist { center } | ConvexFunction::AbsDev { center } => {
                center.len()
            }
            ConvexFunction::MaxAffine { rows } => rows.first().map_or(0, |r| r.a.len()),
        }
    }

    pub fn validate(&self) -> Result<(), OptError> {
        let bad = |msg: String| Err(OptError::InvalidFunction(msg));
        match self {
            ConvexFunction::Quadratic { q, b, c } => {
                let n = b.len();
                if n == 0 || q.len() != n || q.iter().any(|r| r.len() != n) {
                    return bad(format!("quadratic needs an {n}x{n} matrix"));
                }
                if !c.is_finite() || !vector::is_finite(b) || q.iter().any(|r| !vector::is_finite(r)) {
                    return bad("quadratic entries must be finite".into());
                }
                for r in 0..n {
                    for col in r + 1..n {
                        let scale = 1.0_f64.max(q[r][col].abs()).max(q[col][r].abs());
                        if (q[r][col] - q[col][r]).abs() > SYMMETRY_TOL * scale {
                            return bad(format!("quadratic matrix not symmetric at ({r},{col})"));
                        }
                    }
                }
                let mat = DMatrix::from_fn(n, n, |r, col| q[r][col]);
                let min_eig = SymmetricEigen::new(mat).eigenvalues.min();
                if min_eig < PSD_FLOOR {
                    return bad(format!("quadratic matrix has eigenvalue {min_eig:e}"));
                }
                Ok(())
            }
            ConvexFunction::NormDist { center } | ConvexFunction::AbsDev { center } => {
                if center.is_empty() || !vector::is_finite(center) {
                    return bad("center must be a nonempty finite vector".into());
                }
                Ok(())
            }
            ConvexFunction::MaxAffine { rows } => {
                let Some(first) = rows.first() else {
                    return bad("max_affine needs at least one row".into());
                };
                let n = first.a.len();
                if n == 0 {
                    return bad("max_affine rows must be nonempty".into());
                }
                for (idx, row) in rows.iter().enumerate() {
                    if row.a.len() != n || !vector::is_finite(&row.a) || !row.b.is_finite() {
                        return bad(format!("max_affine row {idx} is malformed"));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, SetError> {
        check_dim(self.dim(), x)?;
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            ConvexFunction::Quadratic { q, b, c } => {
                let quad: f64 = q.iter().zip(x).map(|(row, xi)| xi * vector::dot(row, x)).sum();
                quad + vector::dot(b, x) + c
            }
            ConvexFunction::NormDist { center } => vector::dist(x, center),
            ConvexFunction::AbsDev { center } => {
                x.iter().zip(center).map(|(xi, ci)| (xi - ci).abs()).sum()
            }
            ConvexFunction::MaxAffine { rows } => rows
                .iter()
                .map(|r| vector::dot(&r.a, x) + r.b)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn subgradient(&self, x: &[f64]) -> Result<Vector, SetError> {
        check_dim(self.dim(), x)?;
        Ok(self.subgradient_unchecked(x))
    }

    pub(crate) fn subgradient_unchecked(&self, x: &[f64]) -> Vector {
        match self {
            ConvexFunction::Quadratic { q, b, .. } => q
                .iter()
                .zip(b)
                .map(|(row, bi)| 2.0 * vector::dot(row, x) + bi)
                .collect(),
            ConvexFunction::NormDist { center } => {
                let diff = vector::sub(x, center);
                let norm = vector::norm(&diff);
                if norm == 0.0 {
                    vec![0.0; x.len()]
                } else {
                    vector::scale(&diff, 1.0 / norm)
                }
            }
            ConvexFunction::AbsDev { center } => x
                .iter()
                .zip(center)
                .map(|(xi, ci)| {
                    if xi > ci {
                        1.0
                    } else if xi < ci {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
            ConvexFunction::MaxAffine { rows } => {
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (idx, r) in rows.iter().enumerate() {
                    let val = vector::dot(&r.a, x) + r.b;
                    if val > best_val {
                        best = idx;
                        best_val = val;
                    }
                }
                rows[best].a.clone()
            }
        }
    }
}

/// Largest norm of a point of `set`, if bounded.
fn max_norm_over(set: &ConvexSet) -> Option<f64> {
    match set {
        ConvexSet::Ball { center, radius } => Some(vector::norm(center) + radius),
        other => other.bounding_box().map(|(lo, hi)| {
            lo.iter()
                .zip(&hi)
                .map(|(l, h)| {
                    let c = l.abs().max(h.abs());
                    c * c
                })
                .sum::<f64>()
                .sqrt()
        }),
    }
}

/// `L` with `|g| <= L` for every subgradient `g` of `f` at points of `set`.
pub fn subgradient_bound(f: &ConvexFunction, set: &ConvexSet) -> Result<f64, OptError> {
    f.validate()?;
    if let Some(d) = set.dim() {
        if d != f.dim() {
            return Err(SetError::DimensionMismatch {
                expected: d,
                got: f.dim(),
            }
            .into());
        }
    }
    match f {
        ConvexFunction::Quadratic { q, b, .. } => {
            let radius = max_norm_over(set).ok_or(OptError::UnboundedSet)?;
            Ok(2.0 * spectral_norm(q) * radius + vector::norm(b))
        }
        ConvexFunction::NormDist { .. } => Ok(1.0),
        ConvexFunction::AbsDev { center } => Ok((center.len() as f64).sqrt()),
        ConvexFunction::MaxAffine { rows } => Ok(rows
            .iter()
            .map(|r| vector::norm(&r.a))
            .fold(0.0, f64::max)),
    }
}

/// Smallest box holding every set, or `None` if one is unbounded.
pub fn envelope(sets: &[ConvexSet]) -> Option<ConvexSet> {
    let mut boxes = sets.iter().map(ConvexSet::bounding_box);
    let (mut lo, mut hi) = boxes.next()??;
    for bb in boxes {
        let (l, h) = bb?;
        for d in 0..lo.len() {
            lo[d] = lo[d].min(l[d]);
            hi[d] = hi[d].max(h[d]);
        }
    }
    Some(ConvexSet::Box { lo, hi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepsizeSchedule {
    /// `alpha_k = a / (k + k0)`
    Harmonic { a: f64, k0: u64 },
    Constant { a: f64 },
    /// Listed values, then the last value held forever.
    Scripted { values: Vec<f64> },
}

impl StepsizeSchedule {
    pub fn validate(&self) -> Result<(), OptError> {
        let ok = match self {
            StepsizeSchedule::Harmonic { a, k0 } => a.is_finite() && *a > 0.0 && *k0 >= 1,
            StepsizeSchedule::Constant { a } => a.is_finite() && *a > 0.0,
            StepsizeSchedule::Scripted { values } => {
                !values.is_empty() && values.iter().all(|v| v.is_finite() && *v > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(OptError::InvalidStepsize(format!("{self:?}")))
        }
    }

    pub fn alpha(&self, k: usize) -> f64 {
        match self {
            StepsizeSchedule::Harmonic { a, k0 } => a / (k as f64 + *k0 as f64),
            StepsizeSchedule::Constant { a } => *a,
            StepsizeSchedule::Scripted { values } => values[k.min(values.len() - 1)],
        }
    }

    /// `sum_k alpha_k = inf`
    pub fn diverges(&self) -> bool {
        true
    }

    /// `sum_k alpha_k^2 < inf`
    pub fn square_summable(&self) -> bool {
        matches!(self, StepsizeSchedule::Harmonic { .. })
    }
}

/// Which convergence result the run is meant to exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Every agent has the same set; any validated schedule.
    IdenticalSets,
    /// Distinct compact sets with constant uniform weights and an interior witness.
    UniformWeights,
    /// Distinct sets with time-varying weights. Not covered by the theory.
    Unsupported,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub iterates: Vec<Vector>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDetail {
    pub v: Vec<Vector>,
    pub d: Vec<Vector>,
    pub phi: Vec<Vector>,
    pub alpha: f64,
}

pub(crate) fn step_unchecked(
    iterates: &[Vector],
    a: &WeightMatrix,
    fs: &[ConvexFunction],
    sets: &[ConvexSet],
    alpha: f64,
) -> (Vec<Vector>, StepDetail) {
    let per_agent: Vec<[Vector; 4]> = (0..iterates.len())
        .into_par_iter()
        .map(|i| {
            let v = vector::combine(a.weights_of(i), iterates);
            let d = fs[i].subgradient_unchecked(&v);
            let u = vector::axpy(&v, -alpha, &d);
            let projected = sets[i].project_unchecked(&u);
            let phi = vector::sub(&projected, &u);
            let next = vector::add(&u, &phi);
            [v, d, phi, next]
        })
        .collect();
    let m = per_agent.len();
    let (mut v, mut d, mut phi, mut next) = (
        Vec::with_capacity(m),
        Vec::with_capacity(m),
        Vec::with_capacity(m),
        Vec::with_capacity(m),
    );
    for [vi, di, pi, xi] in per_agent {
        v.push(vi);
        d.push(di);
        phi.push(pi);
        next.push(xi);
    }
    (next, StepDetail { v, d, phi, alpha })
}

fn check_functions(fs: &[ConvexFunction], m: usize, n: usize) -> Result<(), OptError> {
    if fs.len() != m {
        return Err(ConsensusError::AgentCount {
            what: "functions",
            expected: m,
            got: fs.len(),
        }
        .into());
    }
    for f in fs {
        f.validate()?;
        if f.dim() != n {
            return Err(SetError::DimensionMismatch {
                expected: n,
                got: f.dim(),
            }
            .into());
        }
    }
    Ok(())
}

/// One round of the subgradient method with a fixed weight matrix.
pub fn subgradient_step(
    state: &OptState,
    a: &WeightMatrix,
    fs: &[ConvexFunction],
    sets: &[ConvexSet],
    alpha: f64,
) -> Result<(OptState, StepDetail), OptError> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(OptError::InvalidStepsize(format!("alpha = {alpha}")));
    }
    // Shape, weight and feasibility checks are shared with consensus.
    let cstate = consensus::ConsensusState {
        iterates: state.iterates.clone(),
        k: state.k,
    };
    consensus::consensus_step(&cstate, a, sets)?;
    let n = state.iterates.first().map_or(0, Vec::len);
    check_functions(fs, state.iterates.len(), n)?;
    let (iterates, detail) = step_unchecked(&state.iterates, a, fs, sets, alpha);
    Ok((
        OptState {
            iterates,
            k: state.k + 1,
        },
        detail,
    ))
}

#[derive(Debug, Clone)]
pub struct OptProblem {
    pub sets: Vec<ConvexSet>,
    pub functions: Vec<ConvexFunction>,
    pub schedule: WeightSchedule,
    pub stepsize: StepsizeSchedule,
    pub initial: Vec<Vector>,
    pub horizon: usize,
    pub regime: Regime,
    /// Interior witness `(xbar, delta)`; required for [`Regime::UniformWeights`].
    pub witness: Option<(Vector, f64)>,
    /// Reference optimal value for the gap column.
    pub f_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptSummary {
    pub k: usize,
    /// `f(y(k))` with `y(k)` the average of the iterates.
    pub objective: f64,
    pub disagreement: f64,
    pub dist_y: f64,
}

#[derive(Debug, Clone)]
pub struct OptTrace {
    pub sets: Vec<ConvexSet>,
    pub functions: Vec<ConvexFunction>,
    pub regime: Regime,
    pub stepsize: StepsizeSchedule,
    /// `x(0), ..., x(K)`
    pub states: Vec<Vec<Vector>>,
    pub steps: Vec<StepDetail>,
    pub summaries: Vec<OptSummary>,
    /// Average of the final iterates.
    pub x_hat: Vector,
    pub f_hat: f64,
    pub f_star: Option<f64>,
    pub warnings: Vec<String>,
}

impl OptTrace {
    pub fn objective_gap(&self) -> Option<f64> {
        self.f_star.map(|f| self.f_hat - f)
    }

    /// `max_i |x^i(k) - y(k)|` for every recorded state.
    pub fn deviations(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|xs| {
                let y = vector::mean(xs);
                xs.iter().map(|x| vector::dist(x, &y)).fold(0.0, f64::max)
            })
            .collect()
    }
}

/// Sum of the objectives at a single point.
pub fn total_objective(fs: &[ConvexFunction], x: &[f64]) -> f64 {
    fs.iter().map(|f| f.evaluate_unchecked(x)).sum()
}

fn check_regime(problem: &OptProblem) -> Result<(), OptError> {
    let sets = &problem.sets;
    let identical = sets.windows(2).all(|p| p[0] == p[1]);
    match problem.regime {
        Regime::IdenticalSets if !identical => Err(OptError::RegimeMismatch(
            "identical_sets regime with distinct sets".into(),
        )),
        Regime::UniformWeights => {
            if !problem.schedule.is_uniform() {
                return Err(OptError::RegimeMismatch(
                    "uniform_weights regime needs constant uniform weights".into(),
                ));
            }
            if let Some(idx) = sets.iter().position(|s| !s.is_bounded()) {
                return Err(OptError::RegimeMismatch(format!("set {idx} is not compact")));
            }
            let (xbar, delta) = problem.witness.as_ref().ok_or_else(|| {
                OptError::RegimeMismatch("uniform_weights regime needs an interior witness".into())
            })?;
            convex_sets::validate_witness(sets, xbar, *delta)?;
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Runs the subgradient method for `problem.horizon` rounds.
pub fn run_subgradient(problem: &OptProblem) -> Result<OptTrace, OptError> {
    let sets = &problem.sets;
    let fs = &problem.functions;
    consensus::validate_run_inputs(sets, &problem.schedule, &problem.initial, problem.horizon)?;
    let n = problem.initial[0].len();
    check_functions(fs, sets.len(), n)?;
    problem.stepsize.validate()?;
    check_regime(problem)?;

    let mut warnings = Vec::new();
    if problem.regime == Regime::Unsupported {
        warnings.push("distinct sets with time-varying weights are not covered by the theory".into());
    }
    if !problem.stepsize.square_summable() {
        warnings.push("stepsize is not square-summable; convergence is not guaranteed".to_string());
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let summarize = |k: usize, xs: &[Vector]| -> Result<OptSummary, OptError> {
        let y = vector::mean(xs);
        Ok(OptSummary {
            k,
            objective: total_objective(fs, &y),
            disagreement: vector::max_pairwise_dist(xs),
            dist_y: convex_sets::intersection_distance(sets, &y, DYKSTRA_TOL)?,
        })
    };

    let mut states = vec![problem.initial.clone()];
    let mut steps = Vec::with_capacity(problem.horizon);
    let mut summaries = vec![summarize(0, &states[0])?];
    for k in 0..problem.horizon {
        let a = problem.schedule.matrix(k);
        let alpha = problem.stepsize.alpha(k);
        let (next, detail) = step_unchecked(&states[k], &a, fs, sets, alpha);
        summaries.push(summarize(k + 1, &next)?);
        states.push(next);
        steps.push(detail);
    }
    let x_hat = vector::mean(states.last().expect("initial state present"));
    let f_hat = total_objective(fs, &x_hat);
    Ok(OptTrace {
        sets: sets.clone(),
        functions: fs.clone(),
        regime: problem.regime,
        stepsize: problem.stepsize.clone(),
        states,
        steps,
        summaries,
        x_hat,
        f_hat,
        f_star: problem.f_star,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicRelationReport {
    pub rounds_checked: usize,
    /// Largest `lhs - rhs` over all rounds.
    pub max_excess: f64,
    pub violations: Vec<usize>,
    /// `sum_i |x^i(0) - z|^2` plus every per-round perturbation.
    pub telescoped_rhs: f64,
    /// `sum_i |x^i(K) - z|^2`
    pub final_lhs: f64,
}

impl BasicRelationReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty() && self.final_lhs <= self.telescoped_rhs + BASIC_RELATION_SLACK
    }
}

fn sum_sq_dist(points: &[Vector], z: &[f64]) -> f64 {
    points.iter().map(|p| vector::dist_sq(p, z)).sum()
}

/// Per-round check of
/// `sum_i |x^i(k+1)-z|^2 <= sum_i |x^i(k)-z|^2 + alpha^2 sum_i |d_i|^2
///  - 2 alpha sum_i (f_i(v^i) - f_i(z)) - sum_i |phi^i|^2`.
pub fn basic_relation_check(trace: &OptTrace, probe: &[f64]) -> Result<BasicRelationReport, OptError> {
    check_probe(&trace.sets, probe)?;
    let mut violations = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    let mut telescoped_rhs = sum_sq_dist(&trace.states[0], probe);
    for (k, step) in trace.steps.iter().enumerate() {
        let before = sum_sq_dist(&trace.states[k], probe);
        let after = sum_sq_dist(&trace.states[k + 1], probe);
        let alpha = step.alpha;
        let d_sq: f64 = step.d.iter().map(|d| vector::norm_sq(d)).sum();
        let phi_sq: f64 = step.phi.iter().map(|p| vector::norm_sq(p)).sum();
        let gap: f64 = trace
            .functions
            .iter()
            .zip(&step.v)
            .map(|(f, v)| f.evaluate_unchecked(v) - f.evaluate_unchecked(probe))
            .sum();
        let perturbation = alpha * alpha * d_sq - 2.0 * alpha * gap - phi_sq;
        let rhs = before + perturbation;
        telescoped_rhs += perturbation;
        max_excess = max_excess.max(after - rhs);
        if after > rhs + BASIC_RELATION_SLACK {
            violations.push(k);
        }
    }
    Ok(BasicRelationReport {
        rounds_checked: trace.steps.len(),
        max_excess: if trace.steps.is_empty() { 0.0 } else { max_excess },
        violations,
        telescoped_rhs,
        final_lhs: sum_sq_dist(trace.states.last().expect("state"), probe),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiBoundReport {
    pub l: f64,
    /// Largest `|phi^i(k)| / (alpha_k L)` over rounds with `alpha_k L > 0`.
    pub worst_ratio: f64,
    /// `(k, agent)` pairs exceeding the bound.
    pub violations: Vec<(usize, usize)>,
}

impl PhiBoundReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `|phi^i(k)| <= alpha_k L` on identical-set traces.
pub fn phi_bound_check(trace: &OptTrace, l: f64) -> Result<PhiBoundReport, OptError> {
    if trace.regime != Regime::IdenticalSets {
        return Err(OptError::WrongRegime);
    }
    let mut violations = Vec::new();
    let mut worst_ratio = 0.0_f64;
    for (k, step) in trace.steps.iter().enumerate() {
        let limit = step.alpha * l;
        for (i, phi) in step.phi.iter().enumerate() {
            let norm = vector::norm(phi);
            if limit > 0.0 {
                worst_ratio = worst_ratio.max(norm / limit);
            }
            if norm > limit + PHI_SLACK {
                violations.push((k, i));
            }
        }
    }
    Ok(PhiBoundReport {
        l,
        worst_ratio,
        violations,
    })
}

/// `L` for each agent: over `X_i` in the identical-sets regime, over the
/// bounding box of all sets otherwise (every average `v^i` lies there).
pub fn agent_bounds(
    functions: &[ConvexFunction],
    sets: &[ConvexSet],
    regime: Regime,
) -> Result<Vec<f64>, OptError> {
    let hull = match regime {
        Regime::IdenticalSets => None,
        _ => envelope(sets),
    };
    functions
        .iter()
        .zip(sets)
        .map(|(f, set)| subgradient_bound(f, hull.as_ref().unwrap_or(set)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisagreementReport {
    /// Diverging and square-summable stepsize.
    pub hypothesis_met: bool,
    /// `max_i |x^i(k) - y(k)|` per state.
    pub deviations: Vec<f64>,
    /// Largest deviation over the last tenth of the states.
    pub tail_max: f64,
    /// `sum_{l<=k} alpha_l max_i |x^i(l) - y(l)|`
    pub weighted_partial_sums: Vec<f64>,
    pub tol: f64,
}

impl DisagreementReport {
    /// `None` when the stepsize hypothesis does not hold.
    pub fn passes(&self) -> Option<bool> {
        self.hypothesis_met.then_some(self.tail_max <= self.tol)
    }
}

pub fn disagreement_decay_check(trace: &OptTrace, tol: f64) -> DisagreementReport {
    let deviations = trace.deviations();
    let start = tail_start(deviations.len(), 0.1);
    let tail_max = deviations[start..].iter().copied().fold(0.0, f64::max);
    let mut acc = 0.0;
    let weighted_partial_sums = trace
        .steps
        .iter()
        .zip(&deviations)
        .map(|(s, dev)| {
            acc += s.alpha * dev;
            acc
        })
        .collect();
    DisagreementReport {
        hypothesis_met: trace.stepsize.diverges() && trace.stepsize.square_summable(),
        deviations,
        tail_max,
        weighted_partial_sums,
        tol,
    }
}

/// `c_k = sum_{l<=k} beta^{k-l} gamma_l`, computed by `c_k = beta c_{k-1} + gamma_k`.
pub fn convolution_sequence(beta: f64, gamma: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    gamma
        .iter()
        .map(|g| {
            acc = beta * acc + g;
            acc
        })
        .collect()
}
