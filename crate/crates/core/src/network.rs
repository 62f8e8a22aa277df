//! Time-varying communication weights, transition-matrix products, and the
//! geometric ergodicity bound for products of doubly stochastic matrices.
//!
//! Storage convention: `WeightMatrix::entry(j, i)` is `a^i_j(k)`, the weight
//! agent `i` puts on agent `j`'s estimate. Column `i` is agent `i`'s weight
//! vector, so `w^i = sum_j entry(j, i) * x^j`. Transition matrices use the same
//! convention and are multiplied left to right: `Phi(k, s) = A(s) A(s+1) ... A(k)`.

use std::borrow::Cow;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for row and column sums.
pub const SUM_TOL: f64 = 1e-12;
/// Slack allowed when comparing an entry against the eta floor.
pub const ETA_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("weight matrix must be square and nonempty: {0}")]
    Shape(String),
    #[error("invalid schedule parameters: {0}")]
    InvalidParams(String),
    #[error("communication graph is disconnected")]
    Disconnected,
    #[error("transition matrix needs k >= s, got s = {s}, k = {k}")]
    Span { s: usize, k: usize },
    #[error("parameter out of domain: {0}")]
    Domain(String),
}

/// Dense `m x m` weight matrix, column `i` holding agent `i`'s weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    m: usize,
    entries: Vec<f64>,
}

impl WeightMatrix {
    pub fn identity(m: usize) -> Self {
        let mut entries = vec![0.0; m * m];
        for i in 0..m {
            entries[i * m + i] = 1.0;
        }
        WeightMatrix { m, entries }
    }

    pub fn uniform(m: usize) -> Self {
        WeightMatrix {
            m,
            entries: vec![1.0 / m as f64; m * m],
        }
    }

    /// Builds from row-major rows: `rows[j][i] = a^i_j`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NetworkError> {
        let m = rows.len();
        if m == 0 {
            return Err(NetworkError::Shape("no rows".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(NetworkError::Shape(format!(
                "row {bad} has {} entries, expected {m}",
                rows[bad].len()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(NetworkError::Shape("entries must be finite".into()));
        }
        Ok(WeightMatrix {
            m,
            entries: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.m + col]
    }

    #[inline]
    fn entry_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        &mut self.entries[row * self.m + col]
    }

    /// `a^agent_from`: weight agent `agent` places on agent `from`.
    #[inline]
    pub fn weight(&self, agent: usize, from: usize) -> f64 {
        self.entry(from, agent)
    }

    /// Agent `agent`'s weight vector `a^agent`, ordered by sending agent.
    pub fn weights_of(&self, agent: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(move |j| self.entry(j, agent))
    }

    pub fn matmul(&self, rhs: &WeightMatrix) -> WeightMatrix {
        assert_eq!(self.m, rhs.m, "matmul dimension mismatch");
        let m = self.m;
        let mut out = vec![0.0; m * m];
        for r in 0..m {
            for t in 0..m {
                let a = self.entry(r, t);
                if a == 0.0 {
                    continue;
                }
                for c in 0..m {
                    out[r * m + c] += a * rhs.entry(t, c);
                }
            }
        }
        WeightMatrix { m, entries: out }
    }

    pub fn column_sum(&self, col: usize) -> f64 {
        (0..self.m).map(|r| self.entry(r, col)).sum()
    }

    pub fn row_sum(&self, row: usize) -> f64 {
        (0..self.m).map(|c| self.entry(row, c)).sum()
    }

    /// Every column and row sums to one within [`SUM_TOL`] and entries are nonnegative.
    pub fn is_doubly_stochastic(&self) -> bool {
        self.entries.iter().all(|v| *v >= 0.0)
            && (0..self.m).all(|i| {
                (self.column_sum(i) - 1.0).abs() <= SUM_TOL
                    && (self.row_sum(i) - 1.0).abs() <= SUM_TOL
            })
    }

    /// All entries equal `1/m` within `1e-15`.
    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.m as f64;
        self.entries.iter().all(|v| (v - u).abs() <= 1e-15)
    }

    pub fn min_positive(&self) -> Option<f64> {
        self.entries
            .iter()
            .copied()
            .filter(|v| *v > 0.0)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
    }

    /// `max_{i,j} |entry(j, i) - 1/m|`
    pub fn max_deviation_from_uniform(&self) -> f64 {
        let u = 1.0 / self.m as f64;
        self.entries
            .iter()
            .map(|v| (v - u).abs())
            .fold(0.0, f64::max)
    }

    /// Directed edges `(j, i)`, `j != i`, with `a^i_j > 0`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.m;
        (0..m)
            .flat_map(move |j| (0..m).map(move |i| (j, i)))
            .filter(move |&(j, i)| j != i && self.entry(j, i) > 0.0)
    }
}

/// One violated clause of the weights rule or stochasticity conditions.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightViolation {
    Negative { row: usize, col: usize, value: f64 },
    /// Agent `agent`'s weight vector does not sum to one.
    ColumnSum { agent: usize, sum: f64 },
    /// Influence of agent `row` does not sum to one (doubly stochastic clause).
    RowSum { row: usize, sum: f64 },
    PositiveBelowEta { row: usize, col: usize, value: f64 },
    DiagonalBelowEta { agent: usize, value: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightReport {
    pub violations: Vec<WeightViolation>,
}

impl WeightReport {
    /// Every clause holds, including row sums.
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// All clauses except the row-sum condition hold.
    pub fn is_valid_stochastic(&self) -> bool {
        self.violations
            .iter()
            .all(|v| matches!(v, WeightViolation::RowSum { .. }))
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        !self.violations.iter().any(|v| {
            matches!(
                v,
                WeightViolation::RowSum { .. }
                    | WeightViolation::ColumnSum { .. }
                    | WeightViolation::Negative { .. }
            )
        })
    }
}

/// Checks nonnegativity, column and row sums, and both eta floors.
pub fn validate_weights(a: &WeightMatrix, eta: f64) -> WeightReport {
    let m = a.m();
    let mut violations = Vec::new();
    for row in 0..m {
        for col in 0..m {
            let value = a.entry(row, col);
            if value < 0.0 {
                violations.push(WeightViolation::Negative { row, col, value });
            } else if value > 0.0 && value < eta - ETA_TOL {
                violations.push(WeightViolation::PositiveBelowEta { row, col, value });
            }
        }
    }
    for agent in 0..m {
        let sum = a.column_sum(agent);
        if (sum - 1.0).abs() > SUM_TOL {
            violations.push(WeightViolation::ColumnSum { agent, sum });
        }
    }
    for row in 0..m {
        let sum = a.row_sum(row);
        if (sum - 1.0).abs() > SUM_TOL {
            violations.push(WeightViolation::RowSum { row, sum });
        }
    }
    for agent in 0..m {
        let value = a.entry(agent, agent);
        if value < eta - ETA_TOL {
            violations.push(WeightViolation::DiagonalBelowEta { agent, value });
        }
    }
    WeightReport { violations }
}

/// Generator family for a weight schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Uniform,
    Metropolis,
    GossipRotation,
    Scripted,
}

/// Declarative schedule description as it appears in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    /// Undirected edges of the static graph (`metropolis` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    /// Row-major matrices replayed cyclically (`scripted` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<f64>>>>,
    /// Connectivity window length `B`; defaults per kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Imposed weight floor; defaults to the smallest positive emitted entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ScheduleSpec {
    pub fn new(kind: ScheduleKind) -> Self {
        ScheduleSpec {
            kind,
            edges: None,
            matrices: None,
            window: None,
            eta: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Generator {
    Constant(WeightMatrix),
    GossipRotation,
    Scripted(Vec<WeightMatrix>),
}

/// Deterministic generator of the per-slot weight matrices `A(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSchedule {
    m: usize,
    kind: ScheduleKind,
    generator: Generator,
    window: usize,
    eta: f64,
    eta_imposed: bool,
    seed: u64,
}

impl WeightSchedule {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// Connectivity window length `B`.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn eta_imposed(&self) -> bool {
        self.eta_imposed
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of slots after which the schedule repeats.
    pub fn period(&self) -> usize {
        match &self.generator {
            Generator::Constant(_) => 1,
            Generator::GossipRotation => self.m,
            Generator::Scripted(list) => list.len(),
        }
    }

    /// `A(k)`.
    pub fn matrix(&self, k: usize) -> Cow<'_, WeightMatrix> {
        match &self.generator {
            Generator::Constant(a) => Cow::Borrowed(a),
            Generator::Scripted(list) => Cow::Borrowed(&list[k % list.len()]),
            Generator::GossipRotation => Cow::Owned(gossip_matrix(self.m, k)),
        }
    }

    /// Every matrix over one period is doubly stochastic.
    pub fn is_doubly_stochastic(&self) -> bool {
        (0..self.period()).all(|k| self.matrix(k).is_doubly_stochastic())
    }

    /// Every matrix is the constant `1/m` matrix.
    pub fn is_uniform(&self) -> bool {
        (0..self.period()).all(|k| self.matrix(k).is_uniform())
    }
}

fn gossip_matrix(m: usize, k: usize) -> WeightMatrix {
    let mut a = WeightMatrix::identity(m);
    let p = k % m;
    let q = (k + 1) % m;
    if p != q {
        *a.entry_mut(p, p) = 0.5;
        *a.entry_mut(q, q) = 0.5;
        *a.entry_mut(p, q) = 0.5;
        *a.entry_mut(q, p) = 0.5;
    }
    a
}

fn metropolis_matrix(m: usize, edges: &[[usize; 2]]) -> Result<WeightMatrix, NetworkError> {
    let mut adjacency = vec![vec![false; m]; m];
    for &[u, v] in edges {
        if u >= m || v >= m {
            return Err(NetworkError::InvalidParams(format!(
                "edge ({u}, {v}) references an agent outside 0..{m}"
            )));
        }
        if u != v {
            adjacency[u][v] = true;
            adjacency[v][u] = true;
        }
    }
    let union: Vec<(usize, usize)> = (0..m)
        .flat_map(|u| (0..m).map(move |v| (u, v)))
        .filter(|&(u, v)| adjacency[u][v])
        .collect();
    if !strongly_connected(m, union) {
        return Err(NetworkError::Disconnected);
    }
    let degree: Vec<usize> = adjacency
        .iter()
        .map(|row| row.iter().filter(|e| **e).count())
        .collect();
    let mut a = WeightMatrix {
        m,
        entries: vec![0.0; m * m],
    };
    for i in 0..m {
        let mut off = 0.0;
        for j in 0..m {
            if adjacency[i][j] {
                let w = 1.0 / (1 + degree[i].max(degree[j])) as f64;
                *a.entry_mut(i, j) = w;
                off += w;
            }
        }
        *a.entry_mut(i, i) = 1.0 - off;
    }
    Ok(a)
}

/// Builds a schedule for `m` agents from its declarative description.
pub fn make_schedule(spec: &ScheduleSpec, m: usize) -> Result<WeightSchedule, NetworkError> {
    if m == 0 {
        return Err(NetworkError::InvalidParams("need at least one agent".into()));
    }
    let misplaced = |field: &str| {
        Err(NetworkError::InvalidParams(format!(
            "`{field}` is not accepted by schedule kind {:?}",
            spec.kind
        )))
    };
    if spec.edges.is_some() && spec.kind != ScheduleKind::Metropolis {
        return misplaced("edges");
    }
    if spec.matrices.is_some() && spec.kind != ScheduleKind::Scripted {
        return misplaced("matrices");
    }
    let (generator, default_window) = match spec.kind {
        ScheduleKind::Uniform => (Generator::Constant(WeightMatrix::uniform(m)), 1),
        ScheduleKind::Metropolis => {
            let edges = spec.edges.as_deref().ok_or_else(|| {
                NetworkError::InvalidParams("metropolis schedule needs `edges`".into())
            })?;
            (Generator::Constant(metropolis_matrix(m, edges)?), 1)
        }
        ScheduleKind::GossipRotation => (Generator::GossipRotation, (m - 1).max(1)),
        ScheduleKind::Scripted => {
            let raw = spec.matrices.as_deref().ok_or_else(|| {
                NetworkError::InvalidParams("scripted schedule needs `matrices`".into())
            })?;
            if raw.is_empty() {
                return Err(NetworkError::InvalidParams("scripted matrix list is empty".into()));
            }
            let list = raw
                .iter()
                .map(|rows| WeightMatrix::from_rows(rows))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(bad) = list.iter().position(|a| a.m() != m) {
                return Err(NetworkError::InvalidParams(format!(
                    "scripted matrix {bad} is {0}x{0}, expected {m}x{m}",
                    list[bad].m()
                )));
            }
            let period = list.len();
            (Generator::Scripted(list), period)
        }
    };
    let window = spec.window.unwrap_or(default_window);
    if window == 0 {
        return Err(NetworkError::InvalidParams("window must be at least 1".into()));
    }
    let mut schedule = WeightSchedule {
        m,
        kind: spec.kind,
        generator,
        window,
        eta: 0.0,
        eta_imposed: spec.eta.is_some(),
        seed: spec.seed,
    };
    schedule.eta = match spec.eta {
        Some(eta) if !(eta > 0.0 && eta <= 1.0) => {
            return Err(NetworkError::InvalidParams(format!(
                "eta must lie in (0, 1], got {eta}"
            )))
        }
        Some(eta) => eta,
        None => (0..schedule.period())
            .filter_map(|k| schedule.matrix(k).min_positive())
            .fold(1.0, f64::min),
    };
    Ok(schedule)
}

/// Outcome of [`validate_schedule`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    /// Slots whose matrix breaks a weights-rule or stochasticity clause
    /// (row-sum clauses are tracked separately in `doubly_stochastic`).
    pub weight_failures: Vec<(usize, Vec<WeightViolation>)>,
    pub doubly_stochastic: bool,
    pub windows_checked: usize,
    /// Start slot of the first window whose union graph is not strongly connected.
    pub first_disconnected_window: Option<usize>,
}

impl ScheduleReport {
    /// Stochastic weights, eta floors and window connectivity all hold.
    pub fn passes(&self) -> bool {
        self.weight_failures.is_empty() && self.first_disconnected_window.is_none()
    }

    /// [`ScheduleReport::passes`] plus doubly stochastic weights.
    pub fn passes_doubly_stochastic(&self) -> bool {
        self.passes() && self.doubly_stochastic
    }
}

fn strongly_connected(m: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> bool {
    if m <= 1 {
        return true;
    }
    let mut forward = vec![Vec::new(); m];
    let mut backward = vec![Vec::new(); m];
    for (j, i) in edges {
        forward[j].push(i);
        backward[i].push(j);
    }
    let reaches_all = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; m];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reaches_all(&forward) && reaches_all(&backward)
}

/// Validates every emitted matrix and every length-`B` window of slots up to
/// `horizon`. A strongly connected union graph in every window is the
/// checkable form of the connectivity and bounded-intercommunication
/// conditions. Periodic schedules are only scanned over one period.
pub fn validate_schedule(schedule: &WeightSchedule, horizon: usize) -> ScheduleReport {
    let m = schedule.m();
    let b = schedule.window();
    let period = schedule.period();
    let slots = horizon.max(1).min(period);

    let mut weight_failures = Vec::new();
    let mut doubly_stochastic = true;
    for k in 0..slots {
        let report = validate_weights(&schedule.matrix(k), schedule.eta());
        if !report.is_doubly_stochastic() {
            doubly_stochastic = false;
        }
        let hard: Vec<_> = report
            .violations
            .into_iter()
            .filter(|v| !matches!(v, WeightViolation::RowSum { .. }))
            .collect();
        if !hard.is_empty() {
            weight_failures.push((k, hard));
        }
    }

    let last_start = horizon.saturating_sub(b);
    let starts = (last_start + 1).min(period);
    let mut first_disconnected_window = None;
    for start in 0..starts {
        let mut union = vec![false; m * m];
        for t in start..start + b {
            for (j, i) in schedule.matrix(t).edges() {
                union[j * m + i] = true;
            }
        }
        let edges = (0..m * m)
            .filter(|&e| union[e])
            .map(|e| (e / m, e % m));
        if !strongly_connected(m, edges) {
            first_disconnected_window = Some(start);
            break;
        }
    }
    ScheduleReport {
        weight_failures,
        doubly_stochastic,
        windows_checked: starts,
        first_disconnected_window,
    }
}

/// `Phi(k, s) = A(s) A(s+1) ... A(k)` together with its span.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub s: usize,
    pub k: usize,
    pub matrix: WeightMatrix,
}

pub fn transition_matrix(
    schedule: &WeightSchedule,
    s: usize,
    k: usize,
) -> Result<TransitionMatrix, NetworkError> {
    if k < s {
        return Err(NetworkError::Span { s, k });
    }
    let mut phi = schedule.matrix(s).into_owned();
    for t in s + 1..=k {
        phi = phi.matmul(&schedule.matrix(t));
    }
    Ok(TransitionMatrix { s, k, matrix: phi })
}

/// `2 (1 + eta^-B0) / (1 - eta^B0) * (1 - eta^B0)^(gap / B0)` with `B0 = (m-1) B`.
pub fn ergodicity_bound(eta: f64, b: usize, m: usize, gap: usize) -> Result<f64, NetworkError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(NetworkError::Domain(format!("eta must lie in (0, 1), got {eta}")));
    }
    if b < 1 {
        return Err(NetworkError::Domain("B must be at least 1".into()));
    }
    if m < 2 {
        return Err(NetworkError::Domain(format!("m must be at least 2, got {m}")));
    }
    let b0 = ((m - 1) * b) as f64;
    let floor = eta.powf(b0);
    let contraction = 1.0 - floor;
    Ok(2.0 * (1.0 + 1.0 / floor) / contraction * contraction.powf(gap as f64 / b0))
}

/// Which form of the ergodicity statement was checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgodicityMode {
    /// `|[Phi(k,s)]^i_j - 1/m| <= bound`.
    DoublyStochastic,
    /// Stochastic-only weights: rows of `Phi(k,s)` must flatten, i.e. the
    /// spread `max_i - min_i` of `[Phi(k,s)]^i_j` stays within twice the bound.
    ColumnSpread,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityViolation {
    pub s: usize,
    pub k: usize,
    pub deviation: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityReport {
    pub mode: ErgodicityMode,
    /// The schedule satisfies the hypotheses (valid weights, eta in (0,1),
    /// connected windows, m >= 2), so the bound is expected to hold.
    pub bound_applicable: bool,
    pub pairs_checked: usize,
    pub max_deviation: f64,
    /// Largest observed `deviation / bound`.
    pub worst_ratio: f64,
    pub violations: Vec<ErgodicityViolation>,
    /// Products that lost double stochasticity beyond [`SUM_TOL`].
    pub stochasticity_failures: usize,
}

impl ErgodicityReport {
    pub fn passes(&self) -> bool {
        self.bound_applicable && self.violations.is_empty() && self.stochasticity_failures == 0
    }
}

/// Checks the ergodicity bound for every `0 <= s <= k <= horizon`.
pub fn check_ergodicity(schedule: &WeightSchedule, horizon: usize) -> ErgodicityReport {
    let m = schedule.m();
    let validation = validate_schedule(schedule, horizon.max(schedule.window()));
    let doubly = validation.doubly_stochastic;
    let mode = if doubly {
        ErgodicityMode::DoublyStochastic
    } else {
        ErgodicityMode::ColumnSpread
    };
    let bound_applicable = validation.passes() && m >= 2 && schedule.eta() < 1.0;

    let mut report = ErgodicityReport {
        mode,
        bound_applicable,
        pairs_checked: 0,
        max_deviation: 0.0,
        worst_ratio: 0.0,
        violations: Vec::new(),
        stochasticity_failures: 0,
    };
    for s in 0..=horizon {
        let mut phi = schedule.matrix(s).into_owned();
        for k in s..=horizon {
            if k > s {
                phi = phi.matmul(&schedule.matrix(k));
            }
            let deviation = match mode {
                ErgodicityMode::DoublyStochastic => phi.max_deviation_from_uniform(),
                ErgodicityMode::ColumnSpread => (0..m)
                    .map(|j| {
                        let row = (0..m).map(|i| phi.entry(j, i));
                        let hi = row.clone().fold(f64::NEG_INFINITY, f64::max);
                        let lo = row.fold(f64::INFINITY, f64::min);
                        hi - lo
                    })
                    .fold(0.0, f64::max),
            };
            if doubly && !phi.is_doubly_stochastic() {
                report.stochasticity_failures += 1;
            }
            report.pairs_checked += 1;
            report.max_deviation = report.max_deviation.max(deviation);
            if !bound_applicable {
                continue;
            }
            let mut bound = ergodicity_bound(schedule.eta(), schedule.window(), m, k - s)
                .expect("parameters checked above");
            if mode == ErgodicityMode::ColumnSpread {
                bound *= 2.0;
            }
            report.worst_ratio = report.worst_ratio.max(deviation / bound);
            if deviation > bound + 1e-12 {
                report.violations.push(ErgodicityViolation {
                    s,
                    k,
                    deviation,
                    bound,
                });
            }
        }
    }
    report
}
