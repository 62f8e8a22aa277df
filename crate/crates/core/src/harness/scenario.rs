use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::consensus::{DEFAULT_HORIZON, DEFAULT_TOL};
use crate::convex_sets::{self, ConvexSet, SetError, DYKSTRA_TOL, FEAS_TOL};
use crate::network::{make_schedule, validate_schedule, ScheduleSpec, WeightSchedule};
use crate::subgradient_opt::{ConvexFunction, Regime, StepsizeSchedule};
use crate::vector::Vector;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Consensus,
    Optimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialPoints {
    Explicit(Vec<Vector>),
    /// Uniform samples from `[-radius, radius]^n`, projected onto each agent's set.
    Random { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Witness {
    pub xbar: Vector,
    pub delta: f64,
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_dykstra_tol() -> f64 {
    DYKSTRA_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub m: usize,
    pub n: usize,
    pub sets: Vec<ConvexSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<Vec<ConvexFunction>>,
    pub schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepsize: Option<StepsizeSchedule>,
    pub initial: InitialPoints,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_dykstra_tol")]
    pub dykstra_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    #[serde(default)]
    pub allow_empty_intersection: bool,
    #[serde(default)]
    pub seed: u64,
}

/// One violated invariant, located by its field path.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationErrors(pub Vec<Issue>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} validation error(s)", self.0.len())?;
        for issue in &self.0 {
            write!(f, "\n  {}: {}", issue.path, issue.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

impl ValidationErrors {
    pub fn mentions(&self, path: &str) -> bool {
        self.0.iter().any(|i| i.path == path)
    }
}

struct Issues(Vec<Issue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl fmt::Display) {
        self.0.push(Issue {
            path: path.into(),
            message: message.to_string(),
        });
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn schedule(&self) -> Result<WeightSchedule, HarnessError> {
        make_schedule(&self.schedule, self.m).map_err(HarnessError::from)
    }

    /// Starting points, sampled from the scenario seed when random.
    pub fn initial_points(&self) -> Vec<Vector> {
        match &self.initial {
            InitialPoints::Explicit(points) => points.clone(),
            InitialPoints::Random { radius } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                self.sets
                    .iter()
                    .map(|set| {
                        let raw: Vector =
                            (0..self.n).map(|_| rng.random_range(-radius..=*radius)).collect();
                        set.project_unchecked(&raw)
                    })
                    .collect()
            }
        }
    }

    /// Checks every invariant and reports all failures at once.
    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut issues = Issues(Vec::new());
        if self.m == 0 {
            issues.push("m", "need at least one agent");
        }
        if self.n == 0 {
            issues.push("n", "dimension must be positive");
        }
        if self.horizon == 0 {
            issues.push("horizon", "must be at least 1");
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            issues.push("tol", format!("must be positive, got {}", self.tol));
        }
        if !(self.dykstra_tol.is_finite() && self.dykstra_tol > 0.0) {
            issues.push("dykstra_tol", format!("must be positive, got {}", self.dykstra_tol));
        }

        if self.sets.len() != self.m {
            issues.push("sets", format!("expected {} sets, got {}", self.m, self.sets.len()));
        }
        let mut sets_ok = self.sets.len() == self.m;
        for (i, set) in self.sets.iter().enumerate() {
            if let Err(e) = set.validate() {
                issues.push(format!("sets[{i}]"), e);
                sets_ok = false;
            } else if let Some(d) = set.dim() {
                if d != self.n {
                    issues.push(format!("sets[{i}]"), format!("dimension {d}, expected {}", self.n));
                    sets_ok = false;
                }
            }
        }

        self.validate_optimize_fields(&mut issues, sets_ok);
        self.validate_schedule_field(&mut issues);

        if sets_ok {
            self.validate_initial(&mut issues);
            if let Some(w) = &self.witness {
                if w.xbar.len() != self.n {
                    issues.push("witness.xbar", format!("dimension {}, expected {}", w.xbar.len(), self.n));
                } else {
                    match convex_sets::validate_witness(&self.sets, &w.xbar, w.delta) {
                        Ok(()) => {}
                        Err(SetError::WitnessTooLarge { index, delta, certified }) => issues.push(
                            "witness.delta",
                            format!(
                                "interior-point condition fails: delta {delta} exceeds the certified radius {certified} for sets[{index}]"
                            ),
                        ),
                        Err(e) => issues.push("witness", e),
                    }
                }
            }
        }

        if issues.0.is_empty() {
            Ok(())
        } else {
            Err(ValidationErrors(issues.0))
        }
    }

    fn validate_optimize_fields(&self, issues: &mut Issues, sets_ok: bool) {
        match self.kind {
            ScenarioKind::Consensus => {
                for (field, present) in [
                    ("functions", self.functions.is_some()),
                    ("stepsize", self.stepsize.is_some()),
                    ("regime", self.regime.is_some()),
                ] {
                    if present {
                        issues.push(field, "only valid for optimize scenarios");
                    }
                }
            }
            ScenarioKind::Optimize => {
                match &self.functions {
                    None => issues.push("functions", "required for optimize scenarios"),
                    Some(fs) => {
                        if fs.len() != self.m {
                            issues.push("functions", format!("expected {} functions, got {}", self.m, fs.len()));
                        }
                        for (i, f) in fs.iter().enumerate() {
                            if let Err(e) = f.validate() {
                                issues.push(format!("functions[{i}]"), e);
                            } else if f.dim() != self.n {
                                issues.push(format!("functions[{i}]"), format!("dimension {}, expected {}", f.dim(), self.n));
                            }
                        }
                    }
                }
                match &self.stepsize {
                    None => issues.push("stepsize", "required for optimize scenarios"),
                    Some(s) => {
                        if let Err(e) = s.validate() {
                            issues.push("stepsize", e);
                        }
                    }
                }
                match self.regime {
                    None => issues.push("regime", "required for optimize scenarios"),
                    Some(Regime::IdenticalSets) if sets_ok => {
                        if !self.sets.windows(2).all(|p| p[0] == p[1]) {
                            issues.push("regime", "identical_sets declared but the sets differ");
                        }
                    }
                    Some(Regime::UniformWeights) => {
                        if self.witness.is_none() {
                            issues.push("witness", "uniform_weights regime needs an interior witness");
                        }
                        if let Some(i) = self.sets.iter().position(|s| !s.is_bounded()) {
                            issues.push(format!("sets[{i}]"), "uniform_weights regime needs compact sets");
                        }
                    }
                    Some(_) => {}
                }
            }
        }
    }

    fn validate_schedule_field(&self, issues: &mut Issues) {
        if self.m == 0 {
            return;
        }
        let schedule = match make_schedule(&self.schedule, self.m) {
            Ok(s) => s,
            Err(e) => {
                issues.push("schedule", e);
                return;
            }
        };
        let report = validate_schedule(&schedule, self.horizon.max(1));
        if let Some((slot, violations)) = report.weight_failures.first() {
            issues.push("schedule", format!("matrix at slot {slot} breaks the weights rule: {violations:?}"));
        }
        if let Some(start) = report.first_disconnected_window {
            issues.push(
                "schedule",
                format!("communication graph over slots {start}..{} is not strongly connected", start + schedule.window()),
            );
        }
        if self.regime == Some(Regime::UniformWeights) && !schedule.is_uniform() {
            issues.push("schedule", "uniform_weights regime needs constant uniform weights");
        }
    }

    fn validate_initial(&self, issues: &mut Issues) {
        match &self.initial {
            InitialPoints::Random { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    issues.push("initial.random.radius", format!("must be positive, got {radius}"));
                }
            }
            InitialPoints::Explicit(points) => {
                if points.len() != self.m {
                    issues.push("initial.explicit", format!("expected {} points, got {}", self.m, points.len()));
                }
                for (i, (p, set)) in points.iter().zip(&self.sets).enumerate() {
                    let path = format!("initial.explicit[{i}]");
                    if p.len() != self.n {
                        issues.push(path, format!("dimension {}, expected {}", p.len(), self.n));
                    } else if !crate::vector::is_finite(p) {
                        issues.push(path, "coordinates must be finite");
                    } else {
                        let d = set.distance_unchecked(p);
                        if d > FEAS_TOL {
                            issues.push(path, format!("agent {i} starts {d:e} outside its set"));
                        }
                    }
                }
            }
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_json(&text)
}
