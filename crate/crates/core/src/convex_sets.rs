//! Closed convex sets with exact Euclidean projections.
//!
//! Every variant has a closed-form projection. Intersections are handled by
//! [`project_intersection`], a Dykstra iteration used as a metric oracle for
//! `dist(x, X_1 ∩ ... ∩ X_m)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vector::{self, Vector};

/// Default feasibility tolerance for membership tests.
pub const FEAS_TOL: f64 = 1e-9;
/// Default stopping tolerance for Dykstra's iteration.
pub const DYKSTRA_TOL: f64 = 1e-12;
/// Sweep budget for Dykstra's iteration.
pub const DYKSTRA_MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetError {
    #[error("dimension mismatch: set has dimension {expected}, vector has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("empty set list")]
    EmptySetList,
    #[error("expected {expected} points, got {got}")]
    PointCount { expected: usize, got: usize },
    #[error("point {index} lies outside its set (distance {distance:e})")]
    Infeasible { index: usize, distance: f64 },
    #[error("delta must be positive and finite, got {0}")]
    NonPositiveDelta(f64),
    #[error("delta {delta} exceeds the interior radius {certified} of set {index} around the witness")]
    WitnessTooLarge {
        index: usize,
        delta: f64,
        certified: f64,
    },
    #[error("error bound assertion failed: {0}")]
    BoundViolated(String),
    #[error("intersection projection did not converge within {sweeps} sweeps (last change {change:e}); intersection may be empty")]
    NoConvergence { sweeps: usize, change: f64 },
}

/// A nonempty closed convex subset of R^n.
///
/// Serialized as a tagged record, e.g. `{"type":"box","lo":[0],"hi":[1]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexSet {
    /// `{x : lo <= x <= hi}` componentwise.
    Box { lo: Vector, hi: Vector },
    /// `{x : |x - center| <= radius}`.
    Ball { center: Vector, radius: f64 },
    /// `{x : normal'x <= offset}`.
    Halfspace { normal: Vector, offset: f64 },
    /// `{x : normal'x = offset}`.
    Hyperplane { normal: Vector, offset: f64 },
    /// All of R^n, for any n.
    FullSpace,
}

/// Radius of the largest closed ball around a point that fits inside a set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorCertificate {
    pub delta: f64,
    /// The point itself belongs to the set.
    pub feasible: bool,
}

impl InteriorCertificate {
    pub fn is_interior(&self) -> bool {
        self.feasible && self.delta > 0.0
    }
}

/// Output of [`error_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBoundResult {
    pub x_hat: Vector,
    pub s: Vector,
    /// `sum_j dist(x_hat, X_j)`
    pub epsilon: f64,
    pub bound: f64,
}

impl ConvexSet {
    pub fn new_box(lo: Vector, hi: Vector) -> Result<Self, SetError> {
        let set = ConvexSet::Box { lo, hi };
        set.validate()?;
        Ok(set)
    }

    pub fn new_ball(center: Vector, radius: f64) -> Result<Self, SetError> {
        let set = ConvexSet::Ball { center, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn new_halfspace(normal: Vector, offset: f64) -> Result<Self, SetError> {
        let set = ConvexSet::Halfspace { normal, offset };
        set.validate()?;
        Ok(set)
    }

    pub fn new_hyperplane(normal: Vector, offset: f64) -> Result<Self, SetError> {
        let set = ConvexSet::Hyperplane { normal, offset };
        set.validate()?;
        Ok(set)
    }

    /// Dimension of the ambient space, or `None` for [`ConvexSet::FullSpace`].
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConvexSet::Box { lo, .. } => Some(lo.len()),
            ConvexSet::Ball { center, .. } => Some(center.len()),
            ConvexSet::Halfspace { normal, .. } | ConvexSet::Hyperplane { normal, .. } => {
                Some(normal.len())
            }
            ConvexSet::FullSpace => None,
        }
    }

    pub fn validate(&self) -> Result<(), SetError> {
        let bad = |msg: &str| Err(SetError::InvalidSet(msg.to_string()));
        match self {
            ConvexSet::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return bad("box lo and hi have different lengths");
                }
                if lo.is_empty() {
                    return bad("box has dimension 0");
                }
                if !vector::is_finite(lo) || !vector::is_finite(hi) {
                    return bad("box bounds must be finite");
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return bad("box requires lo <= hi componentwise");
                }
            }
            ConvexSet::Ball { center, radius } => {
                if center.is_empty() {
                    return bad("ball has dimension 0");
                }
                if !vector::is_finite(center) {
                    return bad("ball center must be finite");
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad("ball radius must be positive and finite");
                }
            }
            ConvexSet::Halfspace { normal, offset } | ConvexSet::Hyperplane { normal, offset } => {
                if normal.is_empty() {
                    return bad("normal has dimension 0");
                }
                if !vector::is_finite(normal) || !offset.is_finite() {
                    return bad("normal and offset must be finite");
                }
                if vector::norm_sq(normal) == 0.0 {
                    return bad("normal must be nonzero");
                }
            }
            ConvexSet::FullSpace => {}
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), SetError> {
        match self.dim() {
            Some(expected) if expected != x.len() => Err(SetError::DimensionMismatch {
                expected,
                got: x.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Bounding box `(lo, hi)` when the set is bounded.
    pub fn bounding_box(&self) -> Option<(Vector, Vector)> {
        match self {
            ConvexSet::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            ConvexSet::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            _ => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.bounding_box().is_some()
    }

    /// Exact Euclidean projection onto the set.
    pub fn project(&self, x: &[f64]) -> Result<Vector, SetError> {
        self.check_dim(x)?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &[f64]) -> Vector {
        match self {
            ConvexSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect(),
            ConvexSet::Ball { center, radius } => {
                let r = vector::dist(x, center);
                if r <= *radius {
                    x.to_vec()
                } else {
                    let t = radius / r;
                    center
                        .iter()
                        .zip(x)
                        .map(|(c, v)| c + t * (v - c))
                        .collect()
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                let viol = vector::dot(normal, x) - offset;
                if viol <= 0.0 {
                    x.to_vec()
                } else {
                    vector::axpy(x, -viol / vector::norm_sq(normal), normal)
                }
            }
            ConvexSet::Hyperplane { normal, offset } => {
                let viol = vector::dot(normal, x) - offset;
                vector::axpy(x, -viol / vector::norm_sq(normal), normal)
            }
            ConvexSet::FullSpace => x.to_vec(),
        }
    }

    /// `|x - P(x)|`
    pub fn distance(&self, x: &[f64]) -> Result<f64, SetError> {
        self.check_dim(x)?;
        Ok(self.distance_unchecked(x))
    }

    pub(crate) fn distance_unchecked(&self, x: &[f64]) -> f64 {
        vector::dist(x, &self.project_unchecked(x))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool, SetError> {
        Ok(self.distance(x)? <= tol)
    }

    /// Largest `delta >= 0` such that the closed `delta`-ball around `xbar`
    /// lies in the set. Points on the boundary or outside report `delta = 0`.
    pub fn interior_point_certificate(
        &self,
        xbar: &[f64],
    ) -> Result<InteriorCertificate, SetError> {
        self.check_dim(xbar)?;
        let feasible = self.distance_unchecked(xbar) == 0.0;
        let raw = match self {
            ConvexSet::Box { lo, hi } => xbar
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| (v - l).min(h - v))
                .fold(f64::INFINITY, f64::min),
            ConvexSet::Ball { center, radius } => radius - vector::dist(xbar, center),
            ConvexSet::Halfspace { normal, offset } => {
                (offset - vector::dot(normal, xbar)) / vector::norm(normal)
            }
            ConvexSet::Hyperplane { .. } => 0.0,
            ConvexSet::FullSpace => f64::INFINITY,
        };
        let delta = if feasible { raw.max(0.0) } else { 0.0 };
        Ok(InteriorCertificate { delta, feasible })
    }
}

fn check_sets_dim(sets: &[ConvexSet], x: &[f64]) -> Result<(), SetError> {
    if sets.is_empty() {
        return Err(SetError::EmptySetList);
    }
    sets.iter().try_for_each(|s| s.check_dim(x))
}

/// `(1/2) sum_i |x - P_i(x)|^2`, whose minimizers are the common points of the sets.
pub fn feasibility_objective(sets: &[ConvexSet], x: &[f64]) -> Result<f64, SetError> {
    check_sets_dim(sets, x)?;
    Ok(0.5
        * sets
            .iter()
            .map(|s| vector::dist_sq(x, &s.project_unchecked(x)))
            .sum::<f64>())
}

/// Gradient of [`feasibility_objective`]: `sum_i (x - P_i(x))`.
pub fn feasibility_gradient(sets: &[ConvexSet], x: &[f64]) -> Result<Vector, SetError> {
    check_sets_dim(sets, x)?;
    let mut g = vec![0.0; x.len()];
    for s in sets {
        let p = s.project_unchecked(x);
        for ((gd, xd), pd) in g.iter_mut().zip(x).zip(&p) {
            *gd += xd - pd;
        }
    }
    Ok(g)
}

/// Checks that the closed `delta`-ball around `xbar` lies inside every set.
pub fn validate_witness(sets: &[ConvexSet], xbar: &[f64], delta: f64) -> Result<(), SetError> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(SetError::NonPositiveDelta(delta));
    }
    check_sets_dim(sets, xbar)?;
    for (index, set) in sets.iter().enumerate() {
        let cert = set.interior_point_certificate(xbar)?;
        if !cert.feasible || delta > cert.delta + 1e-12 {
            return Err(SetError::WitnessTooLarge {
                index,
                delta,
                certified: cert.delta,
            });
        }
    }
    Ok(())
}

/// Interior-point error bound relating `dist(x_hat, X)` to the distances of
/// the average `x_hat` from the individual sets.
///
/// `points[i]` must lie in `sets[i]` and the `delta`-ball around `xbar` must
/// lie in every set. Both the feasibility of `s` and the bound itself are
/// asserted before returning.
pub fn error_bound(
    sets: &[ConvexSet],
    points: &[Vector],
    xbar: &[f64],
    delta: f64,
) -> Result<ErrorBoundResult, SetError> {
    if sets.is_empty() {
        return Err(SetError::EmptySetList);
    }
    if points.len() != sets.len() {
        return Err(SetError::PointCount {
            expected: sets.len(),
            got: points.len(),
        });
    }
    validate_witness(sets, xbar, delta)?;
    for (index, (set, p)) in sets.iter().zip(points).enumerate() {
        let distance = set.distance(p)?;
        if distance > FEAS_TOL {
            return Err(SetError::Infeasible { index, distance });
        }
    }

    let m = sets.len() as f64;
    let x_hat = vector::mean(points);
    let epsilon: f64 = sets.iter().map(|s| s.distance_unchecked(&x_hat)).sum();
    let denom = epsilon + delta;
    let s: Vector = xbar
        .iter()
        .zip(&x_hat)
        .map(|(b, h)| (epsilon / denom) * b + (delta / denom) * h)
        .collect();
    let spread: f64 = points.iter().map(|p| vector::dist(p, xbar)).sum();
    let bound = spread * epsilon / (delta * m);

    for (index, set) in sets.iter().enumerate() {
        let d = set.distance_unchecked(&s);
        if d > FEAS_TOL {
            return Err(SetError::BoundViolated(format!(
                "s lies {d:e} outside set {index}"
            )));
        }
    }
    let gap = vector::dist(&x_hat, &s);
    if gap > bound + 1e-12 {
        return Err(SetError::BoundViolated(format!(
            "|x_hat - s| = {gap:e} exceeds bound {bound:e}"
        )));
    }
    Ok(ErrorBoundResult {
        x_hat,
        s,
        epsilon,
        bound,
    })
}

/// Projection onto the intersection of `sets` by Dykstra's cyclic iteration.
///
/// Stops once no intermediate iterate moves by `tol` or more over a full
/// sweep and the intermediate iterates agree to within `tol`. The caller
/// guarantees a nonempty intersection; running out of
/// sweeps usually means it is empty.
pub fn project_intersection(
    sets: &[ConvexSet],
    x: &[f64],
    tol: f64,
) -> Result<Vector, SetError> {
    check_sets_dim(sets, x)?;
    if !(tol > 0.0) {
        return Err(SetError::InvalidSet(format!(
            "Dykstra tolerance must be positive, got {tol}"
        )));
    }
    if sets.iter().all(|s| s.distance_unchecked(x) == 0.0) {
        return Ok(x.to_vec());
    }
    if sets.len() == 1 {
        return Ok(sets[0].project_unchecked(x));
    }

    let n = x.len();
    let mut y = x.to_vec();
    let mut increments = vec![vec![0.0; n]; sets.len()];
    let mut previous: Vec<Vector> = vec![vec![f64::NAN; n]; sets.len()];
    let mut change = f64::INFINITY;
    for _ in 0..DYKSTRA_MAX_SWEEPS {
        change = 0.0_f64;
        for (i, set) in sets.iter().enumerate() {
            let z = vector::add(&y, &increments[i]);
            let next = set.project_unchecked(&z);
            increments[i] = vector::sub(&z, &next);
            let moved = vector::dist(&next, &previous[i]);
            change = if moved.is_nan() { f64::INFINITY } else { change.max(moved) };
            previous[i].clone_from(&next);
            y = next;
        }
        let spread = previous
            .iter()
            .map(|p| vector::dist(p, &y))
            .fold(0.0_f64, f64::max);
        if change < tol && spread < tol {
            return Ok(y);
        }
    }
    Err(SetError::NoConvergence {
        sweeps: DYKSTRA_MAX_SWEEPS,
        change,
    })
}

/// `dist(x, X_1 ∩ ... ∩ X_m)` via [`project_intersection`].
pub fn intersection_distance(sets: &[ConvexSet], x: &[f64], tol: f64) -> Result<f64, SetError> {
    let p = project_intersection(sets, x, tol)?;
    Ok(vector::dist(x, &p))
}
