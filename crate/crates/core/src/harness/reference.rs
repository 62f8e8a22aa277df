//! Centralized reference solutions used to judge optimize runs. None of
//! these reuse the distributed iteration.

use serde::Serialize;

use crate::convex_sets::{self, ConvexSet};
use crate::subgradient_opt::{total_objective, ConvexFunction};
use crate::vector::{self, Vector};

use super::scenario::{Scenario, ScenarioKind};
use super::HarnessError;

/// Grid refinement stops once cells are this narrow.
pub const GRID_CELL_TOL: f64 = 1e-6;
pub const GRID_MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMethod {
    Analytic,
    GridRefine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSolution {
    pub x_star: Vector,
    pub f_star: f64,
    pub method: ReferenceMethod,
    /// Refinement passes (grid route only).
    pub passes: usize,
}

pub fn solve_reference(scenario: &Scenario) -> Result<ReferenceSolution, HarnessError> {
    if scenario.kind != ScenarioKind::Optimize {
        return Err(HarnessError::NoReference("not an optimize scenario".into()));
    }
    let fs = scenario.functions.as_deref().unwrap_or(&[]);
    if let Some(sol) = analytic(fs, &scenario.sets, scenario.dykstra_tol)? {
        return Ok(sol);
    }
    if scenario.n <= GRID_MAX_DIM {
        return grid_refine(fs, &scenario.sets, scenario.dykstra_tol);
    }
    Err(HarnessError::NoReference(format!(
        "dimension {} is too large for the grid oracle and the objective has no closed form",
        scenario.n
    )))
}

/// Sums of quadratics whose matrices add up to `q I` with `q > 0`:
/// `sum_i f_i(x) = q |x + b/(2q)|^2 + const`, minimized over `X` by projection.
pub fn analytic(
    fs: &[ConvexFunction],
    sets: &[ConvexSet],
    tol: f64,
) -> Result<Option<ReferenceSolution>, HarnessError> {
    let Some(n) = fs.first().map(ConvexFunction::dim) else {
        return Ok(None);
    };
    let mut q_sum = vec![vec![0.0; n]; n];
    let mut b_sum = vec![0.0; n];
    for f in fs {
        let ConvexFunction::Quadratic { q, b, .. } = f else {
            return Ok(None);
        };
        for r in 0..n {
            for c in 0..n {
                q_sum[r][c] += q[r][c];
            }
            b_sum[r] += b[r];
        }
    }
    let scale = q_sum[0][0];
    let is_scaled_identity = scale > 0.0
        && (0..n).all(|r| {
            (0..n).all(|c| {
                let target = if r == c { scale } else { 0.0 };
                (q_sum[r][c] - target).abs() <= 1e-12 * scale
            })
        });
    if !is_scaled_identity {
        return Ok(None);
    }
    let unconstrained = vector::scale(&b_sum, -0.5 / scale);
    let x_star = convex_sets::project_intersection(sets, &unconstrained, tol)?;
    Ok(Some(ReferenceSolution {
        f_star: total_objective(fs, &x_star),
        x_star,
        method: ReferenceMethod::Analytic,
        passes: 0,
    }))
}

fn intersect_boxes(sets: &[ConvexSet], n: usize) -> Option<(Vector, Vector)> {
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut hi = vec![f64::INFINITY; n];
    for set in sets {
        if let Some((l, h)) = set.bounding_box() {
            for d in 0..n {
                lo[d] = lo[d].max(l[d]);
                hi[d] = hi[d].min(h[d]);
            }
        }
    }
    (vector::is_finite(&lo) && vector::is_finite(&hi)).then_some((lo, hi))
}

/// Exhaustive grid over the bounding box of `X`, each node pulled into `X`
/// by the intersection oracle, then repeated zooms around the best node.
pub fn grid_refine(
    fs: &[ConvexFunction],
    sets: &[ConvexSet],
    tol: f64,
) -> Result<ReferenceSolution, HarnessError> {
    let n = fs
        .first()
        .map(ConvexFunction::dim)
        .ok_or_else(|| HarnessError::NoReference("no functions".into()))?;
    if n == 0 || n > GRID_MAX_DIM {
        return Err(HarnessError::NoReference(format!("grid oracle needs 1 <= n <= {GRID_MAX_DIM}")));
    }
    let (mut lo, mut hi) = intersect_boxes(sets, n)
        .ok_or_else(|| HarnessError::NoReference("feasible set is unbounded".into()))?;
    let nodes_per_axis: usize = match n {
        1 => 201,
        2 => 41,
        _ => 17,
    };

    let mut best: Option<(f64, Vector, Vector)> = None;
    let mut passes = 0;
    loop {
        passes += 1;
        let width: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) / (nodes_per_axis - 1) as f64)
            .collect();
        let total = nodes_per_axis.pow(n as u32);
        for idx in 0..total {
            let mut rest = idx;
            let node: Vector = (0..n)
                .map(|d| {
                    let step = rest % nodes_per_axis;
                    rest /= nodes_per_axis;
                    lo[d] + width[d] * step as f64
                })
                .collect();
            let x = convex_sets::project_intersection(sets, &node, tol)?;
            let value = total_objective(fs, &x);
            if best.as_ref().is_none_or(|(v, _, _)| value < *v) {
                best = Some((value, x, node));
            }
        }
        let (_, _, centre) = best.as_ref().expect("grid has nodes");
        if width.iter().all(|w| *w <= GRID_CELL_TOL) {
            break;
        }
        for d in 0..n {
            lo[d] = centre[d] - 2.0 * width[d];
            hi[d] = centre[d] + 2.0 * width[d];
        }
    }
    let (f_star, x_star, _) = best.expect("grid has nodes");
    Ok(ReferenceSolution {
        x_star,
        f_star,
        method: ReferenceMethod::GridRefine,
        passes,
    })
}
