#![allow(dead_code)]

use cclab::network::{make_schedule, validate_schedule, ScheduleKind, ScheduleSpec, WeightSchedule};
use cclab::vector::{self, Vector};
use cclab::ConvexSet;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn point(rng: &mut TestRng, n: usize, r: f64) -> Vector {
    (0..n).map(|_| rng.random_range(-r..=r)).collect()
}

fn direction(rng: &mut TestRng, n: usize) -> Vector {
    loop {
        let a = point(rng, n, 1.0);
        if vector::norm(&a) > 0.1 {
            return a;
        }
    }
}

/// Any supported set, not necessarily containing a particular point.
pub fn any_set(rng: &mut TestRng, n: usize) -> ConvexSet {
    match rng.random_range(0..5) {
        0 => {
            let a = point(rng, n, 3.0);
            let b = point(rng, n, 3.0);
            let lo = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
            let hi = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
            ConvexSet::new_box(lo, hi).unwrap()
        }
        1 => ConvexSet::new_ball(point(rng, n, 3.0), rng.random_range(0.1..3.0)).unwrap(),
        2 => ConvexSet::new_halfspace(direction(rng, n), rng.random_range(-2.0..2.0)).unwrap(),
        3 => ConvexSet::new_hyperplane(direction(rng, n), rng.random_range(-2.0..2.0)).unwrap(),
        _ => ConvexSet::FullSpace,
    }
}

/// A set containing the closed `delta`-ball around `xbar`.
pub fn set_around(rng: &mut TestRng, xbar: &[f64], delta: f64) -> ConvexSet {
    let n = xbar.len();
    match rng.random_range(0..3) {
        0 => {
            let lo = xbar.iter().map(|x| x - delta - rng.random_range(0.0..2.0)).collect();
            let hi = xbar.iter().map(|x| x + delta + rng.random_range(0.0..2.0)).collect();
            ConvexSet::new_box(lo, hi).unwrap()
        }
        1 => {
            let offset = point(rng, n, 1.0);
            let radius = vector::norm(&offset) + delta + rng.random_range(0.0..1.5);
            ConvexSet::new_ball(vector::add(xbar, &offset), radius).unwrap()
        }
        _ => {
            let a = direction(rng, n);
            let b = vector::dot(&a, xbar) + delta * vector::norm(&a) + rng.random_range(0.0..1.5);
            ConvexSet::new_halfspace(a, b).unwrap()
        }
    }
}

/// A point of the closed `delta`-ball around `xbar`, shrunk slightly.
pub fn point_in_ball(rng: &mut TestRng, xbar: &[f64], delta: f64) -> Vector {
    let u = direction(rng, xbar.len());
    let scale = 0.99 * delta * rng.random_range(0.0..1.0) / vector::norm(&u);
    vector::axpy(xbar, scale, &u)
}

/// Degree-based weights `1/(1 + max degree)` on an undirected edge list.
pub fn metropolis_rows(m: usize, edges: &[[usize; 2]]) -> Vec<Vec<f64>> {
    let mut deg = vec![0usize; m];
    for [a, b] in edges {
        deg[*a] += 1;
        deg[*b] += 1;
    }
    let w = 1.0 / (1.0 + *deg.iter().max().unwrap() as f64);
    let mut rows = vec![vec![0.0; m]; m];
    for [a, b] in edges {
        rows[*a][*b] = w;
        rows[*b][*a] = w;
    }
    for i in 0..m {
        rows[i][i] = 1.0 - rows[i].iter().sum::<f64>();
    }
    rows
}

/// Random spanning tree plus a few extra edges.
pub fn connected_edges(rng: &mut TestRng, m: usize) -> Vec<[usize; 2]> {
    let mut edges = Vec::new();
    for i in 1..m {
        edges.push([rng.random_range(0..i), i]);
    }
    for _ in 0..rng.random_range(0..=m) {
        let a = rng.random_range(0..m);
        let b = rng.random_range(0..m);
        if a != b && !edges.iter().any(|e| (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a)) {
            edges.push([a.min(b), a.max(b)]);
        }
    }
    edges
}

/// Ring edges alternated between two matrices: each slot is disconnected
/// for `m >= 4`, the union over a window of two is connected.
pub fn alternating_ring(m: usize) -> ScheduleSpec {
    let ring: Vec<[usize; 2]> = match m {
        1 => Vec::new(),
        2 => vec![[0, 1]],
        _ => (0..m).map(|i| [i, (i + 1) % m]).collect(),
    };
    let (even, odd): (Vec<_>, Vec<_>) = ring.iter().enumerate().partition(|(idx, _)| idx % 2 == 0);
    let even: Vec<[usize; 2]> = even.into_iter().map(|(_, e)| *e).collect();
    let odd: Vec<[usize; 2]> = odd.into_iter().map(|(_, e)| *e).collect();
    let mut spec = ScheduleSpec::new(ScheduleKind::Scripted);
    spec.matrices = Some(vec![metropolis_rows(m, &even), metropolis_rows(m, &odd)]);
    spec
}

/// A validated doubly stochastic schedule; time-varying unless `m` is tiny.
pub fn random_schedule(rng: &mut TestRng, m: usize, time_varying: bool) -> (ScheduleSpec, WeightSchedule) {
    let choice = if time_varying { rng.random_range(0..2) } else { rng.random_range(0..4) };
    let spec = match (time_varying, choice) {
        (true, 0) | (false, 2) => ScheduleSpec::new(ScheduleKind::GossipRotation),
        (true, _) | (false, 3) => alternating_ring(m),
        (false, 0) => ScheduleSpec::new(ScheduleKind::Uniform),
        (false, _) => {
            let mut spec = ScheduleSpec::new(ScheduleKind::Metropolis);
            spec.edges = Some(connected_edges(rng, m));
            spec
        }
    };
    let schedule = make_schedule(&spec, m).unwrap();
    let report = validate_schedule(&schedule, 1000);
    assert!(report.passes_doubly_stochastic(), "{spec:?}: {report:?}");
    (spec, schedule)
}
