mod common;

use cclab::consensus::{self, ConsensusOptions};
use cclab::convex_sets::{self, ConvexSet, FEAS_TOL};
use cclab::harness::{InitialPoints, Scenario, ScenarioKind, Witness};
use cclab::network::{make_schedule, ScheduleKind, ScheduleSpec};
use cclab::subgradient_opt::{
    self, AffinePiece, ConvexFunction, OptProblem, Regime, StepsizeSchedule,
};
use cclab::vector::{self, Vector};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn vec_n(n: usize, r: f64) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-r..r, n)
}

fn set_strategy(n: usize) -> impl Strategy<Value = ConvexSet> {
    let nonzero = || vec_n(n, 2.0).prop_filter("nonzero normal", |a| vector::norm(a) > 1e-3);
    prop_oneof![
        (vec_n(n, 3.0), vec_n(n, 3.0)).prop_map(|(a, b)| {
            let lo = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
            let hi = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
            ConvexSet::new_box(lo, hi).unwrap()
        }),
        (vec_n(n, 3.0), 0.01..4.0).prop_map(|(c, r)| ConvexSet::new_ball(c, r).unwrap()),
        (nonzero(), -3.0..3.0).prop_map(|(a, b)| ConvexSet::new_halfspace(a, b).unwrap()),
        (nonzero(), -3.0..3.0).prop_map(|(a, b)| ConvexSet::new_hyperplane(a, b).unwrap()),
        Just(ConvexSet::FullSpace),
    ]
}

fn function_strategy(n: usize) -> impl Strategy<Value = ConvexFunction> {
    let psd = prop::collection::vec(vec_n(n, 2.0), n).prop_map(move |rows| {
        // B'B is symmetric positive semidefinite.
        (0..n)
            .map(|r| (0..n).map(|c| (0..n).map(|t| rows[t][r] * rows[t][c]).sum()).collect())
            .collect::<Vec<Vec<f64>>>()
    });
    prop_oneof![
        (psd, vec_n(n, 3.0), -2.0..2.0)
            .prop_map(|(q, b, c)| ConvexFunction::Quadratic { q, b, c }),
        vec_n(n, 3.0).prop_map(|center| ConvexFunction::NormDist { center }),
        vec_n(n, 3.0).prop_map(|center| ConvexFunction::AbsDev { center }),
        prop::collection::vec((vec_n(n, 3.0), -2.0..2.0), 1..5).prop_map(|rows| {
            ConvexFunction::MaxAffine {
                rows: rows.into_iter().map(|(a, b)| AffinePiece { a, b }).collect(),
            }
        }),
    ]
}

fn dim_and<T: std::fmt::Debug, S: Strategy<Value = T>>(
    f: impl Fn(usize) -> S + Clone,
) -> impl Strategy<Value = (usize, T, Vector, Vector)> {
    (1usize..=3).prop_flat_map(move |n| (Just(n), f(n), vec_n(n, 6.0), vec_n(n, 6.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn projection_is_feasible_and_idempotent((_n, set, x, _y) in dim_and(set_strategy)) {
        let p = set.project(&x).unwrap();
        prop_assert!(set.distance(&p).unwrap() <= 1e-12);
        let pp = set.project(&p).unwrap();
        prop_assert!(vector::dist(&p, &pp) <= 1e-12);
        let d = set.distance(&x).unwrap();
        prop_assert!((d - vector::dist(&x, &p)).abs() <= 1e-12);
    }

    #[test]
    fn projection_is_nearest_among_samples((_n, set, x, y) in dim_and(set_strategy)) {
        let p = set.project(&x).unwrap();
        let z = set.project(&y).unwrap();
        prop_assert!(vector::dist(&x, &p) <= vector::dist(&x, &z) + 1e-12);
        prop_assert!(vector::dist(&p, &z) <= vector::dist(&x, &y) + 1e-12);
    }

    #[test]
    fn subgradient_inequality((_n, f, x, _) in dim_and(function_strategy), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let g = f.subgradient(&x).unwrap();
        let fx = f.evaluate(&x).unwrap();
        for _ in 0..100 {
            let y = point(&mut rng, x.len(), 6.0);
            let lhs = fx + vector::dot(&g, &vector::sub(&y, &x));
            let rhs = f.evaluate(&y).unwrap();
            prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()), "lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn quadratic_gradient_matches_finite_differences(
        (_n, f, x, _) in dim_and(|n| function_strategy(n).prop_filter("quadratic", |f| matches!(f, ConvexFunction::Quadratic { .. })))
    ) {
        let g = f.subgradient(&x).unwrap();
        let h = 1e-5;
        for d in 0..x.len() {
            let mut up = x.clone();
            let mut down = x.clone();
            up[d] += h;
            down[d] -= h;
            let fd = (f.evaluate(&up).unwrap() - f.evaluate(&down).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[d]).abs() <= 1e-6 * (1.0 + g[d].abs()), "fd {fd} g {}", g[d]);
        }
    }

    #[test]
    fn subgradient_bound_is_sound(
        (n, f, x, _) in dim_and(function_strategy),
        radius in 0.1..5.0f64,
    ) {
        let ball = ConvexSet::new_ball(vec![0.0; n], radius).unwrap();
        let l = subgradient_opt::subgradient_bound(&f, &ball).unwrap();
        let p = ball.project(&x).unwrap();
        prop_assert!(vector::norm(&f.subgradient(&p).unwrap()) <= l + 1e-9);
    }

    #[test]
    fn scenario_round_trip(seed in any::<u64>(), m in 1usize..5, n in 1usize..4, horizon in 1usize..500) {
        let mut rng = rng(seed);
        let xbar = point(&mut rng, n, 1.0);
        let sets: Vec<_> = (0..m).map(|_| set_around(&mut rng, &xbar, 0.2)).collect();
        let optimize = rng.random_bool(0.5);
        let scenario = Scenario {
            kind: if optimize { ScenarioKind::Optimize } else { ScenarioKind::Consensus },
            m,
            n,
            initial: InitialPoints::Explicit(sets.iter().map(|s| s.project(&point(&mut rng, n, 3.0)).unwrap()).collect()),
            sets,
            functions: optimize.then(|| (0..m).map(|i| ConvexFunction::NormDist { center: vec![i as f64 * 0.1; n] }).collect()),
            schedule: ScheduleSpec::new(ScheduleKind::Uniform),
            stepsize: optimize.then_some(StepsizeSchedule::Harmonic { a: 0.5, k0: 2 }),
            horizon,
            tol: 1e-9,
            dykstra_tol: 1e-12,
            witness: Some(Witness { xbar, delta: 0.2 }),
            regime: optimize.then_some(Regime::Unsupported),
            allow_empty_intersection: false,
            seed,
        };
        scenario.validate().unwrap();
        let back = Scenario::from_json(&scenario.to_json()).unwrap();
        prop_assert_eq!(back, scenario);
    }
}

#[test]
fn consensus_invariants_on_random_runs() {
    let mut rng = rng(21);
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(2..=5);
        let xbar = point(&mut rng, n, 2.0);
        let sets: Vec<_> = (0..m).map(|_| set_around(&mut rng, &xbar, 0.3)).collect();
        let initial: Vec<Vector> = sets.iter().map(|s| s.project(&point(&mut rng, n, 5.0)).unwrap()).collect();
        let time_varying = rng.random_bool(0.5);
        let (_, schedule) = random_schedule(&mut rng, m, time_varying);
        let trace = consensus::run_consensus(&sets, &schedule, initial, &ConsensusOptions::default()).unwrap();
        assert!(trace.status.converged());
        for (k, step) in trace.steps.iter().enumerate() {
            for i in 0..m {
                assert_eq!(trace.states[k + 1][i], vector::add(&step.w[i], &step.e[i]));
                assert!(sets[i].contains(&trace.states[k + 1][i], FEAS_TOL).unwrap());
            }
        }
        assert!(trace.average_drift_residual() <= 1e-12);
        if let Some(last) = trace.steps.last() {
            assert!(last.e.iter().all(|e| vector::norm(e) <= 1e-10));
        }
        let dev = trace.max_deviation_from_average(trace.states.len() - 1);
        assert!(dev <= 1e-10, "dev {dev} disagreement {} {:?}", trace.final_disagreement(), trace.status);
        // The feasibility objective sum_i dist(x, X_i)^2 / 2 vanishes at the limit.
        let g = convex_sets::feasibility_objective(&sets, &trace.limit).unwrap();
        assert!(g <= 1e-18);
    }
}

#[test]
fn basic_relation_on_random_identical_set_runs() {
    let mut rng = rng(22);
    let mut violations = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=2);
        let m = rng.random_range(2..=4);
        let xbar = point(&mut rng, n, 1.0);
        let set = set_around(&mut rng, &xbar, 0.3);
        let set = if set.is_bounded() {
            set
        } else {
            ConvexSet::new_ball(xbar.clone(), 1.0).unwrap()
        };
        let functions: Vec<_> = (0..m)
            .map(|_| ConvexFunction::squared_dist(&point(&mut rng, n, 3.0)))
            .collect();
        let initial = (0..m).map(|_| set.project(&point(&mut rng, n, 3.0)).unwrap()).collect();
        let (_, schedule) = random_schedule(&mut rng, m, true);
        let problem = OptProblem {
            sets: vec![set.clone(); m],
            functions,
            schedule,
            stepsize: StepsizeSchedule::Harmonic { a: 0.5, k0: 1 },
            initial,
            horizon: 300,
            regime: Regime::IdenticalSets,
            witness: None,
            f_star: None,
        };
        let trace = subgradient_opt::run_subgradient(&problem).unwrap();
        let l = subgradient_opt::agent_bounds(&trace.functions, &trace.sets, trace.regime)
            .unwrap()
            .into_iter()
            .fold(0.0, f64::max);
        assert!(subgradient_opt::phi_bound_check(&trace, l).unwrap().passes());
        for _ in 0..3 {
            let z = point_in_ball(&mut rng, &xbar, 0.3);
            let report = subgradient_opt::basic_relation_check(&trace, &z).unwrap();
            violations += report.violations.len() + usize::from(!report.passes());
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn zero_stepsize_run_equals_consensus_run() {
    let sets = vec![
        ConvexSet::new_ball(vec![0.0, 0.0], 1.0).unwrap(),
        ConvexSet::new_box(vec![-0.2, -1.0], vec![2.0, 0.4]).unwrap(),
        ConvexSet::new_halfspace(vec![1.0, 1.0], 0.6).unwrap(),
    ];
    let schedule = make_schedule(&ScheduleSpec::new(ScheduleKind::GossipRotation), 3).unwrap();
    let initial = vec![vec![0.6, 0.6], vec![1.5, -0.8], vec![-3.0, 0.5]];
    let problem = OptProblem {
        sets: sets.clone(),
        functions: vec![ConvexFunction::squared_dist(&[5.0, 5.0]); 3],
        schedule: schedule.clone(),
        stepsize: StepsizeSchedule::Scripted { values: vec![1e-300] },
        initial: initial.clone(),
        horizon: 40,
        regime: Regime::Unsupported,
        witness: None,
        f_star: None,
    };
    let opt = subgradient_opt::run_subgradient(&problem).unwrap();
    let opts = ConsensusOptions {
        tol: 1e-300,
        horizon: 40,
        ..ConsensusOptions::default()
    };
    let cons = consensus::run_consensus(&sets, &schedule, initial, &opts).unwrap();
    for (a, b) in opt.states.iter().zip(&cons.states) {
        for (x, y) in a.iter().zip(b) {
            assert!(vector::dist(x, y) <= 1e-250);
        }
    }
}
