//! Acceptance suite: one pass/fail line per criterion, tolerances and time
//! budgets pinned below. Exits nonzero if any criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cclab::consensus::{self, ConsensusOptions};
use cclab::convex_sets::{self, ConvexSet, FEAS_TOL};
use cclab::harness::{self, Outcome, Scenario};
use cclab::network::{check_ergodicity, ergodicity_bound, make_schedule, ScheduleKind, ScheduleSpec, WeightSchedule};
use cclab::subgradient_opt::{self, OptTrace};
use cclab::vector::{self, Vector};
use common::*;
use rand::Rng;

const PROJ_SLACK: f64 = 1e-12;
const PROJ_INSTANCES: usize = 10_000;
const ERR_BOUND_SLACK: f64 = 1e-12;
const ERR_BOUND_INSTANCES: usize = 1_000;
const ERGODICITY_HORIZON: usize = 100;
const LYAPUNOV_SLACK: f64 = 1e-10;
const LYAPUNOV_SCENARIOS: usize = 200;
const CONSENSUS_DISAGREEMENT: f64 = 1e-6;
const CONSENSUS_DIST: f64 = 1e-9;
const CONSENSUS_HORIZON: usize = 100_000;
const RATE_SCENARIOS: usize = 100;
const BASIC_SLACK: f64 = 1e-9;
const OPT_GAP: f64 = 1e-3;
const OPT_TAIL: f64 = 1e-4;
const OPT_AGENT_TOL: f64 = 1e-3;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str) -> Scenario {
    harness::load_scenario(&scenario_dir().join(name)).expect("scenario loads")
}

fn projection_axioms() -> Verdict {
    let mut rng = rng(1);
    let mut worst = [f64::NEG_INFINITY; 4];
    for _ in 0..PROJ_INSTANCES {
        let n = rng.random_range(1..=3);
        let set = any_set(&mut rng, n);
        let x = point(&mut rng, n, 5.0);
        let x2 = point(&mut rng, n, 5.0);
        let y = set.project(&point(&mut rng, n, 5.0)).unwrap();
        let px = set.project(&x).unwrap();
        let px2 = set.project(&x2).unwrap();
        let r = vector::sub(&px, &x);
        // (P[x]-x)'(y-P[x]) >= 0
        worst[0] = worst[0].max(-vector::dot(&r, &vector::sub(&y, &px)));
        // |P[x]-P[x2]| <= |x-x2|
        worst[1] = worst[1].max(vector::dist(&px, &px2) - vector::dist(&x, &x2));
        // (P[x]-x)'(x-y) <= -|P[x]-x|^2
        worst[2] = worst[2].max(vector::dot(&r, &vector::sub(&x, &y)) + vector::norm_sq(&r));
        // |P[x]-y|^2 <= |x-y|^2 - |P[x]-x|^2
        worst[3] = worst[3].max(vector::dist_sq(&px, &y) - vector::dist_sq(&x, &y) + vector::norm_sq(&r));
    }
    verdict(
        worst.iter().all(|w| *w <= PROJ_SLACK),
        format!("{PROJ_INSTANCES} instances, worst excess {:.2e} {:.2e} {:.2e} {:.2e}", worst[0], worst[1], worst[2], worst[3]),
    )
}

fn error_bound() -> Verdict {
    let sets = [
        ConvexSet::new_box(vec![-1.0], vec![1.0]).unwrap(),
        ConvexSet::new_box(vec![0.0], vec![2.0]).unwrap(),
    ];
    let worked = convex_sets::error_bound(&sets, &[vec![1.0], vec![2.0]], &[0.5], 0.5).unwrap();
    let worked_ok =
        worked.x_hat == vec![1.5] && worked.epsilon == 0.5 && worked.s == vec![1.0] && worked.bound == 1.0;

    let mut rng = rng(2);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_infeasible = 0.0_f64;
    let mut nontrivial = 0;
    for _ in 0..ERR_BOUND_INSTANCES {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(2..=5);
        let xbar = point(&mut rng, n, 2.0);
        let delta = rng.random_range(0.05..1.0);
        let sets: Vec<_> = (0..m).map(|_| set_around(&mut rng, &xbar, delta)).collect();
        let points: Vec<Vector> = sets
            .iter()
            .map(|s| s.project(&point(&mut rng, n, 6.0)).unwrap())
            .collect();
        let res = match convex_sets::error_bound(&sets, &points, &xbar, delta) {
            Ok(r) => r,
            Err(e) => return verdict(false, format!("error_bound refused a valid instance: {e}")),
        };
        // Independent recomputation of the bound.
        let x_hat = vector::mean(&points);
        let eps: f64 = sets.iter().map(|s| s.distance(&x_hat).unwrap()).sum();
        let spread: f64 = points.iter().map(|p| vector::dist(p, &xbar)).sum();
        let bound = spread * eps / (delta * m as f64);
        nontrivial += usize::from(eps > 0.0);
        for s in &sets {
            worst_infeasible = worst_infeasible.max(s.distance(&res.s).unwrap());
        }
        worst_gap = worst_gap.max(vector::dist(&x_hat, &res.s) - bound);
    }
    verdict(
        worked_ok && worst_infeasible <= FEAS_TOL && worst_gap <= ERR_BOUND_SLACK && nontrivial > 0,
        format!(
            "worked example {}, {ERR_BOUND_INSTANCES} instances ({nontrivial} with eps > 0), max infeasibility {worst_infeasible:.2e}, worst excess {worst_gap:.2e}",
            if worked_ok { "exact" } else { "MISMATCH" }
        ),
    )
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    (0..m)
        .map(|r| (0..m).map(|c| (0..m).map(|t| a[r][t] * b[t][c]).sum()).collect())
        .collect()
}

/// Direct product oracle against the closed-form bound, every `(s, k)`.
fn ergodicity_oracle(schedule: &WeightSchedule, horizon: usize) -> (usize, f64) {
    let m = schedule.m();
    let eta = schedule.eta();
    let b = schedule.window();
    let b0 = ((m - 1) * b) as f64;
    let lam = 1.0 - eta.powf(b0);
    let c = 2.0 * (1.0 + eta.powf(-b0)) / lam;
    let mut violations = 0;
    let mut worst = 0.0_f64;
    for s in 0..=horizon {
        let mut phi = schedule.matrix(s).to_rows();
        for k in s..=horizon {
            if k > s {
                phi = matmul(&phi, &schedule.matrix(k).to_rows());
            }
            let bound = c * lam.powf((k - s) as f64 / b0);
            let dev = phi
                .iter()
                .flatten()
                .map(|v| (v - 1.0 / m as f64).abs())
                .fold(0.0, f64::max);
            worst = worst.max(dev / bound);
            if dev > bound {
                violations += 1;
            }
        }
    }
    (violations, worst)
}

fn ergodicity() -> Verdict {
    let spot = ergodicity_bound(0.5, 1, 2, 0).unwrap();
    let mut ok = spot == 12.0;
    let mut details = vec![format!("bound(0.5,1,2,0) = {spot}")];
    for m in [2usize, 3, 5] {
        let mut metro = ScheduleSpec::new(ScheduleKind::Metropolis);
        metro.edges = Some((0..m - 1).map(|i| [i, i + 1]).collect());
        for (name, spec) in [("gossip", ScheduleSpec::new(ScheduleKind::GossipRotation)), ("metropolis", metro)] {
            let schedule = make_schedule(&spec, m).unwrap();
            let report = check_ergodicity(&schedule, ERGODICITY_HORIZON);
            let (oracle_violations, oracle_worst) = ergodicity_oracle(&schedule, ERGODICITY_HORIZON);
            let expected_pairs = (ERGODICITY_HORIZON + 1) * (ERGODICITY_HORIZON + 2) / 2;
            ok &= report.passes()
                && report.bound_applicable
                && report.pairs_checked == expected_pairs
                && oracle_violations == 0;
            details.push(format!("{name} m={m} worst ratio {oracle_worst:.2e}"));
        }
    }
    verdict(ok, details.join(", "))
}

struct RandomConsensus {
    sets: Vec<ConvexSet>,
    schedule: WeightSchedule,
    initial: Vec<Vector>,
    xbar: Vector,
    delta: f64,
}

fn random_consensus(rng: &mut TestRng, time_varying: bool, uniform: bool) -> RandomConsensus {
    let n = rng.random_range(1..=3);
    let m = rng.random_range(2..=5);
    let xbar = point(rng, n, 2.0);
    let delta = rng.random_range(0.05..0.8);
    let sets: Vec<_> = (0..m).map(|_| set_around(rng, &xbar, delta)).collect();
    let initial = sets
        .iter()
        .map(|s| s.project(&point(rng, n, 5.0)).unwrap())
        .collect();
    let schedule = if uniform {
        make_schedule(&ScheduleSpec::new(ScheduleKind::Uniform), m).unwrap()
    } else {
        random_schedule(rng, m, time_varying).1
    };
    RandomConsensus {
        sets,
        schedule,
        initial,
        xbar,
        delta,
    }
}

fn lyapunov_suite() -> Verdict {
    let mut rng = rng(4);
    let mut failures = 0;
    let mut probes_checked = 0;
    for _ in 0..LYAPUNOV_SCENARIOS {
        let sc = random_consensus(&mut rng, false, false);
        let opts = ConsensusOptions {
            horizon: 5_000,
            ..ConsensusOptions::default()
        };
        let trace = consensus::run_consensus(&sc.sets, &sc.schedule, sc.initial.clone(), &opts).unwrap();
        let probes = [
            sc.xbar.clone(),
            point_in_ball(&mut rng, &sc.xbar, sc.delta),
            point_in_ball(&mut rng, &sc.xbar, sc.delta),
        ];
        for z in &probes {
            probes_checked += 1;
            // Recomputed here rather than trusting the library report.
            let xs: Vec<f64> = trace.states.iter().map(|s| s.iter().map(|x| vector::dist_sq(x, z)).sum()).collect();
            let ws: Vec<f64> = trace.steps.iter().map(|s| s.w.iter().map(|w| vector::dist_sq(w, z)).sum()).collect();
            let cum: f64 = trace.steps.iter().flat_map(|s| s.e.iter().map(|e| vector::norm_sq(e))).sum();
            let ok = xs.windows(2).all(|p| p[1] <= p[0] + LYAPUNOV_SLACK)
                && ws.windows(2).all(|p| p[1] <= p[0] + LYAPUNOV_SLACK)
                && cum <= xs[0] + LYAPUNOV_SLACK
                && consensus::lyapunov_check(&trace, z).unwrap().passes();
            if !ok {
                failures += 1;
            }
        }
    }
    verdict(
        failures == 0,
        format!("{LYAPUNOV_SCENARIOS} scenarios, {probes_checked} probes, {failures} failures"),
    )
}

fn consensus_suite() -> Verdict {
    let mut rng = rng(5);
    let mut worst_dis = 0.0_f64;
    let mut worst_dist = 0.0_f64;
    let mut worst_rounds = 0;
    let mut unconverged = 0;
    let mut scenarios = 0;
    for name in ["gossip_2d.json", "metropolis_3d.json"] {
        let scenario = load(name);
        let Outcome::Consensus(trace) = harness::execute(&scenario).unwrap() else {
            unreachable!()
        };
        scenarios += 1;
        unconverged += usize::from(!trace.status.converged());
        worst_dis = worst_dis.max(trace.final_disagreement());
        worst_dist = worst_dist.max(trace.limit_distance.unwrap());
        worst_rounds = worst_rounds.max(trace.rounds());
    }
    for _ in 0..40 {
        let sc = random_consensus(&mut rng, true, false);
        let opts = ConsensusOptions {
            horizon: CONSENSUS_HORIZON,
            ..ConsensusOptions::default()
        };
        let trace = consensus::run_consensus(&sc.sets, &sc.schedule, sc.initial, &opts).unwrap();
        scenarios += 1;
        unconverged += usize::from(!trace.status.converged());
        worst_dis = worst_dis.max(trace.final_disagreement());
        worst_dist = worst_dist.max(trace.limit_distance.unwrap());
        worst_rounds = worst_rounds.max(trace.rounds());
    }
    verdict(
        unconverged == 0 && worst_dis <= CONSENSUS_DISAGREEMENT && worst_dist <= CONSENSUS_DIST,
        format!(
            "{scenarios} scenarios, max rounds {worst_rounds}, disagreement {worst_dis:.2e}, dist(limit, X) {worst_dist:.2e}"
        ),
    )
}

/// Rate inequality recomputed from the trace with `q` from the witness.
fn rate_holds(trace: &consensus::ConsensusTrace, xbar: &[f64], delta: f64) -> (bool, f64) {
    let r: f64 = trace.states[0].iter().map(|x| vector::dist(x, xbar)).sum::<f64>() / delta;
    let q = (1.0 - 1.0 / (4.0 * r * r)).max(0.0);
    let limit = vector::mean(trace.states.last().unwrap());
    let lhs: Vec<f64> = trace.states.iter().map(|s| s.iter().map(|x| vector::dist_sq(x, &limit)).sum()).collect();
    let ok = lhs.iter().enumerate().all(|(k, l)| *l <= q.powi(k as i32) * lhs[0]);
    let library = consensus::rate_certificate(trace, xbar, delta).unwrap();
    (ok && library.passes() && library.q == 1.0 - 1.0 / (4.0 * r * r), r)
}

fn rate_suite() -> Verdict {
    let worked = load("rate_1d.json");
    let Outcome::Consensus(trace) = harness::execute(&worked).unwrap() else {
        unreachable!()
    };
    let w = worked.witness.as_ref().unwrap();
    let report = consensus::rate_certificate(&trace, &w.xbar, w.delta).unwrap();
    let worked_ok = report.r == 6.0 && report.q == 1.0 - 1.0 / 144.0 && report.passes();

    let mut rng = rng(6);
    let mut failures = 0;
    for _ in 0..RATE_SCENARIOS {
        let sc = random_consensus(&mut rng, false, true);
        let trace =
            consensus::run_consensus(&sc.sets, &sc.schedule, sc.initial, &ConsensusOptions::default()).unwrap();
        if !trace.status.converged() || !rate_holds(&trace, &sc.xbar, sc.delta).0 {
            failures += 1;
        }
    }
    verdict(
        worked_ok && failures == 0,
        format!(
            "worked R = {}, q = {}, {RATE_SCENARIOS} random scenarios, {failures} failures",
            report.r, report.q
        ),
    )
}

fn opt_trace(name: &str) -> (Scenario, OptTrace, harness::ReferenceSolution) {
    let scenario = load(name);
    let Outcome::Optimize { trace, reference } = harness::execute(&scenario).unwrap() else {
        unreachable!()
    };
    (scenario, trace, reference.expect("reference available"))
}

/// Basic iterate relation recomputed from the recorded quantities.
fn basic_relation_excess(trace: &OptTrace, z: &[f64]) -> f64 {
    let sq = |pts: &[Vector]| -> f64 { pts.iter().map(|p| vector::dist_sq(p, z)).sum() };
    let mut worst = f64::NEG_INFINITY;
    for (k, step) in trace.steps.iter().enumerate() {
        let a = step.alpha;
        let d2: f64 = step.d.iter().map(|d| vector::norm_sq(d)).sum();
        let p2: f64 = step.phi.iter().map(|p| vector::norm_sq(p)).sum();
        let gap: f64 = trace
            .functions
            .iter()
            .zip(&step.v)
            .map(|(f, v)| f.evaluate(v).unwrap() - f.evaluate(z).unwrap())
            .sum();
        let rhs = sq(&trace.states[k]) + a * a * d2 - 2.0 * a * gap - p2;
        worst = worst.max(sq(&trace.states[k + 1]) - rhs);
    }
    worst
}

fn basic_relation() -> Verdict {
    let mut ok = true;
    let mut details = Vec::new();
    for (name, probes) in [
        ("regime_a.json", [[0.0], [-5.0], [2.5]]),
        ("regime_b.json", [[1.0], [0.1], [1.9]]),
    ] {
        let (_, trace, _) = opt_trace(name);
        let mut worst = f64::NEG_INFINITY;
        for z in &probes {
            let excess = basic_relation_excess(&trace, z);
            worst = worst.max(excess);
            ok &= excess <= BASIC_SLACK && subgradient_opt::basic_relation_check(&trace, z).unwrap().passes();
        }
        details.push(format!("{name} {} rounds, worst excess {worst:.2e}", trace.steps.len()));
    }
    verdict(ok, details.join(", "))
}

fn regime_a() -> Verdict {
    let (_, trace, reference) = opt_trace("regime_a.json");
    let f_hat: f64 = trace.functions.iter().map(|f| f.evaluate(&trace.x_hat).unwrap()).sum();
    let gap = f_hat - 2.0;
    // L = 2 |Q| max|x| + |b| = 2 * 5 + 2 over [-5, 5]
    let l = 12.0;
    let phi_ok = trace
        .steps
        .iter()
        .all(|s| s.phi.iter().all(|p| vector::norm(p) <= s.alpha * l + 1e-12));
    let deviations = trace.deviations();
    let tail_start = deviations.len() - deviations.len() / 10;
    let tail = deviations[tail_start..].iter().copied().fold(0.0, f64::max);
    verdict(
        reference.f_star == 2.0 && gap.abs() <= OPT_GAP && phi_ok && tail <= OPT_TAIL,
        format!(
            "{} rounds, gap {gap:.2e}, phi bound {}, tail deviation {tail:.2e}",
            trace.steps.len(),
            if phi_ok { "holds" } else { "VIOLATED" }
        ),
    )
}

fn regime_b() -> Verdict {
    let (scenario, trace, reference) = opt_trace("regime_b.json");
    let grid = harness::grid_refine(scenario.functions.as_ref().unwrap(), &scenario.sets, 1e-12).unwrap();
    let last = trace.states.last().unwrap();
    let agent_err = last.iter().map(|x| (x[0] - 1.0).abs()).fold(0.0, f64::max);
    let gap = trace.f_hat - reference.f_star;
    verdict(
        reference.f_star == 8.0 && (grid.f_star - 8.0).abs() <= 1e-5 && agent_err <= OPT_AGENT_TOL && gap.abs() <= OPT_GAP,
        format!("{} rounds, max |x^i - 1| {agent_err:.2e}, gap {gap:.2e}", trace.steps.len()),
    )
}

fn run_cli(scenario: &Path, out: &Path, threads: &str) -> bool {
    Command::new(env!("CARGO_BIN_EXE_cclab"))
        .args(["run", "--scenario"])
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .args(["--seed", "3"])
        .env("CCLAB_THREADS", threads)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut files = 0;
    for name in ["gossip_2d.json", "metropolis_3d.json", "regime_b.json"] {
        let path = scenario_dir().join(name);
        let mut outputs = Vec::new();
        for (run, threads) in ["1", "8", "1", "8"].iter().enumerate() {
            let dir = tmp.path().join(format!("{name}-{run}"));
            ok &= run_cli(&path, &dir, threads);
            outputs.push(dir);
        }
        for file in ["trace.csv", "summary.csv", "run.json"] {
            let reference = std::fs::read(outputs[0].join(file)).unwrap_or_default();
            ok &= !reference.is_empty();
            for other in &outputs[1..] {
                ok &= std::fs::read(other.join(file)).unwrap_or_default() == reference;
            }
            files += 1;
        }
    }
    verdict(ok, format!("{files} files compared across 1 and 8 threads, 4 runs each"))
}

fn main() {
    type Criterion = (&'static str, u64, fn() -> Verdict);
    let criteria: [Criterion; 10] = [
        ("projection axioms", 5, projection_axioms),
        ("interior-point error bound", 5, error_bound),
        ("transition matrix ergodicity bound", 30, ergodicity),
        ("Lyapunov monotonicity", 60, lyapunov_suite),
        ("constrained consensus", 60, consensus_suite),
        ("geometric rate certificate", 60, rate_suite),
        ("basic iterate relation", 60, basic_relation),
        ("identical-sets convergence", 10, regime_a),
        ("uniform-weights convergence", 10, regime_b),
        ("determinism across thread counts", 120, determinism),
    ];
    let mut failed = 0;
    for (idx, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let pass = result.ok && in_time;
        failed += usize::from(!pass);
        println!(
            "[{}] {:>2}. {name}: {} ({:.2} s of {budget} s)",
            if pass { "PASS" } else { "FAIL" },
            idx + 1,
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
