//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p augmatch --test acceptance`.

use std::time::{Duration, Instant};

use augmatch::bounded::{
    capacity_constant, potential_f, potential_limit, run_algorithm1, waterfill_baseline, PotentialCoefficients,
};
use augmatch::generators::{generate_instance1, generate_random_bounded, GeneratorSpec};
use augmatch::harness::{
    build_contexts, run_sweep_on, summary_csv, Algorithm, InstanceSource, RunRecord, SweepConfig, SweepReport,
};
use augmatch::offline::{fractional_opt_bounded, solve_lp_dense};
use augmatch::rng::SplitMix64;
use augmatch::{BoundedInstance, Market, Prediction};

// pinned tolerances
const REL_BOUND_TOL: f64 = 1e-6;
const POTENTIAL_TOL: f64 = 1e-9;
const WATERFILL_TOL: f64 = 1e-9;
const BRUTE_FORCE_TOL: f64 = 1e-3;
const EQUIV_TOL: f64 = 1e-9;
const ORACLE_REL_TOL: f64 = 1e-6;
const LIMIT_TOL: f64 = 1e-3;
const C_LIMIT_TOL: f64 = 1e-5;
/// Slack on "nonincreasing in error rate", in ratio units.
const MONOTONE_TOL: f64 = 2e-3;
const GAP_RANGE: (f64, f64) = (0.08, 0.28);
const SWEEP_TIME_LIMIT: Duration = Duration::from_secs(600);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn bounded_config(preset: &str) -> SweepConfig {
    let spec = GeneratorSpec::preset(preset, 0).unwrap();
    let mut cfg = SweepConfig::new(Algorithm::Algo1, InstanceSource::Generator(spec));
    cfg.etas = (0..=10).map(|k| k as f64 / 10.0).collect();
    cfg.error_rates = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    cfg.repetitions = 20;
    cfg.seed = 2024;
    cfg
}

struct BoundedSweep {
    name: &'static str,
    report: SweepReport,
}

fn run_bounded_sweeps() -> Vec<BoundedSweep> {
    ["instance1", "instance2", "instance3", "instance4"]
        .into_iter()
        .map(|name| {
            let cfg = bounded_config(name);
            let ctx = build_contexts(&cfg).unwrap();
            BoundedSweep {
                name,
                report: run_sweep_on(&cfg, &ctx).unwrap(),
            }
        })
        .collect()
}

fn failing<'a>(runs: impl Iterator<Item = &'a RunRecord>, check: &str) -> (usize, usize, f64) {
    let mut checked = 0;
    let mut failed = 0;
    let mut worst = f64::INFINITY;
    for r in runs {
        if let Some(c) = r.checks.iter().find(|c| c.name == check) {
            checked += 1;
            failed += !c.passed as usize;
            let scale = if check == "consistency" {
                r.prediction_value.max(1e-300)
            } else {
                1.0
            };
            worst = worst.min((c.value - c.required) / scale);
        }
    }
    (checked, failed, worst)
}

fn criterion1(t: &[BoundedSweep]) -> Outcome {
    let (checked, failed, worst) = failing(t.iter().flat_map(|x| &x.report.runs), "consistency");
    let infeasible = t
        .iter()
        .flat_map(|x| &x.report.runs)
        .filter(|r| !r.prediction_feasible)
        .count();
    outcome(
        failed == 0 && checked > 0,
        format!(
            "{checked} runs with feasible predictions ({infeasible} infeasible skipped), {failed} below (1-eta)P - {REL_BOUND_TOL:e}P, min slack {worst:.3e} P"
        ),
    )
}

fn criterion2(t: &[BoundedSweep]) -> Outcome {
    let (checked, failed, worst) = failing(t.iter().flat_map(|x| &x.report.runs), "robustness");
    outcome(
        failed == 0 && checked > 0,
        format!("{checked} runs, {failed} below the robustness bound - {REL_BOUND_TOL:e}, min margin {worst:.4}"),
    )
}

fn criterion3(t: &[BoundedSweep], auction: &SweepReport) -> Outcome {
    let runs = || t.iter().flat_map(|x| &x.report.runs);
    let (n1, dual_fail, _) = failing(runs(), "dual_feasibility");
    let (_, rate_fail, _) = failing(runs(), "dual_rate");
    let (n2, potential_fail, worst) = failing(auction.runs.iter(), "potential");
    let (_, dual2_fail, _) = failing(auction.runs.iter(), "dual_feasibility");
    outcome(
        dual_fail + rate_fail + potential_fail + dual2_fail == 0 && n1 > 0 && n2 > 0,
        format!(
            "algo1: {n1} runs, {dual_fail} dual-infeasible, {rate_fail} rate violations; algo2: {n2} runs, {dual2_fail} dual-infeasible, {potential_fail} below margin -{POTENTIAL_TOL:e} (min {worst:.3e})"
        ),
    )
}

fn lognormal_config() -> SweepConfig {
    let mut cfg = SweepConfig::new(Algorithm::Algo2, InstanceSource::Generator(GeneratorSpec::lognormal(0)));
    cfg.etas = (1..=20)
        .map(|k| k as f64 * 0.05)
        .map(|x| (x * 1e12).round() / 1e12)
        .collect();
    cfg.error_rates = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    cfg.repetitions = 20;
    cfg.regenerate = false;
    cfg.seed = 2024;
    cfg
}

fn criterion4(report: &SweepReport, elapsed: Duration) -> Outcome {
    let runs = report.runs.iter();
    let (nc, cons_fail, cons_worst) = failing(runs.clone(), "consistency");
    let (nr, rob_fail, rob_worst) = failing(runs.clone(), "robustness");
    let (_, quasi_fail, _) = failing(runs, "quasi_feasibility");
    let overshoot = report
        .runs
        .iter()
        .flat_map(|r| r.checks.iter().filter(|c| c.name == "quasi_feasibility"))
        .fold(0.0f64, |a, c| a.max(c.value));
    outcome(
        cons_fail + rob_fail + quasi_fail == 0 && nc > 0 && nr > 0 && elapsed <= SWEEP_TIME_LIMIT,
        format!(
            "{} runs in {:.1}s (R_max {:.4}); consistency {cons_fail}/{nc} fail (min slack {cons_worst:.3e} P), robustness {rob_fail}/{nr} fail (min margin {rob_worst:.4}), spend over B(1+R_max): {quasi_fail} (max overshoot {overshoot:.4})",
            report.runs.len(),
            elapsed.as_secs_f64(),
            report.mean_r_max
        ),
    )
}

/// Level-based water-filling in small equal steps: every step goes in equal
/// parts to the interested buyers on the lowest level that still have budget.
fn brute_force_waterfill(inst: &BoundedInstance, steps: usize) -> f64 {
    let d = inst.degree().max(1) as f64;
    let budgets = inst.budgets();
    let mut spend = vec![0.0f64; budgets.len()];
    let mut total = 0.0;
    let delta = 1.0 / steps as f64;
    for item in inst.items() {
        for _ in 0..steps {
            let level = |i: usize| (d * spend[i - 1] / budgets[i - 1] + 1e-12).floor();
            let open: Vec<usize> = item
                .interested
                .iter()
                .copied()
                .filter(|&i| spend[i - 1] < budgets[i - 1] - 1e-12)
                .collect();
            let Some(low) = open.iter().map(|&i| level(i)).reduce(f64::min) else {
                break;
            };
            let lowest: Vec<usize> = open.into_iter().filter(|&i| level(i) == low).collect();
            let share = item.price * delta / lowest.len() as f64;
            for i in lowest {
                let take = share.min(budgets[i - 1] - spend[i - 1]);
                spend[i - 1] += take;
                total += take;
            }
        }
    }
    total
}

fn criterion5() -> Outcome {
    let inst = generate_instance1();
    let wf = waterfill_baseline(&inst).unwrap().revenue();
    let hand = 1030.0 / 3.0;
    let brute = brute_force_waterfill(&inst, 100_000);
    let perfect = Prediction(vec![1, 2, 3, 4, 5]);
    let a1 = run_algorithm1(&inst, &perfect, 0.1).unwrap().revenue();
    let ok = (wf - hand).abs() <= WATERFILL_TOL && (brute - wf).abs() <= BRUTE_FORCE_TOL && a1 / 500.0 >= 0.9;
    outcome(
        ok,
        format!(
            "water-filling {wf:.9} (1030/3 = {hand:.9}, ratio {:.4}), brute force 1e5 steps {brute:.6}, algo1 eta=0.1 perfect prediction ratio {:.4}",
            wf / 500.0,
            a1 / 500.0
        ),
    )
}

fn random_bounded(rng: &mut SplitMix64, max_n: usize, max_m: usize) -> BoundedInstance {
    let n = 1 + rng.index(max_n);
    let m = 1 + rng.index(max_m);
    let d = 1 + rng.index(n);
    let spec = GeneratorSpec {
        buyers: n,
        items: m,
        d_bound: d,
        budget_range: (5.0, 60.0),
        price_range: (0.5, 20.0),
        seed: rng.next_u64(),
        ..GeneratorSpec::instance2(0)
    };
    generate_random_bounded(&spec).unwrap()
}

fn criterion6() -> Outcome {
    let mut rng = SplitMix64::new(606);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let inst = random_bounded(&mut rng, 12, 60);
        let pred = Prediction(
            inst.items()
                .iter()
                .map(|it| it.interested[rng.index(it.interested.len())])
                .collect(),
        );
        let a = run_algorithm1(&inst, &pred, 1.0).unwrap().allocation;
        let b = waterfill_baseline(&inst).unwrap().allocation;
        for j in 0..inst.num_items() {
            for i in 1..=inst.num_buyers() {
                worst = worst.max((a.get(j, i) - b.get(j, i)).abs());
            }
        }
    }
    outcome(
        worst <= EQUIV_TOL,
        format!("100 instances, max entrywise difference {worst:.3e}"),
    )
}

fn criterion7() -> Outcome {
    let limit = (std::f64::consts::E - 1.0) / std::f64::consts::E;
    let mut above = true;
    let mut min_excess = f64::INFINITY;
    for d in 2..=10_000 {
        let c = capacity_constant(d).unwrap();
        above &= c > limit;
        min_excess = min_excess.min(c - limit);
    }
    let c_big = capacity_constant(1_000_000).unwrap();
    let coeffs = PotentialCoefficients::new(10_000).unwrap();
    let mut worst_f = 0.0f64;
    for eta in [0.25, 0.5, 0.75] {
        let f = potential_f(eta, &coeffs).unwrap();
        worst_f = worst_f.max((f - potential_limit(eta)).abs());
    }
    let ok = above && (c_big - limit).abs() < C_LIMIT_TOL && worst_f < LIMIT_TOL;
    outcome(
        ok,
        format!(
            "C(d) > (e-1)/e for d in 2..=1e4 (min excess {min_excess:.3e}); |C(1e6) - (e-1)/e| = {:.3e}; max |f_1e4(eta) - limit| = {worst_f:.3e}",
            (c_big - limit).abs()
        ),
    )
}

fn criterion8() -> Outcome {
    let mut rng = SplitMix64::new(808);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let inst = random_bounded(&mut rng, 20, 50);
        let flow = fractional_opt_bounded(&inst).unwrap().value;
        let lp = solve_lp_dense(&inst).unwrap().value;
        worst = worst.max((flow - lp).abs() / flow.abs().max(1.0));
    }
    outcome(
        worst <= ORACLE_REL_TOL,
        format!("50 instances, max relative difference {worst:.3e}"),
    )
}

fn criterion9(t: &[BoundedSweep]) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for x in t.iter().filter(|x| x.name == "instance2" || x.name == "instance3") {
        let rates = x.report.error_rates();
        for eta in [0.0, 0.1, 0.2] {
            let means: Vec<f64> = rates
                .iter()
                .map(|&e| x.report.cell(eta, e).unwrap().mean_ratio)
                .collect();
            let worst_rise = means.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            ok &= worst_rise <= MONOTONE_TOL;
            notes.push(format!("{} eta={eta}: max rise {worst_rise:+.4}", x.name));
        }
        let mut dom = f64::INFINITY;
        for c in &x.report.cells {
            let zero = x.report.cell(c.eta, 0.0).unwrap().mean_ratio;
            dom = dom.min(zero - c.mean_ratio);
        }
        ok &= dom >= -MONOTONE_TOL;
        notes.push(format!("{} error-0 dominance margin {dom:+.4}", x.name));
    }
    let i4 = t.iter().find(|x| x.name == "instance4").unwrap();
    let gap = i4.report.mean_integrality_gap;
    ok &= (GAP_RANGE.0..=GAP_RANGE.1).contains(&gap);
    notes.push(format!("instance4 mean integrality gap {:.2}%", 100.0 * gap));
    outcome(ok, notes.join("; "))
}

fn criterion10() -> Outcome {
    let mut cfg = bounded_config("instance2");
    cfg.repetitions = 5;
    cfg.etas = vec![0.0, 0.3, 0.7, 1.0];
    let first = {
        let ctx = build_contexts(&cfg).unwrap();
        summary_csv(&run_sweep_on(&cfg, &ctx).unwrap())
    };
    // a second run on a single worker thread must not change a byte
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let second = pool.install(|| {
        let ctx = build_contexts(&cfg).unwrap();
        summary_csv(&run_sweep_on(&cfg, &ctx).unwrap())
    });
    outcome(
        first == second,
        format!("{} CSV bytes, identical: {}", first.len(), first == second),
    )
}

fn main() {
    let start = Instant::now();
    let bounded = run_bounded_sweeps();
    let t = Instant::now();
    let lcfg = lognormal_config();
    let lctx = build_contexts(&lcfg).unwrap();
    let lognormal = run_sweep_on(&lcfg, &lctx).unwrap();
    let lognormal_time = t.elapsed();

    let results = [
        ("consistency (bounded allocation)", criterion1(&bounded)),
        ("robustness (bounded allocation)", criterion2(&bounded)),
        ("dual certification", criterion3(&bounded, &lognormal)),
        (
            "ad-auction bounds on the lognormal instance",
            criterion4(&lognormal, lognormal_time),
        ),
        ("instance 1 hand values", criterion5()),
        ("eta = 1 equals water-filling", criterion6()),
        ("constants", criterion7()),
        ("offline oracle equivalence", criterion8()),
        ("ratio curve shape and integrality gap", criterion9(&bounded)),
        ("determinism", criterion10()),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!(
            "criterion {:>2} {}: {} - {}",
            k + 1,
            if o.passed { "PASS" } else { "FAIL" },
            name,
            o.detail
        );
        failed += !o.passed as usize;
    }
    println!(
        "acceptance: {} of {} passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
