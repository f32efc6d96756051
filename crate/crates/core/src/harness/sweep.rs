//! Sweep execution: every `(eta, error rate, repetition)` run is an isolated
//! job whose seeds derive from the base seed and the cell coordinates.

use std::time::Duration;

use rayon::prelude::*;

use super::config::{Algorithm, CiMethod, InstanceSource, SweepConfig};
use crate::auction::{quasi_feasibility_audit, robustness_bound_auction, run_algorithm2_with};
use crate::bounded::{dual_rate_audit, robustness_bound, run_algorithm1, waterfill_baseline};
use crate::error::{Error, Result};
use crate::generators::generate;
use crate::market::{
    check_dual_feasibility, check_primal_feasibility, revenue, FractionalAllocation, Instance, Market, Prediction,
    FICTITIOUS,
};
use crate::offline::{integral_opt, IntegralOptions};
use crate::predictions::{changed_items, perturb_auction, perturb_bounded, prediction_value, OracleConfig};
use crate::rng::derive_seed;

const TAG_INSTANCE: u64 = 1;
const TAG_PREDICTION: u64 = 2;

/// Algorithm 2 is undefined at `eta = 0` (its constant becomes 1); grid
/// points below this value run at it instead.
pub const ALGO2_MIN_ETA: f64 = 1e-3;

/// Slack on every bound check, relative to the bound's scale.
pub const BOUND_TOL: f64 = 1e-6;

/// Per-instance data shared by all cells.
#[derive(Debug, Clone)]
pub struct InstanceContext {
    pub instance: Instance,
    pub seed: u64,
    pub opt: f64,
    pub integral_value: f64,
    pub integral_proven: bool,
    pub base: Prediction,
    pub degree: usize,
    pub r_max: f64,
}

impl InstanceContext {
    /// Fractional optimum, integral base assignment and summary values.
    pub fn build(instance: Instance, seed: u64, integral_nodes: usize) -> Result<Self> {
        let options = IntegralOptions {
            time_budget: Duration::MAX,
            node_limit: Some(integral_nodes),
            ..Default::default()
        };
        let integral = integral_opt(&instance, &options)?;
        let degree = match &instance {
            Instance::Bounded(b) => b.degree().max(1),
            Instance::Auction(a) => (0..a.num_items())
                .map(|j| a.item_bids(j).len())
                .max()
                .unwrap_or(1)
                .max(1),
        };
        let r_max = instance.as_market().r_max();
        Ok(Self {
            opt: integral.fractional_value,
            integral_value: integral.value,
            integral_proven: integral.proven,
            base: integral.assignment,
            instance,
            seed,
            degree,
            r_max,
        })
    }

    /// `fractional / integral - 1` with the best integral value found.
    pub fn integrality_gap(&self) -> f64 {
        if self.integral_value > 0.0 {
            self.opt / self.integral_value - 1.0
        } else {
            0.0
        }
    }
}

/// Outcome of one audit or bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Observed quantity (meaning depends on the check).
    pub value: f64,
    /// Threshold it was held against.
    pub required: f64,
}

impl Check {
    fn at_least(name: &'static str, value: f64, required: f64, tol: f64) -> Self {
        Self {
            name,
            passed: value >= required - tol,
            value,
            required,
        }
    }

    fn flag(name: &'static str, passed: bool, value: f64) -> Self {
        Self {
            name,
            passed,
            value,
            required: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub eta: f64,
    /// `eta` actually passed to the algorithm.
    pub eta_used: f64,
    pub error_rate: f64,
    pub repetition: usize,
    pub instance_seed: u64,
    pub prediction_seed: u64,
    /// ALGO(I): the value entering the ratio.
    pub algo: f64,
    /// OPT(I): the fractional optimum.
    pub opt: f64,
    pub integral_value: f64,
    /// P(I), 0 for an infeasible prediction.
    pub prediction_value: f64,
    pub prediction_feasible: bool,
    /// Fraction of items whose prediction differs from the base assignment.
    pub perturbed_fraction: f64,
    pub ratio: f64,
    pub consistency_bound: f64,
    pub robustness_bound: f64,
    pub checks: Vec<Check>,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub eta: f64,
    pub error_rate: f64,
    pub n_runs: usize,
    pub mean_ratio: f64,
    /// Half-width of the 95% confidence interval.
    pub ci_half_width: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub mean_robustness_bound: f64,
    pub audit_failures: usize,
}

impl CellSummary {
    pub fn ci_low(&self) -> f64 {
        self.mean_ratio - self.ci_half_width
    }

    pub fn ci_high(&self) -> f64 {
        self.mean_ratio + self.ci_half_width
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub algorithm: Algorithm,
    /// Cells ordered by error rate, then eta (grid order).
    pub cells: Vec<CellSummary>,
    /// Runs in the same order, repetitions innermost.
    pub runs: Vec<RunRecord>,
    pub mean_integrality_gap: f64,
    pub mean_r_max: f64,
    pub instances: usize,
}

impl SweepReport {
    pub fn audit_failures(&self) -> usize {
        self.runs.iter().filter(|r| !r.passed()).count()
    }

    pub fn cell(&self, eta: f64, error_rate: f64) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| (c.eta - eta).abs() < 1e-12 && (c.error_rate - error_rate).abs() < 1e-12)
    }

    /// Distinct error rates in grid order.
    pub fn error_rates(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !out.iter().any(|&e| e == c.error_rate) {
                out.push(c.error_rate);
            }
        }
        out
    }
}

/// Loads or generates every instance the sweep needs.
pub fn build_contexts(config: &SweepConfig) -> Result<Vec<InstanceContext>> {
    match &config.source {
        InstanceSource::File(path) => {
            let text = std::fs::read_to_string(path)?;
            let inst = crate::io::parse_instance(&text)?;
            Ok(vec![InstanceContext::build(inst, 0, config.integral_nodes)?])
        }
        InstanceSource::Generator(spec) => {
            let count = if config.regenerate { config.repetitions } else { 1 };
            (0..count)
                .into_par_iter()
                .map(|rep| {
                    let seed = derive_seed(config.seed, &[TAG_INSTANCE, rep as u64]);
                    let inst = generate(&spec.clone().with_seed(seed))?;
                    InstanceContext::build(inst, seed, config.integral_nodes)
                })
                .collect()
        }
    }
}

/// Runs the whole grid. Deterministic for a fixed config regardless of the
/// number of worker threads.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let contexts = build_contexts(config)?;
    run_sweep_on(config, &contexts)
}

/// Runs the grid on prebuilt contexts (one per repetition, or one shared).
pub fn run_sweep_on(config: &SweepConfig, contexts: &[InstanceContext]) -> Result<SweepReport> {
    config.validate()?;
    if contexts.is_empty() {
        return Err(Error::invalid("no instances to run on"));
    }
    let kind_ok = contexts.iter().all(|c| match (config.algorithm, &c.instance) {
        (Algorithm::Algo1 | Algorithm::WaterfillBaseline, Instance::Bounded(_)) => true,
        (Algorithm::Algo2 | Algorithm::FollowPrediction, _) => true,
        _ => false,
    });
    if !kind_ok {
        return Err(Error::invalid(format!(
            "{} needs bounded-allocation instances",
            config.algorithm.name()
        )));
    }

    let mut jobs = Vec::new();
    for (ei, &err) in config.error_rates.iter().enumerate() {
        for &eta in &config.etas {
            for rep in 0..config.repetitions {
                jobs.push((ei, err, eta, rep));
            }
        }
    }
    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(ei, err, eta, rep)| {
            let ctx = &contexts[rep % contexts.len()];
            run_one(config, ctx, eta, ei, err, rep)
        })
        .collect::<Result<_>>()?;

    let cells = runs
        .chunks(config.repetitions)
        .map(|chunk| summarize(chunk, config.ci))
        .collect();
    let n = contexts.len() as f64;
    Ok(SweepReport {
        algorithm: config.algorithm,
        cells,
        runs,
        mean_integrality_gap: contexts.iter().map(InstanceContext::integrality_gap).sum::<f64>() / n,
        mean_r_max: contexts.iter().map(|c| c.r_max).sum::<f64>() / n,
        instances: contexts.len(),
    })
}

fn perturb(config: &SweepConfig, ctx: &InstanceContext, error_rate: f64, seed: u64) -> Result<Prediction> {
    let oracle = OracleConfig {
        error_rate,
        seed,
        literal_alternatives: config.literal_alternatives,
    };
    match &ctx.instance {
        Instance::Bounded(b) => perturb_bounded(b, &ctx.base, &oracle),
        Instance::Auction(a) => perturb_auction(a, &ctx.base, &oracle),
    }
}

/// Assigns each item wholly to its predicted buyer while that buyer can
/// still afford it.
pub fn follow_prediction(market: &(impl Market + ?Sized), prediction: &Prediction) -> Result<FractionalAllocation> {
    prediction.validate(market)?;
    let mut alloc = FractionalAllocation::for_market(market);
    let mut left = market.budgets().to_vec();
    for (j, &i) in prediction.as_slice().iter().enumerate() {
        if i == FICTITIOUS {
            continue;
        }
        let p = market.price(i, j);
        if p > 0.0 && p <= left[i - 1] * (1.0 + crate::market::EPS) {
            left[i - 1] -= p;
            alloc.add(j, i, 1.0);
        }
    }
    Ok(alloc)
}

fn run_one(
    config: &SweepConfig,
    ctx: &InstanceContext,
    eta: f64,
    error_index: usize,
    error_rate: f64,
    rep: usize,
) -> Result<RunRecord> {
    let prediction_seed = derive_seed(config.seed, &[TAG_PREDICTION, error_index as u64, rep as u64]);
    let prediction = perturb(config, ctx, error_rate, prediction_seed)?;
    let market = ctx.instance.as_market();
    let pv = prediction_value(market, &prediction)?;
    let p = pv.value;
    let mut checks = Vec::new();
    let mut eta_used = eta;

    let (algo, consistency_bound, robustness) = match (config.algorithm, &ctx.instance) {
        (Algorithm::Algo1 | Algorithm::WaterfillBaseline, Instance::Bounded(inst)) => {
            let run = if config.algorithm == Algorithm::Algo1 {
                run_algorithm1(inst, &prediction, eta)?
            } else {
                eta_used = 1.0;
                waterfill_baseline(inst)?
            };
            let primal = check_primal_feasibility(inst, &run.allocation, 1.0)?;
            checks.push(Check::flag(
                "primal_feasibility",
                primal.passed(),
                primal.worst_violation,
            ));
            let dual = check_dual_feasibility(inst, &run.dual)?;
            checks.push(Check::flag("dual_feasibility", dual.passed(), dual.worst_violation));
            let rate = dual_rate_audit(&run.trace);
            checks.push(Check::flag("dual_rate", rate.passed(), rate.worst_rate));
            let alg = run.revenue();
            let cons = 1.0 - eta_used;
            let rob = robustness_bound(eta_used, ctx.degree)?;
            (alg, cons, rob)
        }
        (Algorithm::Algo2, Instance::Auction(inst)) => {
            eta_used = eta.max(ALGO2_MIN_ETA);
            let out = run_algorithm2_with(inst, &prediction, eta_used, config.r_max)?;
            let r = out.trace.r_max;
            let quasi = quasi_feasibility_audit(inst, &out.allocation, r)?;
            checks.push(Check::flag("quasi_feasibility", quasi.passed(), quasi.max_overshoot));
            let dual = check_dual_feasibility(inst, &out.dual)?;
            checks.push(Check::flag("dual_feasibility", dual.passed(), dual.worst_violation));
            checks.push(Check::at_least("potential", out.trace.potential_min_margin, 0.0, 1e-9));
            // consistency is stated for the uncapped primal value
            let uncapped = out.revenue();
            if pv.feasible {
                let cons = (1.0 - eta_used) * p;
                checks.push(Check::at_least("consistency", uncapped, cons, BOUND_TOL * p));
            }
            let rob = robustness_bound_auction(eta_used, r)?;
            (out.capped_revenue(inst), 1.0 - eta_used, rob)
        }
        (Algorithm::Algo2, Instance::Bounded(b)) => {
            let inst = b.to_auction();
            let ctx2 = InstanceContext {
                instance: Instance::Auction(inst),
                ..ctx.clone()
            };
            let mut rec = run_one(config, &ctx2, eta, error_index, error_rate, rep)?;
            rec.instance_seed = ctx.seed;
            return Ok(rec);
        }
        (Algorithm::FollowPrediction, _) => {
            let alloc = follow_prediction(market, &prediction)?;
            let primal = check_primal_feasibility(market, &alloc, 1.0)?;
            checks.push(Check::flag(
                "primal_feasibility",
                primal.passed(),
                primal.worst_violation,
            ));
            eta_used = 0.0;
            (revenue(market, &alloc)?, 1.0, 0.0)
        }
        (Algorithm::Algo1 | Algorithm::WaterfillBaseline, Instance::Auction(_)) => {
            return Err(Error::invalid("bounded-allocation algorithm on an auction instance"));
        }
    };

    if config.algorithm != Algorithm::Algo2 && pv.feasible {
        checks.push(Check::at_least(
            "consistency",
            algo,
            consistency_bound * p,
            BOUND_TOL * p,
        ));
    }
    let ratio = if ctx.opt > 0.0 { algo / ctx.opt } else { 1.0 };
    checks.push(Check::flag("ratio_at_most_one", ratio <= 1.0 + BOUND_TOL, ratio));
    if config.algorithm != Algorithm::FollowPrediction {
        checks.push(Check::at_least("robustness", ratio, robustness, BOUND_TOL));
    }

    Ok(RunRecord {
        eta,
        eta_used,
        error_rate,
        repetition: rep,
        instance_seed: ctx.seed,
        prediction_seed,
        algo,
        opt: ctx.opt,
        integral_value: ctx.integral_value,
        prediction_value: p,
        prediction_feasible: pv.feasible,
        perturbed_fraction: if prediction.is_empty() {
            0.0
        } else {
            changed_items(&ctx.base, &prediction) as f64 / prediction.len() as f64
        },
        ratio,
        consistency_bound,
        robustness_bound: robustness,
        checks,
    })
}

const T95: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
    2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
];

/// Mean and 95% half-width; a single sample has zero width.
pub fn mean_ci(xs: &[f64], method: CiMethod) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let q = match method {
        CiMethod::Normal => 1.96,
        CiMethod::Student => T95.get(n - 2).copied().unwrap_or(1.96),
    };
    (mean, q * (var / n as f64).sqrt())
}

fn summarize(runs: &[RunRecord], ci: CiMethod) -> CellSummary {
    let ratios: Vec<f64> = runs.iter().map(|r| r.ratio).collect();
    let (mean, half) = mean_ci(&ratios, ci);
    CellSummary {
        eta: runs[0].eta,
        error_rate: runs[0].error_rate,
        n_runs: runs.len(),
        mean_ratio: mean,
        ci_half_width: half,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_robustness_bound: runs.iter().map(|r| r.robustness_bound).sum::<f64>() / runs.len() as f64,
        audit_failures: runs.iter().filter(|r| !r.passed()).count(),
    }
}
