//! Online ad-auctions: Algorithm 2, a multiplicative primal-dual rule that
//! blends the argmax-of-discounted-bid choice with the predicted buyer.

use crate::error::{Error, Result};
use crate::io::TraceRecord;
use crate::market::{
    check_primal_feasibility, AuctionInstance, BuyerId, DualSolution, FractionalAllocation, Market, Prediction,
    PrimalFeasibilityReport, EPS, FICTITIOUS,
};

fn check_params(eta: f64, r_max: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::invalid(format!(
            "R_max must be positive and finite, got {r_max}"
        )));
    }
    Ok(())
}

/// `C = (1 + R_max)^(eta / R_max)`.
pub fn auction_constant(eta: f64, r_max: f64) -> Result<f64> {
    check_params(eta, r_max)?;
    Ok((eta / r_max * r_max.ln_1p()).exp())
}

/// `(1 - 1/C) / (1 + R_max)`.
pub fn robustness_bound_auction(eta: f64, r_max: f64) -> Result<f64> {
    let c = auction_constant(eta, r_max)?;
    Ok((1.0 - 1.0 / c) / (1.0 + r_max))
}

/// How an item was allocated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// The whole item went to the argmax buyer.
    Argmax,
    /// `eta` to the argmax buyer (possibly the fictitious one), `1 - eta` to the predicted buyer.
    Prediction,
    /// Nothing sold: the fictitious buyer won and no usable prediction.
    Fictitious,
}

impl Branch {
    pub fn tag(self) -> &'static str {
        match self {
            Branch::Argmax => "argmax",
            Branch::Prediction => "prediction",
            Branch::Fictitious => "fictitious",
        }
    }
}

/// Record of one processed item.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionStep {
    pub item: usize,
    /// Argmax buyer (0 when no real buyer has a positive discounted bid).
    pub argmax: BuyerId,
    /// Prediction as given.
    pub raw_prediction: BuyerId,
    /// Prediction after the zero-bid and feasibility checks (0 when dropped).
    pub predicted: BuyerId,
    /// The prediction was dropped because it would overrun the predicted budget.
    pub prediction_infeasible: bool,
    pub branch: Branch,
    pub bid: f64,
    pub predicted_bid: f64,
    /// Fraction given to the argmax buyer.
    pub argmax_fraction: f64,
    /// Fraction given to the predicted buyer.
    pub predicted_fraction: f64,
    pub primal: f64,
    /// `B_i (y_i' - y_i) + z_j`.
    pub dual: f64,
    pub z: f64,
    /// `y` of the argmax buyer after the update.
    pub y_after: f64,
    /// Argmax buyer's margin over its potential lower bound after the update (0 for the fictitious buyer).
    pub potential_margin: f64,
}

/// `y_i` against the lower bound `(C^(sum_{M(i)} b_ij / (eta B_i)) - 1) / (C - 1)` for one buyer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialCheck {
    pub buyer: BuyerId,
    /// `y_i - (C^(sum_{M(i)} b_ij / (eta B_i)) - 1) / (C - 1)`.
    pub margin: f64,
    pub passed: bool,
}

/// Incremental state of Algorithm 2; feed items in arrival order with [`AuctionRun::step`].
#[derive(Debug, Clone)]
pub struct AuctionRun<'a> {
    instance: &'a AuctionInstance,
    eta: f64,
    c: f64,
    r_max: f64,
    y: Vec<f64>,
    z: Vec<f64>,
    spend: Vec<f64>,
    predicted_spend: Vec<f64>,
    /// `sum_{j in M(i)} b_ij / B_i`.
    argmax_load: Vec<f64>,
    argmax_items: Vec<Vec<usize>>,
    prediction_items: Vec<Vec<usize>>,
    allocation: FractionalAllocation,
    steps: Vec<AuctionStep>,
}

impl<'a> AuctionRun<'a> {
    /// `r_max = None` uses the instance's realized `R_max`.
    pub fn new(instance: &'a AuctionInstance, eta: f64, r_max: Option<f64>) -> Result<Self> {
        let r = match r_max {
            Some(r) => r,
            None => instance.r_max(),
        };
        if r_max.is_none() && r == 0.0 {
            // no bids at all; any positive value gives the same run
            return Self::new(instance, eta, Some(1.0));
        }
        let c = auction_constant(eta, r)?;
        let n = instance.num_buyers();
        let m = instance.num_items();
        Ok(Self {
            instance,
            eta,
            c,
            r_max: r,
            y: vec![0.0; n],
            z: vec![0.0; m],
            spend: vec![0.0; n],
            predicted_spend: vec![0.0; n],
            argmax_load: vec![0.0; n],
            argmax_items: vec![Vec::new(); n],
            prediction_items: vec![Vec::new(); n],
            allocation: FractionalAllocation::for_market(instance),
            steps: Vec::with_capacity(m),
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Index of the next item to arrive.
    pub fn position(&self) -> usize {
        self.steps.len()
    }

    pub fn y(&self, buyer: BuyerId) -> f64 {
        if buyer == FICTITIOUS {
            0.0
        } else {
            self.y[buyer - 1]
        }
    }

    /// Items assigned to `buyer` through the argmax branch so far.
    pub fn argmax_items(&self, buyer: BuyerId) -> &[usize] {
        &self.argmax_items[buyer - 1]
    }

    /// Items assigned to `buyer` through the prediction branch so far.
    pub fn prediction_items(&self, buyer: BuyerId) -> &[usize] {
        &self.prediction_items[buyer - 1]
    }

    pub fn steps(&self) -> &[AuctionStep] {
        &self.steps
    }

    fn margin(&self, buyer: BuyerId) -> f64 {
        let k = buyer - 1;
        // C^(S/eta) = (1+R)^(S/R)
        let grown = (self.argmax_load[k] / self.r_max * self.r_max.ln_1p()).exp_m1();
        self.y[k] - grown / (self.c - 1.0)
    }

    /// Evaluates the potential lower bound on `y_i` for `buyer` in the current state.
    pub fn potential_check(&self, buyer: BuyerId) -> PotentialCheck {
        if buyer == FICTITIOUS {
            return PotentialCheck {
                buyer,
                margin: 0.0,
                passed: true,
            };
        }
        let margin = self.margin(buyer);
        PotentialCheck {
            buyer,
            margin,
            passed: margin >= -EPS * (1.0 + self.y[buyer - 1].abs()),
        }
    }

    /// Processes the next item with predicted buyer `pred`.
    pub fn step(&mut self, pred: BuyerId) -> Result<&AuctionStep> {
        let j = self.steps.len();
        if j >= self.instance.num_items() {
            return Err(Error::invalid("all items already processed"));
        }
        let n = self.instance.num_buyers();
        if pred > n {
            return Err(Error::invalid(format!(
                "prediction for item {} names buyer {pred} but there are {n} buyers",
                j + 1
            )));
        }
        let bids = self.instance.item_bids(j);

        let (mut argmax, mut best, mut bid) = (FICTITIOUS, 0.0, 0.0);
        for &(i, b) in bids {
            let ratio = b / self.instance.budget(i);
            if ratio > self.r_max * (1.0 + EPS) {
                return Err(Error::invalid(format!(
                    "bid {b} of buyer {i} on item {} exceeds the declared R_max {}",
                    j + 1,
                    self.r_max
                )));
            }
            let v = b * (1.0 - self.y[i - 1]);
            if v > best || (v == best && v > 0.0 && i < argmax) {
                argmax = i;
                best = v;
                bid = b;
            }
        }
        let z = best.max(0.0);

        let mut predicted = pred;
        let mut predicted_bid = 0.0;
        let mut infeasible = false;
        if predicted != FICTITIOUS {
            predicted_bid = bids.iter().find(|&&(i, _)| i == predicted).map_or(0.0, |e| e.1);
            if predicted_bid == 0.0 {
                predicted = FICTITIOUS;
            } else {
                let k = predicted - 1;
                let budget = self.instance.budget(predicted);
                if self.predicted_spend[k] + predicted_bid > budget * (1.0 + EPS) {
                    infeasible = true;
                    predicted = FICTITIOUS;
                    predicted_bid = 0.0;
                }
            }
            if predicted == FICTITIOUS {
                predicted_bid = 0.0;
            }
        }

        let (branch, xa, xp) = if predicted != FICTITIOUS && bid < predicted_bid {
            (Branch::Prediction, self.eta, 1.0 - self.eta)
        } else if argmax != FICTITIOUS {
            (Branch::Argmax, 1.0, 0.0)
        } else {
            (Branch::Fictitious, 1.0, 0.0)
        };

        let mut dual = z;
        let mut y_after = 0.0;
        if argmax != FICTITIOUS {
            let k = argmax - 1;
            let budget = self.instance.budget(argmax);
            let r = bid / budget;
            let before = self.y[k];
            self.y[k] = before * (1.0 + r) + r / (self.c - 1.0);
            y_after = self.y[k];
            dual += budget * (y_after - before);
            self.argmax_load[k] += r;
            self.argmax_items[k].push(j);
            self.spend[k] += bid * xa;
            self.allocation.add(j, argmax, xa);
        }
        if branch == Branch::Prediction {
            let k = predicted - 1;
            self.predicted_spend[k] += predicted_bid;
            self.prediction_items[k].push(j);
            self.spend[k] += predicted_bid * xp;
            self.allocation.add(j, predicted, xp);
        }
        self.z[j] = z;
        let primal = bid * if argmax != FICTITIOUS { xa } else { 0.0 } + predicted_bid * xp;
        let potential_margin = if argmax != FICTITIOUS { self.margin(argmax) } else { 0.0 };

        self.steps.push(AuctionStep {
            item: j,
            argmax,
            raw_prediction: pred,
            predicted: if branch == Branch::Prediction {
                predicted
            } else {
                FICTITIOUS
            },
            prediction_infeasible: infeasible,
            branch,
            bid,
            predicted_bid: if branch == Branch::Prediction {
                predicted_bid
            } else {
                0.0
            },
            argmax_fraction: if argmax != FICTITIOUS { xa } else { 0.0 },
            predicted_fraction: xp,
            primal,
            dual,
            z,
            y_after,
            potential_margin,
        });
        Ok(self.steps.last().expect("just pushed"))
    }

    pub fn finish(self) -> AuctionOutcome {
        let min_margin = self
            .steps
            .iter()
            .filter(|s| s.argmax != FICTITIOUS)
            .map(|s| s.potential_margin)
            .fold(0.0, f64::min);
        let potential_failures = self
            .steps
            .iter()
            .filter(|s| s.argmax != FICTITIOUS && s.potential_margin < -EPS * (1.0 + s.y_after.abs()))
            .count();
        AuctionOutcome {
            allocation: self.allocation,
            dual: DualSolution { y: self.y, z: self.z },
            spend: self.spend,
            trace: AuctionTrace {
                eta: self.eta,
                c: self.c,
                r_max: self.r_max,
                steps: self.steps,
                potential_min_margin: min_margin,
                potential_failures,
            },
        }
    }
}

/// Per-item record of an Algorithm 2 run.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionTrace {
    pub eta: f64,
    pub c: f64,
    pub r_max: f64,
    pub steps: Vec<AuctionStep>,
    /// Smallest potential margin seen after any item (0 if no real buyer ever won).
    pub potential_min_margin: f64,
    pub potential_failures: usize,
}

impl AuctionTrace {
    pub fn prediction_infeasible_count(&self) -> usize {
        self.steps.iter().filter(|s| s.prediction_infeasible).count()
    }

    /// Export records: the argmax share (tagged `argmax` or `fictitious`) carries
    /// the whole dual increment; a prediction share follows when present.
    pub fn records(&self) -> Vec<TraceRecord> {
        let mut out = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            let lead = if s.argmax == FICTITIOUS {
                Branch::Fictitious
            } else {
                Branch::Argmax
            };
            let share = if s.branch == Branch::Prediction { self.eta } else { 1.0 };
            out.push(TraceRecord {
                item: s.item + 1,
                stage: lead.tag().to_string(),
                buyer: s.argmax,
                fraction: share,
                primal: s.bid * s.argmax_fraction,
                dual: s.dual,
            });
            if s.branch == Branch::Prediction {
                out.push(TraceRecord {
                    item: s.item + 1,
                    stage: Branch::Prediction.tag().to_string(),
                    buyer: s.predicted,
                    fraction: s.predicted_fraction,
                    primal: s.predicted_bid * s.predicted_fraction,
                    dual: 0.0,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    pub allocation: FractionalAllocation,
    pub dual: DualSolution,
    /// Final spend, indexed by `buyer - 1` (may exceed the budget by up to `R_max B_i`).
    pub spend: Vec<f64>,
    pub trace: AuctionTrace,
}

impl AuctionOutcome {
    /// Uncapped revenue `sum_ij b_ij x_ij`.
    pub fn revenue(&self) -> f64 {
        self.trace.steps.iter().map(|s| s.primal).sum()
    }

    /// Revenue with every buyer's payment capped at its budget.
    pub fn capped_revenue(&self, instance: &AuctionInstance) -> f64 {
        self.spend.iter().zip(instance.budgets()).map(|(s, b)| s.min(*b)).sum()
    }
}

/// Runs Algorithm 2 with the instance's realized `R_max`.
pub fn run_algorithm2(instance: &AuctionInstance, prediction: &Prediction, eta: f64) -> Result<AuctionOutcome> {
    run_algorithm2_with(instance, prediction, eta, None)
}

/// Runs Algorithm 2; `r_max = Some(r)` declares `R_max` up front.
pub fn run_algorithm2_with(
    instance: &AuctionInstance,
    prediction: &Prediction,
    eta: f64,
    r_max: Option<f64>,
) -> Result<AuctionOutcome> {
    prediction.validate(instance)?;
    let mut run = AuctionRun::new(instance, eta, r_max)?;
    for &p in prediction.as_slice() {
        run.step(p)?;
    }
    Ok(run.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiFeasibility {
    pub report: PrimalFeasibilityReport,
    /// Largest `spend / B_i - 1` (0 for an allocation that never overspends).
    pub max_overshoot: f64,
    pub slack: f64,
}

impl QuasiFeasibility {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

/// Checks spend `<= B_i (1 + R_max)` and `sum_i x_ij <= 1`.
pub fn quasi_feasibility_audit(
    instance: &AuctionInstance,
    allocation: &FractionalAllocation,
    r_max: f64,
) -> Result<QuasiFeasibility> {
    let slack = 1.0 + r_max.max(0.0);
    let report = check_primal_feasibility(instance, allocation, slack)?;
    Ok(QuasiFeasibility {
        max_overshoot: report.max_overshoot.max(0.0),
        report,
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::check_dual_feasibility;

    #[test]
    fn constant_examples() {
        assert!((auction_constant(0.5, 0.1).unwrap() - 1.1f64.powi(5)).abs() < 1e-12);
        assert!((auction_constant(1.0, 1e-9).unwrap() - std::f64::consts::E).abs() < 1e-6);
        assert!((auction_constant(0.2, 0.2).unwrap() - 1.2).abs() < 1e-12);
        assert!(auction_constant(0.0, 0.1).is_err());
        assert!(auction_constant(0.5, 0.0).is_err());
        let r = robustness_bound_auction(0.5, 0.1).unwrap();
        assert!((r - (1.0 - 1.0 / 1.61051) / 1.1).abs() < 1e-12);
        assert!((robustness_bound_auction(1.0, 1e-9).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn single_buyer_takes_items_until_saturated() {
        let inst = AuctionInstance::new(vec![100.0], vec![vec![(1, 10.0)]; 20]).unwrap();
        let out = run_algorithm2(&inst, &Prediction::none(20), 1.0).unwrap();
        let mut saturated = false;
        for s in &out.trace.steps {
            if saturated {
                assert_eq!(s.branch, Branch::Fictitious);
            } else {
                assert_eq!(s.branch, Branch::Argmax);
                assert_eq!(s.argmax_fraction, 1.0);
            }
            saturated |= s.y_after >= 1.0;
        }
        assert!(saturated);
        let q = quasi_feasibility_audit(&inst, &out.allocation, 0.1).unwrap();
        assert!(q.passed() && q.max_overshoot <= 0.1 + 1e-12);
    }

    #[test]
    fn corner_meets_potential_bound_with_equality() {
        let inst = AuctionInstance::new(vec![100.0, 50.0], vec![vec![(1, 10.0), (2, 2.0)]]).unwrap();
        let mut run = AuctionRun::new(&inst, 0.5, None).unwrap();
        assert_eq!(run.potential_check(1).margin, 0.0);
        let step = run.step(0).unwrap().clone();
        assert_eq!(step.argmax, 1);
        let r = 0.1;
        assert!((step.y_after - r / (run.c() - 1.0)).abs() < 1e-15);
        assert!(run.potential_check(1).margin.abs() < 1e-12);
        // dual increment equals C/(C-1) times the bid
        let c = run.c();
        assert!((step.dual - c / (c - 1.0) * 10.0).abs() < 1e-9);
    }

    #[test]
    fn split_when_prediction_bids_more() {
        let inst = AuctionInstance::new(vec![100.0, 100.0], vec![vec![(1, 5.0), (2, 8.0)]]).unwrap();
        // buyer 2 is argmax; predict buyer 1 (lower bid): no split
        let out = run_algorithm2(&inst, &Prediction(vec![1]), 0.3).unwrap();
        assert_eq!(out.trace.steps[0].branch, Branch::Argmax);
        assert_eq!(out.allocation.get(0, 2), 1.0);

        let inst = AuctionInstance::new(vec![100.0, 100.0], vec![vec![(1, 6.0), (2, 8.0)]]).unwrap();
        let mut run = AuctionRun::new(&inst, 0.3, None).unwrap();
        run.y[1] = 0.5; // discounted bids 6 vs 4: argmax buyer 1
        let s = run.step(2).unwrap().clone();
        assert_eq!(s.branch, Branch::Prediction);
        assert!((s.argmax_fraction - 0.3).abs() < 1e-15);
        assert!((s.predicted_fraction - 0.7).abs() < 1e-15);
        assert!(s.primal >= 6.0);
        assert!((s.primal - (0.3 * 6.0 + 0.7 * 8.0)).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_zero_bid_predictions_are_dropped() {
        // buyer 1 wins item 1 outright, after which its y exceeds 1 and buyer 2
        // becomes the argmax; the prediction for buyer 1 splits item 2 and
        // would overrun its budget on item 3
        let mut items = vec![vec![(1, 6.0), (2, 5.0)]; 3];
        items.push(vec![(2, 1.0)]);
        let inst = AuctionInstance::new(vec![10.0, 100.0], items).unwrap();
        let out = run_algorithm2(&inst, &Prediction(vec![1, 1, 1, 1]), 0.5).unwrap();
        let st = &out.trace.steps;
        assert_eq!(st[0].branch, Branch::Argmax);
        assert_eq!(st[1].branch, Branch::Prediction);
        assert!(!st[1].prediction_infeasible);
        assert!(st[2].prediction_infeasible);
        assert_eq!(st[2].branch, Branch::Argmax);
        assert_eq!(st[3].predicted, 0);
        assert!(!st[3].prediction_infeasible);
        assert!(check_dual_feasibility(&inst, &out.dual).unwrap().passed());
    }

    #[test]
    fn rejects_bad_eta_and_declared_r_max() {
        let inst = AuctionInstance::new(vec![10.0], vec![vec![(1, 5.0)]]).unwrap();
        assert!(run_algorithm2(&inst, &Prediction::none(1), 0.0).is_err());
        assert!(run_algorithm2(&inst, &Prediction::none(1), 1.5).is_err());
        assert!(run_algorithm2_with(&inst, &Prediction::none(1), 0.5, Some(0.1)).is_err());
        assert!(run_algorithm2_with(&inst, &Prediction::none(1), 0.5, Some(0.6)).is_ok());
    }

    #[test]
    fn overshoot_bounded_by_r_max() {
        let inst = AuctionInstance::new(vec![10.0, 10.0], vec![vec![(1, 9.0), (2, 9.0)]; 6]).unwrap();
        let out = run_algorithm2(&inst, &Prediction::none(6), 1.0).unwrap();
        let q = quasi_feasibility_audit(&inst, &out.allocation, inst.r_max()).unwrap();
        assert!(q.passed());
        let strict = check_primal_feasibility(&inst, &out.allocation, 1.0).unwrap();
        assert!(q.max_overshoot > 0.0 || strict.passed());
    }
}
