use crate::error::{Error, Result};
use crate::io::TraceRecord;
use crate::market::{BoundedInstance, BuyerId, DualSolution, FractionalAllocation, Prediction, FICTITIOUS};

use super::potential::PotentialCoefficients;
use super::waterfill::{assign_single, fill, LevelState, Segment, Stage, AMOUNT_TOL};

/// Everything that happened to one item.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemTrace {
    pub item: usize,
    pub price: f64,
    /// Predicted buyer after coercion (0 when skipped).
    pub predicted: BuyerId,
    /// The raw prediction named a buyer outside `S_j`.
    pub invalid_prediction: bool,
    /// Total fraction sold.
    pub sold: f64,
    /// Final `z_j`.
    pub z: f64,
    pub segments: Vec<Segment>,
}

impl ItemTrace {
    pub fn primal(&self) -> f64 {
        self.segments.iter().map(|s| s.primal).sum()
    }

    pub fn dual(&self) -> f64 {
        self.segments.iter().map(|s| s.dual()).sum()
    }

    pub fn completely_sold(&self) -> bool {
        self.sold >= 1.0 - 1e-9
    }
}

/// Per-segment record of a bounded-allocation run.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedTrace {
    pub d: usize,
    pub eta: f64,
    pub items: Vec<ItemTrace>,
    pub invalid_predictions: usize,
}

impl BoundedTrace {
    /// Flattened export records, one per segment (items numbered from 1).
    pub fn records(&self) -> Vec<TraceRecord> {
        self.items
            .iter()
            .flat_map(|it| {
                it.segments.iter().map(move |s| TraceRecord {
                    item: it.item + 1,
                    stage: s.stage.tag().to_string(),
                    buyer: s.buyer,
                    fraction: s.fraction,
                    primal: s.primal,
                    dual: s.dual(),
                })
            })
            .collect()
    }
}

/// Output of Algorithm 1 or of the water-filling baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedRun {
    pub allocation: FractionalAllocation,
    pub dual: DualSolution,
    pub trace: BoundedTrace,
    /// Final spend, indexed by `buyer - 1`.
    pub spend: Vec<f64>,
    /// Final level, indexed by `buyer - 1`.
    pub levels: Vec<usize>,
}

impl BoundedRun {
    pub fn revenue(&self) -> f64 {
        self.trace.items.iter().map(ItemTrace::primal).sum()
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// Algorithm 1: for each item, stage 1 water-fills while some interested
/// buyer spends less than `eta` of its budget, stage 2 hands up to `1 - eta`
/// to the predicted buyer, stage 3 water-fills the rest.
///
/// The dual certificate is `y_i = f_d(l_i/d)` with `l_i` the final level and
/// `z_j = (1 - f_d(min_{i in S_j} l_i/d)) b_j`.
pub fn run_algorithm1(instance: &BoundedInstance, prediction: &Prediction, eta: f64) -> Result<BoundedRun> {
    check_eta(eta)?;
    prediction.validate(instance)?;
    let d = instance.degree().max(1);
    let mut state = LevelState::new(crate::market::Market::budgets(instance), d);
    let mut items = Vec::with_capacity(instance.items().len());
    let mut invalid = 0;

    for (j, item) in instance.items().iter().enumerate() {
        let mut segments = Vec::new();
        let s = &item.interested;
        let raw = prediction.get(j);
        let bad = raw != FICTITIOUS && !s.contains(&raw);
        if bad {
            invalid += 1;
        }
        let predicted = if bad { FICTITIOUS } else { raw };

        let mut remaining = fill(&mut state, item.price, s, 1.0, Some(eta), Stage::One, &mut segments);
        if predicted != FICTITIOUS && remaining > AMOUNT_TOL {
            let want = (1.0 - eta).min(remaining);
            if want > 0.0 {
                remaining -= assign_single(&mut state, item.price, predicted, want, Stage::Two, &mut segments);
            }
        }
        if remaining > AMOUNT_TOL {
            remaining = fill(&mut state, item.price, s, remaining, None, Stage::Three, &mut segments);
        }
        items.push(ItemTrace {
            item: j,
            price: item.price,
            predicted,
            invalid_prediction: bad,
            sold: 1.0 - remaining.max(0.0),
            z: 0.0,
            segments,
        });
    }
    finish(instance, state, items, eta, invalid)
}

/// Pure water-filling: every item is spread over the lowest-level
/// non-exhausted interested buyers until sold or all are exhausted.
pub fn waterfill_baseline(instance: &BoundedInstance) -> Result<BoundedRun> {
    let d = instance.degree().max(1);
    let mut state = LevelState::new(crate::market::Market::budgets(instance), d);
    let mut items = Vec::with_capacity(instance.items().len());
    for (j, item) in instance.items().iter().enumerate() {
        let mut segments = Vec::new();
        let remaining = fill(
            &mut state,
            item.price,
            &item.interested,
            1.0,
            None,
            Stage::Three,
            &mut segments,
        );
        items.push(ItemTrace {
            item: j,
            price: item.price,
            predicted: FICTITIOUS,
            invalid_prediction: false,
            sold: 1.0 - remaining,
            z: 0.0,
            segments,
        });
    }
    finish(instance, state, items, 1.0, 0)
}

/// Builds the allocation and the level-based dual, and attributes every unit
/// of dual objective to the segment that caused it.
fn finish(
    instance: &BoundedInstance,
    state: LevelState,
    mut items: Vec<ItemTrace>,
    eta: f64,
    invalid_predictions: usize,
) -> Result<BoundedRun> {
    let d = state.d();
    let coeffs = PotentialCoefficients::new(d)?;
    let levels = state.levels().to_vec();
    let n = levels.len();
    let mut allocation = FractionalAllocation::new(n, items.len());
    let mut dual = DualSolution::zeros(n, items.len());
    for (k, &l) in levels.iter().enumerate() {
        dual.y[k] = coeffs.at_level(l);
    }

    for it in &mut items {
        let item = instance.item(it.item);
        let low = item
            .interested
            .iter()
            .map(|&i| levels[i - 1])
            .min()
            .expect("nonempty interest set");
        it.z = (1.0 - coeffs.at_level(low)).max(0.0) * item.price;
        dual.z[it.item] = it.z;
        for seg in &mut it.segments {
            allocation.add(it.item, seg.buyer, seg.fraction);
            // Spend inside a level is charged its slope once the level is completed.
            if levels[seg.buyer - 1] > seg.level {
                seg.dual_y = coeffs.slope_in_level(seg.level) * seg.primal;
            }
            if it.sold > 0.0 {
                seg.dual_z = it.z * seg.fraction / it.sold;
            }
        }
    }

    Ok(BoundedRun {
        allocation,
        dual,
        trace: BoundedTrace {
            d,
            eta,
            items,
            invalid_predictions,
        },
        spend: state.spends().to_vec(),
        levels,
    })
}
