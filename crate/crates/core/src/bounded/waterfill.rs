//! Event-exact continuous water-filling over buyer levels.
//!
//! Time runs while an item is being sold; every buyer in the current
//! lowest-level set receives item fraction at rate 1. The simulation jumps
//! from breakpoint to breakpoint: a receiving buyer reaches the next level
//! boundary (the last boundary is its budget), crosses the `eta` spend
//! threshold (stage 1 only), or the requested amount runs out.

use crate::error::{Error, Result};
use crate::market::BuyerId;

/// Relative snapping tolerance for spend values landing on a boundary.
const SNAP: f64 = 1e-12;
/// Item fractions below this are treated as fully consumed.
pub(crate) const AMOUNT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    /// Water-filling while some interested buyer is below the `eta` threshold.
    One,
    /// Assignment to the predicted buyer.
    Two,
    /// Water-filling of the remainder.
    Three,
}

impl Stage {
    pub fn tag(self) -> &'static str {
        match self {
            Stage::One => "stage1",
            Stage::Two => "stage2",
            Stage::Three => "stage3",
        }
    }
}

/// A piece of one item allocated to one buyer between two breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub stage: Stage,
    pub buyer: BuyerId,
    pub fraction: f64,
    /// The buyer's level while receiving this piece.
    pub level: usize,
    /// Revenue of the piece, `price * fraction`.
    pub primal: f64,
    /// Dual objective attributed to the piece through `y` (filled after the run).
    pub dual_y: f64,
    /// Dual objective attributed to the piece through `z` (filled after the run).
    pub dual_z: f64,
}

impl Segment {
    pub fn dual(&self) -> f64 {
        self.dual_y + self.dual_z
    }
}

/// Per-buyer spend and level. Buyer `i` sits at level `l` while its spend is in
/// `[l/d B_i, (l+1)/d B_i)`; level `d` means the budget is exhausted.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelState {
    d: usize,
    budgets: Vec<f64>,
    spend: Vec<f64>,
    level: Vec<usize>,
}

impl LevelState {
    pub fn new(budgets: &[f64], d: usize) -> Self {
        Self {
            d: d.max(1),
            budgets: budgets.to_vec(),
            spend: vec![0.0; budgets.len()],
            level: vec![0; budgets.len()],
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn spend(&self, buyer: BuyerId) -> f64 {
        self.spend[buyer - 1]
    }

    pub fn spends(&self) -> &[f64] {
        &self.spend
    }

    pub fn level(&self, buyer: BuyerId) -> usize {
        self.level[buyer - 1]
    }

    pub fn levels(&self) -> &[usize] {
        &self.level
    }

    pub fn budget(&self, buyer: BuyerId) -> f64 {
        self.budgets[buyer - 1]
    }

    pub fn spent_fraction(&self, buyer: BuyerId) -> f64 {
        self.spend(buyer) / self.budget(buyer)
    }

    pub fn is_exhausted(&self, buyer: BuyerId) -> bool {
        self.level(buyer) >= self.d
    }

    /// Spend below `eta B_i` (exhausted buyers never are).
    pub fn is_below(&self, buyer: BuyerId, eta: f64) -> bool {
        let b = self.budget(buyer);
        !self.is_exhausted(buyer) && self.spend(buyer) < eta * b - SNAP * b
    }

    /// Spend at which `buyer` enters `level`.
    fn boundary(&self, buyer: BuyerId, level: usize) -> f64 {
        let b = self.budget(buyer);
        if level >= self.d {
            b
        } else {
            b * level as f64 / self.d as f64
        }
    }

    /// Money still needed to reach the next level boundary.
    fn to_next_boundary(&self, buyer: BuyerId) -> f64 {
        (self.boundary(buyer, self.level(buyer) + 1) - self.spend(buyer)).max(0.0)
    }

    /// Adds spend, snapping onto the next level boundary (and advancing the
    /// level) or onto the `eta` threshold when within rounding distance.
    fn credit(&mut self, buyer: BuyerId, money: f64, eta: Option<f64>) {
        let k = buyer - 1;
        let b = self.budgets[k];
        self.spend[k] += money;
        let next = self.boundary(buyer, self.level[k] + 1);
        if self.spend[k] >= next - SNAP * b {
            self.spend[k] = next;
            self.level[k] += 1;
        } else if let Some(eta) = eta {
            if (self.spend[k] - eta * b).abs() <= SNAP * b {
                self.spend[k] = eta * b;
            }
        }
    }
}

/// Water-fills `amount` of an item priced `price` over the non-exhausted
/// buyers of `eligible`, lowest level first, at equal item-fraction rates.
///
/// With `eta_stop = Some(eta)` filling also stops once no eligible buyer spends
/// less than `eta` of its budget. Returns the unsold remainder.
pub(crate) fn fill(
    state: &mut LevelState,
    price: f64,
    eligible: &[BuyerId],
    mut amount: f64,
    eta_stop: Option<f64>,
    stage: Stage,
    out: &mut Vec<Segment>,
) -> f64 {
    let mut active: Vec<BuyerId> = eligible.to_vec();
    let mut recipients: Vec<BuyerId> = Vec::with_capacity(eligible.len());
    let max_rounds = 4 + eligible.len() * (state.d + 3);
    for _ in 0..max_rounds {
        if amount <= AMOUNT_TOL {
            return 0.0;
        }
        active.retain(|&i| !state.is_exhausted(i));
        if active.is_empty() {
            return amount;
        }
        if let Some(eta) = eta_stop {
            if !active.iter().any(|&i| state.is_below(i, eta)) {
                return amount;
            }
        }
        let low = active.iter().map(|&i| state.level(i)).min().expect("nonempty");
        recipients.clear();
        recipients.extend(active.iter().copied().filter(|&i| state.level(i) == low));

        let share = recipients.len() as f64;
        let mut dt = amount / share;
        for &i in &recipients {
            dt = dt.min(state.to_next_boundary(i) / price);
            if let Some(eta) = eta_stop {
                if state.is_below(i, eta) {
                    dt = dt.min((eta * state.budget(i) - state.spend(i)) / price);
                }
            }
        }
        let dt = dt.max(0.0);
        for &i in &recipients {
            let level = state.level(i);
            state.credit(i, dt * price, eta_stop);
            if dt > 0.0 {
                out.push(Segment {
                    stage,
                    buyer: i,
                    fraction: dt,
                    level,
                    primal: dt * price,
                    dual_y: 0.0,
                    dual_z: 0.0,
                });
            }
        }
        amount -= dt * share;
    }
    unreachable!("water-filling did not reach a breakpoint fixpoint")
}

/// Gives up to `amount` of an item to a single buyer, stopping at exhaustion.
/// Returns the fraction actually assigned.
pub(crate) fn assign_single(
    state: &mut LevelState,
    price: f64,
    buyer: BuyerId,
    amount: f64,
    stage: Stage,
    out: &mut Vec<Segment>,
) -> f64 {
    let mut left = amount;
    while left > AMOUNT_TOL && !state.is_exhausted(buyer) {
        let level = state.level(buyer);
        let step = left.min(state.to_next_boundary(buyer) / price);
        state.credit(buyer, step * price, None);
        if step > 0.0 {
            out.push(Segment {
                stage,
                buyer,
                fraction: step,
                level,
                primal: step * price,
                dual_y: 0.0,
                dual_z: 0.0,
            });
        }
        left -= step;
    }
    amount - left.max(0.0)
}

/// Result of a single water-filling call.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFillStep {
    /// Breakpoint-by-breakpoint allocations, in event order.
    pub segments: Vec<Segment>,
    /// Fraction of the requested amount left unsold.
    pub remainder: f64,
}

/// Water-fills `amount` of an item with `price` over `eligible`, mutating `state`.
pub fn water_fill_step(state: &mut LevelState, price: f64, eligible: &[BuyerId], amount: f64) -> Result<WaterFillStep> {
    if !(amount > 0.0 && amount <= 1.0) {
        return Err(Error::invalid(format!("amount must lie in (0, 1], got {amount}")));
    }
    if !(price.is_finite() && price > 0.0) {
        return Err(Error::invalid(format!("price must be positive, got {price}")));
    }
    if let Some(&i) = eligible.iter().find(|&&i| i == 0 || i > state.budgets.len()) {
        return Err(Error::invalid(format!("unknown buyer {i}")));
    }
    let mut segments = Vec::new();
    let remainder = fill(state, price, eligible, amount, None, Stage::Three, &mut segments);
    Ok(WaterFillStep { segments, remainder })
}
