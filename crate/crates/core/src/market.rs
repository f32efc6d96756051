//! Instances, allocations, dual solutions and the feasibility checks shared by
//! both problems.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Buyer index. Real buyers are `1..=n`; [`FICTITIOUS`] is buyer `0`.
pub type BuyerId = usize;

/// The fictitious buyer: infinite budget, bids zero, absorbs unsold items.
pub const FICTITIOUS: BuyerId = 0;

/// Relative tolerance for every feasibility comparison.
pub const EPS: f64 = 1e-9;

/// Read access shared by both instance kinds.
pub trait Market {
    /// Budgets of buyers `1..=n`, stored at `budgets()[i - 1]`.
    fn budgets(&self) -> &[f64];

    fn num_items(&self) -> usize;

    /// Positive prices buyers are willing to pay for `item`, as `(buyer, price)`.
    fn bids(&self, item: usize) -> Bids<'_>;

    fn num_buyers(&self) -> usize {
        self.budgets().len()
    }

    /// Budget of a real buyer; the fictitious buyer has an infinite budget.
    fn budget(&self, buyer: BuyerId) -> f64 {
        if buyer == FICTITIOUS {
            f64::INFINITY
        } else {
            self.budgets()[buyer - 1]
        }
    }

    /// Price `buyer` pays for the whole `item`; zero when not interested.
    fn price(&self, buyer: BuyerId, item: usize) -> f64 {
        self.bids(item).find(|&(i, _)| i == buyer).map_or(0.0, |(_, p)| p)
    }

    /// Largest bid-to-budget ratio over all present bids.
    fn r_max(&self) -> f64 {
        let mut r: f64 = 0.0;
        for j in 0..self.num_items() {
            for (i, p) in self.bids(j) {
                r = r.max(p / self.budget(i));
            }
        }
        r
    }
}

/// Iterator over the bids of one item.
#[derive(Clone)]
pub enum Bids<'a> {
    Uniform {
        price: f64,
        buyers: std::slice::Iter<'a, BuyerId>,
    },
    Sparse(std::slice::Iter<'a, (BuyerId, f64)>),
}

impl Iterator for Bids<'_> {
    type Item = (BuyerId, f64);

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            Bids::Uniform { price, buyers } => buyers.next().map(|&i| (i, *price)),
            Bids::Sparse(it) => it.next().copied(),
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match self {
            Bids::Uniform { buyers, .. } => buyers.size_hint(),
            Bids::Sparse(it) => it.size_hint(),
        }
    }
}

impl ExactSizeIterator for Bids<'_> {}

fn check_budgets(budgets: &[f64]) -> Result<()> {
    for (k, &b) in budgets.iter().enumerate() {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::invalid(format!(
                "budget of buyer {} must be positive and finite, got {b}",
                k + 1
            )));
        }
    }
    Ok(())
}

/// An item with a fixed price and the set of buyers interested in it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedItem {
    pub price: f64,
    pub interested: Vec<BuyerId>,
}

/// Online bounded allocation instance: budgets plus an item stream in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedInstance {
    budgets: Vec<f64>,
    items: Vec<BoundedItem>,
    degree: usize,
}

impl BoundedInstance {
    pub fn new(budgets: Vec<f64>, items: Vec<BoundedItem>) -> Result<Self> {
        check_budgets(&budgets)?;
        let n = budgets.len();
        let mut degree = 0;
        for (j, item) in items.iter().enumerate() {
            if !(item.price.is_finite() && item.price > 0.0) {
                return Err(Error::invalid(format!(
                    "item {} has non-positive price {}",
                    j + 1,
                    item.price
                )));
            }
            if item.interested.is_empty() {
                return Err(Error::invalid(format!("item {} has no interested buyer", j + 1)));
            }
            let mut seen = HashSet::with_capacity(item.interested.len());
            for &i in &item.interested {
                if i == FICTITIOUS || i > n {
                    return Err(Error::invalid(format!(
                        "item {} names unknown buyer {i} (buyers are 1..={n})",
                        j + 1
                    )));
                }
                if !seen.insert(i) {
                    return Err(Error::invalid(format!("item {} lists buyer {i} twice", j + 1)));
                }
            }
            degree = degree.max(item.interested.len());
        }
        Ok(Self { budgets, items, degree })
    }

    pub fn items(&self) -> &[BoundedItem] {
        &self.items
    }

    pub fn item(&self, j: usize) -> &BoundedItem {
        &self.items[j]
    }

    /// `d = max_j |S_j|`, or 0 for an instance without items.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The same instance viewed as an ad-auction (every interested buyer bids the price).
    pub fn to_auction(&self) -> AuctionInstance {
        let items = self
            .items
            .iter()
            .map(|it| it.interested.iter().map(|&i| (i, it.price)).collect())
            .collect();
        AuctionInstance::new(self.budgets.clone(), items).expect("bounded instance is valid")
    }
}

impl Market for BoundedInstance {
    fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    fn num_items(&self) -> usize {
        self.items.len()
    }

    fn bids(&self, item: usize) -> Bids<'_> {
        let it = &self.items[item];
        Bids::Uniform {
            price: it.price,
            buyers: it.interested.iter(),
        }
    }
}

/// Online ad-auction instance: budgets plus per-item sparse bid vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionInstance {
    budgets: Vec<f64>,
    items: Vec<Vec<(BuyerId, f64)>>,
}

impl AuctionInstance {
    /// Zero bids are dropped: an absent bid means zero.
    pub fn new(budgets: Vec<f64>, items: Vec<Vec<(BuyerId, f64)>>) -> Result<Self> {
        check_budgets(&budgets)?;
        let n = budgets.len();
        let mut cleaned = Vec::with_capacity(items.len());
        for (j, bids) in items.into_iter().enumerate() {
            let mut seen = HashSet::with_capacity(bids.len());
            let mut kept = Vec::with_capacity(bids.len());
            for (i, b) in bids {
                if i == FICTITIOUS || i > n {
                    return Err(Error::invalid(format!(
                        "item {} has a bid from unknown buyer {i} (buyers are 1..={n})",
                        j + 1
                    )));
                }
                if !(b.is_finite() && b >= 0.0) {
                    return Err(Error::invalid(format!(
                        "item {} has invalid bid {b} from buyer {i}",
                        j + 1
                    )));
                }
                if !seen.insert(i) {
                    return Err(Error::invalid(format!("item {} has two bids from buyer {i}", j + 1)));
                }
                if b > 0.0 {
                    kept.push((i, b));
                }
            }
            cleaned.push(kept);
        }
        Ok(Self {
            budgets,
            items: cleaned,
        })
    }

    pub fn item_bids(&self, j: usize) -> &[(BuyerId, f64)] {
        &self.items[j]
    }
}

impl Market for AuctionInstance {
    fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    fn num_items(&self) -> usize {
        self.items.len()
    }

    fn bids(&self, item: usize) -> Bids<'_> {
        Bids::Sparse(self.items[item].iter())
    }
}

/// Either kind of instance, as read from an instance file.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Bounded(BoundedInstance),
    Auction(AuctionInstance),
}

impl Instance {
    pub fn as_market(&self) -> &dyn Market {
        match self {
            Instance::Bounded(b) => b,
            Instance::Auction(a) => a,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Bounded(_) => "bounded",
            Instance::Auction(_) => "auction",
        }
    }
}

/// One predicted buyer per item; `0` means "do not sell".
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Prediction(pub Vec<BuyerId>);

impl Prediction {
    pub fn none(items: usize) -> Self {
        Prediction(vec![FICTITIOUS; items])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, item: usize) -> BuyerId {
        self.0[item]
    }

    pub fn as_slice(&self) -> &[BuyerId] {
        &self.0
    }

    /// Checks length and buyer range against `market`.
    pub fn validate(&self, market: &(impl Market + ?Sized)) -> Result<()> {
        if self.len() != market.num_items() {
            return Err(Error::invalid(format!(
                "prediction has {} entries for {} items",
                self.len(),
                market.num_items()
            )));
        }
        let n = market.num_buyers();
        if let Some((j, &i)) = self.0.iter().enumerate().find(|(_, &i)| i > n) {
            return Err(Error::invalid(format!(
                "prediction for item {} names buyer {i} but there are {n} buyers",
                j + 1
            )));
        }
        Ok(())
    }
}

/// Sparse matrix of sold fractions `x_ij`, stored per item.
///
/// Fractions given to the fictitious buyer are not stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FractionalAllocation {
    num_buyers: usize,
    items: Vec<Vec<(BuyerId, f64)>>,
}

impl FractionalAllocation {
    pub fn new(num_buyers: usize, num_items: usize) -> Self {
        Self {
            num_buyers,
            items: vec![Vec::new(); num_items],
        }
    }

    /// Empty allocation shaped like `market`.
    pub fn for_market(market: &(impl Market + ?Sized)) -> Self {
        Self::new(market.num_buyers(), market.num_items())
    }

    pub fn num_buyers(&self) -> usize {
        self.num_buyers
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    /// Adds `fraction` to `x_{buyer,item}`.
    pub fn add(&mut self, item: usize, buyer: BuyerId, fraction: f64) {
        if buyer == FICTITIOUS || fraction == 0.0 {
            return;
        }
        assert!(buyer <= self.num_buyers, "buyer {buyer} out of range");
        let row = &mut self.items[item];
        match row.iter_mut().find(|(i, _)| *i == buyer) {
            Some(e) => e.1 += fraction,
            None => row.push((buyer, fraction)),
        }
    }

    pub fn get(&self, item: usize, buyer: BuyerId) -> f64 {
        self.items[item].iter().find(|(i, _)| *i == buyer).map_or(0.0, |e| e.1)
    }

    /// Nonzero entries of one item, in insertion order.
    pub fn entries(&self, item: usize) -> &[(BuyerId, f64)] {
        &self.items[item]
    }

    /// `(item, buyer, fraction)` over all stored entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, BuyerId, f64)> + '_ {
        self.items
            .iter()
            .enumerate()
            .flat_map(|(j, row)| row.iter().map(move |&(i, x)| (j, i, x)))
    }

    pub fn item_total(&self, item: usize) -> f64 {
        self.items[item].iter().map(|e| e.1).sum()
    }

    /// `alpha * x`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.items {
            for e in row.iter_mut() {
                e.1 *= alpha;
            }
        }
        out
    }

    fn check_shape(&self, market: &(impl Market + ?Sized)) -> Result<()> {
        if self.num_items() != market.num_items() || self.num_buyers != market.num_buyers() {
            return Err(Error::invalid(format!(
                "allocation is {} buyers x {} items, instance is {} x {}",
                self.num_buyers,
                self.num_items(),
                market.num_buyers(),
                market.num_items()
            )));
        }
        Ok(())
    }

    /// Per-buyer spend `s_i = sum_j price(i,j) x_ij`, indexed by `buyer - 1`.
    pub fn spend(&self, market: &(impl Market + ?Sized)) -> Result<Vec<f64>> {
        self.check_shape(market)?;
        let mut s = vec![0.0; self.num_buyers];
        for (j, i, x) in self.iter() {
            s[i - 1] += market.price(i, j) * x;
        }
        Ok(s)
    }

    /// Revenue with each buyer's payment capped at its budget.
    pub fn capped_revenue(&self, market: &(impl Market + ?Sized)) -> Result<f64> {
        let s = self.spend(market)?;
        Ok(s.iter().zip(market.budgets()).map(|(&s, &b)| s.min(b)).sum())
    }
}

/// Dual variables: `y` per buyer (stored at `y[i - 1]`) and `z` per item.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl DualSolution {
    pub fn zeros(num_buyers: usize, num_items: usize) -> Self {
        Self {
            y: vec![0.0; num_buyers],
            z: vec![0.0; num_items],
        }
    }

    /// `y` of a buyer; the fictitious buyer's is pinned to zero.
    pub fn y(&self, buyer: BuyerId) -> f64 {
        if buyer == FICTITIOUS {
            0.0
        } else {
            self.y[buyer - 1]
        }
    }

    /// `sum_i B_i y_i + sum_j z_j`.
    pub fn objective(&self, market: &(impl Market + ?Sized)) -> f64 {
        let by: f64 = self.y.iter().zip(market.budgets()).map(|(y, b)| y * b).sum();
        by + self.z.iter().sum::<f64>()
    }
}

/// `sum_ij price(i,j) x_ij`; the fictitious buyer contributes nothing.
pub fn revenue(market: &(impl Market + ?Sized), alloc: &FractionalAllocation) -> Result<f64> {
    alloc.check_shape(market)?;
    Ok(alloc.iter().map(|(j, i, x)| market.price(i, j) * x).sum())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrimalFeasibilityReport {
    /// `(buyer, spend, allowed)` for every buyer above `slack * B_i`.
    pub budget_violations: Vec<(BuyerId, f64, f64)>,
    /// `(item, total fraction)` for every item sold more than once.
    pub item_violations: Vec<(usize, f64)>,
    /// Negative entries or fractions given to a buyer without a bid.
    pub invalid_entries: Vec<(usize, BuyerId, f64)>,
    /// Largest relative excess over any constraint (0 when feasible).
    pub worst_violation: f64,
    /// Largest `spend / B_i - 1` over buyers, can be negative.
    pub max_overshoot: f64,
}

impl PrimalFeasibilityReport {
    pub fn passed(&self) -> bool {
        self.budget_violations.is_empty() && self.item_violations.is_empty() && self.invalid_entries.is_empty()
    }
}

/// Checks `spend_i <= slack * B_i` and `sum_i x_ij <= 1` up to [`EPS`].
pub fn check_primal_feasibility(
    market: &(impl Market + ?Sized),
    alloc: &FractionalAllocation,
    budget_slack: f64,
) -> Result<PrimalFeasibilityReport> {
    if !(budget_slack >= 1.0) {
        return Err(Error::invalid(format!("budget slack must be >= 1, got {budget_slack}")));
    }
    let spend = alloc.spend(market)?;
    let mut report = PrimalFeasibilityReport {
        max_overshoot: f64::NEG_INFINITY,
        ..Default::default()
    };
    for (k, (&s, &b)) in spend.iter().zip(market.budgets()).enumerate() {
        let allowed = budget_slack * b;
        report.max_overshoot = report.max_overshoot.max(s / b - 1.0);
        if s > allowed * (1.0 + EPS) {
            report.budget_violations.push((k + 1, s, allowed));
            report.worst_violation = report.worst_violation.max(s / allowed - 1.0);
        }
    }
    if spend.is_empty() {
        report.max_overshoot = 0.0;
    }
    for j in 0..alloc.num_items() {
        for &(i, x) in alloc.entries(j) {
            if x < -EPS || (x > 0.0 && market.price(i, j) == 0.0) {
                report.invalid_entries.push((j, i, x));
                report.worst_violation = report.worst_violation.max(x.abs());
            }
        }
        let total = alloc.item_total(j);
        if total > 1.0 + EPS {
            report.item_violations.push((j, total));
            report.worst_violation = report.worst_violation.max(total - 1.0);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualFeasibilityReport {
    /// `(item, buyer, slack)` for every covering constraint short by more than tolerance.
    pub violations: Vec<(usize, BuyerId, f64)>,
    pub negative_entries: usize,
    /// Largest `(price - price*y_i - z_j) / price` (0 when feasible).
    pub worst_violation: f64,
}

impl DualFeasibilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.negative_entries == 0
    }
}

/// Checks `price*y_i + z_j >= price` for every bid, and `y, z >= 0`.
pub fn check_dual_feasibility(market: &(impl Market + ?Sized), dual: &DualSolution) -> Result<DualFeasibilityReport> {
    if dual.y.len() != market.num_buyers() || dual.z.len() != market.num_items() {
        return Err(Error::invalid(format!(
            "dual has {} buyer and {} item variables for a {} x {} instance",
            dual.y.len(),
            dual.z.len(),
            market.num_buyers(),
            market.num_items()
        )));
    }
    let mut report = DualFeasibilityReport {
        negative_entries: dual
            .y
            .iter()
            .chain(dual.z.iter())
            .filter(|&&v| v < 0.0 || v.is_nan())
            .count(),
        ..Default::default()
    };
    for j in 0..market.num_items() {
        let z = dual.z[j];
        for (i, p) in market.bids(j) {
            let short = p - (p * dual.y(i) + z);
            if short > EPS * p {
                report.violations.push((j, i, short));
                report.worst_violation = report.worst_violation.max(short / p);
            }
        }
    }
    Ok(report)
}

/// `(primal value, dual value)` for a primal solution feasible at `budget_slack`
/// and a feasible dual; refuses infeasible inputs.
pub fn duality_gap(
    market: &(impl Market + ?Sized),
    alloc: &FractionalAllocation,
    dual: &DualSolution,
    budget_slack: f64,
) -> Result<(f64, f64)> {
    let p = check_primal_feasibility(market, alloc, budget_slack)?;
    if !p.passed() {
        return Err(Error::Infeasible(format!(
            "primal: {} budget, {} item, {} entry violations (worst {:.3e})",
            p.budget_violations.len(),
            p.item_violations.len(),
            p.invalid_entries.len(),
            p.worst_violation
        )));
    }
    let d = check_dual_feasibility(market, dual)?;
    if !d.passed() {
        return Err(Error::Infeasible(format!(
            "dual: {} covering violations, {} negative entries (worst {:.3e})",
            d.violations.len(),
            d.negative_entries,
            d.worst_violation
        )));
    }
    Ok((revenue(market, alloc)?, dual.objective(market)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(budget: f64, prices: &[f64]) -> BoundedInstance {
        BoundedInstance::new(
            vec![budget],
            prices
                .iter()
                .map(|&p| BoundedItem {
                    price: p,
                    interested: vec![1],
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn revenue_zero_and_identity() {
        let inst = single(100.0, &[100.0]);
        let mut x = FractionalAllocation::for_market(&inst);
        assert_eq!(revenue(&inst, &x).unwrap(), 0.0);
        x.add(0, 1, 1.0);
        assert_eq!(revenue(&inst, &x).unwrap(), 100.0);
    }

    #[test]
    fn revenue_rejects_shape_mismatch() {
        let inst = single(100.0, &[100.0]);
        let x = FractionalAllocation::new(2, 1);
        assert!(matches!(revenue(&inst, &x), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn fictitious_buyer_is_free() {
        let inst = single(100.0, &[100.0]);
        let mut x = FractionalAllocation::for_market(&inst);
        x.add(0, FICTITIOUS, 1.0);
        assert_eq!(revenue(&inst, &x).unwrap(), 0.0);
        assert_eq!(x.item_total(0), 0.0);
    }

    #[test]
    fn primal_budget_slack() {
        let inst = single(100.0, &[60.0, 60.0]);
        let zero = FractionalAllocation::for_market(&inst);
        assert!(check_primal_feasibility(&inst, &zero, 1.0).unwrap().passed());

        let mut x = FractionalAllocation::for_market(&inst);
        x.add(0, 1, 1.0);
        x.add(1, 1, 1.0);
        let r = check_primal_feasibility(&inst, &x, 1.0).unwrap();
        assert!(!r.passed());
        assert_eq!(r.budget_violations, vec![(1, 120.0, 100.0)]);
        assert!((r.worst_violation - 0.2).abs() < 1e-12);
        assert!(check_primal_feasibility(&inst, &x, 1.2).unwrap().passed());
    }

    #[test]
    fn primal_flags_oversold_items_and_non_edges() {
        let inst = BoundedInstance::new(
            vec![100.0, 100.0],
            vec![BoundedItem {
                price: 10.0,
                interested: vec![1],
            }],
        )
        .unwrap();
        let mut x = FractionalAllocation::for_market(&inst);
        x.add(0, 1, 0.8);
        x.add(0, 2, 0.3);
        let r = check_primal_feasibility(&inst, &x, 1.0).unwrap();
        assert_eq!(r.item_violations.len(), 1);
        assert_eq!(r.invalid_entries, vec![(0, 2, 0.3)]);
    }

    #[test]
    fn dual_feasibility_examples() {
        let inst = BoundedInstance::new(
            vec![50.0, 70.0],
            vec![
                BoundedItem {
                    price: 10.0,
                    interested: vec![1, 2],
                },
                BoundedItem {
                    price: 30.0,
                    interested: vec![2],
                },
            ],
        )
        .unwrap();
        let ones = DualSolution {
            y: vec![1.0, 1.0],
            z: vec![0.0, 0.0],
        };
        assert!(check_dual_feasibility(&inst, &ones).unwrap().passed());
        let zs = DualSolution {
            y: vec![0.0, 0.0],
            z: vec![10.0, 30.0],
        };
        assert!(check_dual_feasibility(&inst, &zs).unwrap().passed());
        let zero = DualSolution::zeros(2, 2);
        let r = check_dual_feasibility(&inst, &zero).unwrap();
        assert!(!r.passed());
        assert_eq!(r.violations.len(), 3);
        assert_eq!(r.worst_violation, 1.0);
    }

    #[test]
    fn duality_gap_examples() {
        let inst = single(100.0, &[100.0]);
        let zero = FractionalAllocation::for_market(&inst);
        let dz = DualSolution::zeros(1, 1);
        // zero dual is infeasible for a positive price
        assert!(matches!(duality_gap(&inst, &zero, &dz, 1.0), Err(Error::Infeasible(_))));
        let mut x = FractionalAllocation::for_market(&inst);
        x.add(0, 1, 1.0);
        let d = DualSolution {
            y: vec![1.0],
            z: vec![0.0],
        };
        assert_eq!(duality_gap(&inst, &x, &d, 1.0).unwrap(), (100.0, 100.0));

        let empty = BoundedInstance::new(vec![5.0], vec![]).unwrap();
        let x0 = FractionalAllocation::for_market(&empty);
        let d0 = DualSolution::zeros(1, 0);
        assert_eq!(duality_gap(&empty, &x0, &d0, 1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn instance_validation() {
        assert!(BoundedInstance::new(vec![0.0], vec![]).is_err());
        assert!(BoundedInstance::new(
            vec![1.0],
            vec![BoundedItem {
                price: 1.0,
                interested: vec![2]
            }]
        )
        .is_err());
        assert!(BoundedInstance::new(
            vec![1.0],
            vec![BoundedItem {
                price: 1.0,
                interested: vec![]
            }]
        )
        .is_err());
        assert!(AuctionInstance::new(vec![1.0], vec![vec![(1, -1.0)]]).is_err());
        let a = AuctionInstance::new(vec![10.0, 20.0], vec![vec![(1, 0.0), (2, 4.0)]]).unwrap();
        assert_eq!(a.item_bids(0), &[(2, 4.0)]);
        assert!((a.r_max() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn prediction_validation() {
        let inst = single(100.0, &[1.0, 2.0]);
        assert!(Prediction(vec![1, 0]).validate(&inst).is_ok());
        assert!(Prediction(vec![1]).validate(&inst).is_err());
        assert!(Prediction(vec![1, 2]).validate(&inst).is_err());
    }

    #[test]
    fn capped_revenue_clips_overspend() {
        let inst = single(100.0, &[60.0, 60.0]);
        let mut x = FractionalAllocation::for_market(&inst);
        x.add(0, 1, 1.0);
        x.add(1, 1, 1.0);
        assert_eq!(x.capped_revenue(&inst).unwrap(), 100.0);
    }
}
