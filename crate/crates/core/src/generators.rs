//! Instance generators: the hand-built Instance 1, random bounded-allocation
//! instances with the shapes of Instances 2-4, and the lognormal ad-auction
//! instance.

use crate::error::{Error, Result};
use crate::market::{AuctionInstance, BoundedInstance, BoundedItem, Instance};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Manual1,
    RandomBounded,
    LognormalAuction,
}

impl GeneratorKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "manual1" | "instance1" => Ok(Self::Manual1),
            "random_bounded" => Ok(Self::RandomBounded),
            "lognormal_auction" | "lognormal" => Ok(Self::LognormalAuction),
            _ => Err(Error::invalid(format!("unknown generator kind `{s}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Manual1 => "manual1",
            Self::RandomBounded => "random_bounded",
            Self::LognormalAuction => "lognormal_auction",
        }
    }
}

/// Parameters of every generator; fields a generator does not use are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub buyers: usize,
    pub items: usize,
    /// Largest interest-set size.
    pub d_bound: usize,
    pub budget_range: (f64, f64),
    pub price_range: (f64, f64),
    pub bidders_per_item: usize,
    /// Parameters of the underlying normal distribution.
    pub lognormal_mu: f64,
    pub lognormal_sigma: f64,
    pub budget_fraction: f64,
    /// Budgets as a share of the total of all bids, split evenly, instead of
    /// each buyer's own bid total.
    pub global_budget: bool,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn instance1() -> Self {
        Self {
            kind: GeneratorKind::Manual1,
            buyers: 5,
            items: 5,
            d_bound: 5,
            budget_range: (100.0, 100.0),
            price_range: (100.0, 100.0),
            ..Self::lognormal(0)
        }
    }

    fn bounded(buyers: usize, items: usize, d: usize, budget: (f64, f64), price: (f64, f64), seed: u64) -> Self {
        Self {
            kind: GeneratorKind::RandomBounded,
            buyers,
            items,
            d_bound: d,
            budget_range: budget,
            price_range: price,
            ..Self::lognormal(seed)
        }
    }

    /// 100 buyers, 1000 items, `d = 5`, budgets 10-100, prices 0.1-8.
    pub fn instance2(seed: u64) -> Self {
        Self::bounded(100, 1000, 5, (10.0, 100.0), (0.1, 8.0), seed)
    }

    /// 100 buyers, 10000 items, `d = 3`, budgets 10-1000, prices 1-10.
    pub fn instance3(seed: u64) -> Self {
        Self::bounded(100, 10_000, 3, (10.0, 1000.0), (1.0, 10.0), seed)
    }

    /// 80 buyers, 80 items, `d = 40`, budgets 10-100, prices 10-100.
    pub fn instance4(seed: u64) -> Self {
        Self::bounded(80, 80, 40, (10.0, 100.0), (10.0, 100.0), seed)
    }

    /// 100 buyers, 10000 items, 6 bidders per item, lognormal(0.5, 0.5) bids,
    /// budgets a 0.1 share of each buyer's bid total.
    pub fn lognormal(seed: u64) -> Self {
        Self {
            kind: GeneratorKind::LognormalAuction,
            buyers: 100,
            items: 10_000,
            d_bound: 6,
            budget_range: (0.0, 0.0),
            price_range: (0.0, 0.0),
            bidders_per_item: 6,
            lognormal_mu: 0.5,
            lognormal_sigma: 0.5,
            budget_fraction: 0.1,
            global_budget: false,
            seed,
        }
    }

    /// Named presets: `instance1` .. `instance4`, `lognormal`.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        match name {
            "instance1" => Ok(Self::instance1()),
            "instance2" => Ok(Self::instance2(seed)),
            "instance3" => Ok(Self::instance3(seed)),
            "instance4" => Ok(Self::instance4(seed)),
            "lognormal" => Ok(Self::lognormal(seed)),
            _ => Err(Error::invalid(format!("unknown preset `{name}`"))),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
        return Err(Error::invalid(format!(
            "{name} range ({lo}, {hi}) must satisfy 0 < lo <= hi"
        )));
    }
    Ok(())
}

/// 5 buyers and 5 items, all budgets and prices 100, item `j` wanted by every
/// buyer `i >= j`.
pub fn generate_instance1() -> BoundedInstance {
    let items = (1..=5)
        .map(|j| BoundedItem {
            price: 100.0,
            interested: (j..=5).collect(),
        })
        .collect();
    BoundedInstance::new(vec![100.0; 5], items).expect("instance 1 is valid")
}

/// Budgets uniform in the budget range; per item a uniform price, a size
/// uniform in `1..=d_bound`, and that many distinct uniform buyers.
///
/// Draw order: all budgets, then per item price, size, members.
pub fn generate_random_bounded(spec: &GeneratorSpec) -> Result<BoundedInstance> {
    check_range("budget", spec.budget_range)?;
    check_range("price", spec.price_range)?;
    if spec.buyers == 0 {
        return Err(Error::invalid("need at least one buyer"));
    }
    if spec.d_bound == 0 || spec.d_bound > spec.buyers {
        return Err(Error::invalid(format!(
            "d_bound {} must lie in 1..={}",
            spec.d_bound, spec.buyers
        )));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let budgets: Vec<f64> = (0..spec.buyers)
        .map(|_| rng.uniform(spec.budget_range.0, spec.budget_range.1))
        .collect();
    let items = (0..spec.items)
        .map(|_| {
            let price = rng.uniform(spec.price_range.0, spec.price_range.1);
            let size = 1 + rng.index(spec.d_bound);
            let interested = rng
                .sample_distinct(spec.buyers, size)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            BoundedItem { price, interested }
        })
        .collect();
    BoundedInstance::new(budgets, items)
}

/// Per item, `bidders_per_item` distinct uniform buyers bid
/// `exp(mu + sigma * N(0,1))`; then each budget is `budget_fraction` of that
/// buyer's bid total (or of the global total split evenly). A buyer without
/// bids gets the fraction of the mean per-buyer total.
pub fn generate_lognormal_auction(spec: &GeneratorSpec) -> Result<AuctionInstance> {
    if spec.buyers == 0 || spec.bidders_per_item == 0 || spec.bidders_per_item > spec.buyers {
        return Err(Error::invalid(format!(
            "bidders per item {} must lie in 1..={}",
            spec.bidders_per_item, spec.buyers
        )));
    }
    if !(spec.budget_fraction > 0.0 && spec.budget_fraction.is_finite()) {
        return Err(Error::invalid("budget fraction must be positive"));
    }
    if !(spec.lognormal_sigma >= 0.0 && spec.lognormal_mu.is_finite()) {
        return Err(Error::invalid("invalid lognormal parameters"));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let mut totals = vec![0.0; spec.buyers];
    let items: Vec<Vec<(usize, f64)>> = (0..spec.items)
        .map(|_| {
            let who = rng.sample_distinct(spec.buyers, spec.bidders_per_item);
            who.into_iter()
                .map(|i| {
                    let b = (spec.lognormal_mu + spec.lognormal_sigma * rng.standard_normal()).exp();
                    totals[i] += b;
                    (i + 1, b)
                })
                .collect()
        })
        .collect();
    let grand: f64 = totals.iter().sum();
    let mean = grand / spec.buyers as f64;
    let budgets = totals
        .iter()
        .map(|&t| {
            let base = if spec.global_budget || t == 0.0 { mean } else { t };
            let b = spec.budget_fraction * base;
            if b > 0.0 {
                b
            } else {
                spec.budget_fraction
            }
        })
        .collect();
    AuctionInstance::new(budgets, items)
}

/// Dispatches on `spec.kind`.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance> {
    Ok(match spec.kind {
        GeneratorKind::Manual1 => Instance::Bounded(generate_instance1()),
        GeneratorKind::RandomBounded => Instance::Bounded(generate_random_bounded(spec)?),
        GeneratorKind::LognormalAuction => Instance::Auction(generate_lognormal_auction(spec)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Market;

    #[test]
    fn instance1_structure() {
        let inst = generate_instance1();
        assert_eq!(inst.item(0).interested, vec![1, 2, 3, 4, 5]);
        assert_eq!(inst.item(4).interested, vec![5]);
        assert_eq!(inst.degree(), 5);
    }

    #[test]
    fn degree_one() {
        let spec = GeneratorSpec {
            d_bound: 1,
            ..GeneratorSpec::instance2(3)
        };
        let inst = generate_random_bounded(&spec).unwrap();
        assert!(inst.items().iter().all(|it| it.interested.len() == 1));
    }

    #[test]
    fn ranges_respected_and_deterministic() {
        let spec = GeneratorSpec::instance4(11);
        let a = generate_random_bounded(&spec).unwrap();
        let b = generate_random_bounded(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.budgets().iter().all(|&x| (10.0..=100.0).contains(&x)));
        assert!(a
            .items()
            .iter()
            .all(|it| (10.0..=100.0).contains(&it.price) && it.interested.len() <= 40));
        assert_ne!(a, generate_random_bounded(&spec.clone().with_seed(12)).unwrap());
    }

    #[test]
    fn invalid_specs() {
        let mut spec = GeneratorSpec::instance2(1);
        spec.d_bound = 101;
        assert!(generate_random_bounded(&spec).is_err());
        let mut spec = GeneratorSpec::instance2(1);
        spec.price_range = (5.0, 1.0);
        assert!(generate_random_bounded(&spec).is_err());
        let mut spec = GeneratorSpec::lognormal(1);
        spec.bidders_per_item = 101;
        assert!(generate_lognormal_auction(&spec).is_err());
    }

    #[test]
    fn lognormal_shape() {
        let spec = GeneratorSpec {
            items: 2000,
            ..GeneratorSpec::lognormal(5)
        };
        let inst = generate_lognormal_auction(&spec).unwrap();
        assert!((0..inst.num_items()).all(|j| inst.item_bids(j).len() == 6));
        let r = inst.r_max();
        assert!(r > 0.0 && r < 1.0, "{r}");
    }
}
