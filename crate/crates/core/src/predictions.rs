//! Synthetic predictions: an optimal integral assignment with a controlled
//! fraction of items moved to another buyer.

use crate::error::{Error, Result};
use crate::market::{AuctionInstance, BoundedInstance, BuyerId, Market, Prediction, FICTITIOUS};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Per-item perturbation probability.
    pub error_rate: f64,
    pub seed: u64,
    /// Bounded allocation only: perturb just when at least two alternative
    /// buyers exist (instead of at least one).
    pub literal_alternatives: bool,
}

impl OracleConfig {
    pub fn new(error_rate: f64, seed: u64) -> Self {
        Self {
            error_rate,
            seed,
            literal_alternatives: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.error_rate) {
            return Err(Error::invalid(format!(
                "error rate must lie in [0, 1], got {}",
                self.error_rate
            )));
        }
        Ok(())
    }
}

/// Replaces each item's base buyer, with probability `error_rate`, by a buyer
/// drawn uniformly from the other interested buyers. Items with a single
/// interested buyer are never changed.
///
/// Every item consumes exactly one uniform draw for the coin, plus one index
/// draw when the coin succeeds and an alternative exists.
pub fn perturb_bounded(instance: &BoundedInstance, base: &Prediction, config: &OracleConfig) -> Result<Prediction> {
    config.validate()?;
    base.validate(instance)?;
    let mut rng = SplitMix64::new(config.seed);
    let mut out = base.0.clone();
    let mut alternatives = Vec::new();
    for (j, item) in instance.items().iter().enumerate() {
        let b = base.get(j);
        if b != FICTITIOUS && !item.interested.contains(&b) {
            return Err(Error::invalid(format!(
                "base assigns item {} to buyer {b}, who is not interested",
                j + 1
            )));
        }
        let flip = rng.chance(config.error_rate);
        if !flip || item.interested.len() == 1 {
            continue;
        }
        alternatives.clear();
        alternatives.extend(item.interested.iter().copied().filter(|&i| i != b));
        let needed = if config.literal_alternatives { 2 } else { 1 };
        if alternatives.len() >= needed {
            out[j] = alternatives[rng.index(alternatives.len())];
        }
    }
    Ok(Prediction(out))
}

/// Replaces each item's base buyer, with probability `error_rate`, by a
/// uniformly drawn positive bidder, keeping the swap only if the whole
/// mapping (base plus swaps committed so far) stays within every budget.
pub fn perturb_auction(instance: &AuctionInstance, base: &Prediction, config: &OracleConfig) -> Result<Prediction> {
    config.validate()?;
    let value = prediction_value(instance, base)?;
    if !value.feasible {
        return Err(Error::invalid(format!(
            "base assignment overruns the budget of {} buyer(s)",
            value.violations.len()
        )));
    }
    let mut load = value.loads;
    let mut rng = SplitMix64::new(config.seed);
    let mut out = base.0.clone();
    for (j, slot) in out.iter_mut().enumerate() {
        let flip = rng.chance(config.error_rate);
        let bids = instance.item_bids(j);
        if !flip || bids.is_empty() {
            continue;
        }
        let (cand, bid) = bids[rng.index(bids.len())];
        let cur = *slot;
        if cand == cur {
            continue;
        }
        if load[cand - 1] + bid <= instance.budget(cand) {
            load[cand - 1] += bid;
            if cur != FICTITIOUS {
                load[cur - 1] -= instance.price(cur, j);
            }
            *slot = cand;
        }
    }
    Ok(Prediction(out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionValue {
    /// Value of the mapping, or 0 when it is infeasible.
    pub value: f64,
    /// Value ignoring budgets.
    pub raw_value: f64,
    pub feasible: bool,
    /// `(buyer, load, budget)` for every overrun budget.
    pub violations: Vec<(BuyerId, f64, f64)>,
    /// Per-buyer load, indexed by `buyer - 1`.
    pub loads: Vec<f64>,
}

/// Value of following a prediction integrally: the sum of the predicted
/// buyers' prices if no budget is overrun, otherwise 0.
pub fn prediction_value(market: &(impl Market + ?Sized), prediction: &Prediction) -> Result<PredictionValue> {
    prediction.validate(market)?;
    let mut loads = vec![0.0; market.num_buyers()];
    let mut raw = 0.0;
    for (j, &i) in prediction.as_slice().iter().enumerate() {
        if i != FICTITIOUS {
            let p = market.price(i, j);
            loads[i - 1] += p;
            raw += p;
        }
    }
    let violations: Vec<_> = loads
        .iter()
        .zip(market.budgets())
        .enumerate()
        .filter(|(_, (&l, &b))| l > b * (1.0 + crate::market::EPS))
        .map(|(k, (&l, &b))| (k + 1, l, b))
        .collect();
    let feasible = violations.is_empty();
    Ok(PredictionValue {
        value: if feasible { raw } else { 0.0 },
        raw_value: raw,
        feasible,
        violations,
        loads,
    })
}

/// Number of items whose predicted buyer differs between `a` and `b`.
pub fn changed_items(a: &Prediction, b: &Prediction) -> usize {
    a.as_slice().iter().zip(b.as_slice()).filter(|(x, y)| x != y).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::BoundedItem;

    fn instance1() -> BoundedInstance {
        let items = (1..=5)
            .map(|j| BoundedItem {
                price: 100.0,
                interested: (j..=5).collect(),
            })
            .collect();
        BoundedInstance::new(vec![100.0; 5], items).unwrap()
    }

    #[test]
    fn zero_rate_keeps_base() {
        let inst = instance1();
        let base = Prediction(vec![1, 2, 3, 4, 5]);
        let p = perturb_bounded(&inst, &base, &OracleConfig::new(0.0, 3)).unwrap();
        assert_eq!(p, base);
    }

    #[test]
    fn full_rate_moves_every_flexible_item() {
        let inst = instance1();
        let base = Prediction(vec![1, 2, 3, 4, 5]);
        for seed in 0..50 {
            let p = perturb_bounded(&inst, &base, &OracleConfig::new(1.0, seed)).unwrap();
            for j in 0..4 {
                assert_ne!(p.get(j), base.get(j));
                assert!(inst.item(j).interested.contains(&p.get(j)));
            }
            assert_eq!(p.get(4), 5);
        }
    }

    #[test]
    fn literal_reading_skips_two_buyer_items() {
        let inst = instance1();
        let base = Prediction(vec![1, 2, 3, 4, 5]);
        let cfg = OracleConfig {
            literal_alternatives: true,
            ..OracleConfig::new(1.0, 1)
        };
        let p = perturb_bounded(&inst, &base, &cfg).unwrap();
        // item 4 has S = {4, 5}: one alternative only
        assert_eq!(p.get(3), 4);
        assert_ne!(p.get(0), 1);
    }

    #[test]
    fn rejects_uninterested_base() {
        let inst = instance1();
        assert!(perturb_bounded(&inst, &Prediction(vec![1, 1, 3, 4, 5]), &OracleConfig::new(0.5, 1)).is_err());
    }

    #[test]
    fn values() {
        let inst = instance1();
        assert_eq!(
            prediction_value(&inst, &Prediction(vec![1, 2, 3, 4, 5])).unwrap().value,
            500.0
        );
        assert_eq!(prediction_value(&inst, &Prediction::none(5)).unwrap().value, 0.0);
        let over = prediction_value(&inst, &Prediction(vec![5, 5, 5, 5, 5])).unwrap();
        assert_eq!(over.value, 0.0);
        assert!(!over.feasible);
        assert_eq!(over.violations, vec![(5, 500.0, 100.0)]);
    }

    #[test]
    fn auction_swaps_stay_feasible() {
        let inst = AuctionInstance::new(
            vec![10.0, 10.0],
            vec![vec![(1, 6.0), (2, 6.0)], vec![(1, 6.0), (2, 6.0)]],
        )
        .unwrap();
        let base = Prediction(vec![1, 2]);
        for seed in 0..40 {
            let p = perturb_auction(&inst, &base, &OracleConfig::new(1.0, seed)).unwrap();
            assert!(prediction_value(&inst, &p).unwrap().feasible);
        }
        assert!(perturb_auction(&inst, &Prediction(vec![1, 1]), &OracleConfig::new(0.5, 1)).is_err());
    }

    #[test]
    fn slack_budgets_resample_every_item() {
        let inst = AuctionInstance::new(vec![10_000.0; 3], vec![vec![(1, 1.0), (2, 1.0), (3, 1.0)]; 3000]).unwrap();
        let base = Prediction(vec![1; 3000]);
        let p = perturb_auction(&inst, &base, &OracleConfig::new(1.0, 4)).unwrap();
        let moved = changed_items(&base, &p) as f64 / 3000.0;
        // a uniform draw over three bidders keeps the base buyer a third of the time
        assert!((moved - 2.0 / 3.0).abs() < 0.03, "{moved}");
    }
}
