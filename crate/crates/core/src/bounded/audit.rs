use super::algorithm::BoundedTrace;
use super::potential::PotentialCoefficients;
use super::waterfill::Stage;

/// Which rate bound an item was checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Stage 1 and stage 3 segments of a completely sold item.
    WaterFill,
    /// Stage 2 segments of a completely sold item.
    Prediction,
    /// All segments of an item that was not completely sold.
    Unsold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateViolation {
    pub item: usize,
    pub regime: Regime,
    pub dual: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualRateAudit {
    pub items_checked: usize,
    pub prediction_items: usize,
    pub violations: Vec<RateViolation>,
    /// Sum of all attributed dual increments.
    pub dual_total: f64,
    pub primal_total: f64,
    /// Largest `dual / primal` over checked groups with positive primal.
    pub worst_rate: f64,
}

impl DualRateAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the per-item dual growth recorded in `trace`.
///
/// For a completely sold item, stage 1/3 increments may not exceed `1/C(d)`
/// times their primal, and stage 2 increments `1/C(d) + 1 - f_d(floor(eta d)/d)`
/// times theirs. An item not completely sold may cost at most `b_j / C(d)`.
pub fn dual_rate_audit(trace: &BoundedTrace) -> DualRateAudit {
    let coeffs = PotentialCoefficients::new(trace.d.max(1)).expect("d >= 1");
    let inv_c = 1.0 / coeffs.capacity();
    let eta_floor = coeffs.value_at_floor(trace.eta.clamp(0.0, 1.0)).expect("eta in range");
    let stage2_rate = inv_c + 1.0 - eta_floor;

    let mut audit = DualRateAudit::default();
    let check = |audit: &mut DualRateAudit, item: usize, regime, primal: f64, dual: f64, rate: f64, tol: f64| {
        let allowed = rate * primal + tol;
        if primal > 0.0 {
            audit.worst_rate = audit.worst_rate.max(dual / primal);
        }
        if dual > allowed {
            audit.violations.push(RateViolation {
                item,
                regime,
                dual,
                allowed,
            });
        }
    };

    for it in &trace.items {
        let tol = 1e-9 * it.price + 1e-12;
        let (mut p13, mut d13, mut p2, mut d2) = (0.0, 0.0, 0.0, 0.0);
        for s in &it.segments {
            if s.stage == Stage::Two {
                p2 += s.primal;
                d2 += s.dual();
            } else {
                p13 += s.primal;
                d13 += s.dual();
            }
        }
        audit.items_checked += 1;
        audit.primal_total += p13 + p2;
        audit.dual_total += d13 + d2;
        if it.completely_sold() {
            check(&mut audit, it.item, Regime::WaterFill, p13, d13, inv_c, tol);
            if p2 > 0.0 || d2 > 0.0 {
                audit.prediction_items += 1;
                check(&mut audit, it.item, Regime::Prediction, p2, d2, stage2_rate, tol);
            }
        } else {
            let (p, d) = (p13 + p2, d13 + d2);
            if d > inv_c * it.price + tol {
                audit.violations.push(RateViolation {
                    item: it.item,
                    regime: Regime::Unsold,
                    dual: d,
                    allowed: inv_c * it.price + tol,
                });
            }
            if p > 0.0 {
                audit.worst_rate = audit.worst_rate.max(d / p);
            }
        }
    }
    audit
}
