use crate::error::{Error, Result};

/// Coefficients of the piecewise-linear potential `f_d` on `[0, 1]`.
///
/// `f_d` has slope `d * a_l` on `[(l-1)/d, l/d)`, with
/// `a_1 = 1 / (d q^(d-1) - (d-1))`, `a_l = a_1 q^(l-1)` and `q = 1 + 1/(d-1)`,
/// so that `f_d(0) = 0` and `f_d(1) = 1`. The steepest slope is `d * a_d = 1/C(d)`.
///
/// `d = 1` degenerates to `f_1(u) = u` and `C(1) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCoefficients {
    d: usize,
    a1: f64,
    ln_q: f64,
    capacity: f64,
}

/// `q^k` computed as `exp(k ln q)`; stable for large `d`.
fn qpow(ln_q: f64, k: f64) -> f64 {
    (k * ln_q).exp()
}

impl PotentialCoefficients {
    pub fn new(d: usize) -> Result<Self> {
        match d {
            0 => Err(Error::invalid("level count d must be at least 1")),
            1 => Ok(Self {
                d,
                a1: 1.0,
                ln_q: 0.0,
                capacity: 1.0,
            }),
            _ => {
                let dm1 = (d - 1) as f64;
                let ln_q = (1.0 / dm1).ln_1p();
                let df = d as f64;
                let growth = qpow(ln_q, dm1);
                let a1 = 1.0 / (df * growth - dm1);
                Ok(Self {
                    d,
                    a1,
                    ln_q,
                    capacity: 1.0 - dm1 / (df * growth),
                })
            }
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `C(d)`.
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// `a_l` for `l` in `1..=d`.
    pub fn a(&self, l: usize) -> f64 {
        assert!((1..=self.d).contains(&l), "level coefficient {l} out of 1..={}", self.d);
        self.a1 * qpow(self.ln_q, (l - 1) as f64)
    }

    /// All coefficients `a_1..=a_d`.
    pub fn coefficients(&self) -> Vec<f64> {
        (1..=self.d).map(|l| self.a(l)).collect()
    }

    /// `f_d(l/d) = a_1 + ... + a_l`.
    pub fn at_level(&self, l: usize) -> f64 {
        assert!(l <= self.d);
        if l == self.d {
            return 1.0;
        }
        if self.d == 1 {
            return 0.0;
        }
        // geometric sum a_1 (q^l - 1)/(q - 1) with q - 1 = 1/(d-1)
        self.a1 * (self.d - 1) as f64 * (qpow(self.ln_q, l as f64) - 1.0)
    }

    /// Slope of `f_d` while the spent fraction sits in level `level`
    /// (i.e. on `[level/d, (level+1)/d)`), which is `d * a_{level+1}`.
    pub fn slope_in_level(&self, level: usize) -> f64 {
        self.d as f64 * self.a(level + 1)
    }

    /// `f_d(u)` for `u` in `[0, 1]`.
    pub fn value(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::invalid(format!("potential argument {u} outside [0, 1]")));
        }
        if u == 1.0 {
            return Ok(1.0);
        }
        let df = self.d as f64;
        let l = ((u * df).floor() as usize).min(self.d - 1);
        Ok(self.at_level(l) + self.slope_in_level(l) * (u - l as f64 / df))
    }

    /// `f_d(floor(u d)/d)`: the potential at the level boundary below `u`.
    pub fn value_at_floor(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::invalid(format!("potential argument {u} outside [0, 1]")));
        }
        Ok(self.at_level(((u * self.d as f64).floor() as usize).min(self.d)))
    }
}

/// `C(d) = 1 - (d-1) / (d (1 + 1/(d-1))^(d-1))`, with `C(1) = 1`.
pub fn capacity_constant(d: usize) -> Result<f64> {
    Ok(PotentialCoefficients::new(d)?.capacity())
}

/// `f_d(u)`.
pub fn potential_f(u: f64, coeffs: &PotentialCoefficients) -> Result<f64> {
    coeffs.value(u)
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// Guaranteed fraction of the prediction's value: `1 - eta`.
pub fn consistency_bound(eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(1.0 - eta)
}

/// Guaranteed fraction of the fractional optimum:
/// `1 / (1/C(d) + (1 - eta)(1 - f_d(eta)))`.
pub fn robustness_bound(eta: f64, d: usize) -> Result<f64> {
    check_eta(eta)?;
    let c = PotentialCoefficients::new(d)?;
    Ok(1.0 / (1.0 / c.capacity() + (1.0 - eta) * (1.0 - c.value(eta)?)))
}

/// Same bound with `f_d` evaluated at the level boundary `floor(eta d)/d`,
/// the quantity the dual certificate actually controls.
pub fn robustness_bound_at_floor(eta: f64, d: usize) -> Result<f64> {
    check_eta(eta)?;
    let c = PotentialCoefficients::new(d)?;
    Ok(1.0 / (1.0 / c.capacity() + (1.0 - eta) * (1.0 - c.value_at_floor(eta)?)))
}

/// Large-`d` limit of `f_d(eta)`: `1 + e (e^(eta-1) - 1) / (e - 1)`.
pub fn potential_limit(eta: f64) -> f64 {
    let e = std::f64::consts::E;
    1.0 + e * ((eta - 1.0).exp() - 1.0) / (e - 1.0)
}

/// Large-`d` limit of the robustness: `(e-1)/e / (1 + (1-eta)(1 - e^(eta-1)))`.
pub fn robustness_limit(eta: f64) -> f64 {
    let e = std::f64::consts::E;
    (e - 1.0) / e / (1.0 + (1.0 - eta) * (1.0 - (eta - 1.0).exp()))
}
