//! Economic parameters of the two fishing groups and the stock recruitment.

use serde::{Deserialize, Serialize};

use crate::error::{require, ModelError, Result};

/// One of the two negotiating fishing groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    First,
    Second,
}

impl Group {
    pub const BOTH: [Group; 2] = [Group::First, Group::Second];

    pub fn index(self) -> usize {
        match self {
            Group::First => 0,
            Group::Second => 1,
        }
    }

    pub fn other(self) -> Group {
        match self {
            Group::First => Group::Second,
            Group::Second => Group::First,
        }
    }
}

/// Cost and deviation-cost parameters of both groups plus the market price.
///
/// Costs of group `i` for a catch `q` at stock `x` are `(alpha_i q + beta_i q^2) / x`;
/// exceeding the scientific recommendation `r` with the total quota costs
/// `kappa_i (q_1 + q_2 - r)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconParams {
    alpha: [f64; 2],
    beta: [f64; 2],
    kappa: [f64; 2],
    price: f64,
}

/// Aggregates of [`EconParams`] that appear in every closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoeffs {
    /// Mean quadratic cost coefficient.
    pub u: f64,
    /// Cross deviation weight `beta_1 kappa_2 + beta_2 kappa_1`.
    pub w: f64,
    /// Cross linear/quadratic cost term `(alpha_1 beta_2 + alpha_2 beta_1) / 2`.
    pub v: f64,
    /// `beta_1 beta_2`.
    pub bb: f64,
}

impl EconParams {
    pub fn new(alpha: [f64; 2], beta: [f64; 2], kappa: [f64; 2], price: f64) -> Result<Self> {
        const NAMES: [[&str; 3]; 2] = [
            ["alpha_1", "beta_1", "kappa_1"],
            ["alpha_2", "beta_2", "kappa_2"],
        ];
        for i in 0..2 {
            require(
                alpha[i] > 0.0 && alpha[i].is_finite(),
                NAMES[i][0],
                alpha[i],
                "positive and finite",
            )?;
            require(
                beta[i] > 0.0 && beta[i].is_finite(),
                NAMES[i][1],
                beta[i],
                "positive and finite",
            )?;
            require(
                kappa[i] >= 0.0 && kappa[i].is_finite(),
                NAMES[i][2],
                kappa[i],
                "non-negative and finite",
            )?;
        }
        require(
            price > 0.0 && price.is_finite(),
            "price",
            price,
            "positive and finite",
        )?;
        Ok(Self {
            alpha,
            beta,
            kappa,
            price,
        })
    }

    /// `alpha = beta = kappa = 1` for both groups at price `p`.
    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new([1.0; 2], [1.0; 2], [1.0; 2], p)
    }

    pub fn alpha(&self, g: Group) -> f64 {
        self.alpha[g.index()]
    }

    pub fn beta(&self, g: Group) -> f64 {
        self.beta[g.index()]
    }

    pub fn kappa(&self, g: Group) -> f64 {
        self.kappa[g.index()]
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn alphas(&self) -> [f64; 2] {
        self.alpha
    }

    pub fn betas(&self) -> [f64; 2] {
        self.beta
    }

    pub fn kappas(&self) -> [f64; 2] {
        self.kappa
    }

    pub fn with_price(&self, price: f64) -> Result<Self> {
        Self::new(self.alpha, self.beta, self.kappa, price)
    }

    pub fn coeffs(&self) -> DerivedCoeffs {
        let [a1, a2] = self.alpha;
        let [b1, b2] = self.beta;
        let [k1, k2] = self.kappa;
        DerivedCoeffs {
            u: 0.5 * (b1 + b2),
            w: b1 * k2 + b2 * k1,
            v: 0.5 * (a1 * b2 + a2 * b1),
            bb: b1 * b2,
        }
    }

    /// Whether deviation costs exist at all (`w > 0`).
    pub fn has_deviation_costs(&self) -> bool {
        self.coeffs().w > 0.0
    }

    /// Unconstrained harvest of both groups without deviation costs,
    /// `(u p x - v) / (beta_1 beta_2)`. Unchecked; may be negative.
    pub fn r_hat(&self, x: f64) -> f64 {
        let c = self.coeffs();
        (c.u * self.price * x - c.v) / c.bb
    }

    /// Binding harvest `(u p x + w x r - v) / (beta_1 beta_2 + w x)`. Unchecked.
    pub fn h_binding(&self, x: f64, r: f64) -> f64 {
        let c = self.coeffs();
        (c.u * self.price * x + c.w * x * r - c.v) / (c.bb + c.w * x)
    }

    /// Individually optimal catch of group `g` in absence of deviation costs.
    pub fn solo_optimum(&self, g: Group, x: f64) -> f64 {
        (self.price * x - self.alpha(g)) / (2.0 * self.beta(g))
    }

    /// Stock level below which fishing is unprofitable for the fleet as a whole (`r_hat = 0`).
    pub fn break_even_stock(&self) -> f64 {
        let c = self.coeffs();
        c.v / (c.u * self.price)
    }
}

/// Logistic (Schaefer) recruitment `R(x) = g x (1 - x / K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recruitment {
    growth: f64,
    capacity: f64,
}

/// Points used for the numerical shape check at construction.
const SHAPE_GRID: usize = 256;

impl Recruitment {
    pub fn new(growth: f64, capacity: f64) -> Result<Self> {
        require(
            growth > 0.0 && growth.is_finite(),
            "growth",
            growth,
            "positive and finite",
        )?;
        require(
            capacity > 0.0 && capacity.is_finite(),
            "capacity",
            capacity,
            "positive and finite",
        )?;
        let rec = Self { growth, capacity };
        rec.check_shape()?;
        Ok(rec)
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Stock level of maximum recruitment.
    pub fn x_msy(&self) -> f64 {
        0.5 * self.capacity
    }

    /// Maximum recruitment `R(x_msy)`.
    pub fn max_rate(&self) -> f64 {
        0.25 * self.growth * self.capacity
    }

    /// `R(x)`; negative above capacity. Unchecked.
    pub fn rate(&self, x: f64) -> f64 {
        self.growth * x * (1.0 - x / self.capacity)
    }

    /// Verifies `R(0) = 0`, `R > 0` and increasing below `x_msy`, decreasing above.
    fn check_shape(&self) -> Result<()> {
        if self.rate(0.0) != 0.0 {
            return Err(ModelError::NotSchaeferShaped {
                x: 0.0,
                reason: "R(0) must vanish",
            });
        }
        let x_msy = self.x_msy();
        let top = self.capacity;
        let step = top / SHAPE_GRID as f64;
        let mut prev = self.rate(0.0);
        for k in 1..=SHAPE_GRID {
            let x = k as f64 * step;
            let val = self.rate(x);
            if x < x_msy {
                if val <= 0.0 {
                    return Err(ModelError::NotSchaeferShaped {
                        x,
                        reason: "R must be positive below x_msy",
                    });
                }
                if val <= prev {
                    return Err(ModelError::NotSchaeferShaped {
                        x,
                        reason: "R must increase below x_msy",
                    });
                }
            } else if x - step >= x_msy && val >= prev {
                return Err(ModelError::NotSchaeferShaped {
                    x,
                    reason: "R must decrease above x_msy",
                });
            }
            prev = val;
        }
        Ok(())
    }
}

/// `R(x)` for `x >= 0`.
pub fn recruitment(rec: &Recruitment, x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(ModelError::Domain {
            quantity: "recruitment",
            argument: "x",
            value: x,
        });
    }
    Ok(rec.rate(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_values() {
        let rec = Recruitment::new(1.0, 2.0).unwrap();
        assert_eq!(recruitment(&rec, 0.0).unwrap(), 0.0);
        assert_eq!(recruitment(&rec, 1.0).unwrap(), 0.5);
        assert_eq!(recruitment(&rec, 2.0).unwrap(), 0.0);
        assert_eq!(rec.x_msy(), 1.0);
        assert_eq!(rec.max_rate(), 0.5);
    }

    #[test]
    fn negative_stock_rejected() {
        let rec = Recruitment::new(1.0, 2.0).unwrap();
        assert!(matches!(
            recruitment(&rec, -0.1),
            Err(ModelError::Domain { .. })
        ));
    }

    #[test]
    fn shape_by_finite_differences() {
        let rec = Recruitment::new(0.7, 3.0).unwrap();
        let h = 1e-6;
        for k in 1..300 {
            let x = k as f64 * 3.0 / 300.0;
            let slope = (rec.rate(x + h) - rec.rate(x - h)) / (2.0 * h);
            if x < rec.x_msy() - 1e-3 {
                assert!(rec.rate(x) > 0.0 && slope > 0.0, "x = {x}");
            } else if x > rec.x_msy() + 1e-3 {
                assert!(slope < 0.0, "x = {x}");
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(Recruitment::new(0.0, 1.0).is_err());
        assert!(Recruitment::new(1.0, -1.0).is_err());
        assert!(EconParams::new([1.0, 1.0], [-1.0, 1.0], [1.0, 1.0], 2.0).is_err());
        assert!(EconParams::new([1.0, 0.0], [1.0, 1.0], [1.0, 1.0], 2.0).is_err());
        assert!(EconParams::new([1.0, 1.0], [1.0, 1.0], [-0.1, 1.0], 2.0).is_err());
        assert!(EconParams::new([1.0, 1.0], [1.0, 1.0], [1.0, 1.0], 0.0).is_err());
        // unmanaged fishery
        assert!(EconParams::new([1.0, 1.0], [1.0, 1.0], [0.0, 0.0], 2.0).is_ok());
    }

    #[test]
    fn derived_coefficients() {
        let p = EconParams::new([1.0, 2.0], [0.5, 3.0], [0.25, 4.0], 2.0).unwrap();
        let c = p.coeffs();
        assert_eq!(c.u, 1.75);
        assert_eq!(c.w, 0.5 * 4.0 + 3.0 * 0.25);
        assert_eq!(c.v, 0.5 * (1.0 * 3.0 + 2.0 * 0.5));
        assert_eq!(c.bb, 1.5);
    }
}
