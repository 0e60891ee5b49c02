//! Closed-form Nash equilibrium of the two-group quota negotiation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{positive_stock, require, ModelError, Result};
use crate::model::{EconParams, Group};

/// Absolute tolerance on harvest quantities at regime boundaries.
pub const REGIME_TOL: f64 = 1e-12;

/// Which branch of the total harvest function produced the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Harvest exceeds the recommendation; deviation costs shape the quotas.
    Binding,
    /// The fleet voluntarily catches no more than recommended.
    NonBinding,
    /// Fishing does not pay even without deviation costs.
    ShutdownUnprofitable,
    /// Recommendation so tight that no group fishes.
    ShutdownRestricted,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Binding => "Binding",
            Regime::NonBinding => "NonBinding",
            Regime::ShutdownUnprofitable => "ShutdownUnprofitable",
            Regime::ShutdownRestricted => "ShutdownRestricted",
        }
    }

    pub fn is_shutdown(self) -> bool {
        matches!(
            self,
            Regime::ShutdownUnprofitable | Regime::ShutdownRestricted
        )
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegotiationOutcome {
    pub q1: f64,
    pub q2: f64,
    pub h: f64,
    pub regime: Regime,
    /// True when a group's interior quota was negative and the
    /// equilibrium had to be re-solved with that group at zero.
    pub clamped: bool,
}

impl NegotiationOutcome {
    pub fn quota(&self, g: Group) -> f64 {
        match g {
            Group::First => self.q1,
            Group::Second => self.q2,
        }
    }

    fn shutdown(regime: Regime) -> Self {
        Self {
            q1: 0.0,
            q2: 0.0,
            h: 0.0,
            regime,
            clamped: false,
        }
    }
}

/// Harvest chosen by both groups when no deviation costs apply.
pub fn r_hat(params: &EconParams, x: f64) -> Result<f64> {
    positive_stock("r_hat", x)?;
    Ok(params.r_hat(x))
}

/// Total harvest when the recommendation binds.
pub fn harvest_binding(params: &EconParams, x: f64, r: f64) -> Result<f64> {
    positive_stock("harvest_binding", x)?;
    require(r >= 0.0, "r", r, "non-negative")?;
    if !params.has_deviation_costs() {
        return Err(ModelError::NoDeviationCosts);
    }
    Ok(params.h_binding(x, r))
}

/// Modified profit of `group` for its own quota `q_own` against `q_other`.
pub fn profit(
    params: &EconParams,
    group: Group,
    q_own: f64,
    q_other: f64,
    x: f64,
    r: f64,
) -> Result<f64> {
    positive_stock("profit", x)?;
    require(q_own >= 0.0, "q_own", q_own, "non-negative")?;
    require(q_other >= 0.0, "q_other", q_other, "non-negative")?;
    require(r >= 0.0, "r", r, "non-negative")?;
    Ok(profit_unchecked(params, group, q_own, q_other, x, r))
}

#[inline]
pub(crate) fn profit_unchecked(
    params: &EconParams,
    group: Group,
    q_own: f64,
    q_other: f64,
    x: f64,
    r: f64,
) -> f64 {
    let revenue = params.price() * q_own;
    let cost = (params.alpha(group) * q_own + params.beta(group) * q_own * q_own) / x;
    let excess = q_own + q_other - r;
    let deviation = if excess < 0.0 {
        0.0
    } else {
        params.kappa(group) * excess * excess
    };
    revenue - cost - deviation
}

/// Individual equilibrium quotas `(q_1, q_2)` at stock `x` and recommendation `r`.
pub fn individual_quotas(params: &EconParams, x: f64, r: f64) -> Result<(f64, f64)> {
    let out = total_harvest(params, x, r)?;
    Ok((out.q1, out.q2))
}

/// The four-case total harvest function with quota allocation.
///
/// Branches follow the closed form: shutdown when `r_hat <= 0`, the
/// voluntary catch `r_hat` when `r >= r_hat`, otherwise the binding harvest
/// (or a restrictive shutdown if that is not positive). Each group's quota
/// comes from its first-order condition; if one of them turns out negative,
/// that group is held at zero and the equilibrium is re-solved for the other.
pub fn total_harvest(params: &EconParams, x: f64, r: f64) -> Result<NegotiationOutcome> {
    positive_stock("total_harvest", x)?;
    require(r >= 0.0 && r.is_finite(), "r", r, "non-negative and finite")?;
    Ok(total_harvest_unchecked(params, x, r))
}

pub(crate) fn total_harvest_unchecked(params: &EconParams, x: f64, r: f64) -> NegotiationOutcome {
    let rh = params.r_hat(x);

    let (regime, excess) = if rh <= REGIME_TOL {
        (Regime::ShutdownUnprofitable, 0.0)
    } else if !params.has_deviation_costs() || r >= rh - REGIME_TOL {
        // Without deviation costs every recommendation is ignored.
        (Regime::NonBinding, 0.0)
    } else {
        let hb = params.h_binding(x, r);
        if hb <= REGIME_TOL {
            (Regime::ShutdownRestricted, 0.0)
        } else {
            (Regime::Binding, (hb - r).max(0.0))
        }
    };

    let interior = |g: Group| -> f64 {
        (x * (params.price() - 2.0 * params.kappa(g) * excess) - params.alpha(g))
            / (2.0 * params.beta(g))
    };

    let out = if regime.is_shutdown() {
        NegotiationOutcome::shutdown(regime)
    } else {
        let q1 = interior(Group::First);
        let q2 = interior(Group::Second);
        let scale = 1.0 + q1.abs() + q2.abs();
        if q1 >= -REGIME_TOL * scale && q2 >= -REGIME_TOL * scale {
            let (q1, q2) = (q1.max(0.0), q2.max(0.0));
            NegotiationOutcome {
                q1,
                q2,
                h: q1 + q2,
                regime,
                clamped: false,
            }
        } else {
            return solve_with_inactive_group(params, x, r);
        }
    };

    // A group may still be profitable on its own when the fleet as a whole is not.
    if regime == Regime::ShutdownUnprofitable
        && Group::BOTH
            .iter()
            .any(|&g| params.solo_optimum(g, x) > REGIME_TOL)
    {
        return solve_with_inactive_group(params, x, r);
    }
    out
}

/// Candidate equilibrium with a fixed set of fishing groups.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    q: [f64; 2],
    excess: f64,
    deviation_active: bool,
    violation: f64,
}

/// Complementarity solution where at least one group may sit at a zero quota.
///
/// Enumerates which groups fish and whether deviation costs are active, and
/// keeps the candidate that satisfies every first-order (KKT) condition.
fn solve_with_inactive_group(params: &EconParams, x: f64, r: f64) -> NegotiationOutcome {
    const ACTIVE_SETS: [[bool; 2]; 4] =
        [[true, true], [true, false], [false, true], [false, false]];

    let mut best: Option<Candidate> = None;
    for active in ACTIVE_SETS {
        for deviation in [false, true] {
            let cand = candidate(params, x, r, active, deviation);
            if best.is_none_or(|b| cand.violation < b.violation) {
                best = Some(cand);
            }
        }
    }
    let best = best.expect("candidate set is non-empty");
    let [q1, q2] = best.q;
    let h = q1 + q2;

    let regime = if h <= REGIME_TOL {
        if Group::BOTH
            .iter()
            .all(|&g| params.solo_optimum(g, x) <= REGIME_TOL)
        {
            Regime::ShutdownUnprofitable
        } else {
            Regime::ShutdownRestricted
        }
    } else if best.deviation_active && best.excess > REGIME_TOL {
        Regime::Binding
    } else {
        Regime::NonBinding
    };
    NegotiationOutcome {
        q1: if h <= REGIME_TOL { 0.0 } else { q1 },
        q2: if h <= REGIME_TOL { 0.0 } else { q2 },
        h: if h <= REGIME_TOL { 0.0 } else { h },
        regime,
        clamped: true,
    }
}

fn candidate(params: &EconParams, x: f64, r: f64, active: [bool; 2], deviation: bool) -> Candidate {
    let p = params.price();
    let mut q = [0.0; 2];
    let excess;
    let mut deviation_active = false;

    if deviation {
        // sum over active groups: H = (Q* + x k r) / (1 + x k)
        let mut q_star = 0.0;
        let mut k = 0.0;
        for g in Group::BOTH {
            if active[g.index()] {
                q_star += params.solo_optimum(g, x);
                k += params.kappa(g) / params.beta(g);
            }
        }
        let total = (q_star + x * k * r) / (1.0 + x * k);
        excess = if active.iter().any(|&a| a) {
            total - r
        } else {
            -r
        };
        deviation_active = k > 0.0;
        for g in Group::BOTH {
            if active[g.index()] {
                q[g.index()] = (x * (p - 2.0 * params.kappa(g) * excess) - params.alpha(g))
                    / (2.0 * params.beta(g));
            }
        }
    } else {
        for g in Group::BOTH {
            if active[g.index()] {
                q[g.index()] = params.solo_optimum(g, x);
            }
        }
        excess = q[0] + q[1] - r;
    }

    // KKT residuals: primal feasibility, mode consistency, marginal profit
    // conditions for the inactive groups.
    let scale = 1.0 + q[0].abs() + q[1].abs() + r;
    let mut violation = 0.0_f64;
    for g in Group::BOTH {
        let i = g.index();
        if active[i] {
            violation = violation.max(-q[i]);
        } else {
            let marginal = x * p - params.alpha(g) - 2.0 * x * params.kappa(g) * excess.max(0.0);
            violation = violation.max(marginal / (2.0 * params.beta(g)));
        }
    }
    if deviation {
        violation = violation.max(-excess);
    } else {
        violation = violation.max(excess);
    }
    Candidate {
        q,
        excess: excess.max(0.0),
        deviation_active,
        violation: violation / scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym() -> EconParams {
        EconParams::symmetric(2.0).unwrap()
    }

    #[test]
    fn r_hat_examples() {
        let p = sym();
        assert!((r_hat(&p, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(r_hat(&p, 0.5).unwrap().abs() < 1e-15);
        assert!((r_hat(&p, 0.4).unwrap() + 0.2).abs() < 1e-15);
        assert!(r_hat(&p, 0.0).is_err());
        assert!(r_hat(&p, -1.0).is_err());
    }

    #[test]
    fn harvest_binding_examples() {
        let p = sym();
        assert!((harvest_binding(&p, 1.0, 0.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((harvest_binding(&p, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((harvest_binding(&p, 1.0, 0.25).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn harvest_binding_requires_deviation_costs() {
        let p = EconParams::new([1.0; 2], [1.0; 2], [0.0; 2], 2.0).unwrap();
        assert_eq!(
            harvest_binding(&p, 1.0, 0.5),
            Err(ModelError::NoDeviationCosts)
        );
    }

    #[test]
    fn quota_examples() {
        let p = sym();
        let (q1, q2) = individual_quotas(&p, 1.0, 0.0).unwrap();
        assert!((q1 - 1.0 / 6.0).abs() < 1e-15 && (q2 - 1.0 / 6.0).abs() < 1e-15);
        let (q1, q2) = individual_quotas(&p, 1.0, 5.0).unwrap();
        assert!((q1 - 0.5).abs() < 1e-15 && (q2 - 0.5).abs() < 1e-15);

        let asym = EconParams::new([1.0, 2.0], [1.0; 2], [1.0; 2], 2.0).unwrap();
        let (q1, q2) = individual_quotas(&asym, 1.0, 10.0).unwrap();
        assert!((q1 - 0.5).abs() < 1e-15);
        assert!(q2.abs() < 1e-15);
    }

    #[test]
    fn total_harvest_examples() {
        let p = sym();
        let out = total_harvest(&p, 1.0, 0.5).unwrap();
        assert_eq!(out.regime, Regime::Binding);
        assert!((out.h - 2.0 / 3.0).abs() < 1e-15);

        let out = total_harvest(&p, 1.0, 2.0).unwrap();
        assert_eq!(out.regime, Regime::NonBinding);
        assert!((out.h - 1.0).abs() < 1e-15);

        let out = total_harvest(&p, 0.4, 10.0).unwrap();
        assert_eq!(out.regime, Regime::ShutdownUnprofitable);
        assert_eq!(out.h, 0.0);
        assert!(total_harvest(&p, 0.0, 1.0).is_err());
    }

    #[test]
    fn boundary_resolves_to_non_binding() {
        let p = sym();
        let out = total_harvest(&p, 1.0, 1.0).unwrap();
        assert_eq!(out.regime, Regime::NonBinding);
        assert!((out.h - 1.0).abs() < 1e-15);
    }

    #[test]
    fn profit_examples() {
        let p = sym();
        let v = profit(&p, Group::First, 1.0 / 6.0, 1.0 / 6.0, 1.0, 0.0).unwrap();
        let expected = 2.0 / 6.0 - (1.0 / 6.0 + 1.0 / 36.0) - 1.0 / 9.0;
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.027_777_777_777_777_8).abs() < 1e-12);

        assert_eq!(profit(&p, Group::Second, 0.0, 0.0, 3.0, 0.7).unwrap(), 0.0);

        let v = profit(&p, Group::First, 0.2, 0.2, 1.0, 1.0).unwrap();
        assert!((v - 0.16).abs() < 1e-15);
        assert!(profit(&p, Group::First, 0.2, 0.2, 0.0, 1.0).is_err());
    }

    #[test]
    fn unmanaged_fishery_ignores_recommendation() {
        let p = EconParams::new([1.0; 2], [1.0; 2], [0.0; 2], 2.0).unwrap();
        let out = total_harvest(&p, 1.0, 0.1).unwrap();
        assert_eq!(out.regime, Regime::NonBinding);
        assert!((out.h - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_group_priced_out() {
        // group 2 cannot cover its linear cost at x = 1
        let p = EconParams::new([1.0, 5.0], [1.0, 1.0], [1.0, 1.0], 2.0).unwrap();
        let out = total_harvest(&p, 1.0, 10.0).unwrap();
        assert!(out.clamped);
        assert_eq!(out.q2, 0.0);
        assert!((out.q1 - 0.5).abs() < 1e-14);
        assert_eq!(out.regime, Regime::NonBinding);

        // binding for the remaining group: q1 = (x p + 2 k x r - a) / (2 b + 2 k x)
        let out = total_harvest(&p, 1.0, 0.1).unwrap();
        assert_eq!(out.regime, Regime::Binding);
        assert!((out.q1 - (2.0 + 0.2 - 1.0) / 4.0).abs() < 1e-14);
        assert_eq!(out.q2, 0.0);
    }

    #[test]
    fn single_group_fishes_when_fleet_unprofitable() {
        // r_hat < 0 but group 1 alone breaks even at x = 0.5
        let p = EconParams::new([0.5, 9.0], [1.0, 1.0], [1.0, 1.0], 2.0).unwrap();
        assert!(p.r_hat(1.0) < 0.0);
        let out = total_harvest(&p, 1.0, 5.0).unwrap();
        assert!(out.clamped);
        assert!((out.q1 - 0.75).abs() < 1e-14);
        assert_eq!(out.regime, Regime::NonBinding);
    }
}
