//! Recommendation strategies.
//!
//! Ichthyocentric and conservative control read the exact stock. The
//! qualitative controller only sees the stock trend, whether the harvest is
//! above the floor, and whether the recommendation binds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{positive_stock, require, ModelError, Result};
use crate::model::{EconParams, Recruitment};
use crate::viability::{
    classify_region, r_lo, HarvestLevel, Maturity, QualitativeObservation, Region, Trend,
    ViabilityBounds,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Ichthyocentric,
    Conservative,
    Qualitative,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::Ichthyocentric,
        Strategy::Conservative,
        Strategy::Qualitative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Ichthyocentric => "ichthyocentric",
            Strategy::Conservative => "conservative",
            Strategy::Qualitative => "qualitative",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                ModelError::InvalidSetup(format!(
                    "unknown strategy '{s}' (expected ichthyocentric, conservative or qualitative)"
                ))
            })
    }
}

/// Default number of consecutive increasing intervals that lift a moratorium.
pub const DEFAULT_EXIT_INTERVALS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub strategy: Strategy,
    /// Current recommendation, never negative.
    pub r: f64,
    pub maturity: Maturity,
    pub moratorium: bool,
    /// Multiplicative adjustment per control interval.
    pub rate: f64,
    /// Additive minimum for increases so that `r` can leave zero.
    pub floor_step: f64,
    /// Consecutive increasing intervals required to end a moratorium.
    pub exit_intervals: u32,
    pub increasing_streak: u32,
    /// Set when a moratorium ends; emerging rules apply until region 1.
    pub recovering: bool,
}

impl ControllerState {
    pub fn new(strategy: Strategy, r0: f64, rate: f64) -> Result<Self> {
        require(
            r0 >= 0.0 && r0.is_finite(),
            "r0",
            r0,
            "non-negative and finite",
        )?;
        require(
            rate > 0.0 && rate.is_finite(),
            "rate",
            rate,
            "positive and finite",
        )?;
        Ok(Self {
            strategy,
            r: r0,
            maturity: Maturity::Emerging,
            moratorium: false,
            rate,
            floor_step: 0.0,
            exit_intervals: DEFAULT_EXIT_INTERVALS,
            increasing_streak: 0,
            recovering: false,
        })
    }

    pub fn with_maturity(mut self, maturity: Maturity) -> Self {
        self.maturity = maturity;
        self
    }

    pub fn with_floor_step(mut self, step: f64) -> Result<Self> {
        require(
            step >= 0.0 && step.is_finite(),
            "floor_step",
            step,
            "non-negative and finite",
        )?;
        self.floor_step = step;
        Ok(self)
    }

    pub fn with_exit_intervals(mut self, n: u32) -> Result<Self> {
        require(n >= 1, "exit_intervals", n as f64, "at least 1")?;
        self.exit_intervals = n;
        Ok(self)
    }

    /// Harvest imposed regardless of negotiation: zero during a moratorium.
    pub fn harvest_directive(&self) -> Option<f64> {
        self.moratorium.then_some(0.0)
    }

    fn increased(&self) -> f64 {
        (self.r * (1.0 + self.rate)).max(self.r + self.floor_step)
    }

    fn decreased(&self) -> f64 {
        self.r / (1.0 + self.rate)
    }

    /// Emerging rules apply before the first visit to region 1 and after a moratorium.
    fn acts_mature(&self) -> bool {
        self.maturity == Maturity::Mature && !self.recovering
    }
}

/// What the controllers may see at a decision time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub trend: Trend,
    pub h: f64,
    pub r: f64,
    /// Realized harvest reaches the recommendation.
    pub binding: bool,
    /// Exact stock; withheld from the qualitative controller.
    pub stock: Option<f64>,
}

impl Observation {
    pub fn qualitative(&self, h_lo: f64) -> QualitativeObservation {
        QualitativeObservation {
            trend: self.trend,
            harvest: HarvestLevel::compare(self.h, h_lo),
            binding: self.binding,
        }
    }
}

/// The rule a qualitative decision applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// (0) non-binding: decrease.
    NonBindingDecrease,
    /// (1) growing, harvest above floor: increase.
    GrowingAboveIncrease,
    /// (2) growing, harvest below floor: increase.
    GrowingBelowIncrease,
    /// (3') mature, declining above floor: decrease.
    MatureDecliningDecrease,
    /// (4') mature, declining below floor: moratorium.
    MoratoriumStart,
    /// (3'') emerging, declining above floor: decrease toward the floor.
    EmergingDecliningDecrease,
    /// (4'') emerging, declining below floor: increase toward the floor.
    EmergingDecliningIncrease,
    MoratoriumHold,
    MoratoriumEnd,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::NonBindingDecrease => "0",
            Rule::GrowingAboveIncrease => "1",
            Rule::GrowingBelowIncrease => "2",
            Rule::MatureDecliningDecrease => "3'",
            Rule::MoratoriumStart => "4'",
            Rule::EmergingDecliningDecrease => "3''",
            Rule::EmergingDecliningIncrease => "4''",
            Rule::MoratoriumHold => "hold",
            Rule::MoratoriumEnd => "lift",
        }
    }
}

/// `r = R(x)`, floored at zero above capacity.
pub fn ichthyocentric_recommend(rec: &Recruitment, x: f64) -> Result<f64> {
    require(x >= 0.0 && x.is_finite(), "x", x, "non-negative and finite")?;
    Ok(rec.rate(x).max(0.0))
}

/// `r = max(0, r_lo(x))`.
pub fn conservative_recommend(
    params: &EconParams,
    bounds: &ViabilityBounds,
    x: f64,
) -> Result<f64> {
    positive_stock("conservative_recommend", x)?;
    Ok(r_lo(params, bounds, x)?.max(0.0))
}

/// One qualitative decision. Reads only the trend, the floor comparison and the binding flag.
pub fn qualitative_step(
    state: &ControllerState,
    obs: &Observation,
    bounds: &ViabilityBounds,
) -> (ControllerState, Rule) {
    let mut next = *state;

    if state.moratorium {
        next.increasing_streak = match obs.trend {
            Trend::Increasing => state.increasing_streak + 1,
            Trend::Decreasing => 0,
        };
        if next.increasing_streak >= state.exit_intervals {
            next.moratorium = false;
            next.recovering = true;
            next.increasing_streak = 0;
            return (next, Rule::MoratoriumEnd);
        }
        return (next, Rule::MoratoriumHold);
    }

    let label = classify_region(&obs.qualitative(bounds.h_lo()), state.maturity);
    let rule = match label.region {
        Region::NonBinding => {
            next.r = state.decreased();
            Rule::NonBindingDecrease
        }
        Region::GrowingAboveFloor => {
            next.r = state.increased();
            next.maturity = Maturity::Mature;
            next.recovering = false;
            Rule::GrowingAboveIncrease
        }
        Region::GrowingBelowFloor => {
            next.r = state.increased();
            Rule::GrowingBelowIncrease
        }
        Region::DecliningAboveFloor => {
            next.r = state.decreased();
            if state.acts_mature() {
                Rule::MatureDecliningDecrease
            } else {
                Rule::EmergingDecliningDecrease
            }
        }
        Region::DecliningBelowFloor => {
            if state.acts_mature() {
                next.moratorium = true;
                next.increasing_streak = 0;
                Rule::MoratoriumStart
            } else {
                next.r = state.increased();
                Rule::EmergingDecliningIncrease
            }
        }
    };
    (next, rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds() -> ViabilityBounds {
        ViabilityBounds::new(1.0, 0.4).unwrap()
    }

    fn obs(trend: Trend, h: f64, r: f64, binding: bool) -> Observation {
        Observation {
            trend,
            h,
            r,
            binding,
            stock: None,
        }
    }

    #[test]
    fn ichthyocentric_examples() {
        let rec = Recruitment::new(1.0, 2.0).unwrap();
        assert_eq!(ichthyocentric_recommend(&rec, 1.0).unwrap(), 0.5);
        assert_eq!(ichthyocentric_recommend(&rec, 0.0).unwrap(), 0.0);
        assert_eq!(ichthyocentric_recommend(&rec, 2.0).unwrap(), 0.0);
        assert_eq!(ichthyocentric_recommend(&rec, 3.0).unwrap(), 0.0);
        assert!(ichthyocentric_recommend(&rec, -1.0).is_err());
    }

    #[test]
    fn conservative_examples() {
        let p = EconParams::symmetric(2.0).unwrap();
        assert!((conservative_recommend(&p, &bounds(), 1.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(conservative_recommend(&p, &bounds(), 2.0).unwrap(), 0.0);
        assert!((conservative_recommend(&p, &bounds(), 0.7).unwrap() - 0.4).abs() < 1e-14);
        assert!(conservative_recommend(&p, &bounds(), 0.0).is_err());
    }

    #[test]
    fn mature_decline_below_floor_starts_moratorium() {
        let s = ControllerState::new(Strategy::Qualitative, 0.3, 0.05)
            .unwrap()
            .with_maturity(Maturity::Mature);
        let (n, rule) = qualitative_step(&s, &obs(Trend::Decreasing, 0.3, 0.3, true), &bounds());
        assert_eq!(rule, Rule::MoratoriumStart);
        assert!(n.moratorium);
        assert_eq!(n.harvest_directive(), Some(0.0));
    }

    #[test]
    fn growth_above_floor_increases() {
        let s = ControllerState::new(Strategy::Qualitative, 0.5, 0.1)
            .unwrap()
            .with_maturity(Maturity::Mature);
        let (n, rule) = qualitative_step(&s, &obs(Trend::Increasing, 0.6, 0.5, true), &bounds());
        assert_eq!(rule, Rule::GrowingAboveIncrease);
        assert!((n.r - 0.55).abs() < 1e-15);
    }

    #[test]
    fn non_binding_decreases() {
        for maturity in [Maturity::Emerging, Maturity::Mature] {
            let s = ControllerState::new(Strategy::Qualitative, 1.2, 0.1)
                .unwrap()
                .with_maturity(maturity);
            let (n, rule) =
                qualitative_step(&s, &obs(Trend::Increasing, 1.0, 1.2, false), &bounds());
            assert_eq!(rule, Rule::NonBindingDecrease);
            assert!((n.r - 1.2 / 1.1).abs() < 1e-15);
            assert_eq!(n.maturity, maturity);
        }
    }

    #[test]
    fn emerging_rules_pursue_the_floor() {
        let s = ControllerState::new(Strategy::Qualitative, 0.5, 0.1).unwrap();
        let (n, rule) = qualitative_step(&s, &obs(Trend::Decreasing, 0.6, 0.5, true), &bounds());
        assert_eq!(rule, Rule::EmergingDecliningDecrease);
        assert!(n.r < 0.5);
        let (n, rule) = qualitative_step(&s, &obs(Trend::Decreasing, 0.3, 0.5, true), &bounds());
        assert_eq!(rule, Rule::EmergingDecliningIncrease);
        assert!(n.r > 0.5 && !n.moratorium);
    }

    #[test]
    fn maturity_latches_on_region_one() {
        let s = ControllerState::new(Strategy::Qualitative, 0.2, 0.05).unwrap();
        let (n, _) = qualitative_step(&s, &obs(Trend::Increasing, 0.5, 0.2, true), &bounds());
        assert_eq!(n.maturity, Maturity::Mature);
        let mut st = n;
        for trend in [Trend::Decreasing, Trend::Increasing] {
            for h in [0.1, 0.6] {
                for binding in [true, false] {
                    let (m, _) = qualitative_step(&st, &obs(trend, h, st.r, binding), &bounds());
                    assert_eq!(m.maturity, Maturity::Mature);
                    st = m;
                }
            }
        }
    }

    #[test]
    fn floor_step_lifts_zero_recommendation() {
        let s = ControllerState::new(Strategy::Qualitative, 0.0, 0.05)
            .unwrap()
            .with_floor_step(1e-3)
            .unwrap();
        let (n, _) = qualitative_step(&s, &obs(Trend::Increasing, 0.0, 0.0, true), &bounds());
        assert!((n.r - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn moratorium_lifts_after_consecutive_growth() {
        let mut s = ControllerState::new(Strategy::Qualitative, 0.3, 0.05)
            .unwrap()
            .with_maturity(Maturity::Mature)
            .with_exit_intervals(3)
            .unwrap();
        s.moratorium = true;
        let up = obs(Trend::Increasing, 0.0, 0.3, false);
        let down = obs(Trend::Decreasing, 0.0, 0.3, false);
        let (s, r) = qualitative_step(&s, &up, &bounds());
        assert_eq!(r, Rule::MoratoriumHold);
        let (s, _) = qualitative_step(&s, &up, &bounds());
        let (s, _) = qualitative_step(&s, &down, &bounds());
        assert_eq!(s.increasing_streak, 0);
        let (s, _) = qualitative_step(&s, &up, &bounds());
        let (s, _) = qualitative_step(&s, &up, &bounds());
        let (s, r) = qualitative_step(&s, &up, &bounds());
        assert_eq!(r, Rule::MoratoriumEnd);
        assert!(!s.moratorium && s.recovering);
        assert_eq!(s.r, 0.3);
        // after a moratorium, decline below the floor is pursued, not re-frozen
        let (s, r) = qualitative_step(&s, &obs(Trend::Decreasing, 0.2, 0.3, true), &bounds());
        assert_eq!(r, Rule::EmergingDecliningIncrease);
        let (s, _) = qualitative_step(&s, &obs(Trend::Increasing, 0.5, s.r, true), &bounds());
        assert!(!s.recovering);
    }

    #[test]
    fn exact_stock_is_ignored() {
        let s = ControllerState::new(Strategy::Qualitative, 0.4, 0.05).unwrap();
        let base = obs(Trend::Decreasing, 0.45, 0.4, true);
        let (a, ra) = qualitative_step(&s, &base, &bounds());
        for x in [0.01, 1.0, 1e6] {
            let spoofed = Observation {
                stock: Some(x),
                ..base
            };
            assert_eq!(qualitative_step(&s, &spoofed, &bounds()), (a, ra));
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("greedy".parse::<Strategy>().is_err());
    }
}
