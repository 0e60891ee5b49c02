//! Threshold curves, the viability-domain test, critical stock levels and
//! the qualitative phase regions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{positive_stock, require, ModelError, Result};
use crate::model::{EconParams, Recruitment};
use crate::negotiation::total_harvest_unchecked;
use crate::roots::{bisect, bracketed_roots};

/// Minimum stock and minimum total harvest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViabilityBounds {
    x_lo: f64,
    h_lo: f64,
}

impl ViabilityBounds {
    pub fn new(x_lo: f64, h_lo: f64) -> Result<Self> {
        require(
            x_lo > 0.0 && x_lo.is_finite(),
            "x_lo",
            x_lo,
            "positive and finite",
        )?;
        require(
            h_lo > 0.0 && h_lo.is_finite(),
            "h_lo",
            h_lo,
            "positive and finite",
        )?;
        Ok(Self { x_lo, h_lo })
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    pub fn h_lo(&self) -> f64 {
        self.h_lo
    }
}

fn deviation_weight(params: &EconParams) -> Result<f64> {
    let w = params.coeffs().w;
    if w > 0.0 {
        Ok(w)
    } else {
        Err(ModelError::NoDeviationCosts)
    }
}

/// Binding recommendation under which the negotiated harvest equals `level`.
fn recommendation_for(params: &EconParams, level: f64, x: f64) -> f64 {
    let c = params.coeffs();
    (level * (c.w * x + c.bb) + c.v) / (c.w * x) - c.u * params.price() / c.w
}

/// Largest binding recommendation that keeps the stock from declining.
pub fn r_bar(params: &EconParams, rec: &Recruitment, x: f64) -> Result<f64> {
    positive_stock("r_bar", x)?;
    deviation_weight(params)?;
    Ok(r_bar_unchecked(params, rec, x))
}

pub(crate) fn r_bar_unchecked(params: &EconParams, rec: &Recruitment, x: f64) -> f64 {
    recommendation_for(params, rec.rate(x), x)
}

/// Smallest binding recommendation that still yields the minimum harvest.
pub fn r_lo(params: &EconParams, bounds: &ViabilityBounds, x: f64) -> Result<f64> {
    positive_stock("r_lo", x)?;
    deviation_weight(params)?;
    Ok(r_lo_unchecked(params, bounds, x))
}

pub(crate) fn r_lo_unchecked(params: &EconParams, bounds: &ViabilityBounds, x: f64) -> f64 {
    recommendation_for(params, bounds.h_lo, x)
}

/// Outcome of the three-condition viability-domain test at `x_lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViabilityReport {
    pub viable: bool,
    /// `r_hat(x_lo) - r_lo(x_lo)`.
    pub margin_profitable: f64,
    /// `R(x_lo) - h_lo`.
    pub margin_recruitment: f64,
    /// `max(r_lo(x_lo), r_bar(x_lo))`.
    pub margin_reducible: f64,
    pub r_hat: f64,
    pub r_lo: f64,
    pub r_bar: f64,
    pub recruitment: f64,
}

impl ViabilityReport {
    pub fn margins(&self) -> [f64; 3] {
        [
            self.margin_profitable,
            self.margin_recruitment,
            self.margin_reducible,
        ]
    }

    /// Smallest absolute condition margin, used to skip knife-edge instances.
    pub fn min_abs_margin(&self) -> f64 {
        self.margins()
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

/// Decides whether `[x_lo, inf)` is a viability domain.
///
/// True iff (i) `r_hat(x_lo) >= r_lo(x_lo)`, (ii) `h_lo <= R(x_lo)` and
/// (iii) `r_lo(x_lo) >= 0` or `r_bar(x_lo) >= 0`.
pub fn check_viability_domain(
    params: &EconParams,
    rec: &Recruitment,
    bounds: &ViabilityBounds,
) -> Result<ViabilityReport> {
    deviation_weight(params)?;
    let x = bounds.x_lo;
    let r_hat = params.r_hat(x);
    let r_lo = r_lo_unchecked(params, bounds, x);
    let r_bar = r_bar_unchecked(params, rec, x);
    let recruitment = rec.rate(x);
    let margin_profitable = r_hat - r_lo;
    let margin_recruitment = recruitment - bounds.h_lo;
    let margin_reducible = r_lo.max(r_bar);
    Ok(ViabilityReport {
        viable: margin_profitable >= 0.0 && margin_recruitment >= 0.0 && margin_reducible >= 0.0,
        margin_profitable,
        margin_recruitment,
        margin_reducible,
        r_hat,
        r_lo,
        r_bar,
        recruitment,
    })
}

/// Relative order of the critical levels `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseOrder {
    ALessB,
    BLessA,
    /// `b` and `c` coincide or do not exist, or `a` is missing.
    Degenerate,
}

impl CaseOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseOrder::ALessB => "ALessB",
            CaseOrder::BLessA => "BLessA",
            CaseOrder::Degenerate => "Degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalLevels {
    /// Stock where `r_lo = r_hat`.
    pub a: Option<f64>,
    /// Lower stock with `R(x) = h_lo`.
    pub b: Option<f64>,
    /// Upper stock with `R(x) = h_lo`.
    pub c: Option<f64>,
    pub case_order: CaseOrder,
    /// Stocks where `r_bar = r_hat`; informative only.
    pub rbar_rhat_crossings: Vec<f64>,
}

/// Relative tolerance deciding that `h_lo` equals the maximum recruitment.
const DOUBLE_ROOT_TOL: f64 = 1e-12;
const CROSSING_SEGMENTS: usize = 1024;

/// Locates `a`, `b`, `c` by bisection on brackets derived from the model.
///
/// `a` is searched on `(0, 4K]`, `b` on `(0, x_msy]` and `c` on `[x_msy, K)`.
pub fn critical_levels(
    params: &EconParams,
    rec: &Recruitment,
    bounds: &ViabilityBounds,
) -> Result<CriticalLevels> {
    deviation_weight(params)?;
    let k = rec.capacity();
    let lower = 1e-9 * k.min(1.0);
    let upper = 4.0 * k;

    let a = bisect(
        |x| r_lo_unchecked(params, bounds, x) - params.r_hat(x),
        lower,
        upper,
        0.0,
    );

    let h_lo = bounds.h_lo;
    let r_max = rec.max_rate();
    let x_msy = rec.x_msy();
    let (b, c) = if (h_lo - r_max).abs() <= DOUBLE_ROOT_TOL * r_max.max(1.0) {
        (Some(x_msy), Some(x_msy))
    } else if h_lo > r_max {
        (None, None)
    } else {
        let gap = |x: f64| rec.rate(x) - h_lo;
        (bisect(gap, 0.0, x_msy, 0.0), bisect(gap, x_msy, k, 0.0))
    };

    let case_order = match (a, b, c) {
        (Some(a), Some(b), Some(c)) if b < c => {
            if a < b {
                CaseOrder::ALessB
            } else if b < a {
                CaseOrder::BLessA
            } else {
                CaseOrder::Degenerate
            }
        }
        _ => CaseOrder::Degenerate,
    };

    let rbar_rhat_crossings = bracketed_roots(
        |x| r_bar_unchecked(params, rec, x) - params.r_hat(x),
        lower,
        upper,
        CROSSING_SEGMENTS,
        0.0,
    );

    Ok(CriticalLevels {
        a,
        b,
        c,
        case_order,
        rbar_rhat_crossings,
    })
}

/// Sign of the stock change over an observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    Increasing,
    Decreasing,
}

impl Trend {
    /// Changes with `|dx| < deadband` count as increasing.
    pub fn from_change(dx: f64, deadband: f64) -> Self {
        if dx.abs() < deadband || dx > 0.0 {
            Trend::Increasing
        } else {
            Trend::Decreasing
        }
    }
}

/// Realized harvest relative to the minimum harvest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarvestLevel {
    AtOrAboveFloor,
    BelowFloor,
}

impl HarvestLevel {
    pub fn compare(h: f64, h_lo: f64) -> Self {
        if h >= h_lo {
            HarvestLevel::AtOrAboveFloor
        } else {
            HarvestLevel::BelowFloor
        }
    }
}

/// What a qualitative observer can tell about the fishery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualitativeObservation {
    pub trend: Trend,
    pub harvest: HarvestLevel,
    pub binding: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// R0: the recommendation is not binding.
    NonBinding,
    /// R1
    GrowingAboveFloor,
    /// R2
    GrowingBelowFloor,
    /// R3
    DecliningAboveFloor,
    /// R4
    DecliningBelowFloor,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::NonBinding => "R0",
            Region::GrowingAboveFloor => "R1",
            Region::GrowingBelowFloor => "R2",
            Region::DecliningAboveFloor => "R3",
            Region::DecliningBelowFloor => "R4",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// History of the fishery; latches from `Emerging` to `Mature`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Maturity {
    Emerging,
    Mature,
}

impl Maturity {
    pub fn as_str(self) -> &'static str {
        match self {
            Maturity::Emerging => "Emerging",
            Maturity::Mature => "Mature",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub region: Region,
    pub maturity: Maturity,
}

pub fn classify_region(obs: &QualitativeObservation, maturity: Maturity) -> RegionLabel {
    use HarvestLevel::*;
    use Trend::*;
    let region = if !obs.binding {
        Region::NonBinding
    } else {
        match (obs.trend, obs.harvest) {
            (Increasing, AtOrAboveFloor) => Region::GrowingAboveFloor,
            (Increasing, BelowFloor) => Region::GrowingBelowFloor,
            (Decreasing, AtOrAboveFloor) => Region::DecliningAboveFloor,
            (Decreasing, BelowFloor) => Region::DecliningBelowFloor,
        }
    };
    RegionLabel { region, maturity }
}

/// A closed-form claim paired with the value it should equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagPair {
    pub claim: bool,
    pub ground_truth: bool,
}

impl FlagPair {
    pub fn agree(&self) -> bool {
        self.claim == self.ground_truth
    }
}

/// Economic viability of recommending the recruitment, `r = R(x)`:
/// `R(x) >= r_lo(x)` against `h(x, R(x)) >= h_lo`.
pub fn economic_flags(
    params: &EconParams,
    rec: &Recruitment,
    bounds: &ViabilityBounds,
    x: f64,
) -> Result<FlagPair> {
    positive_stock("economic_flags", x)?;
    deviation_weight(params)?;
    let r = rec.rate(x);
    require(r >= 0.0, "R(x)", r, "non-negative (x within capacity)")?;
    let h = total_harvest_unchecked(params, x, r).h;
    Ok(FlagPair {
        claim: r >= r_lo_unchecked(params, bounds, x),
        ground_truth: h >= bounds.h_lo,
    })
}

/// Catch below recruitment under `r = R(x)`:
/// `h(x, R(x)) <= R(x)` against `R(x) >= r_hat(x)`.
pub fn catch_flags(params: &EconParams, rec: &Recruitment, x: f64) -> Result<FlagPair> {
    positive_stock("catch_flags", x)?;
    let r = rec.rate(x);
    require(r >= 0.0, "R(x)", r, "non-negative (x within capacity)")?;
    let h = total_harvest_unchecked(params, x, r).h;
    Ok(FlagPair {
        claim: h <= r,
        ground_truth: r >= params.r_hat(x),
    })
}
