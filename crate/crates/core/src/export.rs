//! Plot-ready CSV and JSON output.
//!
//! Numbers are written with 17 significant digits in exponent form, lines end
//! in `\n`, and flags are `1`/`0`, so identical runs give identical bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::{EconParams, Recruitment};
use crate::negotiation::{total_harvest_unchecked, Regime};
use crate::sim::{Event, TrajectoryRecord};
use crate::sweep::{Axis, AxisValue, CellOutcome};
use crate::viability::{
    classify_region, critical_levels, r_bar_unchecked, r_lo_unchecked, CriticalLevels,
    HarvestLevel, Maturity, QualitativeObservation, Region, Trend, ViabilityBounds,
};

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub const TRAJECTORY_HEADER: &str = "t,x,r,h,q1,q2,regime,region,maturity,viable_eco,viable_econ";

pub fn trajectory_csv(tr: &TrajectoryRecord) -> String {
    let mut out = String::with_capacity(tr.samples.len() * 200);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &tr.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            num(s.t),
            num(s.x),
            num(s.r),
            num(s.h),
            num(s.q1),
            num(s.q2),
            s.regime,
            s.region,
            s.maturity.as_str(),
            flag(s.viable_eco),
            flag(s.viable_econ)
        );
    }
    out
}

pub fn events_json(events: &[Event]) -> String {
    let mut s = serde_json::to_string_pretty(events).expect("events serialize");
    s.push('\n');
    s
}

/// Rectangle and resolution in the `(x, r)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub nx: usize,
    pub nr: usize,
}

fn axis_points(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| {
        if n == 1 {
            lo
        } else if k == n - 1 {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    })
}

impl PhaseGrid {
    /// Parses `XMIN:XMAX:RMIN:RMAX:NX:NR`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad =
            || ModelError::InvalidSetup(format!("grid '{text}' is not XMIN:XMAX:RMIN:RMAX:NX:NR"));
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(bad());
        }
        let f = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let n = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let grid = Self {
            x_min: f(parts[0])?,
            x_max: f(parts[1])?,
            r_min: f(parts[2])?,
            r_max: f(parts[3])?,
            nx: n(parts[4])?,
            nr: n(parts[5])?,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.x_min, self.x_max, self.r_min, self.r_max]
            .iter()
            .all(|v| v.is_finite());
        let span_ok = |lo: f64, hi: f64, n: usize| n >= 1 && (lo < hi || (lo == hi && n == 1));
        if !all_finite
            || self.x_min <= 0.0
            || self.r_min < 0.0
            || !span_ok(self.x_min, self.x_max, self.nx)
            || !span_ok(self.r_min, self.r_max, self.nr)
        {
            return Err(ModelError::InvalidSetup(format!(
                "degenerate phase rectangle x[{}, {}] x r[{}, {}] with {}x{} points (need 0 < x, 0 <= r, min < max unless one point)",
                self.x_min, self.x_max, self.r_min, self.r_max, self.nx, self.nr
            )));
        }
        match self.nx.checked_mul(self.nr) {
            Some(n) if n <= 25_000_000 => Ok(()),
            _ => Err(ModelError::InvalidSetup("phase grid too large".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub x: f64,
    pub r: f64,
    pub h: f64,
    pub regime: Regime,
    /// Sign of `R(x) - h` with a small tolerance; 0 on the stationary curve.
    pub sign_dx: i8,
    pub region: Region,
    pub r_hat: f64,
    pub r_bar: Option<f64>,
    pub r_lo: Option<f64>,
}

const STATIONARY_TOL: f64 = 1e-12;

pub fn phase_rows(
    params: &EconParams,
    rec: &Recruitment,
    bounds: &ViabilityBounds,
    grid: &PhaseGrid,
) -> Result<Vec<PhaseRow>> {
    grid.validate()?;
    let curves = params.has_deviation_costs();
    let mut rows = Vec::with_capacity(grid.nx * grid.nr);
    for x in axis_points(grid.x_min, grid.x_max, grid.nx) {
        let growth = rec.rate(x);
        for r in axis_points(grid.r_min, grid.r_max, grid.nr) {
            let out = total_harvest_unchecked(params, x, r);
            let dx = growth - out.h;
            let sign_dx = if dx.abs() <= STATIONARY_TOL * growth.abs().max(out.h).max(1.0) {
                0
            } else if dx > 0.0 {
                1
            } else {
                -1
            };
            let obs = QualitativeObservation {
                trend: if sign_dx >= 0 {
                    Trend::Increasing
                } else {
                    Trend::Decreasing
                },
                harvest: HarvestLevel::compare(out.h, bounds.h_lo()),
                binding: out.regime == Regime::Binding,
            };
            rows.push(PhaseRow {
                x,
                r,
                h: out.h,
                regime: out.regime,
                sign_dx,
                region: classify_region(&obs, Maturity::Mature).region,
                r_hat: params.r_hat(x),
                r_bar: curves.then(|| r_bar_unchecked(params, rec, x)),
                r_lo: curves.then(|| r_lo_unchecked(params, bounds, x)),
            });
        }
    }
    Ok(rows)
}

pub const PHASE_HEADER: &str = "x,r,h,regime,sign_dx,region,r_hat,r_bar,r_lo";

pub fn phase_csv(rows: &[PhaseRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 180);
    out.push_str(PHASE_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(row.x),
            num(row.r),
            num(row.h),
            row.regime,
            row.sign_dx,
            row.region,
            num(row.r_hat),
            opt_num(row.r_bar),
            opt_num(row.r_lo)
        );
    }
    out
}

/// Scalar overlay levels for a phase portrait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLevels {
    pub x_lo: f64,
    pub h_lo: f64,
    pub x_msy: f64,
    pub max_recruitment: f64,
    pub levels: Option<CriticalLevels>,
}

pub fn phase_levels(
    params: &EconParams,
    rec: &Recruitment,
    bounds: &ViabilityBounds,
) -> PhaseLevels {
    PhaseLevels {
        x_lo: bounds.x_lo(),
        h_lo: bounds.h_lo(),
        x_msy: rec.x_msy(),
        max_recruitment: rec.max_rate(),
        levels: critical_levels(params, rec, bounds).ok(),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

pub fn sweep_csv(axes: &[Axis], cells: &[CellOutcome]) -> String {
    let mut out = String::from("index");
    for a in axes {
        out.push(',');
        out.push_str(&a.field);
    }
    out.push_str(
        ",viable,domain_viable,first_violation_t,first_violation,terminal_x,mean_h,error\n",
    );
    for c in cells {
        let _ = write!(out, "{}", c.index);
        for v in &c.values {
            match v {
                AxisValue::Numeric(x) => {
                    let _ = write!(out, ",{}", num(*x));
                }
                AxisValue::Strategy(s) => {
                    let _ = write!(out, ",{s}");
                }
            }
        }
        let opt_flag = |b: Option<bool>| b.map(flag).unwrap_or("");
        let error = c
            .error
            .as_deref()
            .map(|e| format!("\"{}\"", e.replace('"', "'")))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{},{}",
            opt_flag(c.viable),
            opt_flag(c.domain_viable),
            opt_num(c.first_violation.map(|v| v.0)),
            c.first_violation
                .map(|v| match v.1 {
                    crate::sim::Constraint::Ecological => "ecological",
                    crate::sim::Constraint::Economic => "economic",
                })
                .unwrap_or(""),
            opt_num(c.terminal_x),
            opt_num(c.mean_h),
            error
        );
    }
    out
}
