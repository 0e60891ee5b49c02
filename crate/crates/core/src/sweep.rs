//! Parameter sweeps: one simulation per grid cell.

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ScenarioConfig};
use crate::control::Strategy;
use crate::error::ModelError;
use crate::sim::{simulate, Constraint};
use crate::viability::check_viability_domain;

pub const MAX_CELLS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AxisValues {
    Numeric(Vec<f64>),
    Strategies(Vec<Strategy>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub field: String,
    pub values: AxisValues,
}

impl Axis {
    pub fn len(&self) -> usize {
        match &self.values {
            AxisValues::Numeric(v) => v.len(),
            AxisValues::Strategies(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `n` evenly spaced points from `lo` to `hi` inclusive.
    pub fn linspace(field: &str, lo: f64, hi: f64, n: usize) -> Self {
        let values = if n == 1 {
            vec![lo]
        } else {
            (0..n)
                .map(|k| {
                    if k == n - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * k as f64 / (n - 1) as f64
                    }
                })
                .collect()
        };
        Self {
            field: field.to_string(),
            values: AxisValues::Numeric(values),
        }
    }
}

fn setup_error(msg: String) -> ConfigError {
    ConfigError::Invalid {
        field: "axes".into(),
        source: ModelError::InvalidSetup(msg),
    }
}

/// Parses `FIELD=LO:HI:N[,FIELD=...]`; the `strategy` field takes names separated by `:`.
pub fn parse_axes(text: &str) -> Result<Vec<Axis>, ConfigError> {
    let probe = ScenarioConfig::canonical();
    let mut axes = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (field, range) = part
            .split_once('=')
            .ok_or_else(|| setup_error(format!("axis '{part}' is not FIELD=LO:HI:N")))?;
        let field = field.trim();
        if field == "strategy" {
            let values = range
                .split(':')
                .map(|s| s.parse::<Strategy>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| setup_error(e.to_string()))?;
            axes.push(Axis {
                field: field.into(),
                values: AxisValues::Strategies(values),
            });
            continue;
        }
        probe.get_field(field)?;
        let bits: Vec<&str> = range.split(':').collect();
        let [lo, hi, n] = bits[..] else {
            return Err(setup_error(format!("axis '{part}' is not FIELD=LO:HI:N")));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| setup_error(format!("'{s}' in axis '{part}' is not a number")))
        };
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        let n: usize = n
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| setup_error(format!("point count in axis '{part}' must be >= 1")))?;
        if n > 1 && lo == hi {
            return Err(setup_error(format!("axis '{part}' has an empty range")));
        }
        axes.push(Axis::linspace(field, lo, hi, n));
    }
    let cells = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
        .unwrap_or(usize::MAX);
    if cells > MAX_CELLS {
        return Err(setup_error(format!(
            "{cells} cells exceed the limit of {MAX_CELLS}"
        )));
    }
    Ok(axes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AxisValue {
    Numeric(f64),
    Strategy(Strategy),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub index: usize,
    pub values: Vec<AxisValue>,
    /// No viability violation along the trajectory.
    pub viable: Option<bool>,
    /// Verdict of the viability-domain test for the cell's bounds.
    pub domain_viable: Option<bool>,
    pub first_violation: Option<(f64, Constraint)>,
    pub terminal_x: Option<f64>,
    pub mean_h: Option<f64>,
    pub error: Option<String>,
}

fn cell_values(axes: &[Axis], mut index: usize) -> Vec<AxisValue> {
    let mut values = vec![AxisValue::Numeric(0.0); axes.len()];
    for (slot, axis) in values.iter_mut().zip(axes).rev() {
        let n = axis.len();
        let k = index % n;
        index /= n;
        *slot = match &axis.values {
            AxisValues::Numeric(v) => AxisValue::Numeric(v[k]),
            AxisValues::Strategies(v) => AxisValue::Strategy(v[k]),
        };
    }
    values
}

/// Runs a single cell; the last axis varies fastest.
pub fn run_cell(template: &ScenarioConfig, axes: &[Axis], index: usize) -> CellOutcome {
    let values = cell_values(axes, index);
    let mut out = CellOutcome {
        index,
        values: values.clone(),
        viable: None,
        domain_viable: None,
        first_violation: None,
        terminal_x: None,
        mean_h: None,
        error: None,
    };
    let mut cfg = template.clone();
    for (axis, value) in axes.iter().zip(&values) {
        let applied = match value {
            AxisValue::Numeric(v) => cfg.set_field(&axis.field, *v),
            AxisValue::Strategy(s) => {
                cfg.strategy.kind = *s;
                Ok(())
            }
        };
        if let Err(e) = applied {
            out.error = Some(e.to_string());
            return out;
        }
    }
    let scenario = match cfg.build() {
        Ok(s) => s,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.domain_viable =
        check_viability_domain(&scenario.params, &scenario.recruitment, &scenario.bounds)
            .ok()
            .map(|r| r.viable);
    match simulate(
        &scenario.params,
        &scenario.recruitment,
        &scenario.bounds,
        &scenario.sim,
    ) {
        Ok(tr) => {
            out.first_violation = tr.first_violation();
            out.viable = Some(out.first_violation.is_none());
            out.terminal_x = Some(tr.terminal().x);
            out.mean_h = Some(tr.mean_h);
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

pub fn cell_count(axes: &[Axis]) -> usize {
    axes.iter().map(Axis::len).product()
}

/// All cells in index order. Cells fail individually without stopping the sweep.
pub fn sweep(template: &ScenarioConfig, axes: &[Axis]) -> Vec<CellOutcome> {
    let n = cell_count(axes);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(|i| run_cell(template, axes, i))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(|i| run_cell(template, axes, i)).collect()
    }
}
