//! Closed-loop integration of `dx/dt = R(x) - h(x, r)`.
//!
//! The recommendation is held between control decisions. The negotiated
//! harvest is re-solved at every Runge-Kutta stage so that it follows the
//! stock continuously.

use serde::{Deserialize, Serialize};

use crate::control::{
    conservative_recommend, ichthyocentric_recommend, qualitative_step, ControllerState,
    Observation, Rule, Strategy,
};
use crate::error::{require, ModelError, Result};
use crate::model::{EconParams, Recruitment};
use crate::negotiation::{total_harvest_unchecked, NegotiationOutcome, Regime};
use crate::viability::{
    check_viability_domain, classify_region, HarvestLevel, Maturity, QualitativeObservation,
    Region, Trend, ViabilityBounds, ViabilityReport,
};

/// Relative slack on the viability flags.
pub const VIABILITY_TOL: f64 = 1e-9;
const BINDING_TOL: f64 = 1e-12;
const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub x: f64,
    /// The unclamped update was negative.
    pub extinct: bool,
}

fn rk4<F: Fn(f64) -> f64>(x: f64, dt: f64, f: F) -> f64 {
    let k1 = f(x);
    let k2 = f(x + 0.5 * dt * k1);
    let k3 = f(x + 0.5 * dt * k2);
    let k4 = f(x + dt * k3);
    x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// One RK4 step with constant harvest `h`, clamped at zero.
pub fn step(x: f64, h: f64, rec: &Recruitment, dt: f64) -> Result<StepResult> {
    require(x >= 0.0 && x.is_finite(), "x", x, "non-negative and finite")?;
    require(h >= 0.0 && h.is_finite(), "h", h, "non-negative and finite")?;
    require(dt > 0.0 && dt.is_finite(), "dt", dt, "positive and finite")?;
    let next = rk4(x, dt, |s| rec.rate(s) - h);
    Ok(if next < 0.0 {
        StepResult {
            x: 0.0,
            extinct: true,
        }
    } else {
        StepResult {
            x: next,
            extinct: false,
        }
    })
}

/// Simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub control_interval: f64,
    pub x0: f64,
    pub strategy: Strategy,
    /// Initial recommendation for qualitative control.
    pub r0: f64,
    pub rate: f64,
    pub exit_intervals: u32,
    pub initial_maturity: Maturity,
    /// Trend changes smaller than this count as increasing; `None` means `1e-6 K`.
    pub trend_deadband: Option<f64>,
    /// Keep every n-th integration point.
    pub record_stride: usize,
    /// Harvest is zero throughout.
    pub forced_moratorium: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            horizon: 200.0,
            control_interval: 0.1,
            x0: 1.2,
            strategy: Strategy::Conservative,
            r0: 0.0,
            rate: 0.05,
            exit_intervals: crate::control::DEFAULT_EXIT_INTERVALS,
            initial_maturity: Maturity::Emerging,
            trend_deadband: None,
            record_stride: 1,
            forced_moratorium: false,
        }
    }
}

fn whole_multiple(num: f64, den: f64) -> Option<usize> {
    let ratio = num / den;
    let n = ratio.round();
    ((ratio - n).abs() <= GRID_TOL * n.max(1.0) && n >= 1.0).then_some(n as usize)
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        require(
            self.dt > 0.0 && self.dt.is_finite(),
            "dt",
            self.dt,
            "positive and finite",
        )?;
        require(
            self.x0 > 0.0 && self.x0.is_finite(),
            "x0",
            self.x0,
            "positive and finite",
        )?;
        require(
            self.control_interval >= self.dt,
            "control_interval",
            self.control_interval,
            "at least dt",
        )?;
        require(
            whole_multiple(self.control_interval, self.dt).is_some(),
            "control_interval",
            self.control_interval,
            "an integer multiple of dt",
        )?;
        require(
            self.horizon >= self.control_interval && self.horizon.is_finite(),
            "horizon",
            self.horizon,
            "finite and at least control_interval",
        )?;
        require(
            whole_multiple(self.horizon, self.dt).is_some(),
            "horizon",
            self.horizon,
            "an integer multiple of dt",
        )?;
        require(
            self.r0 >= 0.0 && self.r0.is_finite(),
            "r0",
            self.r0,
            "non-negative and finite",
        )?;
        require(
            self.rate > 0.0 && self.rate.is_finite(),
            "rate",
            self.rate,
            "positive and finite",
        )?;
        require(
            self.exit_intervals >= 1,
            "exit_intervals",
            self.exit_intervals as f64,
            "at least 1",
        )?;
        if let Some(d) = self.trend_deadband {
            require(
                d >= 0.0 && d.is_finite(),
                "trend_deadband",
                d,
                "non-negative and finite",
            )?;
        }
        require(
            self.record_stride >= 1,
            "record_stride",
            self.record_stride as f64,
            "at least 1",
        )?;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        whole_multiple(self.horizon, self.dt).unwrap_or(0)
    }

    pub fn steps_per_decision(&self) -> usize {
        whole_multiple(self.control_interval, self.dt).unwrap_or(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    Ecological,
    Economic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Event {
    ViabilityViolation { t: f64, which: Constraint },
    ViabilityRestored { t: f64, which: Constraint },
    RegionCrossing { t: f64, from: Region, to: Region },
    MoratoriumStart { t: f64 },
    MoratoriumEnd { t: f64 },
    Extinction { t: f64 },
}

impl Event {
    pub fn time(&self) -> f64 {
        match *self {
            Event::ViabilityViolation { t, .. }
            | Event::ViabilityRestored { t, .. }
            | Event::RegionCrossing { t, .. }
            | Event::MoratoriumStart { t }
            | Event::MoratoriumEnd { t }
            | Event::Extinction { t } => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub r: f64,
    pub h: f64,
    pub q1: f64,
    pub q2: f64,
    /// Negotiation regime at `(x, r)`, also during a moratorium.
    pub regime: Regime,
    pub region: Region,
    pub maturity: Maturity,
    pub viable_eco: bool,
    pub viable_econ: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    /// Viability-domain report for the bounds; `None` without deviation costs.
    pub viability: Option<ViabilityReport>,
    /// Time average of the harvest over the whole horizon.
    pub mean_h: f64,
    /// Time average of the harvest over the second half of the horizon.
    pub mean_h_final_half: f64,
    pub min_x: f64,
    pub min_h: f64,
    pub moratorium_time: f64,
}

impl TrajectoryRecord {
    pub fn terminal(&self) -> &Sample {
        self.samples
            .last()
            .expect("a trajectory has at least one sample")
    }

    pub fn violations(&self) -> impl Iterator<Item = (f64, Constraint)> + '_ {
        self.events.iter().filter_map(|e| match *e {
            Event::ViabilityViolation { t, which } => Some((t, which)),
            _ => None,
        })
    }

    pub fn first_violation(&self) -> Option<(f64, Constraint)> {
        self.violations().next()
    }

    pub fn moratorium_started(&self) -> Option<f64> {
        self.events.iter().find_map(|e| match *e {
            Event::MoratoriumStart { t } => Some(t),
            _ => None,
        })
    }
}

/// Harvest the fleet takes at `(x, r)` given the controller directive.
fn realized(params: &EconParams, x: f64, r: f64, directive: Option<f64>) -> NegotiationOutcome {
    let mut out = if x > 0.0 {
        total_harvest_unchecked(params, x, r)
    } else {
        NegotiationOutcome {
            q1: 0.0,
            q2: 0.0,
            h: 0.0,
            regime: Regime::ShutdownUnprofitable,
            clamped: false,
        }
    };
    if directive.is_some() || x <= 0.0 {
        out.q1 = 0.0;
        out.q2 = 0.0;
        out.h = 0.0;
    }
    out
}

fn is_binding(h: f64, r: f64) -> bool {
    h >= r - BINDING_TOL * r.abs().max(1.0)
}

/// Region from the instantaneous stock derivative.
fn instantaneous_region(
    rec: &Recruitment,
    bounds: &ViabilityBounds,
    x: f64,
    r: f64,
    h: f64,
    maturity: Maturity,
) -> Region {
    let obs = QualitativeObservation {
        trend: Trend::from_change(rec.rate(x) - h, 0.0),
        harvest: HarvestLevel::compare(h, bounds.h_lo()),
        binding: is_binding(h, r),
    };
    classify_region(&obs, maturity).region
}

struct Flags {
    eco: bool,
    econ: bool,
}

fn flags(bounds: &ViabilityBounds, x: f64, h: f64) -> Flags {
    Flags {
        eco: x >= bounds.x_lo() * (1.0 - VIABILITY_TOL),
        econ: h >= bounds.h_lo() * (1.0 - VIABILITY_TOL),
    }
}

/// Runs one closed-loop trajectory.
pub fn simulate(
    params: &EconParams,
    rec: &Recruitment,
    bounds: &ViabilityBounds,
    cfg: &SimConfig,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if cfg.strategy == Strategy::Conservative && !params.has_deviation_costs() {
        return Err(ModelError::NoDeviationCosts);
    }
    let n_steps = cfg.steps();
    let per_decision = cfg.steps_per_decision();
    let deadband = cfg.trend_deadband.unwrap_or(1e-6 * rec.capacity());

    let mut ctrl = ControllerState::new(cfg.strategy, cfg.r0, cfg.rate)?
        .with_maturity(cfg.initial_maturity)
        .with_floor_step(1e-3 * rec.max_rate())?
        .with_exit_intervals(cfg.exit_intervals)?;

    let recommend = |x: f64| -> Result<f64> {
        match cfg.strategy {
            Strategy::Ichthyocentric => ichthyocentric_recommend(rec, x),
            Strategy::Conservative if x > 0.0 => conservative_recommend(params, bounds, x),
            _ => Ok(0.0),
        }
    };

    let mut x = cfg.x0;
    let mut extinct = false;
    let mut x_at_decision = x;
    let mut samples = Vec::with_capacity(n_steps / cfg.record_stride + 2);
    let mut events = Vec::new();
    let mut prev: Option<(Flags, Region)> = None;
    let mut min_x = f64::INFINITY;
    let mut min_h = f64::INFINITY;
    let mut sum_h = 0.0;
    let mut sum_h_half = 0.0;
    let half = n_steps / 2;
    let mut prev_h = 0.0;
    let mut moratorium_time = 0.0;

    for k in 0..=n_steps {
        let t = k as f64 * cfg.dt;

        if k % per_decision == 0 && k < n_steps {
            match cfg.strategy {
                Strategy::Qualitative => {
                    if k > 0 {
                        let directive = if cfg.forced_moratorium || extinct {
                            Some(0.0)
                        } else {
                            ctrl.harvest_directive()
                        };
                        let h = realized(params, x, ctrl.r, directive).h;
                        let obs = Observation {
                            trend: Trend::from_change(x - x_at_decision, deadband),
                            h,
                            r: ctrl.r,
                            binding: is_binding(h, ctrl.r),
                            stock: None,
                        };
                        let (next, rule) = qualitative_step(&ctrl, &obs, bounds);
                        match rule {
                            Rule::MoratoriumStart => events.push(Event::MoratoriumStart { t }),
                            Rule::MoratoriumEnd => events.push(Event::MoratoriumEnd { t }),
                            _ => {}
                        }
                        ctrl = next;
                    }
                }
                _ => ctrl.r = recommend(x)?,
            }
            x_at_decision = x;
        }

        let directive = if cfg.forced_moratorium || extinct {
            Some(0.0)
        } else {
            ctrl.harvest_directive()
        };
        let out = realized(params, x, ctrl.r, directive);
        let region = instantaneous_region(rec, bounds, x, ctrl.r, out.h, ctrl.maturity);
        let f = flags(bounds, x, out.h);

        match &prev {
            None => {
                if !f.eco {
                    events.push(Event::ViabilityViolation {
                        t,
                        which: Constraint::Ecological,
                    });
                }
                if !f.econ {
                    events.push(Event::ViabilityViolation {
                        t,
                        which: Constraint::Economic,
                    });
                }
            }
            Some((pf, pregion)) => {
                for (was, is, which) in [
                    (pf.eco, f.eco, Constraint::Ecological),
                    (pf.econ, f.econ, Constraint::Economic),
                ] {
                    if was && !is {
                        events.push(Event::ViabilityViolation { t, which });
                    } else if !was && is {
                        events.push(Event::ViabilityRestored { t, which });
                    }
                }
                if *pregion != region {
                    events.push(Event::RegionCrossing {
                        t,
                        from: *pregion,
                        to: region,
                    });
                }
            }
        }

        if k % cfg.record_stride == 0 || k == n_steps {
            samples.push(Sample {
                t,
                x,
                r: ctrl.r,
                h: out.h,
                q1: out.q1,
                q2: out.q2,
                regime: out.regime,
                region,
                maturity: ctrl.maturity,
                viable_eco: f.eco,
                viable_econ: f.econ,
            });
        }

        min_x = min_x.min(x);
        min_h = min_h.min(out.h);
        if k > 0 {
            let area = 0.5 * (prev_h + out.h) * cfg.dt;
            sum_h += area;
            if k > half {
                sum_h_half += area;
            }
        }
        prev_h = out.h;
        prev = Some((f, region));

        if k == n_steps {
            break;
        }
        if directive.is_some() && !cfg.forced_moratorium && !extinct {
            moratorium_time += cfg.dt;
        }

        let r = ctrl.r;
        let next = rk4(x, cfg.dt, |s| {
            if s <= 0.0 {
                rec.rate(s)
            } else {
                rec.rate(s) - realized(params, s, r, directive).h
            }
        });
        if next < 0.0 || (next == 0.0 && x > 0.0) {
            x = 0.0;
            if !extinct {
                extinct = true;
                events.push(Event::Extinction { t: t + cfg.dt });
            }
        } else {
            x = next;
        }
    }

    let horizon = n_steps as f64 * cfg.dt;
    let half_span = (n_steps - half) as f64 * cfg.dt;
    Ok(TrajectoryRecord {
        samples,
        events,
        viability: check_viability_domain(params, rec, bounds).ok(),
        mean_h: sum_h / horizon,
        mean_h_final_half: sum_h_half / half_span,
        min_x,
        min_h,
        moratorium_time,
    })
}
