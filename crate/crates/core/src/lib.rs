//! Bio-economic model of a co-managed fishery.
//!
//! Two groups of fishing firms negotiate catch quotas against a scientific
//! recommendation `r`; the resulting total harvest drives the stock through
//! `dx/dt = R(x) - h(x, r)`. The crate provides the closed-form negotiation
//! equilibrium, a brute-force oracle for it, viability-domain analysis for a
//! minimum stock and a minimum harvest, three recommendation strategies and a
//! simulator that evaluates them.

pub mod config;
pub mod control;
pub mod error;
pub mod export;
pub mod model;
pub mod negotiation;
pub mod oracle;
pub mod roots;
pub mod sim;
pub mod sweep;
pub mod verify;
pub mod viability;

pub use control::{ControllerState, Observation, Strategy};
pub use error::{ModelError, Result};
pub use model::{recruitment, EconParams, Group, Recruitment};
pub use negotiation::{
    harvest_binding, individual_quotas, profit, r_hat, total_harvest, NegotiationOutcome, Regime,
};
pub use sim::{simulate, step, SimConfig, TrajectoryRecord};
pub use viability::{
    check_viability_domain, classify_region, critical_levels, r_bar, r_lo, CriticalLevels,
    Maturity, Region, RegionLabel, ViabilityBounds,
};
