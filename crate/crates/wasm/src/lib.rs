//! Browser bindings. Every export takes scenario TOML plus a JSON object of
//! numeric overrides (and optionally `"strategy"` / `"maturity"`) and returns JSON.

use fishviab::config::{Scenario, ScenarioConfig};
use fishviab::export::{phase_levels, phase_rows, PhaseGrid};
use fishviab::{check_viability_domain, simulate, Maturity, Strategy};
use serde_json::{json, Map, Value};
use wasm_bindgen::prelude::*;

/// Samples returned to the page are thinned to at most this many.
pub const MAX_PLOT_SAMPLES: usize = 2000;
pub const MAX_EVENTS: usize = 500;

fn apply_overrides(cfg: &mut ScenarioConfig, overrides: &str) -> Result<(), String> {
    if overrides.trim().is_empty() {
        return Ok(());
    }
    let map: Map<String, Value> =
        serde_json::from_str(overrides).map_err(|e| format!("overrides: {e}"))?;
    for (key, value) in map {
        match (key.as_str(), value) {
            ("strategy", Value::String(s)) => {
                cfg.strategy.kind = s.parse::<Strategy>().map_err(|e| e.to_string())?
            }
            ("maturity", Value::String(s)) => {
                cfg.strategy.initial_maturity = match s.as_str() {
                    "emerging" => Maturity::Emerging,
                    "mature" => Maturity::Mature,
                    _ => return Err(format!("unknown maturity '{s}'")),
                }
            }
            (field, Value::Number(n)) => {
                let v = n.as_f64().ok_or_else(|| format!("{field}: not a number"))?;
                cfg.set_field(field, v).map_err(|e| e.to_string())?;
            }
            (field, other) => return Err(format!("{field}: unsupported value {other}")),
        }
    }
    Ok(())
}

fn scenario(toml: &str, overrides: &str) -> Result<Scenario, String> {
    let mut cfg = ScenarioConfig::from_toml_str(toml).map_err(|e| e.to_string())?;
    apply_overrides(&mut cfg, overrides)?;
    cfg.build().map_err(|e| e.to_string())
}

pub fn canonical_toml() -> String {
    ScenarioConfig::canonical().to_canonical_string()
}

/// Viability-domain verdict with margins and critical levels.
pub fn check(toml: &str, overrides: &str) -> Result<String, String> {
    let sc = scenario(toml, overrides)?;
    let report = check_viability_domain(&sc.params, &sc.recruitment, &sc.bounds)
        .map_err(|e| e.to_string())?;
    let levels = phase_levels(&sc.params, &sc.recruitment, &sc.bounds);
    Ok(json!({ "report": report, "levels": levels }).to_string())
}

/// Trajectory thinned for plotting plus events and summary statistics.
pub fn run(toml: &str, overrides: &str) -> Result<String, String> {
    let sc = scenario(toml, overrides)?;
    let tr =
        simulate(&sc.params, &sc.recruitment, &sc.bounds, &sc.sim).map_err(|e| e.to_string())?;
    let stride = tr.samples.len().div_ceil(MAX_PLOT_SAMPLES).max(1);
    let mut samples: Vec<_> = tr.samples.iter().step_by(stride).collect();
    if samples.last().map(|s| s.t) != Some(tr.terminal().t) {
        samples.push(tr.terminal());
    }
    let events: Vec<_> = tr.events.iter().take(MAX_EVENTS).collect();
    Ok(json!({
        "samples": samples,
        "events": events,
        "events_total": tr.events.len(),
        "violations": tr.violations().count(),
        "first_violation": tr.first_violation(),
        "moratorium_started": tr.moratorium_started(),
        "mean_h": tr.mean_h,
        "mean_h_final_half": tr.mean_h_final_half,
        "min_x": tr.min_x,
        "terminal_x": tr.terminal().x,
        "x_lo": sc.bounds.x_lo(),
        "h_lo": sc.bounds.h_lo(),
    })
    .to_string())
}

/// Region and drift sign on an `nx` by `nr` grid, row-major in `x`.
pub fn phase(
    toml: &str,
    overrides: &str,
    x_max: f64,
    r_max: f64,
    nx: usize,
    nr: usize,
) -> Result<String, String> {
    let sc = scenario(toml, overrides)?;
    let grid = PhaseGrid {
        x_min: x_max / nx.max(1) as f64,
        x_max,
        r_min: 0.0,
        r_max,
        nx,
        nr,
    };
    let rows =
        phase_rows(&sc.params, &sc.recruitment, &sc.bounds, &grid).map_err(|e| e.to_string())?;
    let region: Vec<u8> = rows.iter().map(|row| row.region as u8).collect();
    let sign: Vec<i8> = rows.iter().map(|row| row.sign_dx).collect();
    let curves: Vec<_> = rows
        .iter()
        .step_by(nr)
        .map(|row| json!([row.x, row.r_hat, row.r_bar, row.r_lo]))
        .collect();
    Ok(json!({
        "grid": { "x_min": grid.x_min, "x_max": x_max, "r_max": r_max, "nx": nx, "nr": nr },
        "region": region,
        "sign_dx": sign,
        "curves": curves,
        "levels": phase_levels(&sc.params, &sc.recruitment, &sc.bounds),
    })
    .to_string())
}

#[wasm_bindgen(js_name = canonicalConfig)]
pub fn canonical_config_js() -> String {
    canonical_toml()
}

#[wasm_bindgen(js_name = checkDomain)]
pub fn check_js(toml: &str, overrides: &str) -> Result<String, JsError> {
    check(toml, overrides).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulate)]
pub fn run_js(toml: &str, overrides: &str) -> Result<String, JsError> {
    run(toml, overrides).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = phasePortrait)]
pub fn phase_js(
    toml: &str,
    overrides: &str,
    x_max: f64,
    r_max: f64,
    nx: usize,
    nr: usize,
) -> Result<String, JsError> {
    phase(toml, overrides, x_max, r_max, nx, nr).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn canonical_domain_is_viable() {
        let out = parse(&check(&canonical_toml(), "").unwrap());
        assert_eq!(out["report"]["viable"], Value::Bool(true));
        assert!((out["levels"]["levels"]["a"].as_f64().unwrap() - 0.7).abs() < 1e-9);
    }

    #[test]
    fn overrides_change_the_verdict() {
        let out = parse(&check(&canonical_toml(), r#"{"h_lo": 0.6}"#).unwrap());
        assert_eq!(out["report"]["viable"], Value::Bool(false));
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(check("not toml [", "").is_err());
        assert!(check(&canonical_toml(), r#"{"zeta": 1}"#).is_err());
        assert!(check(&canonical_toml(), r#"{"strategy": "greedy"}"#).is_err());
        assert!(check(&canonical_toml(), r#"{"price": -1}"#).is_err());
        assert!(run(&canonical_toml(), "[1]").is_err());
    }

    #[test]
    fn simulation_is_thinned_and_ends_at_horizon() {
        let out = parse(&run(&canonical_toml(), r#"{"strategy": "ichthyocentric"}"#).unwrap());
        let samples = out["samples"].as_array().unwrap();
        assert!(samples.len() <= MAX_PLOT_SAMPLES + 1);
        assert_eq!(samples.last().unwrap()["t"].as_f64(), Some(200.0));
        assert!(out["violations"].as_u64().unwrap() >= 1);
    }

    #[test]
    fn phase_grid_shapes() {
        let out = parse(&phase(&canonical_toml(), "", 2.0, 1.0, 40, 30).unwrap());
        assert_eq!(out["region"].as_array().unwrap().len(), 1200);
        assert_eq!(out["sign_dx"].as_array().unwrap().len(), 1200);
        assert_eq!(out["curves"].as_array().unwrap().len(), 40);
        assert!(phase(&canonical_toml(), "", 2.0, 1.0, 0, 30).is_err());
    }
}
