//! Randomized verification suites.
//!
//! Each suite draws instances from a seeded ChaCha stream (one stream per
//! instance, so parallel and sequential runs agree) and compares a closed form
//! against an independent computation.
//!
//! The threshold conditions assume both groups fish at interior quotas. Draws
//! on which the negotiation had to clamp a quota at zero fall outside that
//! model and are redrawn for the threshold suites; the Nash suite keeps them.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{EconParams, Group, Recruitment};
use crate::negotiation::{total_harvest_unchecked, Regime};
use crate::oracle::{equilibrium, OracleConfig};
use crate::viability::{
    catch_flags, check_viability_domain, critical_levels, economic_flags, r_lo_unchecked,
    ViabilityBounds,
};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Relative agreement required between the closed form and the Nash oracle.
pub const NASH_TOL: f64 = 1e-6;
/// Instances with a condition margin below this are not scored.
pub const MARGIN_SKIP: f64 = 1e-6;
pub const SEARCH_GRID: usize = 4096;
pub const SEARCH_STOCKS: usize = 64;
const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub nash: usize,
    pub domain: usize,
    pub economic: usize,
    pub catch: usize,
    pub structure: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            nash: 1000,
            domain: 2000,
            economic: 10_000,
            catch: 10_000,
            structure: 500,
        }
    }
}

impl VerifyConfig {
    /// Same instance count for every suite.
    pub fn uniform(seed: u64, instances: usize) -> Self {
        Self {
            seed,
            nash: instances,
            domain: instances,
            economic: instances,
            catch: instances,
            structure: instances,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    /// Scored instances excluded for lying within the margin band.
    pub skipped: usize,
    /// Draws replaced because a quota was clamped or the domain was not viable.
    pub redrawn: usize,
    /// Scored instances whose closed-form claim was true; for the Nash
    /// suite, instances in the binding regime; for the structure suite,
    /// instances whose bounds form a viability domain.
    pub positives: usize,
    pub max_error: f64,
    pub seconds: f64,
    pub first_failure: Option<String>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::ok)
    }
}

/// Result of scoring one instance.
#[derive(Debug, Clone, PartialEq)]
enum Verdict {
    Pass { error: f64 },
    Fail { error: f64, detail: String },
    Skip,
}

struct Scored {
    verdict: Verdict,
    redrawn: usize,
    /// The closed-form side of the comparison was true.
    positive: bool,
}

fn instance_rng(seed: u64, salt: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index as u64);
    rng
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn random_params(rng: &mut ChaCha8Rng) -> EconParams {
    let mut draw = || log_uniform(rng, 0.1, 10.0);
    let alpha = [draw(), draw()];
    let beta = [draw(), draw()];
    let kappa = [draw(), draw()];
    let price = draw();
    EconParams::new(alpha, beta, kappa, price).expect("positive draws are valid")
}

fn random_recruitment(rng: &mut ChaCha8Rng) -> Recruitment {
    let g = log_uniform(rng, 0.2, 5.0);
    let k = log_uniform(rng, 0.5, 20.0);
    Recruitment::new(g, k).expect("positive draws are valid")
}

fn run_suite<F>(name: &str, cfg: &VerifyConfig, salt: u64, count: usize, score: F) -> SuiteReport
where
    F: Fn(&mut ChaCha8Rng) -> Scored + Sync,
{
    let start = Instant::now();
    let one = |i: usize| {
        let mut rng = instance_rng(cfg.seed, salt, i);
        (i, score(&mut rng))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(usize, Scored)> = {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(usize, Scored)> = (0..count).map(one).collect();

    let mut report = SuiteReport {
        name: name.to_string(),
        instances: count,
        passed: 0,
        failed: 0,
        skipped: 0,
        redrawn: 0,
        positives: 0,
        max_error: 0.0,
        seconds: 0.0,
        first_failure: None,
    };
    for (i, s) in results {
        report.redrawn += s.redrawn;
        if s.positive && s.verdict != Verdict::Skip {
            report.positives += 1;
        }
        match s.verdict {
            Verdict::Pass { error } => {
                report.passed += 1;
                report.max_error = report.max_error.max(error);
            }
            Verdict::Fail { error, detail } => {
                report.failed += 1;
                report.max_error = report.max_error.max(error);
                if report.first_failure.is_none() {
                    report.first_failure = Some(format!("instance {i}: {detail}"));
                }
            }
            Verdict::Skip => report.skipped += 1,
        }
    }
    report.seconds = start.elapsed().as_secs_f64();
    report
}

/// Closed-form negotiation against the best-response oracle.
pub fn nash_suite(cfg: &VerifyConfig) -> SuiteReport {
    let oracle = OracleConfig::default();
    run_suite("nash", cfg, 1, cfg.nash, |rng| {
        let params = random_params(rng);
        let x = rng.gen_range(0.1..10.0);
        let unmanaged: f64 = Group::BOTH
            .iter()
            .map(|&g| params.solo_optimum(g, x).max(0.0))
            .sum();
        let r = rng.gen_range(0.0..2.0 * unmanaged.max(0.1));
        let closed = total_harvest_unchecked(&params, x, r);
        let verdict = match equilibrium(&params, x, r, &oracle) {
            Ok(eq) if eq.converged => {
                let scale = closed.h.abs().max(1.0);
                let error = [
                    (eq.total() - closed.h).abs(),
                    (eq.q1 - closed.q1).abs(),
                    (eq.q2 - closed.q2).abs(),
                ]
                .into_iter()
                .fold(0.0, f64::max)
                    / scale;
                if error <= NASH_TOL {
                    Verdict::Pass { error }
                } else {
                    Verdict::Fail {
                        error,
                        detail: format!(
                            "{params:?} x={x} r={r}: closed ({}, {}) oracle ({}, {})",
                            closed.q1, closed.q2, eq.q1, eq.q2
                        ),
                    }
                }
            }
            Ok(eq) => Verdict::Fail {
                error: f64::INFINITY,
                detail: format!(
                    "{params:?} x={x} r={r}: oracle did not converge ({})",
                    eq.residual
                ),
            },
            Err(e) => Verdict::Fail {
                error: f64::INFINITY,
                detail: format!("{params:?} x={x} r={r}: {e}"),
            },
        };
        Scored {
            verdict,
            redrawn: 0,
            positive: closed.regime == Regime::Binding,
        }
    })
}

/// Outcome of the brute-force search for an admissible recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// At `x_lo` some `r >= 0` gives `h_lo <= h <= R(x_lo)`, and at every
    /// sampled larger stock some `r >= 0` gives `h >= h_lo`.
    pub exists: bool,
    pub at_floor: bool,
    pub above_floor: bool,
    /// Some evaluated negotiation clamped a quota at zero.
    pub clamped_seen: bool,
}

fn grid_point(top: f64, k: usize) -> f64 {
    top * k as f64 / (SEARCH_GRID - 1) as f64
}

/// Existence search for the viability domain `[x_lo, inf)` using only
/// negotiated harvests: a recommendation grid at `x_lo` with bisection on the
/// first crossing of `h_lo`, and a grid at sampled stocks up to `max(4K, 2 x_lo)`.
pub fn search_viability_domain(
    params: &EconParams,
    rec: &Recruitment,
    bounds: &ViabilityBounds,
) -> SearchOutcome {
    let (x_lo, h_lo) = (bounds.x_lo(), bounds.h_lo());
    let mut clamped_seen = false;
    let mut harvest = |x: f64, r: f64| {
        let out = total_harvest_unchecked(params, x, r);
        clamped_seen |= out.clamped;
        out.h
    };

    let growth = rec.rate(x_lo);
    let top = 3.0 * params.r_hat(x_lo).max(1.0);
    let mut at_floor = false;
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..SEARCH_GRID {
        let r = grid_point(top, k);
        let h = harvest(x_lo, r);
        if h >= h_lo && h <= growth {
            at_floor = true;
            break;
        }
        if let Some((r_prev, h_prev)) = prev {
            if h_prev < h_lo && h >= h_lo {
                let (mut lo, mut hi) = (r_prev, r);
                let mut h_hi = h;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let hm = harvest(x_lo, mid);
                    if hm >= h_lo {
                        hi = mid;
                        h_hi = hm;
                    } else {
                        lo = mid;
                    }
                }
                at_floor = h_hi <= growth;
                break;
            }
        }
        prev = Some((r, h));
    }

    let x_top = (4.0 * rec.capacity()).max(2.0 * x_lo);
    let mut above_floor = true;
    for j in 0..SEARCH_STOCKS {
        let x = x_lo + (x_top - x_lo) * (j + 1) as f64 / SEARCH_STOCKS as f64;
        let top = 3.0 * params.r_hat(x).max(1.0);
        let reachable = (0..SEARCH_GRID)
            .rev()
            .any(|k| harvest(x, grid_point(top, k)) >= h_lo);
        if !reachable {
            above_floor = false;
            break;
        }
    }

    SearchOutcome {
        exists: at_floor && above_floor,
        at_floor,
        above_floor,
        clamped_seen,
    }
}

/// Viability-domain conditions against the existence search.
pub fn domain_suite(cfg: &VerifyConfig) -> SuiteReport {
    run_suite("domain", cfg, 2, cfg.domain, |rng| {
        for redrawn in 0..MAX_REDRAWS {
            let params = random_params(rng);
            let rec = random_recruitment(rng);
            let k = rec.capacity();
            let x_lo = rng.gen_range(0.05 * k..0.95 * k);
            let h_lo = rng.gen_range(0.01..1.2) * rec.max_rate();
            let bounds = ViabilityBounds::new(x_lo, h_lo).expect("positive bounds");
            let search = search_viability_domain(&params, &rec, &bounds);
            if search.clamped_seen {
                continue;
            }
            let report = check_viability_domain(&params, &rec, &bounds).expect("w > 0");
            let verdict = if report.min_abs_margin() < MARGIN_SKIP {
                Verdict::Skip
            } else if report.viable == search.exists {
                Verdict::Pass { error: 0.0 }
            } else {
                Verdict::Fail {
                    error: 1.0,
                    detail: format!(
                        "{params:?} {rec:?} {bounds:?}: conditions {} margins {:?}, search {search:?}",
                        report.viable,
                        report.margins()
                    ),
                }
            };
            return Scored {
                verdict,
                redrawn,
                positive: report.viable,
            };
        }
        Scored {
            verdict: Verdict::Fail {
                error: 1.0,
                detail: "no unclamped draw".into(),
            },
            redrawn: MAX_REDRAWS,
            positive: false,
        }
    })
}

const FLAG_EDGE: f64 = 1e-9;

/// Economic viability of `r = R(x)` inside a verified viability domain.
pub fn economic_suite(cfg: &VerifyConfig) -> SuiteReport {
    run_suite("economic", cfg, 3, cfg.economic, |rng| {
        for redrawn in 0..MAX_REDRAWS {
            let params = random_params(rng);
            let rec = random_recruitment(rng);
            let k = rec.capacity();
            let x_lo = rng.gen_range(0.05 * k..0.95 * k);
            let h_lo = rng.gen_range(0.01..1.0) * rec.rate(x_lo);
            let bounds = ViabilityBounds::new(x_lo, h_lo).expect("positive bounds");
            let report = check_viability_domain(&params, &rec, &bounds).expect("w > 0");
            if !report.viable {
                continue;
            }
            let x = rng.gen_range(x_lo..=k);
            let r = rec.rate(x);
            let out = total_harvest_unchecked(&params, x, r);
            if out.clamped {
                continue;
            }
            let flags = economic_flags(&params, &rec, &bounds, x).expect("valid point");
            let gap = (r - r_lo_unchecked(&params, &bounds, x))
                .abs()
                .min((out.h - h_lo).abs());
            let verdict = if gap < FLAG_EDGE {
                Verdict::Skip
            } else if flags.agree() {
                Verdict::Pass { error: 0.0 }
            } else {
                Verdict::Fail {
                    error: 1.0,
                    detail: format!("{params:?} {rec:?} {bounds:?} x={x}: {flags:?}"),
                }
            };
            return Scored {
                verdict,
                redrawn,
                positive: flags.claim,
            };
        }
        Scored {
            verdict: Verdict::Fail {
                error: 1.0,
                detail: "no viable unclamped draw".into(),
            },
            redrawn: MAX_REDRAWS,
            positive: false,
        }
    })
}

/// Catch below recruitment under `r = R(x)`.
pub fn catch_suite(cfg: &VerifyConfig) -> SuiteReport {
    run_suite("catch", cfg, 4, cfg.catch, |rng| {
        for redrawn in 0..MAX_REDRAWS {
            let params = random_params(rng);
            let rec = random_recruitment(rng);
            let x = rng.gen_range(0.0..=1.0) * rec.capacity();
            if x <= 0.0 {
                continue;
            }
            let r = rec.rate(x);
            let out = total_harvest_unchecked(&params, x, r);
            if out.clamped {
                continue;
            }
            let flags = catch_flags(&params, &rec, x).expect("valid point");
            let gap = (out.h - r).abs().min((r - params.r_hat(x)).abs());
            let verdict = if gap < FLAG_EDGE * r.abs().max(1.0) {
                Verdict::Skip
            } else if flags.agree() {
                Verdict::Pass { error: 0.0 }
            } else {
                Verdict::Fail {
                    error: 1.0,
                    detail: format!("{params:?} {rec:?} x={x}: {flags:?}"),
                }
            };
            return Scored {
                verdict,
                redrawn,
                positive: flags.claim,
            };
        }
        Scored {
            verdict: Verdict::Fail {
                error: 1.0,
                detail: "no unclamped draw".into(),
            },
            redrawn: MAX_REDRAWS,
            positive: false,
        }
    })
}

/// Shape facts on sampled grids: monotone thresholds and binding harvest,
/// harvest cap, binding observable, root residuals and level ordering.
pub fn structure_suite(cfg: &VerifyConfig) -> SuiteReport {
    run_suite("structure", cfg, 5, cfg.structure, |rng| {
        let params = random_params(rng);
        let rec = random_recruitment(rng);
        let k = rec.capacity();
        let x_lo = rng.gen_range(0.05 * k..0.95 * k);
        let h_lo = rng.gen_range(0.01..1.2) * rec.max_rate();
        let bounds = ViabilityBounds::new(x_lo, h_lo).expect("positive bounds");
        let fail = |detail: String| Scored {
            verdict: Verdict::Fail { error: 1.0, detail },
            redrawn: 0,
            positive: false,
        };

        let xs: Vec<f64> = (1..=64).map(|i| 4.0 * k * i as f64 / 64.0).collect();
        for w in xs.windows(2) {
            let (a, b) = (w[0], w[1]);
            if r_lo_unchecked(&params, &bounds, b) >= r_lo_unchecked(&params, &bounds, a) {
                return fail(format!("r_lo not decreasing on [{a}, {b}]"));
            }
            if params.r_hat(b) <= params.r_hat(a) {
                return fail(format!("r_hat not increasing on [{a}, {b}]"));
            }
        }
        let r_top = 2.0 * params.r_hat(4.0 * k).max(1.0);
        for &x in &xs {
            for j in 0..16 {
                let r = r_top * j as f64 / 16.0;
                let dr = r_top / 16.0;
                if params.h_binding(x, r + dr) <= params.h_binding(x, r) {
                    return fail(format!("h_b not increasing in r at ({x}, {r})"));
                }
                if params.h_binding(x + k / 64.0, r) <= params.h_binding(x, r) {
                    return fail(format!("h_b not increasing in x at ({x}, {r})"));
                }
                let out = total_harvest_unchecked(&params, x, r);
                let rh = params.r_hat(x);
                if !out.clamped && out.h > rh.max(0.0) + 1e-12 * rh.abs().max(1.0) {
                    return fail(format!("h = {} above r_hat = {rh} at ({x}, {r})", out.h));
                }
                let hb = params.h_binding(x, r);
                if (rh - r).abs() > 1e-9 * r.max(1.0) && (rh > r) != (hb > r) {
                    return fail(format!("binding observable fails at ({x}, {r})"));
                }
            }
        }

        let levels = match critical_levels(&params, &rec, &bounds) {
            Ok(l) => l,
            Err(e) => return fail(e.to_string()),
        };
        let mut error: f64 = 0.0;
        if let Some(a) = levels.a {
            let res = (r_lo_unchecked(&params, &bounds, a) - params.r_hat(a)).abs();
            error = error.max(res);
            if res > 1e-8 {
                return fail(format!("residual {res} at a = {a}"));
            }
        }
        for v in [levels.b, levels.c].into_iter().flatten() {
            let res = (rec.rate(v) - h_lo).abs();
            error = error.max(res);
            if res > 1e-8 {
                return fail(format!("residual {res} at b/c = {v}"));
            }
        }
        let report = check_viability_domain(&params, &rec, &bounds).expect("w > 0");
        if report.viable && report.margin_recruitment > 0.0 {
            let ordered = matches!(
                (levels.a, levels.b, levels.c),
                (Some(a), Some(b), Some(c)) if b < x_lo && x_lo < c && a <= x_lo
            );
            if !ordered {
                return fail(format!(
                    "levels {levels:?} not ordered around x_lo = {x_lo}"
                ));
            }
        }
        Scored {
            verdict: Verdict::Pass { error },
            redrawn: 0,
            positive: report.viable,
        }
    })
}

pub fn run_all(cfg: &VerifyConfig) -> VerifyReport {
    VerifyReport {
        seed: cfg.seed,
        suites: vec![
            nash_suite(cfg),
            domain_suite(cfg),
            economic_suite(cfg),
            catch_suite(cfg),
            structure_suite(cfg),
        ],
    }
}
