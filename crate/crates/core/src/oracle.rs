//! Brute-force Nash equilibrium by alternating best responses.
//!
//! Only [`profit`](crate::negotiation::profit) evaluations are used here: the
//! best response is found by a grid scan plus golden-section search on each
//! smooth piece of the profit curve, never by the closed-form quotas. This
//! keeps the oracle an independent check of [`total_harvest`](crate::negotiation::total_harvest).

use crate::error::{positive_stock, require, ModelError, Result};
use crate::model::{EconParams, Group};
use crate::negotiation::profit_unchecked;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Upper end of the quota search interval. `None` uses
    /// `2 max(0, r_hat(x)) + 1`, widened automatically if the maximum sits on it.
    pub q_max: Option<f64>,
    /// Grid points per quota axis.
    pub resolution: usize,
    /// Outer fixed-point tolerance on the estimated distance to the equilibrium.
    pub tolerance: f64,
    /// Width at which the golden-section search hands over to the final parabolic step.
    pub inner_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            q_max: None,
            resolution: 64,
            tolerance: 1e-8,
            inner_tolerance: 1e-10,
            max_iterations: 200_000,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(q) = self.q_max {
            require(q > 0.0 && q.is_finite(), "q_max", q, "positive")?;
        }
        require(
            self.resolution >= 64,
            "resolution",
            self.resolution as f64,
            ">= 64",
        )?;
        require(
            self.tolerance > 0.0,
            "tolerance",
            self.tolerance,
            "positive",
        )?;
        require(
            self.inner_tolerance > 0.0,
            "inner_tolerance",
            self.inner_tolerance,
            "positive",
        )?;
        require(
            self.max_iterations >= 10,
            "max_iterations",
            self.max_iterations as f64,
            ">= 10",
        )?;
        Ok(())
    }

    fn search_bound(&self, params: &EconParams, x: f64) -> f64 {
        self.q_max
            .unwrap_or_else(|| 2.0 * params.r_hat(x).max(0.0) + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    pub quota: f64,
    pub profit: f64,
    /// No positive quota beats staying in port.
    pub unprofitable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub q1: f64,
    pub q2: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Estimated distance to the fixed point after the last sweep.
    pub residual: f64,
}

impl OracleResult {
    pub fn total(&self) -> f64 {
        self.q1 + self.q2
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Own quota maximizing `group`'s profit against a fixed `q_other`.
pub fn best_response(
    params: &EconParams,
    group: Group,
    q_other: f64,
    x: f64,
    r: f64,
    cfg: &OracleConfig,
) -> Result<BestResponse> {
    positive_stock("best_response", x)?;
    require(q_other >= 0.0, "q_other", q_other, "non-negative")?;
    require(r >= 0.0, "r", r, "non-negative")?;
    cfg.validate()?;
    Ok(best_response_unchecked(params, group, q_other, x, r, cfg))
}

fn best_response_unchecked(
    params: &EconParams,
    group: Group,
    q_other: f64,
    x: f64,
    r: f64,
    cfg: &OracleConfig,
) -> BestResponse {
    let f = |q: f64| profit_unchecked(params, group, q, q_other, x, r);
    let mut upper = cfg.search_bound(params, x);

    // Widen the interval until the grid maximum is interior.
    let mut result;
    loop {
        result = maximize_piecewise(&f, 0.0, upper, (r - q_other).max(0.0), cfg);
        if result.0 < upper * (1.0 - 1.0 / cfg.resolution as f64) || upper > 1e12 {
            break;
        }
        upper *= 2.0;
    }
    let (quota, value) = result;
    let at_zero = f(0.0);
    if value <= at_zero || quota <= 0.0 {
        return BestResponse {
            quota: 0.0,
            profit: at_zero,
            unprofitable: true,
        };
    }
    BestResponse {
        quota,
        profit: value,
        unprofitable: false,
    }
}

/// Maximizes a concave function that is quadratic on `[lo, kink]` and on `[kink, hi]`.
fn maximize_piecewise(
    f: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    kink: f64,
    cfg: &OracleConfig,
) -> (f64, f64) {
    let mut pieces = Vec::with_capacity(2);
    if kink > lo && kink < hi {
        pieces.push((lo, kink));
        pieces.push((kink, hi));
    } else {
        pieces.push((lo, hi));
    }
    pieces
        .into_iter()
        .map(|(a, b)| maximize_smooth(f, a, b, cfg))
        .fold(
            (lo, f(lo)),
            |best, cand| if cand.1 > best.1 { cand } else { best },
        )
}

/// Grid scan, golden-section refinement, then one parabolic step through
/// three points of the (locally quadratic) profit.
fn maximize_smooth(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, cfg: &OracleConfig) -> (f64, f64) {
    let n = cfg.resolution;
    let step = (hi - lo) / (n - 1) as f64;
    let grid = |k: usize| if k == n - 1 { hi } else { lo + k as f64 * step };

    let mut best_k = 0;
    let mut best_v = f64::NEG_INFINITY;
    for k in 0..n {
        let v = f(grid(k));
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    let mut a = grid(best_k.saturating_sub(1));
    let mut b = grid((best_k + 1).min(n - 1));

    let scale = 1.0 + hi.abs();
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > 1e-6 * scale {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    let (mut q, mut fq) = if fc >= fd { (c, fc) } else { (d, fd) };

    // Parabola through three points of the piece around q; exact on a quadratic.
    let left = (q - 1e-3 * scale).max(lo);
    let right = (q + 1e-3 * scale).min(hi);
    if right - left > cfg.inner_tolerance {
        let mid = 0.5 * (left + right);
        let (fl, fm, fr) = (f(left), f(mid), f(right));
        let (dl, dr) = (mid - left, mid - right);
        let den = dl * (fm - fr) - dr * (fm - fl);
        if den != 0.0 {
            let vertex = mid - 0.5 * (dl * dl * (fm - fr) - dr * dr * (fm - fl)) / den;
            if vertex.is_finite() {
                let vertex = vertex.clamp(lo, hi);
                let fv = f(vertex);
                if fv >= fq {
                    q = vertex;
                    fq = fv;
                }
            }
        }
    }
    for edge in [lo, hi] {
        let fe = f(edge);
        if fe > fq {
            q = edge;
            fq = fe;
        }
    }
    (q, fq)
}

/// Alternating best responses from `(0, 0)` until the estimated distance to
/// the fixed point drops below the tolerance.
///
/// The distance is estimated from the last two sweep moves as
/// `move * rate / (1 - rate)`; the best-response map is a contraction with
/// rate `rate` in the deviation-cost regime.
pub fn equilibrium(
    params: &EconParams,
    x: f64,
    r: f64,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    positive_stock("equilibrium", x)?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(ModelError::InvalidParameter {
            name: "r",
            value: r,
            requirement: "non-negative and finite",
        });
    }
    cfg.validate()?;

    let mut q = [0.0_f64; 2];
    let mut last_move = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iterations {
        let prev = q;
        q[0] = best_response_unchecked(params, Group::First, q[1], x, r, cfg).quota;
        q[1] = best_response_unchecked(params, Group::Second, q[0], x, r, cfg).quota;

        let step = (q[0] - prev[0]).abs().max((q[1] - prev[1]).abs());
        let scale = 1.0 + q[0] + q[1];
        let rate = if last_move.is_finite() && last_move > 0.0 {
            (step / last_move).min(1.0 - 1e-9)
        } else {
            0.5
        };
        residual = step * rate / (1.0 - rate);
        last_move = step;
        if residual <= cfg.tolerance || step <= 1e-14 * scale {
            return Ok(OracleResult {
                q1: q[0],
                q2: q[1],
                converged: true,
                iterations: it,
                residual: residual.min(step),
            });
        }
    }
    Ok(OracleResult {
        q1: q[0],
        q2: q[1],
        converged: false,
        iterations: cfg.max_iterations,
        residual,
    })
}
