//! Bracketed scalar root finding.

/// Bisection on `[lo, hi]`, requiring a sign change of `f`.
///
/// Stops once the bracket is no wider than `tol`; with `tol = 0` it halves
/// until the midpoint coincides with an end, i.e. to `f64` resolution.
/// Returns `None` without a sign change.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    // pick the end with the smaller residual
    if f(lo).abs() <= f(hi).abs() {
        Some(lo)
    } else {
        Some(hi)
    }
}

/// All sign changes of `f` on `segments` equal parts of `[lo, hi]`, each refined by bisection.
pub fn bracketed_roots<F>(f: F, lo: f64, hi: f64, segments: usize, tol: f64) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let width = (hi - lo) / segments as f64;
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    for k in 1..=segments {
        let b = if k == segments {
            hi
        } else {
            lo + k as f64 * width
        };
        let fb = f(b);
        if fa.is_finite() && fb.is_finite() && fa != 0.0 && fa.signum() != fb.signum() {
            if let Some(root) = bisect(&f, a, b, tol) {
                roots.push(root);
            }
        }
        a = b;
        fa = fb;
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_two() {
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0).unwrap();
        assert!((root - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn no_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9).is_none());
    }

    #[test]
    fn endpoint_roots() {
        assert_eq!(bisect(|x| x - 1.0, 1.0, 3.0, 1e-9), Some(1.0));
        assert_eq!(bisect(|x| x - 3.0, 1.0, 3.0, 1e-9), Some(3.0));
    }

    #[test]
    fn several_roots() {
        let roots = bracketed_roots(|x: f64| x.sin(), 0.5, 10.0, 100, 1e-12);
        assert_eq!(roots.len(), 3);
        for (k, r) in roots.iter().enumerate() {
            assert!((r - (k + 1) as f64 * std::f64::consts::PI).abs() < 1e-12);
        }
    }
}
