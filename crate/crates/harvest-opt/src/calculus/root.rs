//! Deterministic bracketed root finding and golden-section optimization.

use crate::error::{HarvestError, Result};

/// Root of `f` on `[lo, hi]`, which must bracket a sign change.
///
/// Bisection with a secant step whenever the secant estimate falls strictly
/// inside the bracket; every second step bisects so the bracket width is
/// guaranteed to shrink geometrically. Stops when `f` hits zero, `|f|` drops
/// below `tol`, or the bracket width drops below `tol * max(1, |x|)`.
pub fn bracketed_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(HarvestError::InvalidParameter {
            name: "root.tol",
            value: tol,
            reason: "must be positive",
        });
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa.is_nan() || fb.is_nan() {
        return Err(HarvestError::Numeric(format!(
            "root objective returned NaN on the bracket [{a}, {b}]"
        )));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(HarvestError::NoBracket {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut force_bisect = false;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() < tol * mid.abs().max(1.0) {
            return Ok(mid);
        }

        // Secant candidate; only usable with finite ordinates.
        let mut x = mid;
        if !force_bisect && fa.is_finite() && fb.is_finite() && fa != fb {
            let s = b - fb * (b - a) / (fb - fa);
            if s > a && s < b {
                x = s;
            }
        }
        force_bisect = !force_bisect;

        let fx = f(x);
        if fx.is_nan() {
            return Err(HarvestError::Numeric(format!(
                "root objective returned NaN at x = {x}"
            )));
        }
        if fx == 0.0 || fx.abs() < tol {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Ok(0.5 * (a + b))
}

/// Maximizer of a unimodal `f` on `[lo, hi]` by golden-section search,
/// stopped at relative interval width `rel_tol`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Minimizer of a unimodal `f` on `[lo, hi]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    golden_max(|x| -f(x), lo, hi, rel_tol)
}
