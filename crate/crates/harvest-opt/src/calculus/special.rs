//! Special functions used as closed-form oracles for the built-in models:
//! lower incomplete gamma, incomplete beta, Kummer's confluent
//! hypergeometric M, and the Gauss hypergeometric 2F1.
//!
//! These are a test surface, not a general-purpose library; parameter
//! domains are exactly what the oracle formulas need.

use super::quad::{integrate_log_from_zero, Quadrature};
use crate::error::{HarvestError, Result};

const MAX_TERMS: usize = 100_000;
const TERM_EPS: f64 = 1e-16;

// Lanczos coefficients (g = 7, n = 9).
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln γ(a, z)` where `γ(a, z) = ∫₀ᶻ t^{a-1} e^{-t} dt`.
///
/// Series for `z < a + 1`, Lentz continued fraction for the complement
/// otherwise; the log form stays finite where `γ` itself overflows.
pub fn ln_lower_incomplete_gamma(a: f64, z: f64) -> Result<f64> {
    if !(a > 0.0) || !(z >= 0.0) {
        return Err(HarvestError::InvalidParameter {
            name: "lower_incomplete_gamma",
            value: if a > 0.0 { z } else { a },
            reason: "requires a > 0 and z >= 0",
        });
    }
    if z == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if z < a + 1.0 {
        // γ(a,z) = z^a e^{-z} Σ_n z^n / (a (a+1) … (a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        for n in 1..MAX_TERMS {
            term *= z / (a + n as f64);
            sum += term;
            if term.abs() < sum.abs() * TERM_EPS {
                return Ok(a * z.ln() - z + sum.ln());
            }
        }
        Err(HarvestError::Numeric(format!(
            "incomplete gamma series did not converge for a = {a}, z = {z}"
        )))
    } else {
        // Q(a,z) via the Lentz continued fraction, then γ = Γ(a)(1 − Q).
        let tiny = 1e-300;
        let b0 = z + 1.0 - a;
        let mut f = if b0.abs() < tiny { tiny } else { b0 };
        let mut c = f;
        let mut d = 0.0;
        for n in 1..MAX_TERMS {
            let nf = n as f64;
            let an = nf * (a - nf);
            let bn = z + 2.0 * nf + 1.0 - a;
            d = bn + an * d;
            if d.abs() < tiny {
                d = tiny;
            }
            d = 1.0 / d;
            c = bn + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < TERM_EPS {
                let ln_gamma_a = ln_gamma(a);
                let q = (a * z.ln() - z - ln_gamma_a).exp() / f;
                return Ok(ln_gamma_a + (-q).ln_1p());
            }
        }
        Err(HarvestError::Numeric(format!(
            "incomplete gamma continued fraction did not converge for a = {a}, z = {z}"
        )))
    }
}

/// Lower incomplete gamma `γ(a, z)`. Overflows for large `a`; use the
/// log form where magnitudes are extreme.
pub fn lower_incomplete_gamma(a: f64, z: f64) -> Result<f64> {
    Ok(ln_lower_incomplete_gamma(a, z)?.exp())
}

/// `ln B(z; a, b)` where `B(z; a, b) = ∫₀ᶻ t^{a-1} (1-t)^{b-1} dt`.
///
/// Evaluated by adaptive quadrature of the defining integral, so `b < 0` is
/// allowed (the integrand is then singular only at 1, which `z < 1`
/// excludes).
pub fn ln_incomplete_beta(z: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(0.0..1.0).contains(&z) {
        return Err(HarvestError::InvalidParameter {
            name: "incomplete_beta",
            value: if a > 0.0 { z } else { a },
            reason: "requires a > 0 and 0 <= z < 1",
        });
    }
    if z == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let cfg = Quadrature::default();
    let (ln_v, _) = integrate_log_from_zero(
        |t| {
            if t <= 0.0 || t >= 1.0 {
                f64::NEG_INFINITY
            } else {
                (a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln()
            }
        },
        z,
        &cfg,
    )?;
    Ok(ln_v)
}

/// Incomplete beta `B(z; a, b)` (unregularized).
pub fn incomplete_beta(z: f64, a: f64, b: f64) -> Result<f64> {
    Ok(ln_incomplete_beta(z, a, b)?.exp())
}

/// Kummer confluent hypergeometric function `M(a, b, z)` by ascending
/// series with term-ratio stopping.
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<f64> {
    if b <= 0.0 && b.fract() == 0.0 {
        return Err(HarvestError::InvalidParameter {
            name: "kummer_m",
            value: b,
            reason: "b must not be a nonpositive integer",
        });
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * z / ((b + nf) * (nf + 1.0));
        sum += term;
        if !sum.is_finite() {
            return Err(HarvestError::Numeric(format!(
                "Kummer M overflowed for a = {a}, b = {b}, z = {z}"
            )));
        }
        if term.abs() < sum.abs() * TERM_EPS {
            return Ok(sum);
        }
    }
    Err(HarvestError::Numeric(format!(
        "Kummer M series did not converge for a = {a}, b = {b}, z = {z}"
    )))
}

/// Gauss hypergeometric `₂F₁(a, b; c; z)` for `z < 1`.
///
/// Direct series for `|z| < 0.9`; otherwise the Pfaff transformation
/// `₂F₁(a,b;c;z) = (1-z)^{-a} ₂F₁(a, c-b; c; z/(z-1))` maps large negative
/// arguments into the unit disk.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(z < 1.0) {
        return Err(HarvestError::InvalidParameter {
            name: "gauss_2f1",
            value: z,
            reason: "requires z < 1",
        });
    }
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(HarvestError::InvalidParameter {
            name: "gauss_2f1",
            value: c,
            reason: "c must not be a nonpositive integer",
        });
    }
    if z.abs() < 0.9 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 0..MAX_TERMS {
            let nf = n as f64;
            term *= (a + nf) * (b + nf) * z / ((c + nf) * (nf + 1.0));
            sum += term;
            if term.abs() < sum.abs() * TERM_EPS {
                return Ok(sum);
            }
        }
        Err(HarvestError::Numeric(format!(
            "2F1 series did not converge for a = {a}, b = {b}, c = {c}, z = {z}"
        )))
    } else {
        let w = z / (z - 1.0);
        if w.abs() >= 1.0 {
            return Err(HarvestError::Numeric(format!(
                "2F1 argument z = {z} not reachable by the z/(z-1) transformation"
            )));
        }
        let inner = gauss_2f1(a, c - b, c, w)?;
        Ok((1.0 - z).powf(-a) * inner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(got: f64, want: f64) -> f64 {
        (got - want).abs() / want.abs().max(1e-300)
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
    }

    #[test]
    fn lower_gamma_a_one_closed_form() {
        for &z in &[0.1, 0.5, 1.0, 3.0, 10.0, 50.0] {
            let got = lower_incomplete_gamma(1.0, z).unwrap();
            let want = 1.0 - (-z).exp();
            assert!(rel_err(got, want) < 1e-12, "z = {z}: {got} vs {want}");
        }
    }

    #[test]
    fn lower_gamma_half_at_one() {
        // γ(1/2, 1) = √π · erf(1), erf(1) = 0.8427007929497149
        let got = lower_incomplete_gamma(0.5, 1.0).unwrap();
        let want = std::f64::consts::PI.sqrt() * 0.842_700_792_949_714_9;
        assert!(rel_err(got, want) < 1e-12);
    }

    #[test]
    fn lower_gamma_series_and_cf_agree_at_the_switch() {
        let a = 3.7;
        let below = lower_incomplete_gamma(a, a + 0.999).unwrap();
        let above = lower_incomplete_gamma(a, a + 1.001).unwrap();
        assert!(above > below && rel_err(above, below) < 1e-3);
    }

    #[test]
    fn incomplete_beta_polynomial_case() {
        // ∫₀^{1/2} t (1-t)² dt = 11/192
        let got = incomplete_beta(0.5, 2.0, 3.0).unwrap();
        assert!(rel_err(got, 11.0 / 192.0) < 1e-10, "got {got}");
    }

    #[test]
    fn incomplete_beta_negative_b() {
        // ∫₀^{1/2} (1-t)^{-2} dt = 1/(1-z) - 1 = 1
        let got = incomplete_beta(0.5, 1.0, -1.0).unwrap();
        assert!(rel_err(got, 1.0) < 1e-9, "got {got}");
    }

    #[test]
    fn kummer_at_zero_is_one() {
        assert_eq!(kummer_m(2.3, 4.5, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn kummer_identities() {
        // M(a, a, z) = e^z
        for &z in &[0.5, 5.0, 40.0] {
            let got = kummer_m(1.7, 1.7, z).unwrap();
            assert!(rel_err(got, z.exp()) < 1e-12, "z = {z}");
        }
        // M(1, 2, z) = (e^z - 1)/z
        let got = kummer_m(1.0, 2.0, 3.0).unwrap();
        assert!(rel_err(got, (3.0f64.exp() - 1.0) / 3.0) < 1e-12);
    }

    #[test]
    fn gauss_2f1_degenerate_identity() {
        // ₂F₁(a, b; b; z) = (1-z)^{-a}
        for &z in &[-5.0, -0.5, 0.3, 0.8] {
            let got = gauss_2f1(1.25, 3.0, 3.0, z).unwrap();
            let want = (1.0 - z).powf(-1.25);
            assert!(rel_err(got, want) < 1e-11, "z = {z}: {got} vs {want}");
        }
    }

    #[test]
    fn gauss_2f1_log_identity() {
        // ₂F₁(1, 1; 2; z) = -ln(1-z)/z
        for &z in &[-20.0, -0.9, 0.5] {
            let got = gauss_2f1(1.0, 1.0, 2.0, z).unwrap();
            let want = -((1.0 - z).ln()) / z;
            assert!(rel_err(got, want) < 1e-10, "z = {z}: {got} vs {want}");
        }
    }
}
