//! Closed-form expressions available for the two built-in models, kept as a
//! cross-validation surface: the solvers always go through the generic
//! quadrature/ODE path, and tests compare against these formulas.
//!
//! Everything is expressed in the "paper" normalization of the scale
//! density (`S'(x) = x^{-2μ/σ²} e^{2μγx/σ²}` for Verhulst–Pearl,
//! `S'(x) = (x/(1-γx))^{-2μ/σ²}` for the logistic model); add
//! `ln S'_paper(c)` to translate speed masses to a base point `c`.

use crate::calculus::special::{gauss_2f1, kummer_m, ln_gamma, ln_incomplete_beta, ln_lower_incomplete_gamma};
use crate::error::Result;

/// `ln S'(x)` for Verhulst–Pearl in the paper normalization.
pub fn vp_ln_scale_density_paper(mu: f64, gamma: f64, sigma: f64, x: f64) -> f64 {
    let a = 2.0 * mu / (sigma * sigma);
    -a * x.ln() + a * gamma * x
}

/// `ln m((0,x))` for Verhulst–Pearl via the lower incomplete gamma
/// function; requires `μ > σ²/2`.
pub fn vp_ln_speed_mass_paper(mu: f64, gamma: f64, sigma: f64, x: f64) -> Result<f64> {
    let s2 = sigma * sigma;
    let a = 2.0 * mu / s2;
    let z = a * gamma * x;
    Ok((2.0 / s2).ln() + (a - 1.0) * (1.0 / (a * gamma)).ln()
        + ln_lower_incomplete_gamma(a - 1.0, z)?)
}

/// `ln S'(x)` for the logistic model in the paper normalization.
pub fn logistic_ln_scale_density_paper(mu: f64, gamma: f64, sigma: f64, x: f64) -> f64 {
    let a = 2.0 * mu / (sigma * sigma);
    -a * (x / (1.0 - gamma * x)).ln()
}

/// `ln m((0,x))` for the logistic model via the incomplete beta function;
/// requires `μ > σ²/2` and `x < 1/γ`.
pub fn logistic_ln_speed_mass_paper(mu: f64, gamma: f64, sigma: f64, x: f64) -> Result<f64> {
    let s2 = sigma * sigma;
    let a = 2.0 * mu / s2;
    Ok((2.0 / s2).ln() + (1.0 - a) * gamma.ln() + ln_incomplete_beta(gamma * x, a - 1.0, -a - 1.0)?)
}

/// Characteristic exponents of the generator equation `Aψ = rψ` under
/// geometric noise: the roots of `½σ²α(α-1) + μα = r`.
pub fn characteristic_exponents(mu: f64, sigma: f64, r: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    let half_minus = 0.5 - mu / s2;
    let disc = (half_minus * half_minus + 2.0 * r / s2).sqrt();
    (half_minus + disc, half_minus - disc)
}

/// Increasing fundamental solution `ψ_r` for Verhulst–Pearl:
/// `(γx)^{α₁} M(α₁, 1 + α₁ - α₂, 2μγx/σ²)`.
pub fn vp_psi(mu: f64, gamma: f64, sigma: f64, r: f64, x: f64) -> Result<f64> {
    let (a1, a2) = characteristic_exponents(mu, sigma, r);
    let z = 2.0 * mu * gamma * x / (sigma * sigma);
    Ok((gamma * x).powf(a1) * kummer_m(a1, 1.0 + a1 - a2, z)?)
}

/// Increasing fundamental solution `ψ_r` for the logistic model:
/// `(γx/(1-γx))^{α₁} F(a, b; c; -γx/(1-γx))`.
pub fn logistic_psi(mu: f64, gamma: f64, sigma: f64, r: f64, x: f64) -> Result<f64> {
    let (a1, a2) = characteristic_exponents(mu, sigma, r);
    let disc = (a2 * a2 - 2.0 * a2 * (2.0 + a1) + (2.0 - a1) * (2.0 - a1)).sqrt();
    let a = 1.0 - a2 / 2.0 + a1 / 2.0 - 0.5 * disc;
    let b = 1.0 - a2 / 2.0 + a1 / 2.0 + 0.5 * disc;
    let c = 1.0 - a2 + a1;
    let u = gamma * x / (1.0 - gamma * x);
    Ok(u.powf(a1) * gauss_2f1(a, b, c, -u)?)
}

/// Log of the left side of the Verhulst–Pearl threshold equation in the
/// normalized variable `ρ = γ b`: the optimal `ρ*` is the root of
///
/// `(2μρ/σ²)^{1-2μ/σ²} (1-ρ) e^{2μρ/σ²} (2μ/σ²) γ(2μ/σ²-1, 2μρ/σ²) = 1`.
pub fn vp_rho_equation_ln(mu: f64, sigma: f64, rho: f64) -> Result<f64> {
    let a = 2.0 * mu / (sigma * sigma);
    let z = a * rho;
    Ok((1.0 - a) * z.ln() + (1.0 - rho).ln() + z + a.ln() + ln_lower_incomplete_gamma(a - 1.0, z)?)
}

/// Log-difference form of the logistic threshold equation in `ρ = γ b`:
/// the optimal `ρ*` is the root of
///
/// `(ρ/(1-ρ))^{2μ/σ²} = ρ(1-ρ) (2μ/σ²) B(ρ, 2μ/σ²-1, -2μ/σ²-1)`.
pub fn logistic_rho_equation_ln(mu: f64, sigma: f64, rho: f64) -> Result<f64> {
    let a = 2.0 * mu / (sigma * sigma);
    let lhs = a * (rho / (1.0 - rho)).ln();
    let rhs = rho.ln() + (1.0 - rho).ln() + a.ln() + ln_incomplete_beta(rho, a - 1.0, -a - 1.0)?;
    Ok(lhs - rhs)
}

/// Γ(x) through the Lanczos log form, re-exported for oracle math.
pub fn gamma_fn(x: f64) -> f64 {
    ln_gamma(x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_reduce_to_quadratic_roots() {
        let (a1, a2) = characteristic_exponents(0.1, 0.05, 0.05);
        // ½σ²α(α-1) + μα - r = 0 for both roots.
        for a in [a1, a2] {
            let v = 0.5 * 0.0025 * a * (a - 1.0) + 0.1 * a - 0.05;
            assert!(v.abs() < 1e-10, "root {a}: residual {v}");
        }
        assert!(a1 > 0.0 && a2 < 0.0);
    }

    #[test]
    fn vp_psi_solves_generator_equation() {
        // Finite-difference check of ½σ²x²ψ'' + μx(1-γx)ψ' = rψ.
        let (mu, gamma, sigma, r) = (0.1, 0.001, 0.05, 0.05);
        let x = 400.0;
        let h = 1e-3;
        let f = |x: f64| vp_psi(mu, gamma, sigma, r, x).unwrap();
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        let lhs = 0.5 * sigma * sigma * x * x * d2 + mu * x * (1.0 - gamma * x) * d1;
        let rhs = r * f(x);
        assert!((lhs - rhs).abs() / rhs.abs() < 1e-5, "{lhs} vs {rhs}");
    }

    #[test]
    fn logistic_psi_solves_generator_equation() {
        let (mu, gamma, sigma, r) = (0.1, 0.001, 0.05, 0.05);
        let x = 400.0;
        let h = 1e-3;
        let f = |x: f64| logistic_psi(mu, gamma, sigma, r, x).unwrap();
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        let sx = sigma * x * (1.0 - gamma * x);
        let lhs = 0.5 * sx * sx * d2 + mu * x * (1.0 - gamma * x) * d1;
        let rhs = r * f(x);
        assert!((lhs - rhs).abs() / rhs.abs() < 1e-5, "{lhs} vs {rhs}");
    }
}
