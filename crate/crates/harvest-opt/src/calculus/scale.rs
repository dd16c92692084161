//! Scale density `S'`, speed density `m'`, and cumulative speed mass
//! `m((0, x))` of a one-dimensional diffusion:
//!
//! ```text
//! S'(x) = exp(-∫_c^x 2 μ(y) y / σ²(y) dy),     m'(x) = 2 / (σ²(x) S'(x))
//! ```
//!
//! The base point `c` is an arbitrary constant; every published quantity is
//! a `c`-invariant combination (the constants cancel in `S'(x)·m((0,x))`).
//! All magnitudes are handled in log space: with `2μ/σ² = 80` the densities
//! span hundreds of orders of magnitude and naive evaluation overflows.

use std::collections::BTreeMap;
use std::sync::Mutex;

use super::quad::{self, Quadrature};
use crate::error::{HarvestError, Result};
use crate::model::{DiffusionModel, ModelKind, ModelParams};

/// Scale and speed evaluators for one model at one base point.
///
/// The built-in kinds use their closed-form scale exponents; custom models
/// run the exponent integral through adaptive quadrature. The cumulative
/// speed mass is memoized: a query extends the integral from the nearest
/// cached point below it, and the first query handles the power-law
/// endpoint at 0 with a substitution. The cache is internally synchronized;
/// cloning the owning problem per worker keeps parameter sweeps
/// schedule-independent.
#[derive(Debug)]
pub struct ScaleSpeed {
    model: DiffusionModel,
    base_point: f64,
    quad: Quadrature,
    // key: x.to_bits() (order-preserving for positive finite floats),
    // value: ln m((0, x)).
    mass_cache: Mutex<BTreeMap<u64, f64>>,
}

impl ScaleSpeed {
    pub fn new(model: &DiffusionModel, base_point: f64, quad: Quadrature) -> Result<Self> {
        quad.validate()?;
        if !model.contains(base_point) {
            return Err(HarvestError::OutOfDomain {
                x: base_point,
                upper: model.state_upper().unwrap_or(f64::INFINITY),
            });
        }
        Ok(ScaleSpeed {
            model: model.clone(),
            base_point,
            quad,
            mass_cache: Mutex::new(BTreeMap::new()),
        })
    }

    /// Default construction with `c = x̂` (a mid-scale point that keeps the
    /// scale exponent small over the solve bracket).
    pub fn for_model(model: &DiffusionModel) -> Result<Self> {
        let xhat = model.xhat()?;
        Self::new(model, xhat, Quadrature::default())
    }

    pub fn base_point(&self) -> f64 {
        self.base_point
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    fn domain_check(&self, x: f64) -> Result<()> {
        if self.model.contains(x) {
            Ok(())
        } else {
            Err(HarvestError::OutOfDomain {
                x,
                upper: self.model.state_upper().unwrap_or(f64::INFINITY),
            })
        }
    }

    /// `ln S'(x)` with `S'(base_point) = 1`.
    pub fn ln_scale_density(&self, x: f64) -> Result<f64> {
        self.domain_check(x)?;
        let c = self.base_point;
        match self.model.params() {
            ModelParams::Builtin { mu, gamma, sigma } => {
                let a = 2.0 * mu / (sigma * sigma);
                Ok(match self.model.kind() {
                    ModelKind::VerhulstPearl => -a * (x / c).ln() + a * gamma * (x - c),
                    ModelKind::Logistic => {
                        -a * ((x / (1.0 - gamma * x)).ln() - (c / (1.0 - gamma * c)).ln())
                    }
                    ModelKind::Custom => unreachable!(),
                })
            }
            ModelParams::Linear { .. } => {
                let model = &self.model;
                let integrand =
                    |y: f64| 2.0 * model.percap_drift(y) * y / model.sigma_sq(y);
                let r = quad::integrate(integrand, c, x, &self.quad)?;
                Ok(-r.value)
            }
        }
    }

    pub fn scale_density(&self, x: f64) -> Result<f64> {
        Ok(self.ln_scale_density(x)?.exp())
    }

    /// `ln m'(x) = ln 2 - ln σ²(x) - ln S'(x)`.
    pub fn ln_speed_density(&self, x: f64) -> Result<f64> {
        Ok(std::f64::consts::LN_2 - self.model.sigma_sq(x).ln() + -self.ln_scale_density(x)?)
    }

    pub fn speed_density(&self, x: f64) -> Result<f64> {
        Ok(self.ln_speed_density(x)?.exp())
    }

    /// Log-integrand of the speed measure, safe to call at any `y`
    /// (returns `-inf` outside the state interval).
    fn ln_speed_density_clamped(&self, y: f64) -> f64 {
        if !self.model.contains(y) {
            return f64::NEG_INFINITY;
        }
        self.ln_speed_density(y).unwrap_or(f64::NAN)
    }

    /// `ln m((0, x))`, memoized cumulatively.
    pub fn ln_speed_mass(&self, x: f64) -> Result<f64> {
        self.domain_check(x)?;
        let key = x.to_bits();
        let below = {
            let cache = self.mass_cache.lock().unwrap();
            if let Some(&v) = cache.get(&key) {
                return Ok(v);
            }
            cache
                .range(..key)
                .next_back()
                .map(|(&k, &v)| (f64::from_bits(k), v))
        };

        let ln_mass = match below {
            Some((x1, ln_m1)) => {
                let (ln_seg, _) = quad::integrate_log(
                    |y| self.ln_speed_density_clamped(y),
                    x1,
                    x,
                    &self.quad,
                )?;
                quad::log_add_exp(ln_m1, ln_seg)
            }
            None => {
                let (ln_m, _) = quad::integrate_log_from_zero(
                    |y| self.ln_speed_density_clamped(y),
                    x,
                    &self.quad,
                )?;
                ln_m
            }
        };
        self.mass_cache.lock().unwrap().insert(key, ln_mass);
        Ok(ln_mass)
    }

    /// `m((0, x))`; overflows to `inf` where the mass exceeds the double
    /// range (use [`ScaleSpeed::ln_speed_mass`] there).
    pub fn speed_mass(&self, x: f64) -> Result<f64> {
        Ok(self.ln_speed_mass(x)?.exp())
    }

    /// `ln(S'(x) · m((0, x)))` — the `c`-invariant product at the core of
    /// the yield and threshold formulas.
    pub fn ln_scale_mass_product(&self, x: f64) -> Result<f64> {
        Ok(self.ln_scale_density(x)? + self.ln_speed_mass(x)?)
    }
}

/// Free-function forms of the three evaluators.
pub fn scale_density(model: &DiffusionModel, c: f64, x: f64) -> Result<f64> {
    ScaleSpeed::new(model, c, Quadrature::default())?.scale_density(x)
}

pub fn speed_density(_model: &DiffusionModel, ss: &ScaleSpeed, x: f64) -> Result<f64> {
    ss.speed_density(x)
}

pub fn speed_mass(_model: &DiffusionModel, ss: &ScaleSpeed, x: f64) -> Result<f64> {
    ss.speed_mass(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles;

    fn vp() -> DiffusionModel {
        DiffusionModel::verhulst_pearl(0.1, 0.001, 0.05).unwrap()
    }

    fn logistic() -> DiffusionModel {
        DiffusionModel::logistic(0.1, 0.001, 0.05).unwrap()
    }

    #[test]
    fn scale_density_is_one_at_base() {
        for model in [vp(), logistic()] {
            let ss = ScaleSpeed::for_model(&model).unwrap();
            assert_eq!(ss.scale_density(ss.base_point()).unwrap(), 1.0);
        }
        let custom = DiffusionModel::linear_drift(0.3, 0.01, 0.05).unwrap();
        let ss = ScaleSpeed::new(&custom, 10.0, Quadrature::default()).unwrap();
        assert_eq!(ss.scale_density(10.0).unwrap(), 1.0);
    }

    #[test]
    fn vp_scale_ratio_matches_paper_form() {
        // S'(x₂)/S'(x₁) = (x₂/x₁)^{-2μ/σ²} e^{(2μγ/σ²)(x₂-x₁)}, c-free.
        let model = vp();
        let ss = ScaleSpeed::for_model(&model).unwrap();
        let (x1, x2) = (400.0, 800.0);
        let got = ss.ln_scale_density(x2).unwrap() - ss.ln_scale_density(x1).unwrap();
        let a = 2.0 * 0.1 / 0.0025;
        let want = -a * (x2 / x1).ln() + a * 0.001 * (x2 - x1);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn speed_scale_identity() {
        // m'(x) · S'(x) · σ²(x) / 2 = 1 for every x.
        for model in [vp(), logistic()] {
            let ss = ScaleSpeed::for_model(&model).unwrap();
            for &x in &[5.0, 120.0, 500.0, 900.0] {
                let v = ss.ln_speed_density(x).unwrap()
                    + ss.ln_scale_density(x).unwrap()
                    + (model.sigma_sq(x) / 2.0).ln();
                assert!(v.abs() < 1e-10, "x = {x}: ln residual {v}");
            }
        }
    }

    #[test]
    fn custom_scale_matches_simpson_oracle() {
        // 10⁶-panel composite Simpson on the exponent integral.
        let model = DiffusionModel::linear_drift(0.3, 0.01, 0.05).unwrap();
        let (c, x) = (1.0, 2.0);
        let ss = ScaleSpeed::new(&model, c, Quadrature::default()).unwrap();
        let got = ss.scale_density(x).unwrap();

        let g = |y: f64| 2.0 * model.percap_drift(y) * y / model.sigma_sq(y);
        let n = 1_000_000usize;
        let h = (x - c) / n as f64;
        let mut acc = g(c) + g(x);
        for i in 1..n {
            let y = c + h * i as f64;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(y);
        }
        let integral = acc * h / 3.0;
        let want = (-integral).exp();
        assert!(
            (got - want).abs() / want.abs() < 1e-8,
            "{got} vs {want}"
        );
    }

    #[test]
    fn speed_mass_monotone_and_vanishing_at_zero() {
        let ss = ScaleSpeed::for_model(&vp()).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for &x in &[1.0, 10.0, 100.0, 500.0, 900.0, 2000.0] {
            let m = ss.ln_speed_mass(x).unwrap();
            assert!(m >= prev, "mass not monotone at {x}");
            prev = m;
        }
        assert!(ss.speed_mass(1.0).unwrap() < 1e-100);
    }

    #[test]
    fn vp_speed_mass_matches_incomplete_gamma() {
        let model = vp();
        let ss = ScaleSpeed::for_model(&model).unwrap();
        let c = ss.base_point();
        for i in 0..20 {
            let x = 50.0 + 950.0 * i as f64 / 19.0;
            let got = ss.ln_speed_mass(x).unwrap();
            let want = oracles::vp_ln_speed_mass_paper(0.1, 0.001, 0.05, x).unwrap()
                + oracles::vp_ln_scale_density_paper(0.1, 0.001, 0.05, c);
            let rel = (got - want).abs();
            assert!(rel < 1e-8, "x = {x}: ln gap {rel}");
        }
    }

    #[test]
    fn logistic_speed_mass_matches_incomplete_beta() {
        let model = logistic();
        let ss = ScaleSpeed::for_model(&model).unwrap();
        let c = ss.base_point();
        for i in 0..20 {
            let x = 50.0 + 900.0 * i as f64 / 19.0;
            let got = ss.ln_speed_mass(x).unwrap();
            let want = oracles::logistic_ln_speed_mass_paper(0.1, 0.001, 0.05, x).unwrap()
                + oracles::logistic_ln_scale_density_paper(0.1, 0.001, 0.05, c);
            let rel = (got - want).abs();
            assert!(rel < 1e-8, "x = {x}: ln gap {rel}");
        }
    }

    #[test]
    fn scale_mass_product_is_base_point_invariant() {
        for model in [vp(), logistic()] {
            let s1 = ScaleSpeed::new(&model, 500.0, Quadrature::default()).unwrap();
            let s2 = ScaleSpeed::new(&model, 250.0, Quadrature::default()).unwrap();
            for &b in &[300.0, 550.0, 700.0, 950.0] {
                let p1 = s1.ln_scale_mass_product(b).unwrap();
                let p2 = s2.ln_scale_mass_product(b).unwrap();
                assert!((p1 - p2).abs() < 1e-9, "b = {b}: {p1} vs {p2}");
            }
        }
    }

    #[test]
    fn incremental_cache_agrees_with_direct_integration() {
        let model = vp();
        // Warm a cache bottom-up, then compare against fresh direct queries.
        let cached = ScaleSpeed::for_model(&model).unwrap();
        for &x in &[100.0, 300.0, 500.0, 700.0, 900.0] {
            cached.ln_speed_mass(x).unwrap();
        }
        for &x in &[350.0, 750.0, 950.0] {
            let direct = ScaleSpeed::for_model(&model)
                .unwrap()
                .ln_speed_mass(x)
                .unwrap();
            let inc = cached.ln_speed_mass(x).unwrap();
            assert!((direct - inc).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn divergent_speed_measure_is_flagged() {
        // μ < σ²/2 makes m' behave like x^{2μ/σ²-2} with exponent < -1.
        let model = DiffusionModel::verhulst_pearl(0.1, 0.001, 0.5).unwrap();
        let ss = ScaleSpeed::for_model(&model).unwrap();
        let err = ss.ln_speed_mass(500.0).unwrap_err();
        assert!(matches!(err, HarvestError::AssumptionViolation(_)));
    }
}
