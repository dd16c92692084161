//! Population models driven by one-dimensional SDEs
//! `dX = X μ(X) dt + σ(X) dB`, and numerical audits of the standing
//! assumptions the harvesting theory needs:
//!
//! * μ continuous, nonincreasing, positive near 0, negative for large
//!   densities (so a carrying capacity `x₀` with `μ(x₀) = 0` exists);
//! * the total drift `μ(x)·x` single-peaked with maximizer `x̂ < x₀`;
//! * the speed measure finite near 0;
//! * the Engelbert–Schmidt integrability conditions.

use crate::calculus::quad::{self, Quadrature};
use crate::calculus::root;
use crate::calculus::scale::ScaleSpeed;
use crate::error::{HarvestError, Result};

/// Which coefficient family a model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `dX = μX(1-γX) dt + σX dB` on `(0, ∞)`.
    VerhulstPearl,
    /// `dX = μX(1-γX) dt + σX(1-γX) dB` on `(0, 1/γ)`.
    Logistic,
    /// A registered parametric family (not one of the two built-ins).
    Custom,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::VerhulstPearl => "verhulst_pearl",
            ModelKind::Logistic => "logistic",
            ModelKind::Custom => "custom",
        }
    }
}

/// Coefficient functions, stored as named parameter sets so that models are
/// plain data: cloneable, hashable-by-value, and safe to share across
/// threads.
#[derive(Debug, Clone, PartialEq)]
enum Coeffs {
    VerhulstPearl { mu: f64, gamma: f64, sigma: f64 },
    Logistic { mu: f64, gamma: f64, sigma: f64 },
    /// μ(x) = a − decay·x with σ(x) = s·x; the custom family used in tests
    /// and available from spec files as `kind=linear`.
    Linear { a: f64, decay: f64, s: f64 },
}

/// Parameter view of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Builtin { mu: f64, gamma: f64, sigma: f64 },
    Linear { a: f64, decay: f64, s: f64 },
}

/// A one-dimensional diffusion population model. Immutable after
/// construction; all methods are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionModel {
    coeffs: Coeffs,
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(HarvestError::InvalidParameter {
            name,
            value,
            reason: "must be a positive finite number",
        });
    }
    Ok(())
}

impl DiffusionModel {
    /// Build one of the two built-in models.
    pub fn builtin(kind: ModelKind, mu: f64, gamma: f64, sigma: f64) -> Result<Self> {
        require_positive("mu", mu)?;
        require_positive("gamma", gamma)?;
        require_positive("sigma", sigma)?;
        let coeffs = match kind {
            ModelKind::VerhulstPearl => Coeffs::VerhulstPearl { mu, gamma, sigma },
            ModelKind::Logistic => Coeffs::Logistic { mu, gamma, sigma },
            ModelKind::Custom => {
                return Err(HarvestError::InvalidParameter {
                    name: "kind",
                    value: f64::NAN,
                    reason: "custom models are built through their own constructors",
                })
            }
        };
        Ok(DiffusionModel { coeffs })
    }

    pub fn verhulst_pearl(mu: f64, gamma: f64, sigma: f64) -> Result<Self> {
        Self::builtin(ModelKind::VerhulstPearl, mu, gamma, sigma)
    }

    pub fn logistic(mu: f64, gamma: f64, sigma: f64) -> Result<Self> {
        Self::builtin(ModelKind::Logistic, mu, gamma, sigma)
    }

    /// Custom family with per-capita rate `μ(x) = a − decay·x` and
    /// geometric noise `σ(x) = s·x`. `decay = 0` is allowed and gives a
    /// constant rate (which fails the audit, intentionally).
    pub fn linear_drift(a: f64, decay: f64, s: f64) -> Result<Self> {
        require_positive("a", a)?;
        require_positive("s", s)?;
        if !(decay >= 0.0) || !decay.is_finite() {
            return Err(HarvestError::InvalidParameter {
                name: "decay",
                value: decay,
                reason: "must be a nonnegative finite number",
            });
        }
        Ok(DiffusionModel {
            coeffs: Coeffs::Linear { a, decay, s },
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self.coeffs {
            Coeffs::VerhulstPearl { .. } => ModelKind::VerhulstPearl,
            Coeffs::Logistic { .. } => ModelKind::Logistic,
            Coeffs::Linear { .. } => ModelKind::Custom,
        }
    }

    pub fn params(&self) -> ModelParams {
        match self.coeffs {
            Coeffs::VerhulstPearl { mu, gamma, sigma } | Coeffs::Logistic { mu, gamma, sigma } => {
                ModelParams::Builtin { mu, gamma, sigma }
            }
            Coeffs::Linear { a, decay, s } => ModelParams::Linear { a, decay, s },
        }
    }

    /// Inverse carrying capacity γ, defined for the built-in kinds.
    pub fn gamma(&self) -> Option<f64> {
        match self.coeffs {
            Coeffs::VerhulstPearl { gamma, .. } | Coeffs::Logistic { gamma, .. } => Some(gamma),
            Coeffs::Linear { .. } => None,
        }
    }

    /// Upper endpoint of the state interval; `None` means unbounded.
    pub fn state_upper(&self) -> Option<f64> {
        match self.coeffs {
            Coeffs::Logistic { gamma, .. } => Some(1.0 / gamma),
            _ => None,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > 0.0
            && x.is_finite()
            && match self.state_upper() {
                Some(upper) => x < upper,
                None => true,
            }
    }

    fn domain_check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(HarvestError::OutOfDomain {
                x,
                upper: self.state_upper().unwrap_or(f64::INFINITY),
            })
        }
    }

    /// Per-capita growth rate μ(x).
    pub fn percap_drift(&self, x: f64) -> f64 {
        match self.coeffs {
            Coeffs::VerhulstPearl { mu, gamma, .. } | Coeffs::Logistic { mu, gamma, .. } => {
                mu * (1.0 - gamma * x)
            }
            Coeffs::Linear { a, decay, .. } => a - decay * x,
        }
    }

    /// Diffusion coefficient σ(x).
    pub fn diffusion(&self, x: f64) -> f64 {
        match self.coeffs {
            Coeffs::VerhulstPearl { sigma, .. } => sigma * x,
            Coeffs::Logistic { sigma, gamma, .. } => sigma * x * (1.0 - gamma * x),
            Coeffs::Linear { s, .. } => s * x,
        }
    }

    pub fn sigma_sq(&self, x: f64) -> f64 {
        let s = self.diffusion(x);
        s * s
    }

    /// Total drift μ(x)·x of the density SDE.
    pub fn total_drift(&self, x: f64) -> Result<f64> {
        self.domain_check(x)?;
        Ok(self.percap_drift(x) * x)
    }

    /// Total drift without the domain check, for hot simulation loops.
    #[inline]
    pub fn total_drift_unchecked(&self, x: f64) -> f64 {
        self.percap_drift(x) * x
    }

    /// Carrying capacity: the unique root of μ.
    ///
    /// For bounded-state models whose rate vanishes *at* the boundary (the
    /// logistic built-in), the boundary itself is the root; μ never changes
    /// sign inside the open interval there.
    pub fn x_zero(&self) -> Result<f64> {
        // Geometric scan for a sign change of μ. μ is nonincreasing under
        // (A1), so the first bracket found is the only one.
        let upper_limit = self
            .state_upper()
            .map(|u| u * (1.0 - 1e-9))
            .unwrap_or(1e15);
        let scan_lo = 1e-12f64;
        let mut prev_x = scan_lo;
        let mut prev_mu = self.percap_drift(prev_x);
        let mut bracket = None;
        let steps = ((upper_limit / scan_lo).log10() * 4.0).ceil() as usize;
        for i in 1..=steps {
            let x = (scan_lo.ln() + (upper_limit / scan_lo).ln() * i as f64 / steps as f64).exp();
            let mu = self.percap_drift(x);
            if prev_mu > 0.0 && mu <= 0.0 {
                bracket = Some((prev_x, x));
                break;
            }
            prev_x = x;
            prev_mu = mu;
        }

        if let Some((lo, hi)) = bracket {
            return root::bracketed_root(|x| self.percap_drift(x), lo, hi, 1e-12);
        }
        if let Some(upper) = self.state_upper() {
            // Rate positive throughout but vanishing at the finite boundary:
            // the boundary is the carrying capacity.
            let probe = upper * (1.0 - 1e-9);
            if self.percap_drift(probe) > 0.0
                && self.percap_drift(probe) < 1e-3 * self.percap_drift(upper * 0.5).abs()
            {
                return Ok(upper);
            }
        }
        Err(HarvestError::AssumptionViolation(format!(
            "per-capita rate has no root on (0, {upper_limit:e}): assumption (A1) fails"
        )))
    }

    /// Maximizer x̂ of the total drift μ(x)·x.
    pub fn xhat(&self) -> Result<f64> {
        let x0 = self.x_zero()?;
        let lo = x0 * 1e-9;
        let hi = x0 * (1.0 - 1e-12);
        self.check_drift_unimodal(lo, hi)?;
        Ok(root::golden_max(
            |x| self.percap_drift(x) * x,
            lo,
            hi,
            1e-10,
        ))
    }

    fn check_drift_unimodal(&self, lo: f64, hi: f64) -> Result<()> {
        const N: usize = 512;
        let mut falling = false;
        let mut drift_max = 0.0f64;
        let mut values = Vec::with_capacity(N);
        for i in 0..N {
            let x = (lo.ln() + (hi / lo).ln() * i as f64 / (N - 1) as f64).exp();
            let d = self.percap_drift(x) * x;
            drift_max = drift_max.max(d.abs());
            values.push((x, d));
        }
        let tol = drift_max * 1e-12;
        for w in values.windows(2) {
            let rise = w[1].1 - w[0].1;
            if rise > tol && falling {
                return Err(HarvestError::AssumptionViolation(format!(
                    "total drift is not single-peaked: it rises again near x = {}",
                    w[1].0
                )));
            }
            if rise < -tol {
                falling = true;
            }
        }
        Ok(())
    }

    /// Deterministic maximum-sustainable-yield bound μ(x̂)·x̂.
    pub fn msy_bound(&self) -> Result<f64> {
        let xh = self.xhat()?;
        Ok(self.percap_drift(xh) * xh)
    }

    /// Spec-file representation (`key=value` lines) that parses back to an
    /// identical model.
    pub fn spec_string(&self) -> String {
        match self.coeffs {
            Coeffs::VerhulstPearl { mu, gamma, sigma } => {
                format!("kind=verhulst_pearl\nmu={mu}\ngamma={gamma}\nsigma={sigma}\n")
            }
            Coeffs::Logistic { mu, gamma, sigma } => {
                format!("kind=logistic\nmu={mu}\ngamma={gamma}\nsigma={sigma}\n")
            }
            Coeffs::Linear { a, decay, s } => {
                format!("kind=linear\na={a}\ndecay={decay}\ns={s}\n")
            }
        }
    }
}

impl std::fmt::Display for DiffusionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.coeffs {
            Coeffs::VerhulstPearl { mu, gamma, sigma } => {
                write!(f, "verhulst_pearl(mu={mu}, gamma={gamma}, sigma={sigma})")
            }
            Coeffs::Logistic { mu, gamma, sigma } => {
                write!(f, "logistic(mu={mu}, gamma={gamma}, sigma={sigma})")
            }
            Coeffs::Linear { a, decay, s } => {
                write!(f, "linear(a={a}, decay={decay}, s={s})")
            }
        }
    }
}

/// Free-function form of the built-in constructor.
pub fn make_builtin(kind: ModelKind, mu: f64, gamma: f64, sigma: f64) -> Result<DiffusionModel> {
    DiffusionModel::builtin(kind, mu, gamma, sigma)
}

/// Total drift μ(x)·x with domain checking.
pub fn total_drift(model: &DiffusionModel, x: f64) -> Result<f64> {
    model.total_drift(x)
}

// ---------------------------------------------------------------------------
// Assumption audit
// ---------------------------------------------------------------------------

/// One audited condition: pass/fail plus quantitative evidence and, for
/// failures tied to a location, the grid point where the worst violation
/// occurred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub pass: bool,
    /// Violation magnitude, detected maximizer, tail estimate, … depending
    /// on the field.
    pub value: f64,
    pub witness: Option<f64>,
}

impl Check {
    pub fn passed(value: f64) -> Self {
        Check {
            pass: true,
            value,
            witness: None,
        }
    }
    pub fn failed(value: f64, witness: f64) -> Self {
        Check {
            pass: false,
            value,
            witness: Some(witness),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.pass {
            write!(f, "pass ({:.6e})", self.value)
        } else if let Some(w) = self.witness {
            write!(f, "FAIL ({:.6e} at x = {w:.6e})", self.value)
        } else {
            write!(f, "FAIL ({:.6e})", self.value)
        }
    }
}

/// Audit of the standing assumptions. The two `g_*` fields concern the
/// almost-sure optimality conditions and stay `None` ("pending") until an
/// ergodic solution exists to evaluate them against.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub a1_monotone: Check,
    pub a1_limits: Check,
    pub a2_unimodal: Check,
    pub a3_finite_speed: Check,
    pub es_condition: Check,
    pub sigma_half_condition: Check,
    pub g_monotone: Option<Check>,
    pub g_square_integrable: Option<Check>,
}

impl AssumptionReport {
    /// All audited (non-pending) conditions hold.
    pub fn core_pass(&self) -> bool {
        self.a1_monotone.pass
            && self.a1_limits.pass
            && self.a2_unimodal.pass
            && self.a3_finite_speed.pass
            && self.es_condition.pass
            && self.sigma_half_condition.pass
    }

    pub fn rows(&self) -> Vec<(&'static str, String)> {
        let fmt_opt = |c: &Option<Check>| match c {
            Some(c) => c.to_string(),
            None => "pending".to_string(),
        };
        vec![
            ("a1_monotone", self.a1_monotone.to_string()),
            ("a1_limits", self.a1_limits.to_string()),
            ("a2_unimodal", self.a2_unimodal.to_string()),
            ("a3_finite_speed", self.a3_finite_speed.to_string()),
            ("es_condition", self.es_condition.to_string()),
            ("sigma_half_condition", self.sigma_half_condition.to_string()),
            ("g_monotone", fmt_opt(&self.g_monotone)),
            ("g_square_integrable", fmt_opt(&self.g_square_integrable)),
        ]
    }
}

/// Log-spaced audit grid over `[x₀·1e-6, min(upper·(1-1e-6), 100·x₀)]`.
///
/// Logarithmic spacing because the speed density has a power-law endpoint
/// at 0 that linear grids never sample.
pub fn audit_grid(model: &DiffusionModel, grid_points: usize) -> Result<(Vec<f64>, f64, f64)> {
    let anchor = model.x_zero().or_else(|_| model.xhat()).unwrap_or(1.0);
    let lo = anchor * 1e-6;
    let hi = match model.state_upper() {
        Some(u) => (u * (1.0 - 1e-6)).min(100.0 * anchor),
        None => 100.0 * anchor,
    };
    if !(lo < hi) {
        return Err(HarvestError::Numeric(format!(
            "degenerate audit interval [{lo}, {hi}]"
        )));
    }
    let n = grid_points.max(64);
    let grid = (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect();
    Ok((grid, lo, hi))
}

/// Numerically audit assumptions (A1)–(A3), the Engelbert–Schmidt
/// conditions, and the `μ > σ²/2` persistence inequality on a log-spaced
/// grid. Failures are recorded in the report, never raised as errors.
pub fn audit_assumptions(model: &DiffusionModel, grid_points: usize) -> Result<AssumptionReport> {
    let (grid, lo, hi) = audit_grid(model, grid_points)?;

    // (A1) monotonicity of μ.
    let mut worst_rise = 0.0f64;
    let mut worst_at = None;
    let mu_scale = grid
        .iter()
        .map(|&x| model.percap_drift(x).abs())
        .fold(0.0f64, f64::max);
    for w in grid.windows(2) {
        let rise = model.percap_drift(w[1]) - model.percap_drift(w[0]);
        if rise > worst_rise {
            worst_rise = rise;
            worst_at = Some(w[1]);
        }
    }
    let a1_monotone = if worst_rise <= mu_scale * 1e-12 {
        Check::passed(worst_rise)
    } else {
        Check::failed(worst_rise, worst_at.unwrap_or(lo))
    };

    // (A1) limits: positive rate near 0; negative (or vanishing at a finite
    // boundary) at the upper probe. The paper's margin η is unquantified, so
    // this audits signs at the probe points only.
    let mu_lo = model.percap_drift(lo);
    let mu_hi = model.percap_drift(hi);
    let upper_ok = mu_hi < 0.0
        || (model.state_upper().is_some() && mu_hi.abs() <= mu_lo.abs() * 1e-3);
    let a1_limits = if mu_lo > 0.0 && upper_ok {
        Check::passed(mu_hi)
    } else {
        Check::failed(mu_hi, if mu_lo > 0.0 { hi } else { lo })
    };

    // (A2) single-peaked total drift.
    let drift: Vec<f64> = grid.iter().map(|&x| model.percap_drift(x) * x).collect();
    let drift_max = drift.iter().fold(0.0f64, |m, &d| m.max(d.abs()));
    let tol = drift_max * 1e-12;
    let mut falling = false;
    let mut violation = None;
    let mut peak_idx = 0;
    for i in 1..grid.len() {
        if drift[i] > drift[peak_idx] {
            peak_idx = i;
        }
        let rise = drift[i] - drift[i - 1];
        if rise > tol && falling {
            violation = Some(grid[i]);
            break;
        }
        if rise < -tol {
            falling = true;
        }
    }
    let a2_unimodal = match violation {
        None => Check::passed(grid[peak_idx]),
        Some(at) => Check::failed(grid[peak_idx], at),
    };

    // (A3) finite speed measure near 0: the singular-endpoint quadrature of
    // m' over (0, y] must converge for a test point y.
    let test_y = grid[grid.len() / 2];
    let a3_finite_speed = match ScaleSpeed::new(model, test_y, Quadrature::default())
        .and_then(|ss| ss.ln_speed_mass(test_y))
    {
        Ok(ln_mass) => Check::passed(ln_mass.exp()),
        Err(_) => {
            let ln_m = |y: f64| {
                2f64.ln() - model.sigma_sq(y).ln()
                    + ScaleSpeed::new(model, test_y, Quadrature::default())
                        .map(|ss| ss.ln_scale_density(y).unwrap_or(f64::NAN))
                        .unwrap_or(f64::NAN)
            };
            let e = quad::local_exponent_at_zero(&ln_m, test_y);
            Check::failed(e, test_y)
        }
    };

    // Engelbert–Schmidt: σ > 0 on the grid and the local integrability of
    // (1 + |yμ(y)|)/σ²(y) at a handful of probe windows.
    let mut es = Check::passed(0.0);
    for &x in &grid {
        let s = model.diffusion(x);
        if !(s > 0.0) || !s.is_finite() {
            es = Check::failed(s, x);
            break;
        }
    }
    if es.pass {
        let probes = [0, grid.len() / 4, grid.len() / 2, 3 * grid.len() / 4, grid.len() - 1];
        let q = Quadrature {
            rel_tol: 1e-8,
            ..Default::default()
        };
        for &i in &probes {
            let x = grid[i];
            let integrand = |y: f64| (1.0 + (y * model.percap_drift(y)).abs()) / model.sigma_sq(y);
            match quad::integrate(integrand, x * (1.0 - 1e-3), x * (1.0 + 1e-3), &q) {
                Ok(r) if r.value.is_finite() => {
                    es.value = es.value.max(r.value);
                }
                _ => {
                    es = Check::failed(f64::INFINITY, x);
                    break;
                }
            }
        }
    }

    // μ > σ²/2 near 0 (keeps 0 unattainable for geometric-type noise; for
    // the built-ins this is exactly the paper's persistence condition).
    let s0 = {
        let s = model.diffusion(lo) / lo;
        s * s
    };
    let margin = mu_lo - 0.5 * s0;
    let sigma_half_condition = if margin > 0.0 {
        Check::passed(margin)
    } else {
        Check::failed(margin, lo)
    };

    Ok(AssumptionReport {
        grid_lo: lo,
        grid_hi: hi,
        a1_monotone,
        a1_limits,
        a2_unimodal,
        a3_finite_speed,
        es_condition: es,
        sigma_half_condition,
        g_monotone: None,
        g_square_integrable: None,
    })
}

// ---------------------------------------------------------------------------
// Spec-file interface
// ---------------------------------------------------------------------------

/// Parse a line-oriented `key=value` model specification:
///
/// ```text
/// kind=verhulst_pearl
/// mu=0.1
/// gamma=0.001
/// sigma=0.05
/// ```
///
/// The custom family uses `kind=linear` with keys `a`, `decay`, `s`.
/// Unknown keys are an error; values round-trip in decimal.
pub fn parse_model_spec(text: &str) -> Result<DiffusionModel> {
    let mut kind: Option<String> = None;
    let mut values: std::collections::BTreeMap<String, f64> = std::collections::BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            HarvestError::Config(format!("line {}: expected key=value, got `{line}`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        if key == "kind" {
            kind = Some(value.to_string());
            continue;
        }
        if !matches!(key, "mu" | "gamma" | "sigma" | "a" | "decay" | "s") {
            return Err(HarvestError::Config(format!(
                "unknown model key `{key}` on line {}",
                lineno + 1
            )));
        }
        let parsed: f64 = value.parse().map_err(|_| {
            HarvestError::Config(format!("key `{key}`: `{value}` is not a number"))
        })?;
        values.insert(key.to_string(), parsed);
    }

    let kind = kind.ok_or_else(|| HarvestError::Config("missing `kind` key".into()))?;
    let get = |k: &str| -> Result<f64> {
        values
            .get(k)
            .copied()
            .ok_or_else(|| HarvestError::Config(format!("missing model key `{k}`")))
    };
    let reject_extra = |allowed: &[&str]| -> Result<()> {
        for k in values.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(HarvestError::Config(format!(
                    "key `{k}` does not apply to kind `{kind}`"
                )));
            }
        }
        Ok(())
    };

    match kind.as_str() {
        "verhulst_pearl" => {
            reject_extra(&["mu", "gamma", "sigma"])?;
            DiffusionModel::verhulst_pearl(get("mu")?, get("gamma")?, get("sigma")?)
        }
        "logistic" => {
            reject_extra(&["mu", "gamma", "sigma"])?;
            DiffusionModel::logistic(get("mu")?, get("gamma")?, get("sigma")?)
        }
        "linear" => {
            reject_extra(&["a", "decay", "s"])?;
            DiffusionModel::linear_drift(get("a")?, get("decay")?, get("s")?)
        }
        other => Err(HarvestError::Config(format!(
            "unknown model kind `{other}` (expected verhulst_pearl, logistic, or linear)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vp() -> DiffusionModel {
        DiffusionModel::verhulst_pearl(0.1, 0.001, 0.05).unwrap()
    }

    #[test]
    fn builtin_coefficients_match_definitions() {
        let m = vp();
        assert!((m.percap_drift(500.0) - 0.05).abs() < 1e-15);
        assert!((m.diffusion(500.0) - 25.0).abs() < 1e-12);

        let l = DiffusionModel::logistic(0.1, 0.001, 0.05).unwrap();
        assert!((l.diffusion(500.0) - 12.5).abs() < 1e-12);
        assert_eq!(l.state_upper(), Some(1000.0));
        assert_eq!(vp().state_upper(), None);
    }

    #[test]
    fn nonpositive_parameters_rejected() {
        let err = DiffusionModel::verhulst_pearl(0.1, 0.001, -0.1).unwrap_err();
        assert!(matches!(err, HarvestError::InvalidParameter { name: "sigma", .. }));
        assert!(DiffusionModel::logistic(0.0, 0.001, 0.05).is_err());
    }

    #[test]
    fn total_drift_values() {
        assert!((vp().total_drift(500.0).unwrap() - 25.0).abs() < 1e-12);
        assert!(vp().total_drift(1000.0).unwrap().abs() < 1e-12);
        let l = DiffusionModel::logistic(0.1, 0.001, 0.05).unwrap();
        assert!((l.total_drift(250.0).unwrap() - 18.75).abs() < 1e-12);
    }

    #[test]
    fn total_drift_domain_error() {
        assert!(vp().total_drift(-1.0).is_err());
        let l = DiffusionModel::logistic(0.1, 0.001, 0.05).unwrap();
        assert!(l.total_drift(1000.0).is_err());
    }

    #[test]
    fn xhat_and_x_zero() {
        assert!((vp().xhat().unwrap() - 500.0).abs() / 500.0 < 1e-8);
        assert!((vp().x_zero().unwrap() - 1000.0).abs() / 1000.0 < 1e-10);

        let l = DiffusionModel::logistic(0.1, 0.001, 0.05).unwrap();
        assert!((l.xhat().unwrap() - 500.0).abs() / 500.0 < 1e-8);
        assert!((l.x_zero().unwrap() - 1000.0).abs() < 1e-9);

        // μ(x) = 0.2·(1 - x/50): drift peak at 25.
        let c = DiffusionModel::linear_drift(0.2, 0.2 / 50.0, 0.05).unwrap();
        assert!((c.xhat().unwrap() - 25.0).abs() / 25.0 < 1e-8);

        // μ(x) = 0.3 - 0.01·x: root at 30.
        let c = DiffusionModel::linear_drift(0.3, 0.01, 0.05).unwrap();
        assert!((c.x_zero().unwrap() - 30.0).abs() / 30.0 < 1e-10);

        // Constant rate never crosses zero.
        let c = DiffusionModel::linear_drift(0.1, 0.0, 0.05).unwrap();
        assert!(matches!(
            c.x_zero().unwrap_err(),
            HarvestError::AssumptionViolation(_)
        ));
    }

    #[test]
    fn xhat_below_x_zero() {
        for model in [
            vp(),
            DiffusionModel::logistic(0.1, 0.001, 0.05).unwrap(),
            DiffusionModel::linear_drift(0.3, 0.01, 0.05).unwrap(),
        ] {
            assert!(model.xhat().unwrap() < model.x_zero().unwrap());
        }
    }

    #[test]
    fn audit_passes_for_figure_parameters() {
        for model in [vp(), DiffusionModel::logistic(0.1, 0.001, 0.05).unwrap()] {
            let report = audit_assumptions(&model, 128).unwrap();
            assert!(report.core_pass(), "{model}: {:?}", report.rows());
            assert!(report.g_monotone.is_none());
        }
    }

    #[test]
    fn audit_flags_large_volatility() {
        // 0.1 < 0.5²/2 = 0.125.
        let m = DiffusionModel::verhulst_pearl(0.1, 0.001, 0.5).unwrap();
        let report = audit_assumptions(&m, 128).unwrap();
        assert!(!report.sigma_half_condition.pass);
    }

    #[test]
    fn audit_is_deterministic() {
        let a = audit_assumptions(&vp(), 128).unwrap();
        let b = audit_assumptions(&vp(), 128).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spec_roundtrip() {
        for model in [
            vp(),
            DiffusionModel::logistic(0.2, 0.004, 0.1).unwrap(),
            DiffusionModel::linear_drift(0.3, 0.01, 0.05).unwrap(),
        ] {
            let text = model.spec_string();
            let parsed = parse_model_spec(&text).unwrap();
            assert_eq!(parsed, model);
        }
    }

    #[test]
    fn spec_rejects_unknown_keys() {
        let err = parse_model_spec("kind=verhulst_pearl\nmu=0.1\ngamma=0.001\nsigma=0.05\nfoo=1\n")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("foo"), "{msg}");
    }

    #[test]
    fn spec_rejects_bad_values() {
        assert!(parse_model_spec("kind=verhulst_pearl\nmu=abc\ngamma=0.001\nsigma=0.05\n").is_err());
        assert!(parse_model_spec("mu=0.1\ngamma=0.001\nsigma=0.05\n").is_err());
        let err =
            parse_model_spec("kind=verhulst_pearl\nmu=0.1\ngamma=-1\nsigma=0.05\n").unwrap_err();
        assert!(err.to_string().contains("gamma"));
    }
}
