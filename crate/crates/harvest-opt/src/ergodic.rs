//! The ergodic harvesting problem: the objective whose unique root is the
//! optimal reflection threshold `b*`, the maximal long-run yield
//! `ℓ* = μ(b*)·b* = 1/(S'(b*) m((0,b*)))`, the value gradient `u'`, the
//! almost-sure-optimality audit, and volatility comparative statics.

use rayon::prelude::*;

use crate::calculus::quad::{self, Quadrature};
use crate::calculus::root;
use crate::calculus::scale::ScaleSpeed;
use crate::error::{HarvestError, Result};
use crate::model::{AssumptionReport, Check, DiffusionModel, ModelKind};

/// Solution of the ergodic problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicSolution {
    /// Optimal reflection threshold.
    pub b_star: f64,
    /// Maximal expected average yield, `μ(b*)·b*`.
    pub ell_star: f64,
    /// Normalized threshold `γ·b*` for built-in kinds.
    pub rho_star: Option<f64>,
    /// Root-finding bracket `(x̂, x₀)`.
    pub bracket: (f64, f64),
    /// `|μ(b*)·b*·S'(b*)·m((0,b*)) - 1|`: how exactly the two optimality
    /// identities agree at the computed root.
    pub consistency_gap: f64,
}

/// One model with its scale/speed calculus, ready to solve.
#[derive(Debug)]
pub struct ErgodicProblem {
    model: DiffusionModel,
    ss: ScaleSpeed,
    x_hat: f64,
    x_zero: f64,
    root_tol: f64,
}

impl ErgodicProblem {
    pub fn new(model: DiffusionModel) -> Result<Self> {
        Self::with_tolerances(model, Quadrature::default(), 1e-10)
    }

    pub fn with_tolerances(model: DiffusionModel, quad: Quadrature, root_tol: f64) -> Result<Self> {
        let x_hat = model.xhat()?;
        let x_zero = model.x_zero()?;
        let ss = ScaleSpeed::new(&model, x_hat, quad)?;
        Ok(ErgodicProblem {
            model,
            ss,
            x_hat,
            x_zero,
            root_tol,
        })
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    pub fn scale_speed(&self) -> &ScaleSpeed {
        &self.ss
    }

    pub fn x_hat(&self) -> f64 {
        self.x_hat
    }

    pub fn x_zero(&self) -> f64 {
        self.x_zero
    }

    /// `ln(μ(x)·x·S'(x)·m((0,x)))`, the product that equals 1 at the
    /// optimal threshold. Only defined where the drift is positive.
    fn ln_opt_product(&self, x: f64) -> Result<f64> {
        let drift = self.model.total_drift(x)?;
        if !(drift > 0.0) {
            return Err(HarvestError::Numeric(format!(
                "optimality product undefined at x = {x}: total drift {drift} <= 0"
            )));
        }
        Ok(drift.ln() + self.ss.ln_scale_mass_product(x)?)
    }

    /// Scaled objective `1 - μ(x)·x·S'(x)·m((0,x))`: same sign and root as
    /// the harvest objective `f`, but O(1) across the bracket.
    fn f_scaled(&self, x: f64) -> Result<f64> {
        let drift = self.model.total_drift(x)?;
        if drift <= 0.0 {
            // Beyond the carrying capacity the mass term is nonnegative, so
            // the objective is positive.
            return Ok(1.0 + (-drift) * self.ss.ln_scale_mass_product(x)?.exp());
        }
        Ok(-(self.ln_opt_product(x)?).exp_m1())
    }

    /// Harvest objective `f(x) = ∫₀ˣ (μ(y)y - μ(x)x) m'(y) dy`, evaluated
    /// through the equivalent single-quadrature identity
    /// `f(x) = 1/S'(x) - μ(x)·x·m((0,x))` in log space.
    ///
    /// `f` is negative at the drift peak, crosses zero exactly once on
    /// `(x̂, x₀)`, and is positive at the carrying capacity. Where the
    /// leading factor overflows, the sign is still exact.
    pub fn f_objective(&self, x: f64) -> Result<f64> {
        let inv_scale = (-self.ss.ln_scale_density(x)?).exp();
        Ok(inv_scale * self.f_scaled(x)?)
    }

    /// Long-run yield of the threshold rule at `b`:
    /// `1/(S'(b)·m((0,b)))`, a base-point-invariant quantity.
    pub fn yield_at(&self, b: f64) -> Result<f64> {
        Ok((-self.ss.ln_scale_mass_product(b)?).exp())
    }

    /// Solve for the optimal threshold and maximal yield.
    pub fn solve(&self) -> Result<ErgodicSolution> {
        let lo = self.x_hat * (1.0 + 1e-9);
        let hi_raw = self.x_zero * (1.0 - 1e-9);
        // For bounded states the carrying capacity can sit on the boundary
        // itself; stay strictly inside.
        let hi = match self.model.state_upper() {
            Some(u) => hi_raw.min(u * (1.0 - 1e-9)),
            None => hi_raw,
        };

        let f_lo = self.f_scaled(lo)?;
        let f_hi = self.f_scaled(hi)?;
        let f_mid = self.f_scaled(0.5 * (lo + hi))?;
        if f_lo.abs() < 1e-14 && f_hi.abs() < 1e-14 && f_mid.abs() < 1e-14 {
            return Err(HarvestError::AssumptionViolation(
                "harvest objective is flat across the bracket; the threshold is not identified"
                    .into(),
            ));
        }
        if f_lo.signum() == f_hi.signum() {
            return Err(HarvestError::AssumptionViolation(format!(
                "harvest objective does not change sign on ({lo}, {hi}) \
                 (f = {f_lo:e} and {f_hi:e}): the model violates (A1)/(A2)"
            )));
        }

        let b_star = root::bracketed_root(|x| self.f_scaled(x).unwrap_or(f64::NAN), lo, hi, self.root_tol)?;
        let ell_star = self.model.total_drift(b_star)?;
        let consistency_gap = self.ln_opt_product(b_star)?.exp_m1().abs();
        Ok(ErgodicSolution {
            b_star,
            ell_star,
            rho_star: self.model.gamma().map(|g| g * b_star),
            bracket: (self.x_hat, self.x_zero),
            consistency_gap,
        })
    }

    /// Gradient of the value function of the free-boundary problem:
    /// `u'(x) = ℓ*·S'(x)·m((0,x))` below the threshold and 1 above it;
    /// continuous at `b*` by the optimality conditions.
    pub fn u_prime(&self, sol: &ErgodicSolution, x: f64) -> Result<f64> {
        if !self.model.contains(x) {
            return Err(HarvestError::OutOfDomain {
                x,
                upper: self.model.state_upper().unwrap_or(f64::INFINITY),
            });
        }
        if x >= sol.b_star {
            return Ok(1.0);
        }
        Ok((sol.ell_star.ln() + self.ss.ln_scale_mass_product(x)?).exp())
    }

    /// `g(x) = σ(x)·u'(x)`, the integrand of the almost-sure optimality
    /// conditions.
    pub fn g_function(&self, sol: &ErgodicSolution, x: f64) -> Result<f64> {
        Ok(self.model.diffusion(x) * self.u_prime(sol, x)?)
    }

    /// Fill the two pending almost-sure-optimality fields of an audit
    /// report: `g` nondecreasing on a 512-point grid spanning both sides of
    /// `b*`, and `∫ g² m'` finite up to the audit endpoint with a decaying
    /// tail. Failures land in the report, not in errors.
    pub fn audit_as_conditions(
        &self,
        sol: &ErgodicSolution,
        report: &AssumptionReport,
    ) -> Result<AssumptionReport> {
        let mut out = report.clone();
        let (lo, hi) = (report.grid_lo, report.grid_hi);

        // Monotonicity of g.
        const N: usize = 512;
        let mut worst_drop = 0.0f64;
        let mut worst_at = None;
        let mut g_max = 0.0f64;
        let mut prev = None;
        for i in 0..N {
            let x = (lo.ln() + (hi / lo).ln() * i as f64 / (N - 1) as f64).exp();
            let g = self.g_function(sol, x)?;
            g_max = g_max.max(g.abs());
            if let Some(p) = prev {
                let drop: f64 = p - g;
                if drop > worst_drop {
                    worst_drop = drop;
                    worst_at = Some(x);
                }
            }
            prev = Some(g);
        }
        out.g_monotone = Some(if worst_drop <= g_max * 1e-9 {
            Check::passed(worst_drop)
        } else {
            Check::failed(worst_drop, worst_at.unwrap_or(lo))
        });

        // Square integrability of g against the speed measure.
        let ln_integrand = |x: f64| -> f64 {
            if !self.model.contains(x) {
                return f64::NEG_INFINITY;
            }
            match (self.g_function(sol, x), self.ss.ln_speed_density(x)) {
                (Ok(g), Ok(ln_m)) if g > 0.0 => 2.0 * g.ln() + ln_m,
                _ => f64::NAN,
            }
        };
        let q = Quadrature {
            rel_tol: 1e-8,
            ..Default::default()
        };
        let body = (|| -> Result<f64> {
            let (i1, _) = quad::integrate_log_from_zero(ln_integrand, sol.b_star, &q)?;
            let (i2, _) = quad::integrate_log(ln_integrand, sol.b_star, hi, &q)?;
            Ok(quad::log_add_exp(i1, i2))
        })();

        out.g_square_integrable = Some(match body {
            Err(_) => Check::failed(f64::INFINITY, hi),
            Ok(ln_total) => {
                // Exponential-tail bound from the log-slope at the audit edge.
                let x2 = hi * 0.9;
                let slope = (ln_integrand(hi) - ln_integrand(x2)) / (hi - x2);
                if slope < 0.0 {
                    let ln_remainder = ln_integrand(hi) - (-slope).ln();
                    let total = quad::log_add_exp(ln_total, ln_remainder).exp();
                    if ln_remainder <= ln_total + (1e-3f64).ln() {
                        Check::passed(total)
                    } else {
                        Check::failed(total, hi)
                    }
                } else {
                    Check::failed(ln_total.exp(), hi)
                }
            }
        });
        Ok(out)
    }
}

/// Convenience: audit-free single solve.
pub fn solve_ergodic(model: &DiffusionModel) -> Result<ErgodicSolution> {
    ErgodicProblem::new(model.clone())?.solve()
}

/// One row of a volatility sweep.
#[derive(Debug)]
pub struct SweepEntry {
    pub sigma: f64,
    pub result: Result<ErgodicSolution>,
}

/// Solve the ergodic problem across strictly increasing volatilities.
/// Per-entry failures are reported in place; the sweep continues. Entries
/// are independent solves, run in parallel, and the output order follows
/// the input order regardless of schedule.
pub fn volatility_sweep(
    kind: ModelKind,
    mu: f64,
    gamma: f64,
    sigmas: &[f64],
) -> Result<Vec<SweepEntry>> {
    for w in sigmas.windows(2) {
        if !(w[1] > w[0]) {
            return Err(HarvestError::Config(format!(
                "volatilities must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(sigmas
        .par_iter()
        .map(|&sigma| SweepEntry {
            sigma,
            result: DiffusionModel::builtin(kind, mu, gamma, sigma)
                .and_then(|m| solve_ergodic(&m)),
        })
        .collect())
}

/// CSV table for sweep results: `sigma,b_star,ell_star,rho_star,consistency_gap`.
/// Failed entries are omitted from the table (they are reported in the
/// run summary).
pub fn sweep_csv(entries: &[SweepEntry]) -> String {
    let mut out = String::from("sigma,b_star,ell_star,rho_star,consistency_gap\n");
    for e in entries {
        if let Ok(sol) = &e.result {
            let rho = sol
                .rho_star
                .map(|r| r.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.sigma, sol.b_star, sol.ell_star, rho, sol.consistency_gap
            ));
        }
    }
    out
}
