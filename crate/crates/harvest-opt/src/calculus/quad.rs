//! Adaptive Gauss–Kronrod quadrature with log-space evaluation and a
//! power-law substitution for integrable endpoint singularities at 0.
//!
//! Speed densities behave like `x^e` near the origin with `e` possibly in
//! `(-1, 0)`, and their magnitudes span hundreds of orders of magnitude, so
//! the integrators here accept the *logarithm* of the integrand and return
//! the logarithm of the integral where needed.

use crate::error::{HarvestError, Result};

/// Tolerances and subdivision budget for adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: 1e-300,
            rel_tol: 1e-10,
            max_subdivisions: 400,
        }
    }
}

impl Quadrature {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(HarvestError::InvalidParameter {
                name: "quad.abs_tol",
                value: self.abs_tol,
                reason: "must be positive",
            });
        }
        if !(self.rel_tol > 0.0) {
            return Err(HarvestError::InvalidParameter {
                name: "quad.rel_tol",
                value: self.rel_tol,
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

/// Integral value with an error estimate and the subdivision count used.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

// 15-point Kronrod abscissae on [0, 1] (positive half) and weights, with the
// embedded 7-point Gauss weights. Values are the classical QUADPACK QK15 set.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss–Kronrod 15(7) panel on [a, b]. Returns (value, error estimate).
fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_nan() {
            return Err(HarvestError::Numeric(format!(
                "integrand returned NaN at x = {x}"
            )));
        }
        Ok(v)
    };

    let fc = eval(center)?;
    let mut resg = WG[3] * fc;
    let mut resk = WGK[7] * fc;
    let mut resabs = resk.abs();
    let mut fv = [0.0f64; 15];
    fv[7] = fc;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv[j] = f1;
        fv[14 - j] = f2;
        let fsum = f1 + f2;
        resk += WGK[j] * fsum;
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * fsum;
        }
    }

    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();

    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * resabs;
    if round > f64::MIN_POSITIVE {
        err = err.max(round);
    }
    Ok((value, err))
}

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Globally adaptive quadrature of `f` over `[a, b]`.
///
/// Repeatedly bisects the segment with the largest error estimate until the
/// summed estimate meets `max(abs_tol, rel_tol * |integral|)` or the
/// subdivision budget is exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &Quadrature) -> Result<QuadResult> {
    cfg.validate()?;
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            subdivisions: 0,
        });
    }
    let (sign, lo, hi) = if a < b { (1.0, a, b) } else { (-1.0, b, a) };

    let (v0, e0) = qk15(&f, lo, hi)?;
    let mut segs = vec![Segment {
        a: lo,
        b: hi,
        value: v0,
        error: e0,
    }];

    for n in 0..cfg.max_subdivisions {
        let mut total = 0.0;
        let mut err = 0.0;
        for s in &segs {
            total += s.value;
            err += s.error;
        }
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if err <= tol {
            return Ok(QuadResult {
                value: sign * total,
                abs_error: err,
                subdivisions: n,
            });
        }

        // Split the worst segment (first maximum for determinism).
        let mut worst = 0;
        for (i, s) in segs.iter().enumerate() {
            if s.error > segs[worst].error {
                worst = i;
            }
        }
        let seg = segs[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval at floating-point resolution; keep its estimate.
            segs[worst].error = 0.0;
            continue;
        }
        let (vl, el) = qk15(&f, seg.a, mid)?;
        let (vr, er) = qk15(&f, mid, seg.b)?;
        segs[worst] = Segment {
            a: seg.a,
            b: mid,
            value: vl,
            error: el,
        };
        segs.push(Segment {
            a: mid,
            b: seg.b,
            value: vr,
            error: er,
        });
    }

    let mut worst = 0;
    for (i, s) in segs.iter().enumerate() {
        if s.error > segs[worst].error {
            worst = i;
        }
    }
    Err(HarvestError::Numeric(format!(
        "quadrature on [{a}, {b}] did not converge within {} subdivisions; \
         worst segment [{}, {}] with error {:e}",
        cfg.max_subdivisions, segs[worst].a, segs[worst].b, segs[worst].error
    )))
}

/// Adaptive quadrature of a *positive* integrand given as its logarithm.
///
/// Returns `(ln ∫ exp(ln_f), relative error)`. The integrand is rescaled by
/// its maximum over a probe grid before integration so magnitudes like
/// `exp(±1500)` never appear in linear arithmetic.
pub fn integrate_log<F: Fn(f64) -> f64>(
    ln_f: F,
    a: f64,
    b: f64,
    cfg: &Quadrature,
) -> Result<(f64, f64)> {
    if a == b {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    const PROBES: usize = 33;
    let mut peak = f64::NEG_INFINITY;
    for i in 0..PROBES {
        let x = a + (b - a) * (i as f64) / ((PROBES - 1) as f64);
        let v = ln_f(x);
        if v.is_nan() {
            return Err(HarvestError::Numeric(format!(
                "log-integrand returned NaN at x = {x}"
            )));
        }
        if v > peak {
            peak = v;
        }
    }
    if peak == f64::NEG_INFINITY {
        return Ok((f64::NEG_INFINITY, 0.0));
    }

    let res = integrate(|x| (ln_f(x) - peak).exp(), a, b, cfg)?;
    if !(res.value > 0.0) {
        return Err(HarvestError::Numeric(format!(
            "log-integral on [{a}, {b}] evaluated to a nonpositive value {}",
            res.value
        )));
    }
    Ok((peak + res.value.ln(), res.abs_error / res.value))
}

/// Local power-law exponent of `exp(ln_f)` near 0, from the log-slope between
/// two probe points below `x`.
pub fn local_exponent_at_zero<F: Fn(f64) -> f64>(ln_f: &F, x: f64) -> f64 {
    let y1 = x * 1e-7;
    let y2 = x * 1e-5;
    (ln_f(y2) - ln_f(y1)) / (y2 / y1).ln()
}

/// `ln ∫₀ˣ exp(ln_f(y)) dy` for an integrand with a power-law endpoint at 0.
///
/// The local exponent `e` is estimated from the log-slope at two probe
/// points; `e ≤ -1` means the integral diverges and is reported as an
/// assumption violation. For `e ∈ (-1, 1)` the substitution `y = t^k` with
/// `k ≥ 2/(1+e)` turns the integrand into one that vanishes at 0.
pub fn integrate_log_from_zero<F: Fn(f64) -> f64>(
    ln_f: F,
    x: f64,
    cfg: &Quadrature,
) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(HarvestError::Numeric(format!(
            "upper limit must be positive, got {x}"
        )));
    }
    let e = local_exponent_at_zero(&ln_f, x);
    if !e.is_finite() {
        return Err(HarvestError::Numeric(format!(
            "could not estimate the endpoint exponent near 0 (got {e})"
        )));
    }
    if e <= -1.0 + 1e-9 {
        return Err(HarvestError::AssumptionViolation(format!(
            "integrand behaves like y^{e:.6} near 0: the integral over (0, {x}) diverges"
        )));
    }
    let k = if e >= 1.0 {
        1.0
    } else {
        (2.0 / (1.0 + e)).ceil().clamp(1.0, 64.0)
    };

    if k == 1.0 {
        return integrate_log(ln_f, 0.0, x, cfg);
    }
    let t_max = x.powf(1.0 / k);
    let ln_k = k.ln();
    integrate_log(
        |t| {
            if t <= 0.0 {
                f64::NEG_INFINITY
            } else {
                ln_f(t.powf(k)) + ln_k + (k - 1.0) * t.ln()
            }
        },
        0.0,
        t_max,
        cfg,
    )
}

/// Numerically stable `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
