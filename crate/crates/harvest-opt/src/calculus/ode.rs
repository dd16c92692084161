//! Adaptive Dormand–Prince 5(4) integration for two-dimensional first-order
//! systems, with an after-step hook so linear systems can be renormalized
//! mid-flight (the fundamental solution of the generator equation grows by
//! hundreds of orders of magnitude).

use crate::error::{HarvestError, Result};

type State = [f64; 2];

// Dormand–Prince coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// 5th-order solution weights.
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error weights (difference between the 5th- and 4th-order solutions).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &State, h: f64, coeffs: &[(f64, &State)]) -> State {
    let mut out = *y;
    for &(c, k) in coeffs {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1` (`t1 > t0`).
///
/// After every accepted step `observer(t, &mut y)` runs and may rescale the
/// state; the integration continues from the possibly-modified state.
/// Returns the accepted `(t, y, rhs(t, y))` triples including both ends.
pub fn dopri5<R, O>(
    mut rhs: R,
    t0: f64,
    t1: f64,
    y0: State,
    rel_tol: f64,
    abs_tol: f64,
    mut observer: O,
) -> Result<Vec<(f64, State, State)>>
where
    R: FnMut(f64, &State) -> State,
    O: FnMut(f64, &mut State),
{
    if !(t1 > t0) {
        return Err(HarvestError::Numeric(format!(
            "ODE integration span [{t0}, {t1}] is empty"
        )));
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    observer(t, &mut y);
    let mut k1 = rhs(t, &y);
    let mut out = vec![(t, y, k1)];

    let mut h = (span * 1e-4).min(1e-3).max(1e-12);
    let max_steps = 2_000_000usize;

    for _ in 0..max_steps {
        if t >= t1 {
            return Ok(out);
        }
        if t + h > t1 {
            h = t1 - t;
        }

        let y2 = axpy(&y, h, &[(A21, &k1)]);
        let k2 = rhs(t + h / 5.0, &y2);
        let y3 = axpy(&y, h, &[(A31, &k1), (A32, &k2)]);
        let k3 = rhs(t + 3.0 * h / 10.0, &y3);
        let y4 = axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = rhs(t + 4.0 * h / 5.0, &y4);
        let y5 = axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = rhs(t + 8.0 * h / 9.0, &y5);
        let y6 = axpy(
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        let k6 = rhs(t + h, &y6);
        let ynew = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = rhs(t + h, &ynew);

        let mut err = 0.0f64;
        for i in 0..2 {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = abs_tol + rel_tol * y[i].abs().max(ynew[i].abs());
            err += (e / scale) * (e / scale);
        }
        err = (err / 2.0).sqrt();

        if !err.is_finite() {
            return Err(HarvestError::Numeric(format!(
                "ODE step produced non-finite values at t = {t} (h = {h:e})"
            )));
        }

        if err <= 1.0 {
            t += h;
            y = ynew;
            observer(t, &mut y);
            k1 = rhs(t, &y);
            out.push((t, y, k1));
        }

        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < span * 1e-14 {
            return Err(HarvestError::Numeric(format!(
                "ODE step size collapsed at t = {t} (h = {h:e})"
            )));
        }
    }
    Err(HarvestError::Numeric(format!(
        "ODE integration exceeded {max_steps} steps on [{t0}, {t1}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        // y'' = y with y(0) = 1, y'(0) = 1 gives y = e^t.
        let pts = dopri5(
            |_, y| [y[1], y[0]],
            0.0,
            2.0,
            [1.0, 1.0],
            1e-10,
            1e-12,
            |_, _| {},
        )
        .unwrap();
        let (t, y, _) = *pts.last().unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!((y[0] - 2.0f64.exp()).abs() / 2.0f64.exp() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let pts = dopri5(
            |_, y| [y[1], -y[0]],
            0.0,
            20.0,
            [1.0, 0.0],
            1e-10,
            1e-12,
            |_, _| {},
        )
        .unwrap();
        for (_, y, _) in pts {
            let energy = y[0] * y[0] + y[1] * y[1];
            assert!((energy - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn observer_rescaling_preserves_ratios() {
        // Linear system; halving the state at every step must not change
        // the ratio y1/y0 along the trajectory.
        let plain = dopri5(
            |_, y| [y[1], y[0]],
            0.0,
            1.0,
            [1.0, 0.5],
            1e-10,
            1e-12,
            |_, _| {},
        )
        .unwrap();
        let rescaled = dopri5(
            |_, y| [y[1], y[0]],
            0.0,
            1.0,
            [1.0, 0.5],
            1e-10,
            1e-12,
            |_, y: &mut [f64; 2]| {
                y[0] *= 0.5;
                y[1] *= 0.5;
            },
        )
        .unwrap();
        let (_, ya, _) = *plain.last().unwrap();
        let (_, yb, _) = *rescaled.last().unwrap();
        assert!((ya[1] / ya[0] - yb[1] / yb[0]).abs() < 1e-8);
    }
}
