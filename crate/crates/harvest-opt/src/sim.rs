//! Simulation of the harvested diffusion under threshold policies.
//!
//! The policy reflects the process at a boundary `b`: an initial harvest
//! `(x₀ - b)⁺` followed by exactly the pushes needed to keep the density in
//! `(0, b]`. The scheme is Euler–Maruyama with reflection by projection:
//! the overshoot past `b` is the local-time increment, which matches the
//! Skorokhod decomposition to first order in `√dt`.

use rayon::prelude::*;

use crate::calculus::ScaleSpeed;
use crate::error::{HarvestError, Result};
use crate::model::DiffusionModel;

/// Deterministic pseudo-random numbers for reproducible simulations.
///
/// SplitMix64: a counter-based generator (Weyl sequence stepped by
/// 0x9E3779B97F4A7C15 with a 64-bit finalizer). Normal variates come from
/// the Box–Muller transform of two uniforms, so every draw is a documented
/// deterministic function of the seed on every platform.
pub mod rng {
    #[derive(Debug, Clone)]
    pub struct SplitMix64 {
        state: u64,
    }

    impl SplitMix64 {
        pub fn new(seed: u64) -> Self {
            SplitMix64 { state: seed }
        }

        pub fn next_u64(&mut self) -> u64 {
            self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = self.state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        }

        /// Uniform on [0, 1) with 53 random bits.
        pub fn next_f64(&mut self) -> f64 {
            (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
        }

        /// Standard normal via Box–Muller: `√(-2 ln u₁) · cos(2π u₂)` with
        /// `u₁ ∈ (0, 1]`. Two uniforms per draw, cosine branch only.
        pub fn next_normal(&mut self) -> f64 {
            let u1 = 1.0 - self.next_f64();
            let u2 = self.next_f64();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn deterministic_stream() {
            let mut a = SplitMix64::new(42);
            let mut b = SplitMix64::new(42);
            for _ in 0..100 {
                assert_eq!(a.next_u64(), b.next_u64());
            }
        }

        #[test]
        fn normals_have_sane_moments() {
            let mut r = SplitMix64::new(7);
            let n = 200_000;
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let z = r.next_normal();
                s1 += z;
                s2 += z * z;
            }
            let mean = s1 / n as f64;
            let var = s2 / n as f64 - mean * mean;
            assert!(mean.abs() < 0.01, "mean {mean}");
            assert!((var - 1.0).abs() < 0.02, "var {var}");
        }
    }
}

use rng::SplitMix64;

/// Configuration of one simulation run.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    /// Initial density.
    pub x0: f64,
    /// Reflection threshold.
    pub b: f64,
    /// Time step.
    pub dt: f64,
    /// Total simulated time.
    pub horizon: f64,
    /// Seed for the pseudo-random generator (path `i` of a Monte Carlo run
    /// uses `seed + i`).
    pub seed: u64,
    /// Number of independent paths for Monte Carlo runs.
    pub n_paths: usize,
}

impl SimConfig {
    pub fn validate(&self, model: &DiffusionModel) -> Result<()> {
        for (name, v) in [("x0", self.x0), ("b", self.b), ("dt", self.dt), ("horizon", self.horizon)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(HarvestError::InvalidParameter {
                    name: match name {
                        "x0" => "x0",
                        "b" => "b",
                        "dt" => "dt",
                        _ => "horizon",
                    },
                    value: v,
                    reason: "must be a positive finite number",
                });
            }
        }
        if self.dt > self.horizon {
            return Err(HarvestError::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "must not exceed the horizon",
            });
        }
        if self.n_paths < 1 {
            return Err(HarvestError::InvalidParameter {
                name: "n_paths",
                value: self.n_paths as f64,
                reason: "must be at least 1",
            });
        }
        if let Some(upper) = model.state_upper() {
            if self.b >= upper {
                return Err(HarvestError::InvalidParameter {
                    name: "b",
                    value: self.b,
                    reason: "threshold must lie inside the state interval",
                });
            }
        }
        Ok(())
    }

    /// Step-size sanity bound: warn when `dt · max |μ(x)x| > 0.01·b` on
    /// `(0, b]`.
    pub fn step_size_warning(&self, model: &DiffusionModel) -> Option<String> {
        let mut max_drift = 0.0f64;
        for i in 1..=256 {
            let x = self.b * i as f64 / 256.0;
            max_drift = max_drift.max(model.total_drift_unchecked(x).abs());
        }
        if self.dt * max_drift > 0.01 * self.b {
            Some(format!(
                "dt·max|drift| = {:.3e} exceeds 0.01·b = {:.3e}; the step may be too coarse",
                self.dt * max_drift,
                0.01 * self.b
            ))
        } else {
            None
        }
    }
}

/// A simulated reflected trajectory with its cumulative harvest.
#[derive(Debug, Clone)]
pub struct HarvestPath {
    /// Sampled time points (every `cadence` steps).
    pub times: Vec<f64>,
    /// Sampled states, all in `(0, b]` after the initial jump.
    pub states: Vec<f64>,
    /// Cumulative harvest at the sampled times; `harvest[0] = (x₀-b)⁺`.
    pub harvest: Vec<f64>,
    /// Running average `Z_t/t` at the sampled times (0 at `t = 0`).
    pub running_avg: Vec<f64>,
    /// Number of steps that hit the reflecting boundary.
    pub local_time_events: u64,
    /// Steps clamped at the zero floor `b·1e-12` (discretization artifacts;
    /// zero in healthy runs).
    pub floor_clamp_events: u64,
    /// Steps clamped below a finite upper state boundary.
    pub ceiling_clamp_events: u64,
    /// `(1/T)·∫ μ(X_t)X_t dt` accumulated every step.
    pub drift_time_average: f64,
    /// Threshold used by the policy.
    pub threshold: f64,
    pub final_time: f64,
    pub final_harvest: f64,
    /// Set when the step-size sanity bound was violated.
    pub step_size_warning: Option<String>,
}

fn simulate_impl(model: &DiffusionModel, cfg: &SimConfig, record: bool) -> Result<HarvestPath> {
    cfg.validate(model)?;
    let warning = cfg.step_size_warning(model);

    let n_steps = (cfg.horizon / cfg.dt).round().max(1.0) as u64;
    let cadence = (n_steps as f64 / 1e6).ceil().max(1.0) as u64;
    let dt = cfg.dt;
    let sqrt_dt = dt.sqrt();
    let floor_eps = cfg.b * 1e-12;
    let ceiling = model.state_upper().map(|u| u * (1.0 - 1e-12));

    let mut rng = SplitMix64::new(cfg.seed);
    let mut x = cfg.x0.min(cfg.b);
    let mut z = (cfg.x0 - cfg.b).max(0.0);
    let mut z_comp = 0.0f64; // Kahan compensation for z
    let mut drift_int = 0.0f64;
    let mut drift_comp = 0.0f64;
    let mut local_time_events = 0u64;
    let mut floor_clamp_events = 0u64;
    let mut ceiling_clamp_events = 0u64;

    let cap = if record {
        (n_steps / cadence + 2) as usize
    } else {
        2
    };
    let mut times = Vec::with_capacity(cap);
    let mut states = Vec::with_capacity(cap);
    let mut harvest = Vec::with_capacity(cap);
    let mut running_avg = Vec::with_capacity(cap);

    if record {
        times.push(0.0);
        states.push(x);
        harvest.push(z);
        running_avg.push(0.0);
    }

    for k in 1..=n_steps {
        let drift = model.total_drift_unchecked(x);

        // Kahan-compensated drift integral, accumulated every step.
        let term = drift * dt - drift_comp;
        let t = drift_int + term;
        drift_comp = (t - drift_int) - term;
        drift_int = t;

        let diffusion = model.diffusion(x);
        let mut x_next = x + drift * dt + diffusion * sqrt_dt * rng.next_normal();
        if !x_next.is_finite() {
            return Err(HarvestError::Numeric(format!(
                "state became non-finite at step {k} (x = {x})"
            )));
        }
        if x_next > cfg.b {
            let push = x_next - cfg.b;
            let term = push - z_comp;
            let t = z + term;
            z_comp = (t - z) - term;
            z = t;
            x_next = cfg.b;
            local_time_events += 1;
        } else if x_next <= floor_eps {
            x_next = floor_eps;
            floor_clamp_events += 1;
        }
        if let Some(c) = ceiling {
            if x_next >= c {
                x_next = c;
                ceiling_clamp_events += 1;
            }
        }
        x = x_next;

        if record && (k % cadence == 0 || k == n_steps) {
            let t_now = k as f64 * dt;
            times.push(t_now);
            states.push(x);
            harvest.push(z);
            running_avg.push(z / t_now);
        }
    }

    let final_time = n_steps as f64 * dt;
    Ok(HarvestPath {
        times,
        states,
        harvest,
        running_avg,
        local_time_events,
        floor_clamp_events,
        ceiling_clamp_events,
        drift_time_average: drift_int / final_time,
        threshold: cfg.b,
        final_time,
        final_harvest: z,
        step_size_warning: warning,
    })
}

/// Simulate one reflected path, recording samples at the memory-bounded
/// cadence (cumulative quantities are accumulated every step regardless).
/// Deterministic given the seed.
pub fn simulate_reflected(model: &DiffusionModel, cfg: &SimConfig) -> Result<HarvestPath> {
    simulate_impl(model, cfg, true)
}

/// Long-run average yield of a completed path: `Z_T / T`.
pub fn average_yield(path: &HarvestPath) -> f64 {
    path.final_harvest / path.final_time
}

/// Monte Carlo estimate of the expected average yield over `n_paths`
/// independent paths seeded `seed, seed+1, …`. Returns `(mean, standard
/// error)`. Paths run in parallel; aggregation follows seed order, so the
/// result does not depend on the parallel schedule.
pub fn mc_expected_yield(model: &DiffusionModel, cfg: &SimConfig) -> Result<(f64, f64)> {
    if cfg.n_paths < 2 {
        return Err(HarvestError::InvalidParameter {
            name: "n_paths",
            value: cfg.n_paths as f64,
            reason: "Monte Carlo runs need at least 2 paths",
        });
    }
    let yields: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let path_cfg = SimConfig {
                seed: cfg.seed + i as u64,
                ..*cfg
            };
            simulate_impl(model, &path_cfg, false).map(|p| average_yield(&p))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = yields.len() as f64;
    let mean = yields.iter().sum::<f64>() / n;
    let var = yields.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Time-weighted occupation histogram over `(0, b]`.
#[derive(Debug, Clone)]
pub struct Histogram {
    /// `n_bins + 1` edges from 0 to the threshold.
    pub edges: Vec<f64>,
    /// Empirical bin masses, summing to 1.
    pub masses: Vec<f64>,
}

/// Histogram of the sampled states (the `t = 0` sample is excluded).
/// Samples are equally spaced in time, so equal weights are time weights.
pub fn occupation_histogram(path: &HarvestPath, n_bins: usize) -> Result<Histogram> {
    if n_bins < 10 {
        return Err(HarvestError::InvalidParameter {
            name: "n_bins",
            value: n_bins as f64,
            reason: "need at least 10 bins",
        });
    }
    if path.states.len() < 2 {
        return Err(HarvestError::Numeric(
            "path has no post-initial samples to bin".into(),
        ));
    }
    let b = path.threshold;
    let mut counts = vec![0u64; n_bins];
    for &x in &path.states[1..] {
        let idx = ((x / b) * n_bins as f64).floor() as usize;
        counts[idx.min(n_bins - 1)] += 1;
    }
    let total = (path.states.len() - 1) as f64;
    Ok(Histogram {
        edges: (0..=n_bins).map(|i| b * i as f64 / n_bins as f64).collect(),
        masses: counts.iter().map(|&c| c as f64 / total).collect(),
    })
}

/// Stationary bin masses of the reflected process,
/// `π((lo, hi]) = (m((0,hi)) - m((0,lo))) / m((0,b))`, for comparison with
/// an empirical histogram on the same edges.
pub fn stationary_bin_masses(ss: &ScaleSpeed, b: f64, edges: &[f64]) -> Result<Vec<f64>> {
    let ln_total = ss.ln_speed_mass(b)?;
    let mut cum = Vec::with_capacity(edges.len());
    for &e in edges {
        if e <= 0.0 {
            cum.push(0.0);
        } else {
            cum.push((ss.ln_speed_mass(e.min(b))? - ln_total).exp());
        }
    }
    Ok(cum.windows(2).map(|w| w[1] - w[0]).collect())
}

/// CSV export of a path at the sampling cadence: `t,x,z,running_avg`.
pub fn path_csv(path: &HarvestPath) -> String {
    let mut out = String::from("t,x,z,running_avg\n");
    for i in 0..path.times.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            path.times[i], path.states[i], path.harvest[i], path.running_avg[i]
        ));
    }
    out
}

/// CSV export of an occupation histogram against its stationary
/// counterpart: `bin_lo,bin_hi,empirical,theoretical`.
pub fn histogram_csv(hist: &Histogram, theoretical: &[f64]) -> String {
    let mut out = String::from("bin_lo,bin_hi,empirical,theoretical\n");
    for i in 0..hist.masses.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            hist.edges[i],
            hist.edges[i + 1],
            hist.masses[i],
            theoretical.get(i).copied().unwrap_or(f64::NAN)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vp() -> DiffusionModel {
        DiffusionModel::verhulst_pearl(0.1, 0.001, 0.05).unwrap()
    }

    fn quick_cfg() -> SimConfig {
        SimConfig {
            x0: 700.0,
            b: 700.0,
            dt: 1e-3,
            horizon: 50.0,
            seed: 1,
            n_paths: 1,
        }
    }

    #[test]
    fn initial_jump_harvests_the_overshoot() {
        let cfg = SimConfig {
            x0: 1400.0,
            b: 700.0,
            horizon: 1.0,
            ..quick_cfg()
        };
        let path = simulate_reflected(&vp(), &cfg).unwrap();
        assert_eq!(path.harvest[0], 700.0);
        assert_eq!(path.states[0], 700.0);
    }

    #[test]
    fn states_confined_and_harvest_monotone() {
        let path = simulate_reflected(&vp(), &quick_cfg()).unwrap();
        for &x in &path.states {
            assert!(x > 0.0 && x <= 700.0);
        }
        for w in path.harvest.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert_eq!(path.floor_clamp_events, 0);
    }

    #[test]
    fn fixed_seed_reproduces_bytes() {
        let a = simulate_reflected(&vp(), &quick_cfg()).unwrap();
        let b = simulate_reflected(&vp(), &quick_cfg()).unwrap();
        assert_eq!(path_csv(&a), path_csv(&b));
        assert_eq!(a.local_time_events, b.local_time_events);
    }

    #[test]
    fn recording_does_not_affect_the_trajectory() {
        let cfg = quick_cfg();
        let full = simulate_impl(&vp(), &cfg, true).unwrap();
        let light = simulate_impl(&vp(), &cfg, false).unwrap();
        assert_eq!(full.final_harvest, light.final_harvest);
        assert_eq!(full.drift_time_average, light.drift_time_average);
    }

    #[test]
    fn minimal_mc_run_reports_finite_error() {
        let cfg = SimConfig {
            n_paths: 2,
            horizon: 20.0,
            ..quick_cfg()
        };
        let (mean, se) = mc_expected_yield(&vp(), &cfg).unwrap();
        assert!(mean.is_finite() && se.is_finite() && se >= 0.0);
    }

    #[test]
    fn histogram_mass_sums_to_one() {
        let path = simulate_reflected(&vp(), &quick_cfg()).unwrap();
        let hist = occupation_histogram(&path, 25).unwrap();
        let sum: f64 = hist.masses.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_masses_sum_to_one() {
        let model = vp();
        let ss = ScaleSpeed::for_model(&model).unwrap();
        let edges: Vec<f64> = (0..=50).map(|i| 700.0 * i as f64 / 50.0).collect();
        let masses = stationary_bin_masses(&ss, 700.0, &edges).unwrap();
        let sum: f64 = masses.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8, "sum {sum}");
        assert!(masses.iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let model = vp();
        let bad = SimConfig {
            dt: -1.0,
            ..quick_cfg()
        };
        assert!(bad.validate(&model).is_err());
        let bad = SimConfig {
            dt: 100.0,
            horizon: 1.0,
            ..quick_cfg()
        };
        assert!(bad.validate(&model).is_err());
        let logistic = DiffusionModel::logistic(0.1, 0.001, 0.05).unwrap();
        let bad = SimConfig {
            b: 1500.0,
            ..quick_cfg()
        };
        assert!(bad.validate(&logistic).is_err());
    }

    #[test]
    fn coarse_step_triggers_warning() {
        let cfg = SimConfig {
            dt: 1.0,
            ..quick_cfg()
        };
        assert!(cfg.step_size_warning(&vp()).is_some());
        assert!(quick_cfg().step_size_warning(&vp()).is_none());
    }

    #[test]
    fn drift_only_path_follows_the_ode_to_the_boundary() {
        // σ plays no role when the normal draws are multiplied by a tiny
        // diffusion; emulate the deterministic limit with a very small σ.
        let model = DiffusionModel::verhulst_pearl(0.1, 0.001, 1e-12).unwrap();
        let cfg = SimConfig {
            x0: 350.0,
            b: 700.0,
            dt: 1e-3,
            horizon: 400.0,
            seed: 9,
            n_paths: 1,
        };
        let path = simulate_reflected(&model, &cfg).unwrap();
        // The logistic ODE reaches b = 700 long before t = 400 and sticks
        // there; afterwards Z grows at the drift rate μ(b)·b = 21.
        let yield_rate = average_yield(&path);
        let expected = 0.1 * 700.0 * (1.0 - 0.7);
        assert!(
            (yield_rate - expected).abs() / expected < 0.05,
            "yield {yield_rate} vs drift at b {expected}"
        );
        // Early on there is no harvesting at all.
        let idx = path.times.iter().position(|&t| t > 1.0).unwrap();
        assert_eq!(path.harvest[idx], 0.0);
    }
}
