//! Optimal sustainable harvesting of populations driven by one-dimensional
//! stochastic differential equations.
//!
//! A population density follows `dX = X μ(X) dt + σ(X) dB` and is harvested
//! by a nondecreasing control. Maximizing the long-run average harvest per
//! unit time leads to a threshold rule: reflect the process at a boundary
//! `b*` and collect the local time pushed across it. This crate
//!
//! * solves for the optimal threshold `b*` and the maximal sustainable
//!   yield `ℓ* = μ(b*)·b*` ([`ergodic`]),
//! * solves the companion discounted problem (boundary `x_r*`, value `V_r`)
//!   and verifies the Abelian limits `x_r* → b*`, `r·V_r → ℓ*` as the
//!   discount rate vanishes ([`discounted`]),
//! * audits the standing assumptions the theory needs ([`model`]),
//! * simulates the reflected controlled diffusion to check every analytic
//!   answer against sample paths ([`sim`]).
//!
//! Two classical models are built in (Verhulst–Pearl and a logistic
//! diffusion with saturating noise); their closed forms live in
//! [`oracles`] and are used only to cross-validate the generic numerical
//! path.
//!
//! ```
//! use harvest_opt::model::DiffusionModel;
//! use harvest_opt::ergodic::ErgodicProblem;
//!
//! let model = DiffusionModel::verhulst_pearl(0.1, 0.001, 0.05).unwrap();
//! let solution = ErgodicProblem::new(model).unwrap().solve().unwrap();
//! assert!(solution.b_star > 500.0 && solution.b_star < 1000.0);
//! assert!(solution.ell_star < 25.0);
//! ```

pub mod calculus;
pub mod discounted;
pub mod ergodic;
mod error;
pub mod model;
pub mod oracles;
pub mod sim;

pub use error::{ErrorCategory, HarvestError, Result};

// The guide chapters double as doc-tests so their code stays in sync with
// the crate.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(models, "../../../book/src/models.md");
    chapter!(scale_speed, "../../../book/src/scale-speed.md");
    chapter!(ergodic_chapter, "../../../book/src/ergodic.md");
    chapter!(discounted_chapter, "../../../book/src/discounted.md");
    chapter!(simulation, "../../../book/src/simulation.md");
}
