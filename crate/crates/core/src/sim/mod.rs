//! Random-path generation for the model class: symmetric stable and tempered
//! stable driving martingales, the CIR stochastic scale, and the composite
//! Monte Carlo model `dX_t = V_t^{1/β} dL_t`.
//!
//! Every sampler is a pure function of its spec and an [`RngStream`]; paths
//! for distinct stream ids can be generated concurrently.
//!
//! Scale convention: the stable driver at unit level has characteristic
//! function `E e^{iuS_1} = e^{-|u|^β/2}`, which corresponds to the Lévy
//! density `A(β)/|x|^{1+β}` with `A(β)` from [`stable_level`].

mod cir;
mod model;
mod stable;
mod tempered;

pub use cir::{simulate_cir, CIRSpec, CirScheme, CirStart};
pub use model::{simulate_levy_path, simulate_model, ModelOptions, SimulationMeta};
pub use stable::{sample_stable_increments, StableSpec};
pub use tempered::{sample_tempered_stable_increments, TemperedStableSpec};

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{ensure, Result};

/// Level `A(β)` of the stable Lévy density `A/|x|^{1+β}` whose unit-time
/// characteristic function is `e^{-|u|^β/2}`; `β ∈ (1,2)`.
pub fn stable_level(beta: f64) -> f64 {
    let denom = 4.0 * gamma(2.0 - beta) * (beta * std::f64::consts::FRAC_PI_2).cos().abs();
    beta * (beta - 1.0) / denom
}

/// Laplace transform `(1 + 0.0625u)^{-16}` of the stationary Gamma law of the
/// Monte Carlo design's scale process.
pub fn gamma_laplace(u: f64) -> Result<f64> {
    ensure!(
        u >= 0.0 && u.is_finite(),
        Parameter,
        "transform argument must be non-negative, got {u}"
    );
    Ok(CIRSpec::paper_design().stationary_laplace(u))
}

/// Driving Lévy martingale of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Driver {
    Stable(StableSpec),
    TemperedStable(TemperedStableSpec),
}

impl Driver {
    pub fn beta(&self) -> f64 {
        match self {
            Driver::Stable(s) => s.beta,
            Driver::TemperedStable(s) => s.beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Driver::Stable(s) => s.validate(),
            Driver::TemperedStable(s) => s.validate(),
        }
    }

    pub(crate) fn sampler(&self, dt: f64) -> Result<DriverSampler> {
        Ok(match self {
            Driver::Stable(s) => DriverSampler::Stable(s.sampler(dt)?),
            Driver::TemperedStable(s) => DriverSampler::Tempered(s.sampler(dt)?),
        })
    }
}

pub(crate) enum DriverSampler {
    Stable(stable::StableSampler),
    Tempered(tempered::TemperedSampler),
}

impl DriverSampler {
    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DriverSampler::Stable(s) => s.draw(rng),
            DriverSampler::Tempered(s) => s.draw(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_at_paper_activity() {
        // 1.7·0.7 / (4 Γ(0.3) cos(0.15π))
        let expected =
            1.7 * 0.7 / (4.0 * 2.991_568_987_687_590_6 * (0.15 * std::f64::consts::PI).cos());
        assert!((stable_level(1.7) - expected).abs() < 1e-12);
        assert!((stable_level(1.7) - 0.11).abs() < 0.002);
    }

    #[test]
    fn design_true_values() {
        assert_eq!(gamma_laplace(0.0).unwrap(), 1.0);
        let direct = |u: f64| (1.0 + u * 0.05 * 0.05 / 0.04).powf(-0.04 / (0.05 * 0.05));
        for u in [0.1, 0.5, 1.25, 2.5, 3.75] {
            assert!((gamma_laplace(u).unwrap() - direct(u)).abs() < 1e-14);
        }
        assert!(gamma_laplace(-0.1).is_err());
    }

    #[test]
    fn level_limits() {
        // A(β) → 0 as β → 2 and → 1/(2π) as β → 1
        assert!(stable_level(1.999) < 0.001);
        assert!((stable_level(1.000_001) - 0.5 / std::f64::consts::PI).abs() < 1e-5);
    }
}
