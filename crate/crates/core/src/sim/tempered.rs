//! Symmetric tempered stable increments by jump-threshold decomposition.
//!
//! Jumps larger than `ε` form a compound Poisson process: candidates are drawn
//! from the untempered Pareto tail `c/|x|^{1+β}` on `|x| > ε` and kept with
//! probability `e^{-λ|x|}`, which thins the intensity to the tempered density.
//! Jumps below `ε` are replaced by a centred Gaussian with the same variance
//! `2c ∫_0^ε x^{1-β} e^{-λx} dx`. Both pieces are symmetric, so the increment
//! is a martingale increment without further compensation.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_li;

use crate::error::{ensure, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperedStableSpec {
    pub beta: f64,
    /// Level `c` of the Lévy density `c e^{-λ|x|}/|x|^{1+β}`.
    pub c_level: f64,
    pub lambda_temper: f64,
    /// Small-jump threshold; `None` means `dt^{1/β}/10` for the step in use.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

impl TemperedStableSpec {
    pub fn new(beta: f64, c_level: f64, lambda_temper: f64) -> Result<Self> {
        let s = Self {
            beta,
            c_level,
            lambda_temper,
            epsilon: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Tempered stable driver of the Monte Carlo design: β = 1.7, c = 0.11, λ = 0.25.
    pub fn paper_design() -> Self {
        Self {
            beta: 1.7,
            c_level: 0.11,
            lambda_temper: 0.25,
            epsilon: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.beta > 1.0 && self.beta < 2.0,
            Parameter,
            "tempered stable activity must lie in (1,2), got {}",
            self.beta
        );
        ensure!(
            self.c_level > 0.0 && self.c_level.is_finite(),
            Parameter,
            "level must be positive, got {}",
            self.c_level
        );
        ensure!(
            self.lambda_temper >= 0.0 && self.lambda_temper.is_finite(),
            Parameter,
            "tempering rate must be non-negative, got {}",
            self.lambda_temper
        );
        if let Some(eps) = self.epsilon {
            ensure!(
                eps > 0.0 && eps.is_finite(),
                Parameter,
                "threshold must be positive, got {eps}"
            );
        }
        Ok(())
    }

    pub fn threshold(&self, dt: f64) -> f64 {
        self.epsilon
            .unwrap_or_else(|| dt.powf(1.0 / self.beta) / 10.0)
    }

    /// Variance per unit time of the jumps with `|x| ≤ ε`.
    pub fn small_jump_variance(&self, eps: f64) -> f64 {
        let (b, lam) = (self.beta, self.lambda_temper);
        let a = 2.0 - b;
        let z = lam * eps;
        let integral = if z < 1.0 {
            // ε^a Σ_k (-z)^k / (k! (k + a))
            let mut term = 1.0;
            let mut sum = 1.0 / a;
            for k in 1..60 {
                term *= -z / k as f64;
                let add = term / (k as f64 + a);
                sum += add;
                if add.abs() < 1e-17 * sum.abs() {
                    break;
                }
            }
            eps.powf(a) * sum
        } else {
            lam.powf(-a) * gamma_li(a, z)
        };
        2.0 * self.c_level * integral
    }

    pub(crate) fn sampler(&self, dt: f64) -> Result<TemperedSampler> {
        self.validate()?;
        ensure!(
            dt > 0.0 && dt.is_finite(),
            Parameter,
            "time step must be positive, got {dt}"
        );
        let eps = self.threshold(dt);
        let candidate_rate = 2.0 * self.c_level * eps.powf(-self.beta) / self.beta;
        let mean_count = candidate_rate * dt;
        let poisson = if mean_count > 0.0 {
            Some(
                Poisson::new(mean_count)
                    .map_err(|e| crate::Error::Parameter(format!("jump count law: {e}")))?,
            )
        } else {
            None
        };
        let small_sd = (self.small_jump_variance(eps) * dt).sqrt();
        Ok(TemperedSampler {
            eps,
            inv_beta: 1.0 / self.beta,
            lambda: self.lambda_temper,
            poisson,
            small: Normal::new(0.0, small_sd)
                .map_err(|e| crate::Error::Parameter(format!("small-jump law: {e}")))?,
        })
    }
}

pub(crate) struct TemperedSampler {
    eps: f64,
    inv_beta: f64,
    lambda: f64,
    poisson: Option<Poisson<f64>>,
    small: Normal<f64>,
}

impl TemperedSampler {
    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut x = self.small.sample(rng);
        if let Some(p) = &self.poisson {
            let count = p.sample(rng) as u64;
            for _ in 0..count {
                // 1 - U lies in (0, 1]
                let u = 1.0 - rng.random::<f64>();
                let size = self.eps * u.powf(-self.inv_beta);
                if self.lambda > 0.0 && rng.random::<f64>() >= (-self.lambda * size).exp() {
                    continue;
                }
                x += if rng.random::<bool>() { size } else { -size };
            }
        }
        x
    }
}

/// `n` i.i.d. increments of the tempered stable driver over steps of length `dt`.
pub fn sample_tempered_stable_increments(
    spec: &TemperedStableSpec,
    n: usize,
    dt: f64,
    stream: RngStream,
) -> Result<Vec<f64>> {
    ensure!(n >= 1, Parameter, "need at least one increment");
    let sampler = spec.sampler(dt)?;
    let mut rng = stream.rng();
    Ok((0..n).map(|_| sampler.draw(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_jump_variance_branches_agree() {
        let s = TemperedStableSpec::new(1.7, 0.11, 0.25).unwrap();
        // series branch vs closed form ε^{2-β}/(2-β) as λ → 0
        let untempered = TemperedStableSpec::new(1.7, 0.11, 0.0).unwrap();
        let eps: f64 = 0.01;
        let exact = 2.0 * 0.11 * eps.powf(0.3) / 0.3;
        assert!((untempered.small_jump_variance(eps) - exact).abs() < 1e-14);
        assert!(s.small_jump_variance(eps) < exact);
        // the two numerical branches meet at λε = 1
        let lo = TemperedStableSpec::new(1.7, 0.11, 0.999_999_9)
            .unwrap()
            .small_jump_variance(1.0);
        let hi = TemperedStableSpec::new(1.7, 0.11, 1.000_000_1)
            .unwrap()
            .small_jump_variance(1.0);
        assert!((lo - hi).abs() < 1e-6 * lo);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(TemperedStableSpec::new(1.7, 0.0, 0.1).is_err());
        assert!(TemperedStableSpec::new(1.7, 0.1, -0.1).is_err());
        assert!(TemperedStableSpec::new(2.2, 0.1, 0.1).is_err());
    }

    #[test]
    fn draws_are_centred() {
        let s = TemperedStableSpec::paper_design();
        let xs = sample_tempered_stable_increments(&s, 100_000, 1.0, RngStream::new(3, 0)).unwrap();
        let (m, sd) = crate::numeric::mean_std(&xs);
        assert!(
            m.abs() < 3.0 * sd / (xs.len() as f64).sqrt(),
            "mean {m} sd {sd}"
        );
    }
}
