use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::stable_level;
use crate::error::{ensure, Result};
use crate::rng::RngStream;

/// Symmetric β-stable driver.
///
/// `level: None` uses `A(β)`, i.e. `E e^{iuS_t} = e^{-t|u|^β/2}`. An explicit
/// level `c` multiplies the exponent by `c/A(β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableSpec {
    pub beta: f64,
    #[serde(default)]
    pub level: Option<f64>,
}

impl StableSpec {
    pub fn new(beta: f64) -> Result<Self> {
        let s = Self { beta, level: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_level(beta: f64, level: f64) -> Result<Self> {
        let s = Self {
            beta,
            level: Some(level),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.beta > 1.0 && self.beta < 2.0,
            Parameter,
            "stable activity must lie in (1,2), got {}",
            self.beta
        );
        if let Some(c) = self.level {
            ensure!(
                c > 0.0 && c.is_finite(),
                Parameter,
                "stable level must be positive, got {c}"
            );
        }
        Ok(())
    }

    /// Coefficient `γ` in `E e^{iuS_1} = e^{-γ|u|^β}`.
    pub fn exponent_coefficient(&self) -> f64 {
        0.5 * self.level.map_or(1.0, |c| c / stable_level(self.beta))
    }

    pub(crate) fn sampler(&self, dt: f64) -> Result<StableSampler> {
        self.validate()?;
        ensure!(
            dt > 0.0 && dt.is_finite(),
            Parameter,
            "time step must be positive, got {dt}"
        );
        Ok(StableSampler {
            beta: self.beta,
            scale: (self.exponent_coefficient() * dt).powf(1.0 / self.beta),
        })
    }
}

pub(crate) struct StableSampler {
    beta: f64,
    scale: f64,
}

impl StableSampler {
    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * standard_symmetric_stable(self.beta, rng)
    }
}

/// Chambers–Mallows–Stuck draw with `E e^{iuX} = e^{-|u|^β}`, `β ≠ 1`.
#[inline]
pub(crate) fn standard_symmetric_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let v = std::f64::consts::PI * (rng.random::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    let a = (beta * v).sin() / v.cos().powf(1.0 / beta);
    let b = (((1.0 - beta) * v).cos() / w).powf((1.0 - beta) / beta);
    a * b
}

/// `n` i.i.d. increments of the stable driver over steps of length `dt`.
pub fn sample_stable_increments(
    spec: &StableSpec,
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

    fn ecf(xs: &[f64], u: f64) -> (f64, f64) {
        let c: Vec<f64> = xs.iter().map(|x| (u * x).cos()).collect();
        crate::numeric::mean_std(&c)
    }

    #[test]
    fn rejects_bad_beta() {
        assert!(StableSpec::new(2.0).is_err());
        assert!(StableSpec::new(1.0).is_err());
        assert!(StableSpec::new(1.5).is_ok());
        assert!(sample_stable_increments(
            &StableSpec {
                beta: 0.8,
                level: None
            },
            10,
            1.0,
            RngStream::new(0, 0)
        )
        .is_err());
    }

    #[test]
    fn near_gaussian_limit_has_unit_variance() {
        let s = StableSpec::new(1.999).unwrap();
        let xs = sample_stable_increments(&s, 100_000, 1.0, RngStream::new(11, 0)).unwrap();
        let (_, sd) = crate::numeric::mean_std(&xs);
        assert!((sd * sd - 1.0).abs() < 0.1, "variance {}", sd * sd);
    }

    #[test]
    fn characteristic_function_at_unit_argument() {
        let s = StableSpec::new(1.7).unwrap();
        let xs = sample_stable_increments(&s, 1_000_000, 1.0, RngStream::new(5, 1)).unwrap();
        let (m, sd) = ecf(&xs, 1.0);
        let target = (-0.5f64).exp();
        assert!((m - target).abs() < 3.0 * sd / 1000.0, "{m} vs {target}");
    }

    #[test]
    fn explicit_level_rescales_exponent() {
        let beta = 1.7;
        let s = StableSpec::with_level(beta, 2.0 * stable_level(beta)).unwrap();
        assert!((s.exponent_coefficient() - 1.0).abs() < 1e-12);
        let xs = sample_stable_increments(&s, 400_000, 1.0, RngStream::new(8, 0)).unwrap();
        let (m, sd) = ecf(&xs, 1.0);
        assert!((m - (-1.0f64).exp()).abs() < 4.0 * sd / (400_000f64).sqrt());
    }
}
