//! Square-root (CIR) scale process `dV = κ(θ − V)dt + σ√V dB`.
//!
//! The default transition is exact: `V_{t+h} | V_t` is `c·χ'²_d(ν)` with
//! `c = σ²(1−e^{−κh})/(4κ)`, `d = 4κθ/σ²` and `ν = V_t e^{−κh}/c`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CirStart {
    Level(f64),
    /// Draw `V_0` from the stationary Gamma law.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CirScheme {
    #[default]
    Exact,
    FullTruncationEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CIRSpec {
    pub kappa_mr: f64,
    pub theta_mean: f64,
    /// Zero is admitted and gives the deterministic mean-reverting ODE.
    pub sigma_vol: f64,
    pub v0: CirStart,
}

impl CIRSpec {
    /// `dV = 0.02(1 − V)dt + 0.05√V dB`, started from its stationary law.
    pub fn paper_design() -> Self {
        Self {
            kappa_mr: 0.02,
            theta_mean: 1.0,
            sigma_vol: 0.05,
            v0: CirStart::Stationary,
        }
    }

    /// `V ≡ level`.
    pub fn constant(level: f64) -> Self {
        Self {
            kappa_mr: 1.0,
            theta_mean: level,
            sigma_vol: 0.0,
            v0: CirStart::Level(level),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.kappa_mr > 0.0 && self.kappa_mr.is_finite(),
            Parameter,
            "kappa must be positive, got {}",
            self.kappa_mr
        );
        ensure!(
            self.theta_mean > 0.0 && self.theta_mean.is_finite(),
            Parameter,
            "theta must be positive, got {}",
            self.theta_mean
        );
        ensure!(
            self.sigma_vol >= 0.0 && self.sigma_vol.is_finite(),
            Parameter,
            "sigma must be non-negative, got {}",
            self.sigma_vol
        );
        if let CirStart::Level(v) = self.v0 {
            ensure!(
                v >= 0.0 && v.is_finite(),
                Parameter,
                "v0 must be non-negative, got {v}"
            );
        }
        Ok(())
    }

    /// Shape and scale of the stationary Gamma law.
    pub fn stationary_gamma(&self) -> Option<(f64, f64)> {
        (self.sigma_vol > 0.0).then(|| {
            let s2 = self.sigma_vol * self.sigma_vol;
            (
                2.0 * self.kappa_mr * self.theta_mean / s2,
                s2 / (2.0 * self.kappa_mr),
            )
        })
    }

    /// Laplace transform `E e^{-uV}` of the stationary law.
    pub fn stationary_laplace(&self, u: f64) -> f64 {
        match self.stationary_gamma() {
            Some((shape, scale)) => (1.0 + u * scale).powf(-shape),
            None => (-u * self.theta_mean).exp(),
        }
    }

    pub(crate) fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(match self.v0 {
            CirStart::Level(v) => v,
            CirStart::Stationary => match self.stationary_gamma() {
                Some((shape, scale)) => Gamma::new(shape, scale)
                    .map_err(|e| Error::Parameter(e.to_string()))?
                    .sample(rng),
                None => self.theta_mean,
            },
        })
    }

    pub(crate) fn stepper(&self, dt: f64, scheme: CirScheme) -> Result<CirStepper> {
        self.validate()?;
        ensure!(
            dt > 0.0 && dt.is_finite(),
            Parameter,
            "time step must be positive, got {dt}"
        );
        let decay = (-self.kappa_mr * dt).exp();
        if self.sigma_vol == 0.0 {
            return Ok(CirStepper::Deterministic {
                theta: self.theta_mean,
                decay,
            });
        }
        Ok(match scheme {
            CirScheme::Exact => {
                let s2 = self.sigma_vol * self.sigma_vol;
                let c = s2 * (-(-self.kappa_mr * dt).exp_m1()) / (4.0 * self.kappa_mr);
                let d = 4.0 * self.kappa_mr * self.theta_mean / s2;
                let central = if d > 1.0 {
                    Some(
                        Gamma::new(0.5 * (d - 1.0), 2.0)
                            .map_err(|e| Error::Parameter(e.to_string()))?,
                    )
                } else {
                    None
                };
                CirStepper::Exact {
                    c,
                    d,
                    decay,
                    central,
                }
            }
            CirScheme::FullTruncationEuler => CirStepper::Euler {
                kappa: self.kappa_mr,
                theta: self.theta_mean,
                sigma: self.sigma_vol,
                dt,
            },
        })
    }
}

pub(crate) enum CirStepper {
    Deterministic {
        theta: f64,
        decay: f64,
    },
    Exact {
        c: f64,
        d: f64,
        decay: f64,
        central: Option<Gamma<f64>>,
    },
    Euler {
        kappa: f64,
        theta: f64,
        sigma: f64,
        dt: f64,
    },
}

impl CirStepper {
    /// Advances the latent state; the observable level is `state.max(0)`
    /// (the two coincide except under the Euler scheme).
    #[inline]
    pub(crate) fn step<R: Rng + ?Sized>(&self, state: f64, rng: &mut R) -> f64 {
        match self {
            CirStepper::Deterministic { theta, decay } => theta + (state - theta) * decay,
            CirStepper::Exact {
                c,
                d,
                decay,
                central,
            } => {
                let nc = state * decay / c;
                c * noncentral_chi2(*d, nc, central.as_ref(), rng)
            }
            CirStepper::Euler {
                kappa,
                theta,
                sigma,
                dt,
            } => {
                let vp = state.max(0.0);
                let z: f64 = StandardNormal.sample(rng);
                state + kappa * (theta - vp) * dt + sigma * (vp * dt).sqrt() * z
            }
        }
    }
}

/// Noncentral chi-square draw with `d` degrees of freedom and noncentrality `nc`.
fn noncentral_chi2<R: Rng + ?Sized>(
    d: f64,
    nc: f64,
    central: Option<&Gamma<f64>>,
    rng: &mut R,
) -> f64 {
    match central {
        // d > 1: (Z + √ν)² + χ²_{d−1}
        Some(chi2) => {
            let z: f64 = StandardNormal.sample(rng);
            let shifted = z + nc.sqrt();
            shifted * shifted + chi2.sample(rng)
        }
        // Poisson mixture of central chi-squares
        None => {
            let n = if nc > 0.0 {
                Poisson::new(0.5 * nc).map(|p| p.sample(rng)).unwrap_or(0.0)
            } else {
                0.0
            };
            let shape = 0.5 * d + n;
            Gamma::new(shape, 2.0).map(|g| g.sample(rng)).unwrap_or(0.0)
        }
    }
}

/// `n + 1` levels `V_0, V_dt, …, V_{n·dt}`.
pub fn simulate_cir(spec: &CIRSpec, n: usize, dt: f64, stream: RngStream) -> Result<Vec<f64>> {
    simulate_cir_with(spec, n, dt, CirScheme::Exact, stream)
}

pub fn simulate_cir_with(
    spec: &CIRSpec,
    n: usize,
    dt: f64,
    scheme: CirScheme,
    stream: RngStream,
) -> Result<Vec<f64>> {
    ensure!(n >= 1, Parameter, "need at least one step");
    let stepper = spec.stepper(dt, scheme)?;
    let mut rng = stream.rng();
    let mut state = spec.initial(&mut rng)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(state.max(0.0));
    for _ in 0..n {
        state = stepper.step(state, &mut rng);
        out.push(state.max(0.0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_when_vol_vanishes() {
        let spec = CIRSpec {
            kappa_mr: 0.5,
            theta_mean: 1.0,
            sigma_vol: 0.0,
            v0: CirStart::Level(3.0),
        };
        let path = simulate_cir(&spec, 2000, 0.01, RngStream::new(0, 0)).unwrap();
        assert!((path[2000] - (1.0 + 2.0 * (-10.0f64).exp())).abs() < 1e-12);
        let flat = simulate_cir(&CIRSpec::constant(1.0), 100, 0.1, RngStream::new(0, 0)).unwrap();
        assert!(flat.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn exact_transition_moments() {
        // one large step from a fixed level: E V_h = θ + (v − θ)e^{−κh}
        let spec = CIRSpec {
            kappa_mr: 0.5,
            theta_mean: 1.0,
            sigma_vol: 0.8,
            v0: CirStart::Level(0.2),
        };
        let h = 2.0;
        let mut draws = Vec::new();
        for k in 0..20_000 {
            draws.push(simulate_cir(&spec, 1, h, RngStream::new(9, k)).unwrap()[1]);
        }
        let (m, sd) = crate::numeric::mean_std(&draws);
        let expected = 1.0 + (0.2 - 1.0) * (-1.0f64).exp();
        assert!((m - expected).abs() < 4.0 * sd / (draws.len() as f64).sqrt());
    }

    #[test]
    fn feller_violation_stays_nonnegative() {
        // 2κθ/σ² = 0.1, so the chi-square mixture branch is exercised
        let spec = CIRSpec {
            kappa_mr: 0.5,
            theta_mean: 0.1,
            sigma_vol: 1.0,
            v0: CirStart::Level(0.1),
        };
        for scheme in [CirScheme::Exact, CirScheme::FullTruncationEuler] {
            let path =
                simulate_cir_with(&spec, 10_000, 0.01, scheme, RngStream::new(1, 0)).unwrap();
            assert!(path.iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn stationary_laplace_of_design() {
        let spec = CIRSpec::paper_design();
        let (shape, scale) = spec.stationary_gamma().unwrap();
        assert!((shape - 16.0).abs() < 1e-12 && (scale - 0.0625).abs() < 1e-15);
        assert!((spec.stationary_laplace(0.5) - (1.0f64 + 0.5 / 16.0).powf(-16.0)).abs() < 1e-15);
    }
}
