use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{ensure, Result};

/// Below this activity the Gamma (`α = 0`) branch is used.
pub(crate) const ALPHA_GAMMA_CUTOFF: f64 = 1e-8;

/// `θ = (α, c, λ)` of the tempered stable subordinator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperedStableParams {
    pub alpha: f64,
    pub c: f64,
    pub lambda: f64,
}

impl TemperedStableParams {
    pub fn new(alpha: f64, c: f64, lambda: f64) -> Result<Self> {
        let p = Self { alpha, c, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            (0.0..1.0).contains(&self.alpha),
            Parameter,
            "alpha must lie in [0,1), got {}",
            self.alpha
        );
        ensure!(
            self.c > 0.0 && self.c.is_finite(),
            Parameter,
            "c must be positive, got {}",
            self.c
        );
        ensure!(
            self.lambda > 0.0 && self.lambda.is_finite(),
            Parameter,
            "lambda must be positive, got {}",
            self.lambda
        );
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.c, self.lambda]
    }

    /// `log L(u; θ)`; assumes valid parameters.
    pub fn log_laplace(&self, u: f64) -> f64 {
        let r = u / self.lambda;
        if self.alpha <= ALPHA_GAMMA_CUTOFF {
            return -self.c * r.ln_1p();
        }
        let a = self.alpha;
        // cΓ(−α)[(λ+u)^α − λ^α] = −(cΓ(1−α)/α) λ^α expm1(α ln(1 + u/λ))
        -(self.c * gamma(1.0 - a) / a) * self.lambda.powf(a) * (a * r.ln_1p()).exp_m1()
    }

    pub fn laplace(&self, u: f64) -> f64 {
        self.log_laplace(u).exp()
    }

    /// `dL/du`.
    pub fn laplace_derivative(&self, u: f64) -> f64 {
        let dlog = if self.alpha <= ALPHA_GAMMA_CUTOFF {
            -self.c / (self.lambda + u)
        } else {
            -self.c * gamma(1.0 - self.alpha) * (self.lambda + u).powf(self.alpha - 1.0)
        };
        self.laplace(u) * dlog
    }

    /// Mean of the law, `−L'(0)`.
    pub fn mean(&self) -> f64 {
        -self.laplace_derivative(0.0)
    }
}

/// Laplace transform of the tempered stable law at `u ≥ 0`.
pub fn ts_laplace(u: f64, theta: &TemperedStableParams) -> Result<f64> {
    ensure!(
        u >= 0.0 && u.is_finite(),
        Parameter,
        "transform argument must be non-negative, got {u}"
    );
    theta.validate()?;
    Ok(theta.laplace(u))
}

pub fn ts_laplace_derivative(u: f64, theta: &TemperedStableParams) -> Result<f64> {
    ensure!(
        u >= 0.0 && u.is_finite(),
        Parameter,
        "transform argument must be non-negative, got {u}"
    );
    theta.validate()?;
    Ok(theta.laplace_derivative(u))
}
