//! Realized Laplace transform statistics and their asymptotic-variance
//! machinery.
//!
//! For a path observed with mesh `Δn` over `[0, T]`,
//!
//! ```text
//! V_T(u) = Σ_{i=1}^{⌊T/Δn⌋} Δn cos((2u)^{1/β} Δn^{-1/β} Δ_i X)
//! ```
//!
//! and `L̂(u) = V_T(u)/T` estimates `E e^{-u|σ|^β}`, the Laplace transform of
//! the time-change. The differenced variant replaces `Δ_i X` by
//! `Δ_i X − Δ_{i−1} X` and `(2u)^{1/β}` by `u^{1/β}`, removing drift at the
//! cost of a larger variance.
//!
//! Variance outputs carry their scale explicitly: fixed-span quantities are
//! reported both integrated over the span (the `V_T` scale) and per unit of
//! time, while the long-span HAC matrix is on the `√T (L̂ − L)` scale.

mod blocks;
mod correction;
mod rlt;
mod variance;

pub use blocks::{
    block_stats, block_stats_with, default_lag_count, hac_covariance, BlockStats, HACResult,
    HacKernel,
};
pub use correction::{activity_correction_se, g_hat, g_hat_curve};
pub use rlt::{empirical_laplace, rlt, rlt_differenced, RLTCurve, Statistic};
pub use variance::{
    f_beta, f_beta_tilde, fixed_span_variance, g_beta, infill_variance, FixedSpanVariance,
};

use crate::error::{ensure, Result};

/// Standard errors of `L̂(u)`: `sqrt(Σ̂(u,u)/T + inflation(u))`, where the
/// optional inflation accounts for an estimated activity index.
pub fn standard_errors(
    hac: &HACResult,
    t_span: f64,
    inflation: Option<&[f64]>,
) -> Result<Vec<f64>> {
    ensure!(t_span > 0.0, Parameter, "span must be positive");
    let base = hac.variance_of_estimate(t_span);
    if let Some(extra) = inflation {
        ensure!(
            extra.len() == base.len(),
            Input,
            "inflation has {} entries for {} grid points",
            extra.len(),
            base.len()
        );
    }
    Ok(base
        .iter()
        .enumerate()
        .map(|(k, v)| (v + inflation.map_or(0.0, |e| e[k])).max(0.0).sqrt())
        .collect())
}

pub(crate) fn validate_beta(beta: f64) -> Result<()> {
    ensure!(
        beta > 0.0 && beta <= 2.0 && beta.is_finite(),
        Parameter,
        "activity must lie in (0,2], got {beta}"
    );
    Ok(())
}

pub(crate) fn validate_u(u: f64) -> Result<()> {
    ensure!(
        u >= 0.0 && u.is_finite(),
        Parameter,
        "transform argument must be non-negative, got {u}"
    );
    Ok(())
}

pub(crate) fn validate_grid(u_grid: &[f64]) -> Result<()> {
    ensure!(!u_grid.is_empty(), Input, "empty u grid");
    for &u in u_grid {
        validate_u(u)?;
    }
    ensure!(
        u_grid.windows(2).all(|w| w[1] > w[0]),
        Input,
        "u grid must be strictly ascending"
    );
    Ok(())
}
