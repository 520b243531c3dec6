//! Plug-in correction for an estimated activity index.
//!
//! Perturbing β moves every rescaled increment by `−log(2u/Δn)/β²` in
//! relative terms, so to first order
//! `L̂_{β̂}(u) − L̂_β(u) ≈ log(2u/Δn)·Ĝ(u)/β² · (β̂ − β)`, with `Ĝ` below.

use std::sync::atomic::{AtomicBool, Ordering};

use super::rlt::RLTCurve;
use super::{validate_beta, validate_grid, validate_u};
use crate::error::{ensure, Result};
use crate::numeric::{rlt_scale, KahanSum};
use crate::path::PathGrid;

/// `Ĝ(u) = (Δn/T) Σ (w ΔX) sin(w ΔX)` with `w = (2u)^{1/β̂} Δn^{-1/β̂}`.
pub fn g_hat(path: &PathGrid, beta_hat: f64, u: f64) -> Result<f64> {
    Ok(g_hat_curve(path, beta_hat, &[u])?[0])
}

/// [`g_hat`] on a grid, in one pass over the path.
pub fn g_hat_curve(path: &PathGrid, beta_hat: f64, u_grid: &[f64]) -> Result<Vec<f64>> {
    validate_beta(beta_hat)?;
    for &u in u_grid {
        validate_u(u)?;
    }
    ensure!(
        path.values.len() >= 2,
        Input,
        "need at least 2 observations"
    );
    let scales: Vec<f64> = u_grid
        .iter()
        .map(|&u| rlt_scale(2.0 * u, beta_hat, path.delta_n))
        .collect();
    let mut acc = vec![KahanSum::new(); u_grid.len()];
    for dx in path.increments() {
        for (w, sum) in scales.iter().zip(acc.iter_mut()) {
            let y = w * dx;
            sum.add(y * y.sin());
        }
    }
    Ok(acc
        .iter()
        .map(|s| s.value() * path.delta_n / path.t_span)
        .collect())
}

static SPAN_WARNED: AtomicBool = AtomicBool::new(false);

/// Additional variance of `L̂(u)` from using `β̂` with standard error
/// `beta_se`: `[log(2u/Δn)·Ĝ(u)/β̂²]²·beta_se²`.
///
/// Valid when `β̂` comes from an initial window of fixed length, in which
/// case the error is asymptotically independent of the HAC term and the two
/// variances add. Warns (once per process) when `T·Δn > 1`, outside the
/// regime where the correction is justified.
pub fn activity_correction_se(
    l_curve: &RLTCurve,
    g_hat_values: &[f64],
    beta_se: f64,
    delta_n: f64,
    u_grid: &[f64],
) -> Result<Vec<f64>> {
    ensure!(
        beta_se >= 0.0 && beta_se.is_finite(),
        Parameter,
        "beta standard error must be non-negative, got {beta_se}"
    );
    ensure!(delta_n > 0.0, Parameter, "delta_n must be positive");
    validate_grid(u_grid)?;
    ensure!(
        g_hat_values.len() == u_grid.len(),
        Input,
        "{} derivative values for {} grid points",
        g_hat_values.len(),
        u_grid.len()
    );
    let beta = l_curve.beta_used;
    validate_beta(beta)?;
    if l_curve.t_span * delta_n > 1.0 && !SPAN_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!(
            "T·Δn = {:.3} > 1: the estimated-activity correction assumes T·Δn → 0",
            l_curve.t_span * delta_n
        );
    }
    Ok(u_grid
        .iter()
        .zip(g_hat_values)
        .map(|(&u, &g)| {
            if u == 0.0 {
                return 0.0;
            }
            let slope = (2.0 * u / delta_n).ln() * g / (beta * beta);
            slope * slope * beta_se * beta_se
        })
        .collect())
}
