//! Activity index from power variations at two time scales.
//!
//! With `Φ(p, Δ) = Σ |Δ_i X|^p`, self-similarity of the increments gives
//! `Φ(p, 2Δ)/Φ(p, Δ) ≈ 2^{p/β − 1}`, so
//!
//! ```text
//! β̂ = ln(2)·p / (ln 2 + ln Φ(p, 2Δ) − ln Φ(p, Δ)).
//! ```
//!
//! The power is chosen in two stages: a pilot estimate at `p0`, then the
//! final estimate at `p* = k_frac·β̂₀`, which keeps `p*` below `β/2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::numeric::{mean_std, KahanSum};
use crate::path::PathGrid;
use crate::rng::RngStream;

pub const DEFAULT_P0: f64 = 0.5;
pub const DEFAULT_K_FRAC: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityEstimate {
    pub beta_hat: f64,
    pub p_star: f64,
    /// `Φ(p*, Δn)`.
    pub phi_fine: f64,
    /// `Φ(p*, 2Δn)`.
    pub phi_coarse: f64,
    pub beta_pilot: f64,
    pub p0: f64,
    pub k_frac: f64,
    pub subsample_span: f64,
    #[serde(default)]
    pub se: Option<f64>,
}

/// `Σ |X_{sΔ i} − X_{sΔ(i−1)}|^p` on the grid thinned by `stride ∈ {1, 2}`.
/// With stride 2 an unpaired final increment is dropped.
pub fn power_variation(path: &PathGrid, p: f64, stride: usize) -> Result<f64> {
    ensure!(
        p > 0.0 && p.is_finite(),
        Parameter,
        "power must be positive, got {p}"
    );
    ensure!(
        stride == 1 || stride == 2,
        Parameter,
        "stride must be 1 or 2, got {stride}"
    );
    let mut acc = KahanSum::new();
    path.values
        .iter()
        .step_by(stride)
        .collect::<Vec<_>>()
        .windows(2)
        .for_each(|w| acc.add((w[1] - w[0]).abs().powf(p)));
    Ok(acc.value())
}

/// Activity implied by a pair of power variations at power `p`.
pub fn activity_from_power_variations(p: f64, phi_fine: f64, phi_coarse: f64) -> Result<f64> {
    ensure!(
        phi_fine > 0.0 && phi_coarse > 0.0,
        Estimation,
        "power variations must be positive (fine {phi_fine}, coarse {phi_coarse})"
    );
    let ln2 = std::f64::consts::LN_2;
    let denom = ln2 + phi_coarse.ln() - phi_fine.ln();
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::Estimation(format!(
            "log-ratio denominator {denom:.4e} is not positive (fine {phi_fine:.6e}, coarse {phi_coarse:.6e}, p {p})"
        )));
    }
    Ok(ln2 * p / denom)
}

pub fn estimate_activity(path: &PathGrid, p0: f64, k_frac: f64) -> Result<ActivityEstimate> {
    ensure!(
        path.n_increments() >= 4,
        Input,
        "need at least 4 increments, got {}",
        path.n_increments()
    );
    ensure!(
        p0 > 0.0 && p0.is_finite(),
        Parameter,
        "pilot power must be positive, got {p0}"
    );
    ensure!(
        k_frac > 0.0 && k_frac < 0.5,
        Parameter,
        "power fraction must lie in (0, 1/2), got {k_frac}"
    );

    let pilot = activity_from_power_variations(
        p0,
        power_variation(path, p0, 1)?,
        power_variation(path, p0, 2)?,
    )?;
    let p_star = k_frac * pilot;
    let phi_fine = power_variation(path, p_star, 1)?;
    let phi_coarse = power_variation(path, p_star, 2)?;
    let beta_hat = activity_from_power_variations(p_star, phi_fine, phi_coarse)?;
    Ok(ActivityEstimate {
        beta_hat,
        p_star,
        phi_fine,
        phi_coarse,
        beta_pilot: pilot,
        p0,
        k_frac,
        subsample_span: path.t_span,
        se: None,
    })
}

/// Per-day contributions to `Φ(p, Δn)` and `Φ(p, 2Δn)`. Coarse increments are
/// credited to the day in which they end; a trailing partial day is its own block.
fn daily_power_variations(path: &PathGrid, p: f64) -> Vec<(f64, f64)> {
    let n = path.n_increments();
    let per_day = path.per_day().max(1);
    let n_days = n.div_ceil(per_day);
    let mut days = vec![(0.0, 0.0); n_days];
    let v = &path.values;
    for i in 1..=n {
        days[(i - 1) / per_day].0 += (v[i] - v[i - 1]).abs().powf(p);
        if i % 2 == 0 {
            days[(i - 1) / per_day].1 += (v[i] - v[i - 2]).abs().powf(p);
        }
    }
    days
}

/// Standard error of `β̂` by an i.i.d. bootstrap over days, with `p*` held
/// at its full-sample value.
pub fn bootstrap_se(
    path: &PathGrid,
    estimate: &ActivityEstimate,
    resamples: usize,
    stream: RngStream,
) -> Result<f64> {
    ensure!(
        resamples >= 2,
        Parameter,
        "need at least 2 bootstrap resamples"
    );
    let days = daily_power_variations(path, estimate.p_star);
    ensure!(
        days.len() >= 2,
        Input,
        "bootstrap needs at least 2 days of data"
    );
    let mut rng = stream.rng();
    let mut draws = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let (mut fine, mut coarse) = (KahanSum::new(), KahanSum::new());
        for _ in 0..days.len() {
            let (f, c) = days[rng.random_range(0..days.len())];
            fine.add(f);
            coarse.add(c);
        }
        if let Ok(b) = activity_from_power_variations(estimate.p_star, fine.value(), coarse.value())
        {
            draws.push(b);
        }
    }
    ensure!(
        draws.len() >= 2,
        Estimation,
        "bootstrap produced fewer than 2 valid resamples"
    );
    Ok(mean_std(&draws).1)
}
