use serde::{Deserialize, Serialize};

use super::rlt::{cosine_sums, Statistic};
use super::{validate_beta, validate_u};
use crate::error::{ensure, Result};
use crate::path::PathGrid;

/// `F_β(x) = (e^{-2^{β-1}x^β} − 2e^{-x^β} + 1)/2`.
pub fn f_beta(x: f64, beta: f64) -> f64 {
    let xb = x.powf(beta);
    0.5 * ((-(2f64).powf(beta - 1.0) * xb).exp() - 2.0 * (-xb).exp() + 1.0)
}

/// Asymptotic variance function of the differenced statistic.
pub fn f_beta_tilde(x: f64, beta: f64) -> f64 {
    let xb = x.powf(beta);
    let a = (-(2f64).powf(beta - 1.0) * xb).exp();
    let e1 = (-xb).exp();
    let half_plus = 0.5 * (a + 1.0);
    let half_minus = 0.5 * (a - 1.0);
    half_plus * half_plus + 2.0 * e1 * half_plus - 3.0 * e1 * e1 + half_minus * half_minus
}

/// `G_β(x) = β x^β e^{-x^β}`.
pub fn g_beta(x: f64, beta: f64) -> f64 {
    let xb = x.powf(beta);
    beta * xb * (-xb).exp()
}

/// A fixed-span variance estimate at both normalizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedSpanVariance {
    pub u: f64,
    /// Estimate of `∫_0^T F ds`, on the scale of `V_T`.
    pub integrated: f64,
    /// `integrated / T`, on the scale of `L̂ = V_T/T`.
    pub per_unit_time: f64,
    pub t_span: f64,
    pub delta_n: f64,
}

impl FixedSpanVariance {
    /// Implied variance of the statistic itself, `Δn·integrated`.
    pub fn statistic_variance(&self) -> f64 {
        self.delta_n * self.integrated
    }
}

fn plug_in(
    path: &PathGrid,
    beta: f64,
    u: f64,
    inner: f64,
    outer: f64,
) -> Result<FixedSpanVariance> {
    validate_beta(beta)?;
    validate_u(u)?;
    ensure!(
        path.values.len() >= 2,
        Input,
        "need at least 2 observations"
    );
    let t = Statistic::Plain.span(path);
    let integrated = if u == 0.0 {
        0.0
    } else {
        let scales = [
            Statistic::Plain.scale(outer, beta, path.delta_n),
            Statistic::Plain.scale(inner, beta, path.delta_n),
        ];
        let v = cosine_sums(path, Statistic::Plain, &scales);
        0.5 * (v[0] - 2.0 * v[1] + t)
    };
    Ok(FixedSpanVariance {
        u,
        integrated,
        per_unit_time: integrated / t,
        t_span: t,
        delta_n: path.delta_n,
    })
}

/// Plug-in `(V_T(2^{β−1}u) − 2V_T(u) + T)/2`, consistent for `∫_0^T F_β(u^{1/β}|σ_s|) ds`.
pub fn fixed_span_variance(path: &PathGrid, beta: f64, u: f64) -> Result<FixedSpanVariance> {
    plug_in(path, beta, u, u, (2f64).powf(beta - 1.0) * u)
}

/// Conditional variance of the infill error of `V_T(u)`:
/// `Var(cos((2u)^{1/β} Δn^{-1/β} σ ΔS))` integrated over the span, which is
/// `∫_0^T F_β((2u)^{1/β}|σ_s|) ds`. Estimated by the same plug-in evaluated
/// at `2u`, i.e. `(V_T(2^β u) − 2V_T(2u) + T)/2`.
pub fn infill_variance(path: &PathGrid, beta: f64, u: f64) -> Result<FixedSpanVariance> {
    let mut out = plug_in(path, beta, u, 2.0 * u, (2f64).powf(beta) * u)?;
    out.u = u;
    Ok(out)
}
