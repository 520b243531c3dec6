use serde::{Deserialize, Serialize};

use super::laplace::TemperedStableParams;
use crate::error::{ensure, Error, Result};
use crate::transform::RLTCurve;

/// Slope of the Laplace transform at which the kernel width is anchored.
pub const U_MAX_SLOPE: f64 = -0.05;

/// Gaussian weight `κ(u) = exp(−2u²/u_max²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub u_max: f64,
}

impl KernelSpec {
    pub fn new(u_max: f64) -> Result<Self> {
        ensure!(
            u_max > 0.0 && u_max.is_finite(),
            Parameter,
            "u_max must be positive, got {u_max}"
        );
        Ok(Self { u_max })
    }

    pub fn weight(&self, u: f64) -> f64 {
        (-2.0 * u * u / (self.u_max * self.u_max)).exp()
    }
}

/// Where the kernel width came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UMaxSource {
    EmpiricalCurve,
    Model,
    User,
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `dL̂/du = slope` on an empirical curve, with the derivative taken by
/// central differences at the nodes (one-sided at the ends) and interpolated
/// linearly in between. The search is bracketed by the grid.
pub fn solve_u_max(curve: &RLTCurve, slope: f64) -> Result<f64> {
    let u = &curve.u_grid;
    let l = &curve.values;
    let n = u.len();
    ensure!(
        n >= 3,
        Input,
        "need at least 3 grid points to differentiate the curve"
    );
    let deriv: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            (l[b] - l[a]) / (u[b] - u[a])
        })
        .collect();
    let interp = |x: f64| -> f64 {
        let k = match u.partition_point(|&g| g <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let t = (x - u[k]) / (u[k + 1] - u[k]);
        deriv[k] + t * (deriv[k + 1] - deriv[k]) - slope
    };
    if let Some(k) = deriv.iter().position(|&d| d == slope) {
        return Ok(u[k]);
    }
    let (lo, hi) = (u[0], u[n - 1]);
    if (interp(lo) < 0.0) == (interp(hi) < 0.0) {
        return Err(Error::Estimation(format!(
            "curve slope does not cross {slope} on [{lo}, {hi}] (end slopes {:.4}, {:.4}); widen the u grid",
            deriv[0],
            deriv[n - 1]
        )));
    }
    // first crossing from the left
    let k = (1..n)
        .find(|&k| (interp(u[k]) < 0.0) != (interp(lo) < 0.0) || interp(u[k]) == 0.0)
        .unwrap_or(n - 1);
    Ok(bisect(interp, u[k - 1], u[k]))
}

/// Solves `dL/du(u; θ) = slope` with the closed-form derivative.
pub fn solve_u_max_model(theta: &TemperedStableParams, slope: f64) -> Result<f64> {
    theta.validate()?;
    ensure!(
        slope < 0.0,
        Parameter,
        "target slope must be negative, got {slope}"
    );
    let f = |u: f64| theta.laplace_derivative(u) - slope;
    if f(0.0) >= 0.0 {
        return Err(Error::Estimation(format!(
            "the law's slope at 0 is {:.4}, already flatter than {slope}",
            theta.laplace_derivative(0.0)
        )));
    }
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        ensure!(
            hi < 1e12,
            Estimation,
            "no crossing of slope {slope} below u = 1e12"
        );
    }
    Ok(bisect(f, 0.0, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(u: Vec<f64>, f: impl Fn(f64) -> f64) -> RLTCurve {
        RLTCurve {
            values: u.iter().map(|&x| f(x)).collect(),
            u_grid: u,
            beta_used: 1.7,
            t_span: 1.0,
            delta_n: 0.01,
            differenced: false,
            se: None,
        }
    }

    #[test]
    fn kernel_shape() {
        let k = KernelSpec::new(2.0).unwrap();
        assert_eq!(k.weight(0.0), 1.0);
        assert!(k.weight(1.0) > k.weight(2.0));
        assert!((k.weight(2.0) - (-2.0f64).exp()).abs() < 1e-15);
        assert!(KernelSpec::new(0.0).is_err());
    }

    #[test]
    fn exact_grid_point_root() {
        // L = 1 − u + 0.2375u²: central differences are exact, slope −0.05 at u = 2
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let c = curve(grid, |u| 1.0 - u + 0.2375 * u * u);
        let r = solve_u_max(&c, U_MAX_SLOPE).unwrap();
        assert!((r - 2.0).abs() < 1e-8, "{r}");
    }

    #[test]
    fn no_crossing_is_an_error() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let c = curve(grid, |u| (-u).exp());
        let err = solve_u_max(&c, U_MAX_SLOPE).unwrap_err();
        assert!(err.to_string().contains("widen"));
    }

    #[test]
    fn model_root_of_design_law() {
        // (1 + u/16)^{-17} = 0.05 → u = 16(20^{1/17} − 1), found here by a dense scan
        let theta = TemperedStableParams::new(0.0, 16.0, 16.0).unwrap();
        let scan = (0..400_000)
            .map(|k| k as f64 * 1e-5)
            .find(|&u| -(1.0f64 + u / 16.0).powf(-17.0) >= U_MAX_SLOPE)
            .unwrap();
        let r = solve_u_max_model(&theta, U_MAX_SLOPE).unwrap();
        assert!((r - scan).abs() < 2e-5, "{r} vs {scan}");
        assert!((r - 16.0 * (20f64.powf(1.0 / 17.0) - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn steeper_law_narrower_kernel() {
        let a = TemperedStableParams::new(0.3, 1.2, 0.5).unwrap();
        let b = TemperedStableParams { c: 2.4, ..a };
        assert!(
            solve_u_max_model(&b, U_MAX_SLOPE).unwrap()
                < solve_u_max_model(&a, U_MAX_SLOPE).unwrap()
        );
    }

    #[test]
    fn empirical_tracks_model() {
        let theta = TemperedStableParams::new(0.0, 16.0, 16.0).unwrap();
        let grid: Vec<f64> = (0..=800).map(|k| k as f64 * 0.01).collect();
        let c = curve(grid, |u| theta.laplace(u));
        let r = solve_u_max(&c, U_MAX_SLOPE).unwrap();
        assert!((r - solve_u_max_model(&theta, U_MAX_SLOPE).unwrap()).abs() < 1e-3);
    }
}
