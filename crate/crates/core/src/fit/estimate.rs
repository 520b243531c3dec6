use std::io::Write;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::kernel::KernelSpec;
use super::laplace::TemperedStableParams;
use super::simplex::{nelder_mead, SimplexOptions};
use crate::error::{ensure, Error, Result};
use crate::numeric::trapezoid_weights;
use crate::transform::{HACResult, RLTCurve};

/// Largest bread-matrix condition number accepted by [`fit_standard_errors`].
const MAX_BREAD_CONDITION: f64 = 1e14;
const ALPHA_FLOOR: f64 = 1e-9;

/// Integration nodes for the distance criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Quadrature {
    /// The curve's own grid.
    CurveNodes,
    /// `nodes` equispaced points on `[0, upper_factor · u_max]`; the curve is
    /// linearly interpolated when its grid differs.
    Uniform { upper_factor: f64, nodes: usize },
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Uniform {
            upper_factor: 3.0,
            nodes: 151,
        }
    }
}

impl Quadrature {
    /// Nodes for a given kernel; `None` for [`Quadrature::CurveNodes`].
    pub fn nodes(&self, kernel: &KernelSpec) -> Option<Vec<f64>> {
        match *self {
            Quadrature::CurveNodes => None,
            Quadrature::Uniform {
                upper_factor,
                nodes,
            } => {
                let top = upper_factor * kernel.u_max;
                Some(
                    (0..nodes)
                        .map(|k| top * k as f64 / (nodes - 1) as f64)
                        .collect(),
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub simplex: SimplexOptions,
    /// Extra simplex runs restarted from the incumbent.
    pub max_restarts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            simplex: SimplexOptions::default(),
            max_restarts: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: TemperedStableParams,
    /// Standard errors of `(α, c, λ)`, once computed.
    pub se: Option<[f64; 3]>,
    pub objective_value: f64,
    pub kernel: KernelSpec,
    pub u_grid: Vec<f64>,
    /// Trapezoid weights (without the kernel).
    pub weights: Vec<f64>,
    /// Empirical transform at the nodes.
    pub empirical: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub restarts: usize,
}

impl FitResult {
    /// The criterion at an arbitrary `θ` on this fit's nodes and weights.
    pub fn objective_at(&self, theta: &TemperedStableParams) -> f64 {
        (0..self.u_grid.len())
            .map(|k| {
                let u = self.u_grid[k];
                self.weights[k]
                    * self.kernel.weight(u)
                    * (self.empirical[k] - theta.laplace(u)).powi(2)
            })
            .sum()
    }

    pub fn fitted(&self) -> Vec<f64> {
        self.u_grid
            .iter()
            .map(|&u| self.theta_hat.laplace(u))
            .collect()
    }

    /// Columns `u,empirical,fitted,lower,upper`, bands `empirical ± z·se`.
    /// Without `se` the band columns are left empty.
    pub fn write_csv<W: Write>(&self, out: W, se: Option<&[f64]>, z: f64) -> Result<()> {
        if let Some(s) = se {
            ensure!(
                s.len() == self.u_grid.len(),
                Input,
                "{} standard errors for {} nodes",
                s.len(),
                self.u_grid.len()
            );
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "empirical", "fitted", "lower", "upper"])?;
        for (k, fitted) in self.fitted().into_iter().enumerate() {
            let e = self.empirical[k];
            let (lo, hi) = match se {
                Some(s) => (format!("{:?}", e - z * s[k]), format!("{:?}", e + z * s[k])),
                None => (String::new(), String::new()),
            };
            w.write_record([
                format!("{:?}", self.u_grid[k]),
                format!("{e:?}"),
                format!("{fitted:?}"),
                lo,
                hi,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }
}

fn to_phi(t: &TemperedStableParams) -> [f64; 3] {
    let a = t.alpha.clamp(ALPHA_FLOOR, 1.0 - ALPHA_FLOOR);
    [(a / (1.0 - a)).ln(), t.c.ln(), t.lambda.ln()]
}

fn from_phi(p: &[f64]) -> TemperedStableParams {
    TemperedStableParams {
        alpha: 1.0 / (1.0 + (-p[0]).exp()),
        c: p[1].exp(),
        lambda: p[2].exp(),
    }
}

/// `dθ/dφ` for each coordinate.
fn jacobian_diag(t: &TemperedStableParams) -> [f64; 3] {
    [t.alpha * (1.0 - t.alpha), t.c, t.lambda]
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let k = xs.partition_point(|&g| g <= x).clamp(1, n - 1) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

struct Criterion {
    u: Vec<f64>,
    wk: Vec<f64>,
    target: Vec<f64>,
}

impl Criterion {
    fn value(&self, theta: &TemperedStableParams) -> f64 {
        let mut s = 0.0;
        for k in 0..self.u.len() {
            let d = self.target[k] - theta.laplace(self.u[k]);
            s += self.wk[k] * d * d;
        }
        s
    }
}

fn criterion(
    curve: &RLTCurve,
    kernel: &KernelSpec,
    quadrature: &Quadrature,
) -> Result<(Criterion, Vec<f64>)> {
    let (ug, lv) = (&curve.u_grid, &curve.values);
    ensure!(
        ug.len() >= 2 && ug.len() == lv.len(),
        Input,
        "curve needs at least 2 matching nodes"
    );
    ensure!(
        lv.iter().all(|v| v.is_finite()),
        Input,
        "curve has non-finite values"
    );
    let (u, target) = match quadrature.nodes(kernel) {
        None => (ug.clone(), lv.clone()),
        Some(mut nodes) => {
            ensure!(
                nodes.len() >= 3,
                Parameter,
                "quadrature needs at least 3 nodes"
            );
            let (lo, hi) = (ug[0], ug[ug.len() - 1]);
            ensure!(
                lo <= 1e-12,
                Input,
                "curve must start at u = 0, starts at {lo}"
            );
            ensure!(
                hi >= 2.0 * kernel.u_max * (1.0 - 1e-9),
                Input,
                "curve ends at {hi}, below 2·u_max = {}; extend the u grid",
                2.0 * kernel.u_max
            );
            let top = nodes[nodes.len() - 1];
            if top > hi {
                let m = nodes.len();
                nodes = (0..m).map(|k| hi * k as f64 / (m - 1) as f64).collect();
            }
            let same = nodes.len() == ug.len()
                && nodes
                    .iter()
                    .zip(ug)
                    .all(|(a, b)| (a - b).abs() <= 1e-12 * b.max(1.0));
            let target = if same {
                lv.clone()
            } else {
                nodes.iter().map(|&x| interpolate(ug, lv, x)).collect()
            };
            (nodes, target)
        }
    };
    let w = trapezoid_weights(&u);
    let wk = u
        .iter()
        .zip(&w)
        .map(|(&x, &w)| w * kernel.weight(x))
        .collect();
    Ok((Criterion { u, wk, target }, w))
}

/// Minimizes the kernel-weighted squared distance between the curve and
/// the tempered stable transform, starting from `init`.
pub fn fit_theta(
    curve: &RLTCurve,
    kernel: &KernelSpec,
    init: &TemperedStableParams,
    quadrature: &Quadrature,
    opts: &FitOptions,
) -> Result<FitResult> {
    init.validate()?;
    let (crit, weights) = criterion(curve, kernel, quadrature)?;
    let objective = |p: &[f64]| crit.value(&from_phi(p));
    let start = to_phi(init);
    let f0 = objective(&start);
    ensure!(
        f0.is_finite(),
        Estimation,
        "objective is not finite at the initial point"
    );

    let mut best = nelder_mead(objective, &start, &opts.simplex);
    let mut iterations = best.iterations;
    let mut improvements = best.improvements;
    let mut restarts = 0;
    while restarts < opts.max_restarts && iterations < opts.simplex.max_iter {
        let budget = SimplexOptions {
            max_iter: opts.simplex.max_iter - iterations,
            ..opts.simplex
        };
        let next = nelder_mead(objective, &best.x, &budget);
        restarts += 1;
        iterations += next.iterations;
        improvements += next.improvements;
        let gain = best.fx - next.fx;
        let settled = gain <= opts.simplex.ftol * (1.0 + best.fx.abs());
        if next.fx <= best.fx {
            best = next;
        }
        if settled && best.converged {
            break;
        }
    }
    if improvements == 0 && f0 > opts.simplex.ftol {
        return Err(Error::Estimation(
            "degenerate input: no trial step lowered the objective from the initial point".into(),
        ));
    }
    if !best.converged {
        log::warn!("minimum-distance fit stopped after {iterations} iterations without converging");
    }
    Ok(FitResult {
        theta_hat: from_phi(&best.x),
        se: None,
        objective_value: best.fx.max(0.0),
        kernel: *kernel,
        u_grid: crit.u,
        weights,
        empirical: crit.target,
        converged: best.converged,
        iterations,
        restarts,
    })
}

/// Starting points from the curve's first two cumulants: a quadratic fit of
/// `log L̂` on `[0, u_max]` gives mean `m` and variance `v`, matched for each
/// `α` in the list through `m = cΓ(1−α)λ^{α−1}` and `v = (1−α)m/λ`.
pub fn default_starts(curve: &RLTCurve, kernel: &KernelSpec) -> Vec<TemperedStableParams> {
    let pts: Vec<(f64, f64)> = curve
        .u_grid
        .iter()
        .zip(&curve.values)
        .filter(|(&u, &l)| u > 0.0 && u <= kernel.u_max && l > 0.05)
        .map(|(&u, &l)| (u, l.ln()))
        .collect();
    // least squares of y = −m u + (v/2) u² through the origin
    let (mut s2, mut s3, mut s4, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(u, y) in &pts {
        s2 += u * u;
        s3 += u * u * u;
        s4 += u * u * u * u;
        y1 += u * y;
        y2 += u * u * y;
    }
    let det = s2 * s4 - s3 * s3;
    let (mut m, mut v) = if pts.len() >= 2 && det > 0.0 {
        let a = (y1 * s4 - y2 * s3) / det;
        let b = (s2 * y2 - s3 * y1) / det;
        (-a, 2.0 * b)
    } else {
        (1.0, 0.25)
    };
    if !(m > 0.0 && m.is_finite()) {
        m = 1.0;
    }
    if !(v > 0.0 && v.is_finite()) {
        v = 0.25 * m * m;
    }
    [0.1, 0.3, 0.5, 0.7]
        .iter()
        .map(|&alpha| {
            let lambda = (1.0 - alpha) * m / v;
            let c = m * lambda.powf(1.0 - alpha) / gamma(1.0 - alpha);
            TemperedStableParams { alpha, c, lambda }
        })
        .filter(|t| t.validate().is_ok())
        .collect()
}

/// Runs [`fit_theta`] from each start and keeps the lowest objective.
pub fn fit_theta_multistart(
    curve: &RLTCurve,
    kernel: &KernelSpec,
    starts: &[TemperedStableParams],
    quadrature: &Quadrature,
    opts: &FitOptions,
) -> Result<FitResult> {
    ensure!(!starts.is_empty(), Parameter, "no starting points");
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for s in starts {
        match fit_theta(curve, kernel, s, quadrature, opts) {
            Ok(f) => {
                if best
                    .as_ref()
                    .is_none_or(|b| f.objective_value < b.objective_value)
                {
                    best = Some(f);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Estimation("no fit succeeded".into())))
}

/// `∇_θ L(u_k; θ)` at each node, by central differences in the transformed
/// coordinates chained back to `θ`.
pub(crate) fn laplace_gradients(theta: &TemperedStableParams, u: &[f64]) -> Vec<Vector3<f64>> {
    let phi = to_phi(theta);
    let jac = jacobian_diag(theta);
    let mut out = vec![Vector3::zeros(); u.len()];
    for j in 0..3 {
        let h = 1e-5 * phi[j].abs().max(1.0);
        let (mut up, mut dn) = (phi, phi);
        up[j] += h;
        dn[j] -= h;
        let (tu, td) = (from_phi(&up), from_phi(&dn));
        for (k, &x) in u.iter().enumerate() {
            out[k][j] = (tu.laplace(x) - td.laplace(x)) / (2.0 * h) / jac[j];
        }
    }
    out
}

/// `B = Σ_k w_k κ(u_k) ∇L_k ∇L_k'`.
pub fn bread_matrix(fit: &FitResult, kernel: &KernelSpec) -> Matrix3<f64> {
    let grads = laplace_gradients(&fit.theta_hat, &fit.u_grid);
    let mut b = Matrix3::zeros();
    for (k, g) in grads.iter().enumerate() {
        b += g * g.transpose() * (fit.weights[k] * kernel.weight(fit.u_grid[k]));
    }
    b
}

/// Sandwich standard errors `sqrt diag(B⁻¹ Ξ B⁻¹ / T)`.
pub fn fit_standard_errors(
    fit: &FitResult,
    hac: &HACResult,
    kernel: &KernelSpec,
    t_span: f64,
) -> Result<[f64; 3]> {
    ensure!(t_span > 0.0, Parameter, "span must be positive");
    let n = fit.u_grid.len();
    ensure!(
        hac.u_grid.len() == n
            && hac
                .u_grid
                .iter()
                .zip(&fit.u_grid)
                .all(|(a, b)| (a - b).abs() <= 1e-10 * b.max(1.0)),
        Input,
        "HAC matrix is on a different u grid than the fit ({} vs {} nodes)",
        hac.u_grid.len(),
        n
    );
    let grads = laplace_gradients(&fit.theta_hat, &fit.u_grid);
    let wk: Vec<f64> = (0..n)
        .map(|k| fit.weights[k] * kernel.weight(fit.u_grid[k]))
        .collect();
    let mut b = Matrix3::zeros();
    let mut gw = DMatrix::zeros(n, 3);
    for k in 0..n {
        b += grads[k] * grads[k].transpose() * wk[k];
        for j in 0..3 {
            gw[(k, j)] = grads[k][j] * wk[k];
        }
    }
    let xi_dyn = gw.transpose() * &hac.sigma * &gw;
    let xi = Matrix3::from_fn(|i, j| xi_dyn[(i, j)]);

    let sv = b.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let cond = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    // NaN counts as singular
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    let singular = !(cond <= MAX_BREAD_CONDITION);
    if singular {
        return Err(Error::Estimation(format!(
            "bread matrix is singular (condition number {cond:.3e})"
        )));
    }
    let binv = b.try_inverse().ok_or_else(|| {
        Error::Estimation(format!(
            "bread matrix is singular (condition number {cond:.3e})"
        ))
    })?;
    let cov = binv * xi * binv / t_span;
    Ok([0, 1, 2].map(|j| cov[(j, j)].max(0.0).sqrt()))
}
