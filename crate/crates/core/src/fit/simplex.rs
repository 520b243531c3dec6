use serde::{Deserialize, Serialize};

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexOptions {
    /// Spread of objective values across the simplex at which to stop.
    pub ftol: f64,
    pub max_iter: usize,
    /// Initial edge length per coordinate.
    pub step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            ftol: 1e-10,
            max_iter: 2000,
            step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Number of accepted moves that lowered the best value.
    pub improvements: usize,
}

/// Nelder–Mead minimization with the standard coefficients (1, 2, ½, ½).
/// Non-finite objective values are treated as `+∞`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: &SimplexOptions) -> SimplexOutcome {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for j in 0..n {
        let mut p = x0.to_vec();
        p[j] += opts.step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let start_best = vals[0];
    let mut best_seen = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut improvements = usize::from(best_seen < start_best);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&k| pts[k].clone()).collect();
        vals = order.iter().map(|&k| vals[k]).collect();

        let spread = vals[n] - vals[0];
        if spread.is_finite() && spread <= opts.ftol * (1.0 + vals[0].abs()) {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|j| centroid[j] + t * (pts[n][j] - centroid[j]))
                .collect()
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let x = along(-0.5);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x);
                (x, v)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for k in 1..=n {
                    let p: Vec<f64> = (0..n)
                        .map(|j| pts[0][j] + 0.5 * (pts[k][j] - pts[0][j]))
                        .collect();
                    vals[k] = eval(&p);
                    pts[k] = p;
                }
            }
        }
        let b = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if b < best_seen {
            best_seen = b;
            improvements += 1;
        }
    }

    let k = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap_or(0);
    SimplexOutcome {
        x: pts[k].clone(),
        fx: vals[k],
        iterations,
        converged,
        improvements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = SimplexOptions {
            ftol: 1e-16,
            max_iter: 5000,
            step: 0.5,
        };
        let out = nelder_mead(f, &[-1.2, 1.0], &opts);
        assert!(out.converged);
        assert!(
            (out.x[0] - 1.0).abs() < 1e-4 && (out.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            out.x
        );
    }

    #[test]
    fn iteration_cap() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let opts = SimplexOptions {
            ftol: 0.0,
            max_iter: 10,
            step: 1.0,
        };
        let out = nelder_mead(f, &[3.0, 3.0, 3.0], &opts);
        assert!(!out.converged);
        assert_eq!(out.iterations, 10);
    }

    #[test]
    fn nonfinite_regions_avoided() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                (x[0] - 0.5).powi(2)
            }
        };
        let out = nelder_mead(f, &[2.0], &SimplexOptions::default());
        assert!((out.x[0] - 0.5).abs() < 1e-4);
    }
}
