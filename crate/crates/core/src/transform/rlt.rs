use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{validate_beta, validate_grid, validate_u};
use crate::error::{ensure, Result};
use crate::numeric::{rlt_scale, KahanSum};
use crate::path::PathGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    #[default]
    Plain,
    Differenced,
}

impl Statistic {
    /// Multiplier of `Δn^{-1/β}` applied to the (possibly differenced) increment.
    pub(crate) fn scale(self, u: f64, beta: f64, delta_n: f64) -> f64 {
        match self {
            Statistic::Plain => rlt_scale(2.0 * u, beta, delta_n),
            Statistic::Differenced => rlt_scale(u, beta, delta_n),
        }
    }

    pub(crate) fn min_observations(self) -> usize {
        match self {
            Statistic::Plain => 2,
            Statistic::Differenced => 3,
        }
    }

    /// Index of the first increment carrying a term.
    pub(crate) fn first_term(self) -> usize {
        match self {
            Statistic::Plain => 0,
            Statistic::Differenced => 1,
        }
    }

    /// Argument of the cosine for increment `i` before scaling.
    #[inline]
    pub(crate) fn argument(self, incs: &[f64], i: usize) -> f64 {
        match self {
            Statistic::Plain => incs[i],
            Statistic::Differenced => incs[i] - incs[i - 1],
        }
    }

    /// Time covered by the terms, the normalizer of the curve.
    pub(crate) fn span(self, path: &PathGrid) -> f64 {
        let terms = path.n_increments() - self.first_term();
        terms as f64 * path.delta_n
    }
}

fn check(path: &PathGrid, beta: f64, stat: Statistic) -> Result<()> {
    validate_beta(beta)?;
    ensure!(
        path.values.len() >= stat.min_observations(),
        Input,
        "need at least {} observations, got {}",
        stat.min_observations(),
        path.values.len()
    );
    Ok(())
}

/// Sums `Δn cos(scale_k · arg_i)` over the terms, for every scale at once.
pub(crate) fn cosine_sums(path: &PathGrid, stat: Statistic, scales: &[f64]) -> Vec<f64> {
    let incs = path.increments_vec();
    let mut acc = vec![KahanSum::new(); scales.len()];
    for i in stat.first_term()..incs.len() {
        let a = stat.argument(&incs, i);
        for (s, sum) in scales.iter().zip(acc.iter_mut()) {
            sum.add((s * a).cos());
        }
    }
    acc.iter().map(|s| s.value() * path.delta_n).collect()
}

/// `V_T(X, Δn, β, u)`. At `u = 0` this is exactly `Δn·⌊T/Δn⌋`.
pub fn rlt(path: &PathGrid, beta: f64, u: f64) -> Result<f64> {
    statistic(path, beta, u, Statistic::Plain)
}

/// Differenced statistic `Ṽ_T(X, Δn, β, u)`; at `u = 0` it equals `Δn(⌊T/Δn⌋ − 1)`.
pub fn rlt_differenced(path: &PathGrid, beta: f64, u: f64) -> Result<f64> {
    statistic(path, beta, u, Statistic::Differenced)
}

pub(crate) fn statistic(path: &PathGrid, beta: f64, u: f64, stat: Statistic) -> Result<f64> {
    check(path, beta, stat)?;
    validate_u(u)?;
    if u == 0.0 {
        return Ok(stat.span(path));
    }
    Ok(cosine_sums(path, stat, &[stat.scale(u, beta, path.delta_n)])[0])
}

/// Empirical Laplace transform of the time-change on a grid of arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RLTCurve {
    pub u_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub beta_used: f64,
    pub t_span: f64,
    pub delta_n: f64,
    pub differenced: bool,
    /// Standard errors, when inference has been attached.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<Vec<f64>>,
}

impl RLTCurve {
    pub fn statistic(&self) -> Statistic {
        if self.differenced {
            Statistic::Differenced
        } else {
            Statistic::Plain
        }
    }

    /// Writes `u,value[,se]`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match &self.se {
            Some(_) => w.write_record(["u", "value", "se"])?,
            None => w.write_record(["u", "value"])?,
        }
        for (k, (u, v)) in self.u_grid.iter().zip(&self.values).enumerate() {
            let mut row = vec![format!("{u:?}"), format!("{v:?}")];
            if let Some(se) = &self.se {
                row.push(format!("{:?}", se[k]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `u,value,se,lower,upper` with a symmetric normal band.
    pub fn write_bands_csv<W: Write>(&self, out: W, z: f64) -> Result<()> {
        let se = self
            .se
            .as_ref()
            .ok_or_else(|| crate::Error::Input("curve has no standard errors".into()))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "value", "se", "lower", "upper"])?;
        for ((u, &v), &s) in self.u_grid.iter().zip(&self.values).zip(se) {
            w.write_record([
                format!("{u:?}"),
                format!("{v:?}"),
                format!("{s:?}"),
                format!("{:?}", v - z * s),
                format!("{:?}", v + z * s),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `L̂(u_k)` for every grid point in a single pass over the path.
///
/// The plain curve divides `V_T` by `T`; the differenced one divides `Ṽ_T` by
/// the span its terms cover, `Δn(⌊T/Δn⌋ − 1)`, so both equal 1 at `u = 0`.
pub fn empirical_laplace(
    path: &PathGrid,
    beta: f64,
    u_grid: &[f64],
    differenced: bool,
) -> Result<RLTCurve> {
    let stat = if differenced {
        Statistic::Differenced
    } else {
        Statistic::Plain
    };
    check(path, beta, stat)?;
    validate_grid(u_grid)?;
    let scales: Vec<f64> = u_grid
        .iter()
        .map(|&u| stat.scale(u, beta, path.delta_n))
        .collect();
    let sums = cosine_sums(path, stat, &scales);
    let span = stat.span(path);
    let values = u_grid
        .iter()
        .zip(sums)
        .map(|(&u, s)| if u == 0.0 { 1.0 } else { s / span })
        .collect();
    Ok(RLTCurve {
        u_grid: u_grid.to_vec(),
        values,
        beta_used: beta,
        t_span: path.t_span,
        delta_n: path.delta_n,
        differenced,
        se: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_path() -> PathGrid {
        PathGrid::from_increments(0.0, &[0.1, -0.3, 0.2, 0.05, -0.01, 0.4], 0.25).unwrap()
    }

    #[test]
    fn zero_argument_is_analytic() {
        let p = toy_path();
        assert_eq!(rlt(&p, 1.7, 0.0).unwrap(), 1.5);
        assert_eq!(rlt_differenced(&p, 1.7, 0.0).unwrap(), 1.25);
        let c = empirical_laplace(&p, 1.7, &[0.0, 1.0], true).unwrap();
        assert_eq!(c.values[0], 1.0);
    }

    #[test]
    fn matches_direct_sum() {
        let p = toy_path();
        let (beta, u) = (1.5, 0.7);
        let w = (2.0 * u / p.delta_n).powf(1.0 / beta);
        let direct: f64 = p.increments().map(|d| p.delta_n * (w * d).cos()).sum();
        assert!((rlt(&p, beta, u).unwrap() - direct).abs() < 1e-14);
        let incs = p.increments_vec();
        let wd = (u / p.delta_n).powf(1.0 / beta);
        let direct_d: f64 = (1..incs.len())
            .map(|i| p.delta_n * (wd * (incs[i] - incs[i - 1])).cos())
            .sum();
        assert!((rlt_differenced(&p, beta, u).unwrap() - direct_d).abs() < 1e-14);
    }

    #[test]
    fn curve_agrees_with_pointwise() {
        let p = toy_path();
        let grid = [0.1, 0.5, 2.0];
        let c = empirical_laplace(&p, 1.6, &grid, false).unwrap();
        for (k, &u) in grid.iter().enumerate() {
            assert!((c.values[k] - rlt(&p, 1.6, u).unwrap() / p.t_span).abs() < 1e-15);
        }
    }

    #[test]
    fn input_errors() {
        let short = PathGrid::new(vec![0.0, 1.0], 0.1).unwrap();
        assert!(rlt(&short, 1.5, 1.0).is_ok());
        assert!(rlt_differenced(&short, 1.5, 1.0).is_err());
        assert!(rlt(&short, 2.5, 1.0).is_err());
        assert!(rlt(&short, 1.5, -1.0).is_err());
        assert!(empirical_laplace(&toy_path(), 1.5, &[1.0, 0.5], false).is_err());
    }
}
