//! Per-unit-interval statistics and the HAC long-run covariance built on them.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::rlt::Statistic;
use super::{validate_beta, validate_grid};
use crate::error::{ensure, Error, Result};
use crate::numeric::KahanSum;
use crate::path::PathGrid;

/// `Ẑ_t(u) = V_t(u) − V_{t−1}(u)` on every whole unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStats {
    pub u_grid: Vec<f64>,
    pub beta: f64,
    pub delta_n: f64,
    pub t_span: f64,
    pub statistic: Statistic,
    /// Rows are intervals `t = 1..⌊T⌋`, columns follow `u_grid`.
    pub z: DMatrix<f64>,
    /// `L̂(u)` of the full sample.
    pub l_hat: Vec<f64>,
    /// Contribution of the trailing partial interval to `V_T(u)`.
    pub remainder: Vec<f64>,
    /// `V_T(u)`.
    pub total: Vec<f64>,
}

impl BlockStats {
    pub fn n_blocks(&self) -> usize {
        self.z.nrows()
    }
}

pub fn block_stats(path: &PathGrid, beta: f64, u_grid: &[f64]) -> Result<BlockStats> {
    block_stats_with(path, beta, u_grid, Statistic::Plain)
}

pub fn block_stats_with(
    path: &PathGrid,
    beta: f64,
    u_grid: &[f64],
    stat: Statistic,
) -> Result<BlockStats> {
    validate_beta(beta)?;
    validate_grid(u_grid)?;
    ensure!(
        path.values.len() >= stat.min_observations(),
        Input,
        "path too short"
    );
    let n_blocks = (path.t_span + 1e-9).floor() as usize;
    ensure!(
        n_blocks >= 2,
        Input,
        "need at least 2 whole unit intervals, span is {}",
        path.t_span
    );

    let incs = path.increments_vec();
    let scales: Vec<f64> = u_grid
        .iter()
        .map(|&u| stat.scale(u, beta, path.delta_n))
        .collect();
    let nu = u_grid.len();
    let mut z = DMatrix::zeros(n_blocks, nu);
    let mut remainder = vec![0.0; nu];
    let mut total = vec![KahanSum::new(); nu];

    let mut start = stat.first_term();
    for t in 0..=n_blocks {
        let end = if t < n_blocks {
            path.index_at((t + 1) as f64)
        } else {
            incs.len()
        };
        let mut acc = vec![KahanSum::new(); nu];
        for i in start.min(end)..end {
            let a = stat.argument(&incs, i);
            for (s, sum) in scales.iter().zip(acc.iter_mut()) {
                sum.add((s * a).cos());
            }
        }
        for k in 0..nu {
            let v = acc[k].value() * path.delta_n;
            total[k].add(v);
            if t < n_blocks {
                z[(t, k)] = v;
            } else {
                remainder[k] = v;
            }
        }
        start = start.max(end);
    }

    let span = stat.span(path);
    let total: Vec<f64> = total.iter().map(|s| s.value()).collect();
    let l_hat = u_grid
        .iter()
        .zip(&total)
        .map(|(&u, v)| if u == 0.0 { 1.0 } else { v / span })
        .collect();
    Ok(BlockStats {
        u_grid: u_grid.to_vec(),
        beta,
        delta_n: path.delta_n,
        t_span: path.t_span,
        statistic: stat,
        z,
        l_hat,
        remainder,
        total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HacKernel {
    #[default]
    Bartlett,
    Parzen,
}

impl HacKernel {
    /// Weight `ω(i, L)` of lag `i` for bandwidth `L`.
    pub fn weight(self, i: usize, lags: usize) -> f64 {
        let x = i as f64 / (lags as f64 + 1.0);
        match self {
            HacKernel::Bartlett => (1.0 - x).max(0.0),
            HacKernel::Parzen => {
                if x <= 0.5 {
                    1.0 - 6.0 * x * x + 6.0 * x * x * x
                } else if x <= 1.0 {
                    2.0 * (1.0 - x).powi(3)
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for HacKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HacKernel::Bartlett => "bartlett",
            HacKernel::Parzen => "parzen",
        })
    }
}

impl FromStr for HacKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bartlett" => Ok(HacKernel::Bartlett),
            "parzen" => Ok(HacKernel::Parzen),
            other => Err(Error::Parameter(format!(
                "unknown HAC kernel '{other}' (bartlett|parzen)"
            ))),
        }
    }
}

/// `⌈1.3·T^{1/3}⌉`.
pub fn default_lag_count(t_span: f64) -> usize {
    (1.3 * t_span.max(0.0).cbrt()).ceil() as usize
}

/// Long-run covariance `Σ̂(u, v)` of `√T (L̂(u) − L(u))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HACResult {
    pub u_grid: Vec<f64>,
    #[serde(with = "matrix_rows")]
    pub sigma: DMatrix<f64>,
    pub kernel: HacKernel,
    pub lag_count: usize,
    pub n_blocks: usize,
}

impl HACResult {
    /// `Σ̂(u,u)/T`, the variance of `L̂(u)`.
    pub fn variance_of_estimate(&self, t_span: f64) -> Vec<f64> {
        (0..self.u_grid.len())
            .map(|k| self.sigma[(k, k)] / t_span)
            .collect()
    }

    pub fn save_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self)?;
        Ok(())
    }

    /// The matrix as CSV: a `u` column followed by one column per grid point.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["u".to_string()];
        header.extend(self.u_grid.iter().map(|u| format!("{u:?}")));
        w.write_record(&header)?;
        for (i, u) in self.u_grid.iter().enumerate() {
            let mut rec = vec![format!("{u:?}")];
            rec.extend((0..self.u_grid.len()).map(|j| format!("{:?}", self.sigma[(i, j)])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `Σ̂ = Ĉ_0 + Σ_{i=1}^{L} ω(i,L)(Ĉ_i + Ĉ_i')` with
/// `Ĉ_k(u,v) = (1/n) Σ_{t=k+1}^{n} (Ẑ_t(u) − L̂(u))(Ẑ_{t−k}(v) − L̂(v))` over
/// the `n` whole blocks. `lag_count = None` uses [`default_lag_count`].
pub fn hac_covariance(
    blocks: &BlockStats,
    kernel: HacKernel,
    lag_count: Option<usize>,
) -> Result<HACResult> {
    let n = blocks.n_blocks();
    let lags = match lag_count {
        Some(l) => {
            ensure!(
                l < n,
                Parameter,
                "lag count {l} must be below the number of whole blocks {n}"
            );
            l
        }
        None => default_lag_count(blocks.t_span).min(n - 1),
    };
    let nu = blocks.u_grid.len();
    let mut centred = blocks.z.clone();
    for k in 0..nu {
        let m = blocks.l_hat[k];
        centred.column_mut(k).add_scalar_mut(-m);
    }
    let cross = |lag: usize| -> DMatrix<f64> {
        // Ĉ_lag with rows indexed by u (lead) and columns by v (lagged)
        let lead = centred.rows(lag, n - lag);
        let lagged = centred.rows(0, n - lag);
        lead.transpose() * lagged / n as f64
    };
    let mut sigma = cross(0);
    for i in 1..=lags {
        let w = kernel.weight(i, lags);
        if w == 0.0 {
            continue;
        }
        let c = cross(i);
        sigma += (&c + c.transpose()) * w;
    }
    // symmetric up to rounding; make it exact
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    Ok(HACResult {
        u_grid: blocks.u_grid.clone(),
        sigma,
        kernel,
        lag_count: lags,
        n_blocks: n,
    })
}

mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != nc) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
    }
}
