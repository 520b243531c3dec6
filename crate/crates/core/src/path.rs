//! Equidistant observation grid, the common input of every estimator.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Observations `X_0, X_Δ, …, X_{NΔ}` of a process on a grid of mesh `delta_n`
/// (a fraction of the unit interval, one unit being a "day").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    pub x0: f64,
    pub values: Vec<f64>,
    pub delta_n: f64,
    pub t_span: f64,
}

impl PathGrid {
    pub fn new(values: Vec<f64>, delta_n: f64) -> Result<Self> {
        ensure!(
            delta_n > 0.0 && delta_n.is_finite(),
            Parameter,
            "delta_n must be positive, got {delta_n}"
        );
        ensure!(
            values.len() >= 2,
            Input,
            "a path needs at least 2 observations, got {}",
            values.len()
        );
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(crate::Error::Input(format!(
                "observation {i} is not finite"
            )));
        }
        let n = values.len() - 1;
        Ok(Self {
            x0: values[0],
            t_span: n as f64 * delta_n,
            values,
            delta_n,
        })
    }

    /// Rebuilds levels by cumulative summation of `increments` from `x0`.
    pub fn from_increments(x0: f64, increments: &[f64], delta_n: f64) -> Result<Self> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut x = x0;
        values.push(x);
        for dx in increments {
            x += dx;
            values.push(x);
        }
        Self::new(values, delta_n)
    }

    /// Number of increments `N`.
    pub fn n_increments(&self) -> usize {
        self.values.len() - 1
    }

    pub fn increments(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    pub fn increments_vec(&self) -> Vec<f64> {
        self.increments().collect()
    }

    /// Observations per unit interval, `1/Δn` rounded.
    pub fn per_day(&self) -> usize {
        (1.0 / self.delta_n).round().max(1.0) as usize
    }

    /// Index of the last increment ending at or before time `t`.
    pub(crate) fn index_at(&self, t: f64) -> usize {
        let k = (t / self.delta_n + 1e-9).floor();
        (k.max(0.0) as usize).min(self.n_increments())
    }

    /// The initial stretch of the path covering `span` units of time.
    pub fn window(&self, span: f64) -> Result<PathGrid> {
        ensure!(
            span > 0.0,
            Parameter,
            "window span must be positive, got {span}"
        );
        let end = self.index_at(span);
        PathGrid::new(self.values[..=end].to_vec(), self.delta_n)
    }

    pub fn scaled(&self, c: f64) -> PathGrid {
        PathGrid {
            x0: self.x0 * c,
            values: self.values.iter().map(|v| v * c).collect(),
            delta_n: self.delta_n,
            t_span: self.t_span,
        }
    }

    pub fn shifted(&self, a: f64) -> PathGrid {
        PathGrid {
            x0: self.x0 + a,
            values: self.values.iter().map(|v| v + a).collect(),
            delta_n: self.delta_n,
            t_span: self.t_span,
        }
    }

    /// Writes the `i,x` CSV; values are printed in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "x"])?;
        for (i, x) in self.values.iter().enumerate() {
            w.write_record([i.to_string(), format!("{x:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}
