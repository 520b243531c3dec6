//! Monte Carlo harness for the realized Laplace transform.
//!
//! A [`MCConfig`] describes one column of the study: the model, how the
//! activity index is resolved, and the evaluation points. Replication `k`
//! draws its path from `RngStream::new(seed, k)`, replications are scheduled
//! by an [`Execution`] policy, and aggregation runs in replication order, so
//! a summary does not depend on the number of workers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::activity::{bootstrap_se, estimate_activity, DEFAULT_K_FRAC, DEFAULT_P0};
use crate::error::{ensure, Error, Result};
use crate::exec::Execution;
use crate::numeric::mean_std;
use crate::path::PathGrid;
use crate::rng::RngStream;
use crate::sim::{
    simulate_model, CIRSpec, CirScheme, CirStart, Driver, ModelOptions, StableSpec,
    TemperedStableSpec,
};
use crate::transform::{
    activity_correction_se, block_stats, empirical_laplace, g_hat_curve, hac_covariance,
    standard_errors, HacKernel,
};

/// Normal quantile for two-sided 95% intervals.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Evaluation points of the published design.
pub const TABLE_U: [f64; 5] = [0.10, 0.50, 1.25, 2.50, 3.75];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverKind {
    Stable,
    TemperedStable,
}

impl FromStr for DriverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stable" | "s" => Ok(DriverKind::Stable),
            "tempered-stable" | "tempered" | "ts" => Ok(DriverKind::TemperedStable),
            other => Err(Error::Parameter(format!(
                "unknown driver '{other}' (stable|tempered-stable)"
            ))),
        }
    }
}

impl fmt::Display for DriverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DriverKind::Stable => "stable",
            DriverKind::TemperedStable => "tempered-stable",
        })
    }
}

/// How the activity index used by the transform is obtained.
///
/// String forms: `known`, `estimated` or `estimated:<days>`, `fixed:<value>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BetaMode {
    /// The driver's true activity.
    Known,
    /// Estimated from the first `days` of each path.
    Estimated {
        days: f64,
    },
    FixedAt(f64),
}

impl BetaMode {
    pub const DEFAULT_ESTIMATION_DAYS: f64 = 252.0;
}

impl FromStr for BetaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s.as_str(), None),
        };
        let number = |a: &str| -> Result<f64> {
            a.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parameter(format!("bad number '{a}' in activity mode '{s}'")))
        };
        match (head, arg) {
            ("known", None) => Ok(BetaMode::Known),
            ("estimated" | "estimate", None) => Ok(BetaMode::Estimated {
                days: Self::DEFAULT_ESTIMATION_DAYS,
            }),
            ("estimated" | "estimate", Some(a)) => {
                let days = number(a)?;
                ensure!(
                    days >= 2.0,
                    Parameter,
                    "estimation window must cover at least 2 days, got {days}"
                );
                Ok(BetaMode::Estimated { days })
            }
            ("fixed" | "fixed-at", Some(a)) => {
                let b = number(a)?;
                ensure!(
                    b > 0.0 && b <= 2.0,
                    Parameter,
                    "fixed activity must lie in (0,2], got {b}"
                );
                Ok(BetaMode::FixedAt(b))
            }
            _ => Err(Error::Parameter(format!(
                "unknown activity mode '{s}' (known | estimated[:days] | fixed:<value>)"
            ))),
        }
    }
}

impl fmt::Display for BetaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaMode::Known => f.write_str("known"),
            BetaMode::Estimated { days } => write!(f, "estimated:{days}"),
            BetaMode::FixedAt(b) => write!(f, "fixed:{b}"),
        }
    }
}

impl TryFrom<String> for BetaMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BetaMode> for String {
    fn from(m: BetaMode) -> String {
        m.to_string()
    }
}

/// One column of a Monte Carlo study. Serializes as a flat key-value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MCConfig {
    pub label: Option<String>,
    pub n_reps: usize,
    /// Days.
    pub t_span: f64,
    pub m_per_day: usize,
    pub driver: DriverKind,
    pub beta: f64,
    /// Lévy density level; `None` uses `A(β)` for the stable driver and
    /// 0.11 for the tempered stable one.
    pub c_level: Option<f64>,
    pub lambda: f64,
    pub cir_kappa: f64,
    pub cir_theta: f64,
    pub cir_sigma: f64,
    pub substeps: usize,
    pub beta_mode: BetaMode,
    pub u_list: Vec<f64>,
    pub seed: u64,
    /// Also compute HAC standard errors and interval coverage.
    pub inference: bool,
    pub hac_kernel: HacKernel,
    pub hac_lags: Option<usize>,
    /// Bootstrap resamples for the standard error of an estimated activity.
    pub bootstrap: usize,
}

impl Default for MCConfig {
    fn default() -> Self {
        let ts = TemperedStableSpec::paper_design();
        let cir = CIRSpec::paper_design();
        Self {
            label: None,
            n_reps: 200,
            t_span: 300.0,
            m_per_day: 78,
            driver: DriverKind::Stable,
            beta: 1.7,
            c_level: None,
            lambda: ts.lambda_temper,
            cir_kappa: cir.kappa_mr,
            cir_theta: cir.theta_mean,
            cir_sigma: cir.sigma_vol,
            substeps: 1,
            beta_mode: BetaMode::Known,
            u_list: TABLE_U.to_vec(),
            seed: 20_100_601,
            inference: false,
            hac_kernel: HacKernel::Bartlett,
            hac_lags: None,
            bootstrap: 500,
        }
    }
}

impl MCConfig {
    /// 1000 replications of 1200 days; long-running.
    pub fn paper_scale(self) -> Self {
        Self {
            n_reps: 1000,
            t_span: 1200.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_reps >= 1, Parameter, "need at least one replication");
        ensure!(
            self.t_span >= 2.0 && self.t_span.is_finite(),
            Parameter,
            "span must be at least 2 days, got {}",
            self.t_span
        );
        ensure!(
            self.m_per_day >= 2,
            Parameter,
            "need at least 2 observations per day"
        );
        ensure!(self.substeps >= 1, Parameter, "substeps must be at least 1");
        ensure!(!self.u_list.is_empty(), Parameter, "u_list is empty");
        ensure!(
            self.u_list.iter().all(|&u| u > 0.0 && u.is_finite())
                && self.u_list.windows(2).all(|w| w[0] < w[1]),
            Parameter,
            "u_list must be positive and strictly ascending"
        );
        if let BetaMode::Estimated { days } = self.beta_mode {
            ensure!(
                days <= self.t_span,
                Parameter,
                "estimation window {days} exceeds the span {}",
                self.t_span
            );
            if self.inference {
                ensure!(
                    self.bootstrap >= 2,
                    Parameter,
                    "need at least 2 bootstrap resamples"
                );
            }
        }
        self.driver()?;
        self.cir().validate()
    }

    pub fn driver(&self) -> Result<Driver> {
        Ok(match self.driver {
            DriverKind::Stable => Driver::Stable(match self.c_level {
                Some(c) => StableSpec::with_level(self.beta, c)?,
                None => StableSpec::new(self.beta)?,
            }),
            DriverKind::TemperedStable => {
                let c = self
                    .c_level
                    .unwrap_or(TemperedStableSpec::paper_design().c_level);
                Driver::TemperedStable(TemperedStableSpec::new(self.beta, c, self.lambda)?)
            }
        })
    }

    pub fn cir(&self) -> CIRSpec {
        CIRSpec {
            kappa_mr: self.cir_kappa,
            theta_mean: self.cir_theta,
            sigma_vol: self.cir_sigma,
            v0: CirStart::Stationary,
        }
    }

    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let d = match self.driver {
            DriverKind::Stable => "S",
            DriverKind::TemperedStable => "TS",
        };
        match self.beta_mode {
            BetaMode::Known => format!("{d} fixed at true value"),
            BetaMode::Estimated { .. } => format!("{d} estimated"),
            BetaMode::FixedAt(b) => format!("{d} fixed at beta={b}"),
        }
    }

    /// Population value of the transform at each evaluation point.
    pub fn true_values(&self) -> Vec<f64> {
        let cir = self.cir();
        self.u_list
            .iter()
            .map(|&u| cir.stationary_laplace(u))
            .collect()
    }

    /// The path of replication `rep`.
    pub fn simulate(&self, rep: usize) -> Result<PathGrid> {
        let opts = ModelOptions {
            substeps: self.substeps,
            cir_scheme: CirScheme::Exact,
        };
        simulate_model(
            &self.driver()?,
            &self.cir(),
            self.t_span,
            self.m_per_day,
            opts,
            RngStream::new(self.seed, rep as u64),
        )
    }
}

/// The five columns of the published table, at desk scale.
pub fn table_one_columns() -> Vec<MCConfig> {
    let base = MCConfig::default();
    let ts = MCConfig {
        driver: DriverKind::TemperedStable,
        ..base.clone()
    };
    let est = BetaMode::Estimated {
        days: BetaMode::DEFAULT_ESTIMATION_DAYS,
    };
    vec![
        base.clone(),
        ts.clone(),
        MCConfig {
            beta_mode: BetaMode::FixedAt(2.0),
            ..ts.clone()
        },
        MCConfig {
            beta_mode: est,
            ..base
        },
        MCConfig {
            beta_mode: est,
            ..ts
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepResult {
    pub rep: usize,
    pub beta_used: f64,
    pub l_hat: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_se: Option<f64>,
    /// `Σ̂(u,u)/T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hac_var: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inflation: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se: Option<Vec<f64>>,
    /// Smallest eigenvalue of `Σ̂` relative to its trace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hac_min_eig_rel: Option<f64>,
}

/// Runs one replication end to end.
pub fn run_replication(cfg: &MCConfig, rep: usize) -> Result<RepResult> {
    let path = cfg.simulate(rep)?;
    analyze_path(
        cfg,
        &path,
        RngStream::new(cfg.seed, rep as u64).derive(1),
        rep,
    )
}

/// The estimation pipeline of a replication applied to a given path.
pub fn analyze_path(
    cfg: &MCConfig,
    path: &PathGrid,
    aux: RngStream,
    rep: usize,
) -> Result<RepResult> {
    let (beta_used, window) = match cfg.beta_mode {
        BetaMode::Known => (cfg.beta, None),
        BetaMode::FixedAt(b) => (b, None),
        BetaMode::Estimated { days } => {
            let w = path.window(days)?;
            let est = estimate_activity(&w, DEFAULT_P0, DEFAULT_K_FRAC)?;
            (est.beta_hat, Some((w, est)))
        }
    };
    let curve = empirical_laplace(path, beta_used, &cfg.u_list, false)?;
    let mut out = RepResult {
        rep,
        beta_used,
        l_hat: curve.values.clone(),
        beta_se: None,
        hac_var: None,
        inflation: None,
        se: None,
        hac_min_eig_rel: None,
    };
    if !cfg.inference {
        return Ok(out);
    }
    let blocks = block_stats(path, beta_used, &cfg.u_list)?;
    let hac = hac_covariance(&blocks, cfg.hac_kernel, cfg.hac_lags)?;
    let trace = hac.sigma.trace();
    let min_eig = hac.sigma.clone().symmetric_eigen().eigenvalues.min();
    out.hac_min_eig_rel = Some(if trace > 0.0 { min_eig / trace } else { 0.0 });
    out.hac_var = Some(hac.variance_of_estimate(path.t_span));
    if let Some((w, est)) = window {
        let se = bootstrap_se(&w, &est, cfg.bootstrap, aux)?;
        let g = g_hat_curve(path, beta_used, &cfg.u_list)?;
        out.inflation = Some(activity_correction_se(
            &curve,
            &g,
            se,
            path.delta_n,
            &cfg.u_list,
        )?);
        out.beta_se = Some(se);
    }
    out.se = Some(standard_errors(
        &hac,
        path.t_span,
        out.inflation.as_deref(),
    )?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepFailure {
    pub rep: usize,
    pub error: String,
}

/// Aggregates of the inference outputs, per evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceSummary {
    /// Mean over replications of `Σ̂(u,u)/T`.
    pub mean_hac_var: Vec<f64>,
    /// Mean of the activity inflation term (zero unless estimated).
    pub mean_inflation: Vec<f64>,
    /// Cross-replication variance of `L̂(u)`.
    pub mc_var: Vec<f64>,
    /// Share of 95% intervals covering the true value.
    pub coverage: Vec<f64>,
    /// Smallest `λ_min(Σ̂)/tr(Σ̂)` over replications.
    pub min_hac_eig_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCColumn {
    pub label: String,
    pub config: MCConfig,
    pub u_list: Vec<f64>,
    pub true_values: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
    pub failures: Vec<RepFailure>,
    /// Mean and standard deviation of the activity used, when estimated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_used: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inference: Option<InferenceSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reps: Vec<RepResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCSummary {
    pub columns: Vec<MCColumn>,
}

pub fn run_mc(config: &MCConfig, exec: Execution) -> Result<MCSummary> {
    run_study(std::slice::from_ref(config), exec)
}

/// Runs every column; replications of all columns share one task pool.
pub fn run_study(configs: &[MCConfig], exec: Execution) -> Result<MCSummary> {
    ensure!(!configs.is_empty(), Parameter, "no study columns");
    for c in configs {
        c.validate()?;
    }
    let offsets: Vec<usize> = configs
        .iter()
        .scan(0, |acc, c| {
            let start = *acc;
            *acc += c.n_reps;
            Some(start)
        })
        .collect();
    let total = configs.iter().map(|c| c.n_reps).sum();
    let results = exec.map_indexed(total, |task| {
        let col = offsets.partition_point(|&o| o <= task) - 1;
        let rep = task - offsets[col];
        run_replication(&configs[col], rep)
    });
    let mut results = results.into_iter();
    let columns = configs
        .iter()
        .map(|c| summarize(c, results.by_ref().take(c.n_reps).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(MCSummary { columns })
}

fn summarize(cfg: &MCConfig, results: Vec<Result<RepResult>>) -> Result<MCColumn> {
    let label = cfg.label();
    let mut reps = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (rep, r) in results.into_iter().enumerate() {
        match r {
            Ok(x) => reps.push(x),
            Err(e) => {
                log::warn!("{label}: replication {rep} failed: {e}");
                failures.push(RepFailure {
                    rep,
                    error: e.to_string(),
                });
            }
        }
    }
    if reps.is_empty() {
        return Err(Error::Estimation(format!(
            "{label}: all {} replications failed; first error: {}",
            failures.len(),
            failures.first().map_or("none", |f| f.error.as_str())
        )));
    }
    let nu = cfg.u_list.len();
    let truth = cfg.true_values();
    let column = |f: &dyn Fn(&RepResult) -> f64| -> Vec<f64> { reps.iter().map(f).collect() };
    let (mut mean, mut std) = (Vec::with_capacity(nu), Vec::with_capacity(nu));
    for k in 0..nu {
        let (m, s) = mean_std(&column(&|r| r.l_hat[k]));
        mean.push(m);
        std.push(if reps.len() > 1 { s } else { 0.0 });
    }
    let beta_used = matches!(cfg.beta_mode, BetaMode::Estimated { .. }).then(|| {
        let (m, s) = mean_std(&column(&|r| r.beta_used));
        (m, if reps.len() > 1 { s } else { 0.0 })
    });
    let inference = cfg.inference.then(|| {
        let n = reps.len() as f64;
        let avg = |f: &dyn Fn(&RepResult) -> f64| column(f).iter().sum::<f64>() / n;
        InferenceSummary {
            mean_hac_var: (0..nu)
                .map(|k| avg(&|r| r.hac_var.as_ref().map_or(f64::NAN, |v| v[k])))
                .collect(),
            mean_inflation: (0..nu)
                .map(|k| avg(&|r| r.inflation.as_ref().map_or(0.0, |v| v[k])))
                .collect(),
            mc_var: std.iter().map(|s| s * s).collect(),
            coverage: (0..nu)
                .map(|k| {
                    avg(&|r| {
                        let se = r.se.as_ref().map_or(f64::NAN, |v| v[k]);
                        f64::from(u8::from((r.l_hat[k] - truth[k]).abs() <= Z_95 * se))
                    })
                })
                .collect(),
            min_hac_eig_rel: reps
                .iter()
                .filter_map(|r| r.hac_min_eig_rel)
                .fold(f64::INFINITY, f64::min),
        }
    });
    Ok(MCColumn {
        label,
        config: cfg.clone(),
        u_list: cfg.u_list.clone(),
        true_values: truth,
        mean,
        std,
        n_ok: reps.len(),
        n_failed: failures.len(),
        failures,
        beta_used,
        inference,
        reps,
    })
}

type RowValue<'a> = &'a dyn Fn(&MCColumn) -> f64;

impl MCSummary {
    pub fn column(&self, label: &str) -> Option<&MCColumn> {
        self.columns.iter().find(|c| c.label == label)
    }

    /// Table layout: for each `u`, rows `true value`, `mean` and `std`, one
    /// column per configuration.
    pub fn write_table_csv<W: Write>(&self, out: W) -> Result<()> {
        let u = &self.columns[0].u_list;
        ensure!(
            self.columns.iter().all(|c| &c.u_list == u),
            Input,
            "columns are evaluated on different u lists"
        );
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["u".to_string(), "row".to_string()];
        header.extend(self.columns.iter().map(|c| c.label.clone()));
        w.write_record(&header)?;
        for (k, uk) in u.iter().enumerate() {
            let rows: [(&str, RowValue); 3] = [
                ("true value", &|c| c.true_values[k]),
                ("mean", &|c| c.mean[k]),
                ("std", &|c| c.std[k]),
            ];
            for (name, f) in rows {
                let mut rec = vec![format!("{uk:.2}"), name.to_string()];
                rec.extend(self.columns.iter().map(|c| format!("{:.4}", f(c))));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// JSON summary; per-replication records only when `detail` is set.
    pub fn write_json<W: Write>(&self, out: W, detail: bool) -> Result<()> {
        if detail {
            serde_json::to_writer_pretty(out, self)?;
        } else {
            let mut lean = self.clone();
            lean.columns.iter_mut().for_each(|c| c.reps.clear());
            serde_json::to_writer_pretty(out, &lean)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MCConfig {
        MCConfig {
            n_reps: 3,
            t_span: 4.0,
            m_per_day: 20,
            u_list: vec![0.5, 1.25],
            ..MCConfig::default()
        }
    }

    #[test]
    fn beta_mode_strings() {
        for (s, m) in [
            ("known", BetaMode::Known),
            ("estimated", BetaMode::Estimated { days: 252.0 }),
            ("estimated:30", BetaMode::Estimated { days: 30.0 }),
            ("fixed:2", BetaMode::FixedAt(2.0)),
        ] {
            assert_eq!(s.parse::<BetaMode>().unwrap(), m);
            assert_eq!(m.to_string().parse::<BetaMode>().unwrap(), m);
        }
        assert!("fixed".parse::<BetaMode>().is_err());
        assert!("fixed:2.5".parse::<BetaMode>().is_err());
        assert!("guess".parse::<BetaMode>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(small().validate().is_ok());
        assert!(MCConfig {
            n_reps: 0,
            ..small()
        }
        .validate()
        .is_err());
        assert!(MCConfig {
            u_list: vec![1.0, 0.5],
            ..small()
        }
        .validate()
        .is_err());
        assert!(MCConfig {
            u_list: vec![],
            ..small()
        }
        .validate()
        .is_err());
        assert!(MCConfig {
            beta_mode: BetaMode::Estimated { days: 10.0 },
            ..small()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn single_rep_matches_direct_pipeline() {
        let cfg = MCConfig {
            n_reps: 1,
            ..small()
        };
        let s = run_mc(&cfg, Execution::Sequential).unwrap();
        let path = cfg.simulate(0).unwrap();
        let direct = empirical_laplace(&path, 1.7, &cfg.u_list, false).unwrap();
        assert_eq!(s.columns[0].mean, direct.values);
        assert_eq!(s.columns[0].std, vec![0.0, 0.0]);
    }

    #[test]
    fn labels_and_table_layout() {
        let cols: Vec<MCConfig> = table_one_columns()
            .into_iter()
            .map(|c| MCConfig {
                n_reps: 2,
                t_span: 3.0,
                m_per_day: 10,
                beta_mode: match c.beta_mode {
                    BetaMode::Estimated { .. } => BetaMode::Estimated { days: 2.0 },
                    m => m,
                },
                ..c
            })
            .collect();
        let s = run_study(&cols, Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        s.write_table_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            "u,row,S fixed at true value,TS fixed at true value,TS fixed at beta=2,S estimated,TS estimated"
        );
        assert_eq!(text.lines().count(), 1 + 3 * 5);
        assert!(text.contains("0.50,true value,0.6112,0.6112"));
    }

    #[test]
    fn config_roundtrips_through_json() {
        let cfg = MCConfig {
            beta_mode: BetaMode::Estimated { days: 30.0 },
            ..MCConfig::default()
        };
        let back: MCConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<MCConfig>(r#"{"n_rep": 3}"#).is_err());
    }
}
