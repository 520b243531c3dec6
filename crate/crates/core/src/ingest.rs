//! Reading observation files into a [`PathGrid`].
//!
//! Accepted layouts, comma separated, with an optional header row and `#`
//! comment lines:
//!
//! - one column of levels;
//! - two columns `timestamp, level` with numeric timestamps, which are
//!   checked for equidistance (1% relative tolerance around the median
//!   spacing) and then dropped in favour of positional indexing;
//! - either of the above holding increments instead of levels (returns
//!   mode), rebuilt into levels by cumulative summation from 0.
//!
//! The mesh comes from the spec, or else from a JSON sidecar next to the
//! file (`path.json` for `path.csv`) as written by the simulator.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::path::PathGrid;
use crate::sim::SimulationMeta;

/// Relative tolerance on timestamp spacing.
pub const SPACING_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IngestFormat {
    /// One column: levels; two columns: timestamp and level.
    #[default]
    Auto,
    Levels,
    Timestamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSpec {
    pub input: PathBuf,
    pub format: IngestFormat,
    /// The values are increments rather than levels.
    pub returns: bool,
    /// Mesh as a fraction of a day; `None` reads the sidecar.
    pub delta_n: Option<f64>,
    /// Take logs of the levels before use.
    pub log_transform: bool,
    /// Fail, rather than warn, on irregular timestamps.
    pub strict: bool,
}

impl IngestSpec {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            format: IngestFormat::Auto,
            returns: false,
            delta_n: None,
            log_transform: false,
            strict: false,
        }
    }

    pub fn sidecar_path(&self) -> PathBuf {
        self.input.with_extension("json")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub path: PathGrid,
    pub warnings: Vec<String>,
}

pub fn ingest(spec: &IngestSpec) -> Result<Ingested> {
    let delta_n = match spec.delta_n {
        Some(d) => d,
        None => {
            let side = spec.sidecar_path();
            ensure!(
                side.exists(),
                Parameter,
                "no mesh given and no sidecar at {}; pass delta_n explicitly",
                side.display()
            );
            SimulationMeta::load(&side)?.delta_n
        }
    };
    let file = std::fs::File::open(&spec.input)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", spec.input.display())))?;
    ingest_reader(
        std::io::BufReader::new(file),
        &spec.input.display().to_string(),
        spec,
        delta_n,
    )
}

/// As [`ingest`], reading from `reader`; `name` labels error messages.
pub fn ingest_reader<R: Read>(
    reader: R,
    name: &str,
    spec: &IngestSpec,
    delta_n: f64,
) -> Result<Ingested> {
    ensure!(
        delta_n > 0.0 && delta_n.is_finite(),
        Parameter,
        "delta_n must be positive, got {delta_n}"
    );
    ensure!(
        !(spec.returns && spec.log_transform),
        Parameter,
        "the log transform applies to levels, not to returns"
    );
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: name.to_string(),
        line,
        msg,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut width = None;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let fields = match parsed {
            Ok(f) => f,
            Err(_) if rows.is_empty() && width.is_none() => {
                width = Some(rec.len());
                continue;
            }
            Err(_) => {
                return Err(parse_err(
                    line,
                    format!(
                        "cannot parse '{}' as numbers",
                        rec.iter().collect::<Vec<_>>().join(",")
                    ),
                ))
            }
        };
        let w = *width.get_or_insert(fields.len());
        if fields.len() != w {
            return Err(parse_err(
                line,
                format!("expected {w} fields, found {}", fields.len()),
            ));
        }
        rows.push((line, fields));
    }
    ensure!(!rows.is_empty(), Input, "{name}: no data rows");
    let w = width.unwrap_or(1);
    let timestamped = match (spec.format, w) {
        (IngestFormat::Auto, 1) | (IngestFormat::Levels, 1) => false,
        (IngestFormat::Auto, 2) | (IngestFormat::Timestamped, 2) => true,
        (f, w) => {
            return Err(Error::Input(format!(
                "{name}: {w} columns do not fit the {f:?} layout"
            )))
        }
    };

    let mut warnings = Vec::new();
    if timestamped {
        check_spacing(&rows, name, spec.strict, &mut warnings)?;
    }
    let col = usize::from(timestamped);
    let mut values = Vec::with_capacity(rows.len());
    for (line, f) in &rows {
        let v = f[col];
        if !v.is_finite() {
            return Err(parse_err(*line, format!("non-finite value {v}")));
        }
        if spec.log_transform {
            if v <= 0.0 {
                return Err(parse_err(*line, format!("cannot take the log of {v}")));
            }
            values.push(v.ln());
        } else {
            values.push(v);
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let path = if spec.returns {
        PathGrid::from_increments(0.0, &values, delta_n)?
    } else {
        PathGrid::new(values, delta_n)?
    };
    Ok(Ingested { path, warnings })
}

fn check_spacing(
    rows: &[(usize, Vec<f64>)],
    name: &str,
    strict: bool,
    warnings: &mut Vec<String>,
) -> Result<()> {
    if rows.len() < 2 {
        return Ok(());
    }
    let gaps: Vec<f64> = rows.windows(2).map(|p| p[1].1[0] - p[0].1[0]).collect();
    let mut sorted = gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    ensure!(median > 0.0, Input, "{name}: timestamps are not increasing");
    let bad: Vec<usize> = gaps
        .iter()
        .enumerate()
        .filter(|(_, g)| ((**g - median) / median).abs() > SPACING_TOLERANCE)
        .map(|(i, _)| i + 1)
        .collect();
    if let Some(&first) = bad.first() {
        let (line, gap) = (rows[first].0, rows[first].1[0] - rows[first - 1].1[0]);
        let msg = format!(
            "{name}: {} irregular timestamp spacing(s), first at line {line} (gap {gap} vs typical {median}); using positional indexing",
            bad.len()
        );
        if strict {
            return Err(Error::Parse {
                path: name.to_string(),
                line,
                msg: format!("gap {gap} differs from typical spacing {median} by more than 1%"),
            });
        }
        warnings.push(msg);
    }
    Ok(())
}

/// Writes `path` as CSV with its sidecar next to it.
pub fn save_with_sidecar(
    path: &PathGrid,
    meta: &SimulationMeta,
    out: impl AsRef<Path>,
) -> Result<()> {
    let out = out.as_ref();
    path.save_csv(out)?;
    meta.save(out.with_extension("json"))
}
