//! Run reports and their two on-disk forms.
//!
//! `structured` writes one `report.json`. `tabular` writes a directory of
//! CSV tables plus a `config.toml` echo:
//!
//! | file                | columns                                   |
//! |---------------------|-------------------------------------------|
//! | `distribution.csv`  | `n, rho_true, rho_est, sigma_n, fisher`   |
//! | `trace.csv`         | `k, eps, S, G, eps_emp`                   |
//! | `inversion.csv`     | `n, rho_true, rho_inv`                    |
//! | `least_squares.csv` | `n, rho_true, rho_ls`                     |
//! | `dataset.csv`       | `nu, eta, shots, no_clicks`               |
//! | `summary.csv`       | `key, value`                              |
//!
//! Floats are written with 17 significant digits, so both forms read back
//! bit-exactly. Wall time goes to a `timing` sidecar in either form, which
//! keeps the report itself byte-identical across reruns.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Normalization, OutputFormat};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u64,
    pub total_error: f64,
    pub empirical_error: f64,
    pub normalization_drift: f64,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmReport {
    pub normalization: Normalization,
    pub renormalize: bool,
    pub iterations_run: u64,
    pub estimate: Vec<f64>,
    /// `1 / sqrt(n_x F_n)`; infinite where the information vanishes.
    #[serde(with = "nonfinite_vec")]
    pub error_bars: Vec<f64>,
    pub fisher_information: Vec<f64>,
    pub trace: Vec<TracePoint>,
    pub final_fidelity: Option<f64>,
    pub final_total_error: f64,
    pub final_empirical_error: f64,
    pub final_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    /// Grid indices the solve used.
    pub efficiencies: Vec<usize>,
    pub estimate: Vec<f64>,
    /// Entries below 0 or above 1.
    pub nonphysical: Vec<usize>,
    #[serde(with = "nonfinite")]
    pub condition_number: f64,
}

impl InversionReport {
    pub fn max_abs(&self) -> f64 {
        self.estimate.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Everything needed to reproduce and inspect one run.
///
/// Equality ignores `wall_time_seconds`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub ground_truth: Vec<f64>,
    pub captured_mass: f64,
    pub efficiencies: Vec<f64>,
    pub shots: Vec<u64>,
    pub no_clicks: Vec<u64>,
    pub em: Option<EmReport>,
    pub inversion: Option<InversionReport>,
    pub least_squares: Option<InversionReport>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub wall_time_seconds: Option<f64>,
}

impl PartialEq for RunReport {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.seed == other.seed
            && self.ground_truth == other.ground_truth
            && self.captured_mass == other.captured_mass
            && self.efficiencies == other.efficiencies
            && self.shots == other.shots
            && self.no_clicks == other.no_clicks
            && self.em == other.em
            && self.inversion == other.inversion
            && self.least_squares == other.least_squares
            && self.warnings == other.warnings
    }
}

impl RunReport {
    pub fn final_fidelity(&self) -> Option<f64> {
        self.em.as_ref().and_then(|e| e.final_fidelity)
    }

    /// The structured form, exactly as `report.json` holds it.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub const REPORT_JSON: &str = "report.json";
pub const TIMING_JSON: &str = "timing.json";
pub const CONFIG_TOML: &str = "config.toml";
pub const DISTRIBUTION_CSV: &str = "distribution.csv";
pub const TRACE_CSV: &str = "trace.csv";
pub const INVERSION_CSV: &str = "inversion.csv";
pub const LEAST_SQUARES_CSV: &str = "least_squares.csv";
pub const DATASET_CSV: &str = "dataset.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const TIMING_CSV: &str = "timing.csv";

#[derive(Serialize, Deserialize)]
struct Timing {
    wall_time_seconds: f64,
}

/// Writes `report` into directory `dir` (created if missing) and returns
/// the files written.
pub fn write_report(report: &RunReport, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    match format {
        OutputFormat::Structured => write_structured(report, dir),
        OutputFormat::Tabular => write_tabular(report, dir),
    }
}

/// Reads a report written by [`write_report`], detecting the format.
pub fn read_report(dir: &Path) -> Result<RunReport> {
    if dir.join(REPORT_JSON).exists() {
        read_structured(dir)
    } else {
        read_tabular(dir)
    }
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn write_structured(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = vec![write_file(dir.join(REPORT_JSON), &report.to_json())?];
    if let Some(t) = report.wall_time_seconds {
        let timing = serde_json::to_string_pretty(&Timing {
            wall_time_seconds: t,
        })
        .expect("timing always serializes");
        files.push(write_file(dir.join(TIMING_JSON), &timing)?);
    }
    Ok(files)
}

fn read_structured(dir: &Path) -> Result<RunReport> {
    let path = dir.join(REPORT_JSON);
    let mut report =
        RunReport::from_json(&read_file(&path)?).map_err(|e| HarnessError::malformed(&path, e))?;
    let timing = dir.join(TIMING_JSON);
    if timing.exists() {
        let t: Timing = serde_json::from_str(&read_file(&timing)?)
            .map_err(|e| HarnessError::malformed(&timing, e))?;
        report.wall_time_seconds = Some(t.wall_time_seconds);
    }
    Ok(report)
}

pub(crate) fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn join_indices(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Table {
    fn create(path: PathBuf, header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_path(&path).map_err(|e| csv_io(&path, e))?;
        writer.write_record(header).map_err(|e| csv_io(&path, e))?;
        Ok(Self { path, writer })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer
            .write_record(fields)
            .map_err(|e| csv_io(&self.path, e))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.writer
            .flush()
            .map_err(|e| HarnessError::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn csv_io(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::malformed(path, format!("{other:?}")),
    }
}

fn write_tabular(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = vec![write_file(dir.join(CONFIG_TOML), &report.config.to_toml())?];

    let mut t = Table::create(
        dir.join(DISTRIBUTION_CSV),
        &["n", "rho_true", "rho_est", "sigma_n", "fisher"],
    )?;
    for (n, truth) in report.ground_truth.iter().enumerate() {
        let (est, sigma, fisher) = match &report.em {
            Some(em) => (
                fmt_f64(em.estimate[n]),
                fmt_f64(em.error_bars[n]),
                fmt_f64(em.fisher_information[n]),
            ),
            None => Default::default(),
        };
        t.row(&[n.to_string(), fmt_f64(*truth), est, sigma, fisher])?;
    }
    files.push(t.finish()?);

    if let Some(em) = &report.em {
        let mut t = Table::create(dir.join(TRACE_CSV), &["k", "eps", "S", "G", "eps_emp"])?;
        for p in &em.trace {
            t.row(&[
                p.iteration.to_string(),
                fmt_f64(p.total_error),
                fmt_f64(p.normalization_drift),
                fmt_opt(p.fidelity),
                fmt_f64(p.empirical_error),
            ])?;
        }
        files.push(t.finish()?);
    }

    for (inv, file, col) in [
        (&report.inversion, INVERSION_CSV, "rho_inv"),
        (&report.least_squares, LEAST_SQUARES_CSV, "rho_ls"),
    ] {
        if let Some(inv) = inv {
            let mut t = Table::create(dir.join(file), &["n", "rho_true", col])?;
            for (n, x) in inv.estimate.iter().enumerate() {
                t.row(&[n.to_string(), fmt_f64(report.ground_truth[n]), fmt_f64(*x)])?;
            }
            files.push(t.finish()?);
        }
    }

    let mut t = Table::create(dir.join(DATASET_CSV), &["nu", "eta", "shots", "no_clicks"])?;
    for nu in 0..report.efficiencies.len() {
        t.row(&[
            nu.to_string(),
            fmt_f64(report.efficiencies[nu]),
            report.shots[nu].to_string(),
            report.no_clicks[nu].to_string(),
        ])?;
    }
    files.push(t.finish()?);

    let mut t = Table::create(dir.join(SUMMARY_CSV), &["key", "value"])?;
    let mut kv = |k: &str, v: String| t.row(&[k.to_string(), v]);
    kv("seed", report.seed.to_string())?;
    kv("captured_mass", fmt_f64(report.captured_mass))?;
    if let Some(em) = &report.em {
        kv("em_normalization", toml_enum(&em.normalization))?;
        kv("em_renormalize", em.renormalize.to_string())?;
        kv("em_iterations_run", em.iterations_run.to_string())?;
        kv("em_final_fidelity", fmt_opt(em.final_fidelity))?;
        kv("em_final_total_error", fmt_f64(em.final_total_error))?;
        kv(
            "em_final_empirical_error",
            fmt_f64(em.final_empirical_error),
        )?;
        kv("em_final_drift", fmt_f64(em.final_drift))?;
    }
    for (prefix, inv) in [
        ("inversion", &report.inversion),
        ("least_squares", &report.least_squares),
    ] {
        if let Some(inv) = inv {
            kv(
                &format!("{prefix}_efficiencies"),
                join_indices(&inv.efficiencies),
            )?;
            kv(
                &format!("{prefix}_nonphysical"),
                join_indices(&inv.nonphysical),
            )?;
            kv(
                &format!("{prefix}_condition_number"),
                fmt_f64(inv.condition_number),
            )?;
        }
    }
    for w in &report.warnings {
        kv("warning", w.clone())?;
    }
    files.push(t.finish()?);

    if let Some(wall) = report.wall_time_seconds {
        let mut t = Table::create(dir.join(TIMING_CSV), &["key", "value"])?;
        t.row(&["wall_time_seconds".to_string(), fmt_f64(wall)])?;
        files.push(t.finish()?);
    }
    Ok(files)
}

fn toml_enum<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn from_enum_name<T: for<'de> Deserialize<'de>>(path: &Path, s: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|e| HarnessError::malformed(path, e))
}

/// Rows of a CSV file after checking its header.
fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| csv_io(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(HarnessError::malformed(
            path,
            format!("expected header {header:?}, found {found:?}"),
        ));
    }
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| csv_io(path, e))
        })
        .collect()
}

fn parse<T: std::str::FromStr>(path: &Path, s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e| HarnessError::malformed(path, format!("{s:?}: {e}")))
}

fn parse_opt(path: &Path, s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse(path, s).map(Some)
    }
}

fn parse_indices(path: &Path, s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|x| parse(path, x)).collect()
}

fn read_tabular(dir: &Path) -> Result<RunReport> {
    let cfg_path = dir.join(CONFIG_TOML);
    let config: ExperimentConfig = toml::from_str(&read_file(&cfg_path)?)
        .map_err(|e| HarnessError::malformed(&cfg_path, e))?;

    let path = dir.join(SUMMARY_CSV);
    let mut summary = Vec::new();
    for row in read_table(&path, &["key", "value"])? {
        summary.push((row[0].clone(), row[1].clone()));
    }
    let get = |k: &str| {
        summary
            .iter()
            .find(|(key, _)| key == k)
            .map(|(_, v)| v.as_str())
    };
    let need = |k: &str| {
        get(k).ok_or_else(|| HarnessError::malformed(&path, format!("missing summary key {k:?}")))
    };
    let warnings = summary
        .iter()
        .filter(|(k, _)| k == "warning")
        .map(|(_, v)| v.clone())
        .collect();

    let dist_path = dir.join(DISTRIBUTION_CSV);
    let dist = read_table(
        &dist_path,
        &["n", "rho_true", "rho_est", "sigma_n", "fisher"],
    )?;
    let mut ground_truth = Vec::with_capacity(dist.len());
    for row in &dist {
        ground_truth.push(parse(&dist_path, &row[1])?);
    }

    let em = match get("em_iterations_run") {
        None => None,
        Some(iters) => {
            let (mut estimate, mut error_bars, mut fisher) = (Vec::new(), Vec::new(), Vec::new());
            for row in &dist {
                estimate.push(parse(&dist_path, &row[2])?);
                error_bars.push(parse(&dist_path, &row[3])?);
                fisher.push(parse(&dist_path, &row[4])?);
            }
            let trace_path = dir.join(TRACE_CSV);
            let mut trace = Vec::new();
            for row in read_table(&trace_path, &["k", "eps", "S", "G", "eps_emp"])? {
                trace.push(TracePoint {
                    iteration: parse(&trace_path, &row[0])?,
                    total_error: parse(&trace_path, &row[1])?,
                    normalization_drift: parse(&trace_path, &row[2])?,
                    fidelity: parse_opt(&trace_path, &row[3])?,
                    empirical_error: parse(&trace_path, &row[4])?,
                });
            }
            Some(EmReport {
                normalization: from_enum_name(&path, need("em_normalization")?)?,
                renormalize: parse(&path, need("em_renormalize")?)?,
                iterations_run: parse(&path, iters)?,
                estimate,
                error_bars,
                fisher_information: fisher,
                trace,
                final_fidelity: parse_opt(&path, need("em_final_fidelity")?)?,
                final_total_error: parse(&path, need("em_final_total_error")?)?,
                final_empirical_error: parse(&path, need("em_final_empirical_error")?)?,
                final_drift: parse(&path, need("em_final_drift")?)?,
            })
        }
    };

    let read_inversion = |prefix: &str, file: &str, col: &str| -> Result<Option<InversionReport>> {
        let Some(eff) = get(&format!("{prefix}_efficiencies")) else {
            return Ok(None);
        };
        let inv_path = dir.join(file);
        let mut estimate = Vec::new();
        for row in read_table(&inv_path, &["n", "rho_true", col])? {
            estimate.push(parse(&inv_path, &row[2])?);
        }
        Ok(Some(InversionReport {
            efficiencies: parse_indices(&path, eff)?,
            estimate,
            nonphysical: parse_indices(&path, need(&format!("{prefix}_nonphysical"))?)?,
            condition_number: parse(&path, need(&format!("{prefix}_condition_number"))?)?,
        }))
    };
    let inversion = read_inversion("inversion", INVERSION_CSV, "rho_inv")?;
    let least_squares = read_inversion("least_squares", LEAST_SQUARES_CSV, "rho_ls")?;

    let ds_path = dir.join(DATASET_CSV);
    let (mut efficiencies, mut shots, mut no_clicks) = (Vec::new(), Vec::new(), Vec::new());
    for row in read_table(&ds_path, &["nu", "eta", "shots", "no_clicks"])? {
        efficiencies.push(parse(&ds_path, &row[1])?);
        shots.push(parse(&ds_path, &row[2])?);
        no_clicks.push(parse(&ds_path, &row[3])?);
    }

    let timing_path = dir.join(TIMING_CSV);
    let wall_time_seconds = if timing_path.exists() {
        let rows = read_table(&timing_path, &["key", "value"])?;
        match rows.iter().find(|r| r[0] == "wall_time_seconds") {
            Some(r) => Some(parse(&timing_path, &r[1])?),
            None => None,
        }
    } else {
        None
    };

    Ok(RunReport {
        config,
        seed: parse(&path, need("seed")?)?,
        ground_truth,
        captured_mass: parse(&path, need("captured_mass")?)?,
        efficiencies,
        shots,
        no_clicks,
        em,
        inversion,
        least_squares,
        warnings,
        wall_time_seconds,
    })
}

/// `f64` that may be infinite or NaN: finite values stay JSON numbers,
/// the rest become the strings `"inf"`, `"-inf"`, `"nan"`.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(super) enum Repr {
        Num(f64),
        Text(String),
    }

    pub(super) fn to_f64<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::fmt_f64(*x))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        to_f64(Repr::deserialize(d)?)
    }
}

mod nonfinite_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::nonfinite::{to_f64, Repr};

    struct Item(f64);

    impl serde::Serialize for Item {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::nonfinite::serialize(&self.0, s)
        }
    }

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&Item(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(to_f64)
            .collect()
    }
}
