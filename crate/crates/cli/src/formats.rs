//! File formats: channel CSVs with a subject manifest, the feature-table
//! CSV, model files, explanation and report exports, and the run manifest
//! written beside every command's primary output.
//!
//! CSV values are written with Rust's shortest round-trip float formatting,
//! so re-reading a file reproduces the exact in-memory numbers. None of the
//! schemas need quoting: no field ever contains a comma.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fatigue_forge_core::eval::{CvReport, CurvePoint, Metrics};
use fatigue_forge_core::gbt::{load_model, save_model, Ensemble};
use fatigue_forge_core::shap::{DependenceData, Explanation, ForceRecord, ImportanceRanking};
use fatigue_forge_core::signal::{Dataset, SignalError, TimeSeries};
use fatigue_forge_core::synth::SubjectRecording;

use crate::error::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn schema(path: &Path, line: usize, msg: &str) -> CliError {
    CliError::Validation(format!("{}:{line}: {msg}", path.display()))
}

fn parse_field(path: &Path, line: usize, name: &str, raw: &str) -> Result<f64, CliError> {
    raw.parse().map_err(|_| {
        CliError::Validation(format!(
            "{}:{line}: field `{name}`: invalid number `{raw}`",
            path.display()
        ))
    })
}

// ---- channel CSV + subject manifest ------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelEntry {
    pub name: String,
    pub path: String,
    pub rate_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubjectManifest {
    pub subject: String,
    pub channels: Vec<ChannelEntry>,
}

pub const SUBJECT_MANIFEST: &str = "manifest.json";

fn channel_file_name(channel: &str) -> String {
    let slug: String = channel
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    format!("{slug}.csv")
}

pub fn write_channel_csv(path: &Path, series: &TimeSeries) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "t_s,value").map_err(io)?;
    for i in 0..series.len() {
        writeln!(w, "{},{}", series.time_at(i), series.values()[i]).map_err(io)?;
    }
    finish(w, path)
}

pub fn read_channel_csv(path: &Path, name: &str, rate_hz: f64) -> Result<TimeSeries, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "t_s,value" => {}
        _ => return Err(schema(path, 1, "expected header `t_s,value`")),
    }
    let mut t0 = 0.0;
    let mut last_t = 0.0;
    let mut values = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let Some((ts, value)) = line.split_once(',') else {
            return Err(schema(path, i + 1, "expected two fields"));
        };
        let t = parse_field(path, i + 1, "t_s", ts)?;
        if values.is_empty() {
            t0 = t;
        }
        last_t = t;
        values.push(parse_field(path, i + 1, "value", value)?);
    }
    if values.is_empty() {
        return Err(schema(path, 1, "channel has no samples"));
    }
    let expect_last = t0 + (values.len() - 1) as f64 / rate_hz;
    if (last_t - expect_last).abs() > 0.5 / rate_hz {
        return Err(CliError::Validation(format!(
            "{}: timestamps disagree with rate_hz = {rate_hz} from the manifest",
            path.display()
        )));
    }
    TimeSeries::new(name, rate_hz, t0, values).map_err(CliError::from)
}

/// Write one subject's channels, manifest and ground truth under `dir`.
pub fn write_subject(dir: &Path, rec: &SubjectRecording) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut entries = Vec::with_capacity(rec.channels.len());
    for ch in &rec.channels {
        let file = channel_file_name(ch.name());
        write_channel_csv(&dir.join(&file), ch)?;
        entries.push(ChannelEntry {
            name: ch.name().to_string(),
            path: file,
            rate_hz: ch.rate_hz(),
        });
    }
    let manifest = SubjectManifest { subject: rec.subject.clone(), channels: entries };
    write_json_pretty(&dir.join(SUBJECT_MANIFEST), &manifest)?;

    let truth = dir.join("truth.csv");
    let mut w = create(&truth)?;
    let io = |e| CliError::io(&truth, e);
    writeln!(w, "t_s,latent,planted").map_err(io)?;
    for i in 0..rec.latent.len() {
        writeln!(
            w,
            "{},{},{}",
            rec.latent.time_at(i),
            rec.latent.values()[i],
            rec.planted.values()[i]
        )
        .map_err(io)?;
    }
    finish(w, &truth)
}

/// Read a subject directory back into named channels.
pub fn read_subject(dir: &Path) -> Result<(String, Vec<TimeSeries>), CliError> {
    let manifest_path = dir.join(SUBJECT_MANIFEST);
    let text = fs::read_to_string(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    let manifest: SubjectManifest = serde_json::from_str(&text).map_err(|e| {
        CliError::Validation(format!("{}: {e}", manifest_path.display()))
    })?;
    let mut channels = Vec::with_capacity(manifest.channels.len());
    for entry in &manifest.channels {
        if !(entry.rate_hz.is_finite() && entry.rate_hz > 0.0) {
            return Err(CliError::Validation(format!(
                "{}: channel `{}`: rate_hz must be positive, got {}",
                manifest_path.display(),
                entry.name,
                entry.rate_hz
            )));
        }
        channels.push(read_channel_csv(&dir.join(&entry.path), &entry.name, entry.rate_hz)?);
    }
    Ok((manifest.subject, channels))
}

// ---- feature table ------------------------------------------------------

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    write!(w, "t_s,subject").map_err(io)?;
    for name in data.feature_names() {
        write!(w, ",{name}").map_err(io)?;
    }
    writeln!(w, ",perclos").map_err(io)?;
    for i in 0..data.n() {
        write!(w, "{}", data.timestamps_s()[i]).map_err(io)?;
        match data.subjects() {
            Some(subjects) => write!(w, ",{}", subjects[i]).map_err(io)?,
            None => write!(w, ",").map_err(io)?,
        }
        for col in data.columns() {
            write!(w, ",{}", col[i]).map_err(io)?;
        }
        writeln!(w, ",{}", data.y()[i]).map_err(io)?;
    }
    finish(w, path)
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(schema(path, 1, "empty file"));
    };
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 4 || cols[0] != "t_s" || cols[1] != "subject" || cols[cols.len() - 1] != "perclos"
    {
        return Err(schema(
            path,
            1,
            "expected header `t_s,subject,<feature names>,perclos`",
        ));
    }
    let names: Vec<String> = cols[2..cols.len() - 1].iter().map(|s| s.to_string()).collect();
    let m = names.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut timestamps = Vec::new();
    let mut subjects: Vec<String> = Vec::new();
    let mut y = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != m + 3 {
            return Err(schema(
                path,
                i + 1,
                &format!("expected {} fields, got {}", m + 3, fields.len()),
            ));
        }
        timestamps.push(parse_field(path, i + 1, "t_s", fields[0])?);
        subjects.push(fields[1].to_string());
        for (j, raw) in fields[2..2 + m].iter().enumerate() {
            columns[j].push(parse_field(path, i + 1, &names[j], raw)?);
        }
        y.push(parse_field(path, i + 1, "perclos", fields[m + 2])?);
    }
    let any_subject = subjects.iter().any(|s| !s.is_empty());
    let all_subject = subjects.iter().all(|s| !s.is_empty());
    if any_subject && !all_subject {
        return Err(CliError::Validation(format!(
            "{}: some rows have a subject and some do not",
            path.display()
        )));
    }
    let subjects = any_subject.then_some(subjects);
    Dataset::new(names, columns, y, timestamps, subjects).map_err(|e| match e {
        SignalError::EmptyInput(_) => {
            CliError::Validation(format!("{}: no data rows", path.display()))
        }
        other => CliError::Validation(format!("{}: {other}", path.display())),
    })
}

// ---- model -------------------------------------------------------------

pub fn write_model(path: &Path, model: &Ensemble) -> Result<(), CliError> {
    let bytes = save_model(model)?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_model(path: &Path) -> Result<Ensemble, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    load_model(&bytes).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

// ---- predictions and explanations --------------------------------------

pub fn write_predictions_csv(path: &Path, predictions: &[f64]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "row,prediction").map_err(io)?;
    for (i, p) in predictions.iter().enumerate() {
        writeln!(w, "{i},{p}").map_err(io)?;
    }
    finish(w, path)
}

pub fn write_explanations_csv(
    path: &Path,
    explanations: &[Explanation],
    feature_names: &[String],
) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    write!(w, "row,prediction,base").map_err(io)?;
    for name in feature_names {
        write!(w, ",phi_{name}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (i, e) in explanations.iter().enumerate() {
        let row = e.row_index.unwrap_or(i);
        write!(w, "{row},{},{}", e.prediction, e.base_value).map_err(io)?;
        for phi in &e.phi {
            write!(w, ",{phi}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    finish(w, path)
}

/// Reads an explanations CSV back; feature names come from the `phi_`
/// column headers, `row_index` from the row column.
pub fn read_explanations_csv(path: &Path) -> Result<(Vec<String>, Vec<Explanation>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(schema(path, 1, "empty file"));
    };
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 4 || cols[0] != "row" || cols[1] != "prediction" || cols[2] != "base" {
        return Err(schema(path, 1, "expected header `row,prediction,base,phi_<feature>...`"));
    }
    let mut names = Vec::with_capacity(cols.len() - 3);
    for (j, col) in cols[3..].iter().enumerate() {
        match col.strip_prefix("phi_") {
            Some(name) if !name.is_empty() => names.push(name.to_string()),
            _ => {
                return Err(schema(
                    path,
                    1,
                    &format!("column {}: expected a `phi_<feature>` header, got `{col}`", j + 4),
                ))
            }
        }
    }
    let m = names.len();
    let mut explanations = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != m + 3 {
            return Err(schema(
                path,
                i + 1,
                &format!("expected {} fields, got {}", m + 3, fields.len()),
            ));
        }
        let row: usize = fields[0].parse().map_err(|_| {
            CliError::Validation(format!(
                "{}:{}: field `row`: invalid index `{}`",
                path.display(),
                i + 1,
                fields[0]
            ))
        })?;
        let prediction = parse_field(path, i + 1, "prediction", fields[1])?;
        let base_value = parse_field(path, i + 1, "base", fields[2])?;
        let mut phi = Vec::with_capacity(m);
        for (j, raw) in fields[3..].iter().enumerate() {
            phi.push(parse_field(path, i + 1, &format!("phi_{}", names[j]), raw)?);
        }
        explanations.push(Explanation { row_index: Some(row), base_value, phi, prediction });
    }
    if explanations.is_empty() {
        return Err(schema(path, 1, "no explanation rows"));
    }
    Ok((names, explanations))
}

pub fn write_importance_csv(path: &Path, ranking: &ImportanceRanking) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "rank,feature,global_impact").map_err(io)?;
    for (rank, entry) in ranking.entries.iter().enumerate() {
        writeln!(w, "{},{},{}", rank + 1, entry.feature_name, entry.global_impact).map_err(io)?;
    }
    finish(w, path)
}

/// Feature names from an importance CSV, in file (= rank) order.
pub fn read_importance_csv(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "rank,feature,global_impact" => {}
        _ => return Err(schema(path, 1, "expected header `rank,feature,global_impact`")),
    }
    let mut names = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(schema(path, i + 1, "expected three fields"));
        }
        names.push(fields[1].to_string());
    }
    if names.is_empty() {
        return Err(schema(path, 1, "no ranked features"));
    }
    Ok(names)
}

/// Dependence export: raw scatter next to binned means, two files.
pub fn write_dependence_csvs(
    points_path: &Path,
    bins_path: &Path,
    data: &DependenceData,
) -> Result<(), CliError> {
    let mut w = create(points_path)?;
    let io = |e| CliError::io(points_path, e);
    writeln!(w, "feature_value,shap_value").map_err(io)?;
    for p in &data.points {
        writeln!(w, "{},{}", p.feature_value, p.shap_value).map_err(io)?;
    }
    finish(w, points_path)?;

    let mut w = create(bins_path)?;
    let io = |e| CliError::io(bins_path, e);
    writeln!(w, "bin_center,mean_shap").map_err(io)?;
    for b in &data.binned_means {
        writeln!(w, "{},{}", b.bin_center, b.mean_shap).map_err(io)?;
    }
    finish(w, bins_path)
}

// ---- evaluation reports -------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct BaselinesDoc {
    pub ols: Metrics,
    pub single_tree: Metrics,
    pub random_forest: Metrics,
}

#[derive(Serialize)]
pub struct ReportDoc<'a> {
    #[serde(flatten)]
    pub report: &'a CvReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baselines: Option<BaselinesDoc>,
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Validation(format!("serializing {}: {e}", path.display())))?;
    bytes.push(b'\n');
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_force_json(path: &Path, record: &ForceRecord) -> Result<(), CliError> {
    write_json_pretty(path, record)
}

pub fn write_curve_csv(path: &Path, points: &[CurvePoint]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "n_features,rmse_mean,rmse_std,mae_mean,mae_std,adjr2_mean,adjr2_std")
        .map_err(io)?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            p.n_features, p.rmse_mean, p.rmse_std, p.mae_mean, p.mae_std, p.adjr2_mean,
            p.adjr2_std
        )
        .map_err(io)?;
    }
    finish(w, path)
}

// ---- run manifest -------------------------------------------------------

/// Provenance sidecar: what ran, on what, with which seeds, for how long.
/// Written beside the primary output as `<stem>.run.json` (or `run.json`
/// inside a directory output). Wall time makes this file exempt from
/// byte-for-byte reproducibility; every primary output is covered by it.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub package_version: String,
    pub model_format_version: u32,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub threads: usize,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, threads: usize) -> Self {
        Self {
            command: command.to_string(),
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            model_format_version: fatigue_forge_core::gbt::MODEL_FORMAT_VERSION,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            threads,
            wall_time_s: 0.0,
            notes: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }
}

pub fn run_manifest_path(primary_output: &Path) -> PathBuf {
    if primary_output.is_dir() {
        return primary_output.join("run.json");
    }
    match primary_output.file_stem() {
        Some(stem) => {
            let mut name = stem.to_os_string();
            name.push(".run.json");
            primary_output.with_file_name(name)
        }
        None => primary_output.with_file_name("run.json"),
    }
}

pub fn write_run_manifest(primary_output: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    write_json_pretty(&run_manifest_path(primary_output), manifest)
}
