//! Physiological time series handling: filtering, beat detection, windowed
//! statistics, PERCLOS and assembly of the model-ready feature table.

mod beats;
mod dataset;
mod filter;
mod window;

pub use beats::{detect_beats, detect_cycles};
pub use dataset::{
    build_dataset, condition_channels, BuiltDataset, FeaturizeConfig, CH_BREATHING, CH_ECG,
    CH_HEART_RATE, CH_INTERTQ, CH_OCCLUSION, CH_POSTURE, CH_SWA,
};
pub use filter::{biquad_filter, biquad_response, moving_average, FilterKind};
pub use window::{
    perclos, perclos_on, windowed_stat, windowed_stat_on, Grid, StatSource, WindowStat, Windowed,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// The eleven model features, in canonical column order.
pub const FEATURE_NAMES: [&str; 11] = [
    "heart_rate_variability",
    "hr_avg60",
    "br_avg60",
    "br_std60",
    "hr_std60",
    "heart rate",
    "breathing",
    "ECG",
    "intertq",
    "swa",
    "posture",
];

pub const F_HRV: usize = 0;
pub const F_HR_AVG60: usize = 1;
pub const F_BR_AVG60: usize = 2;
pub const F_BR_STD60: usize = 3;
pub const F_HR_STD60: usize = 4;
pub const F_HEART_RATE: usize = 5;
pub const F_BREATHING: usize = 6;
pub const F_ECG: usize = 7;
pub const F_INTERTQ: usize = 8;
pub const F_SWA: usize = 9;
pub const F_POSTURE: usize = 10;

/// Errors from signal conditioning and feature extraction.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalError {
    EmptyInput(&'static str),
    NonFiniteSample { series: String, index: usize },
    InvalidRate { rate_hz: f64 },
    /// Biquad cutoff must sit strictly inside (0, rate/2).
    CutoffOutOfRange { cutoff_hz: f64, nyquist_hz: f64 },
    InvalidParameter(String),
    OcclusionOutOfRange { index: usize, value: f64 },
    MissingChannel(String),
    /// Not enough data to emit a single valid windowed tick.
    ShortSpan { need_s: f64, have_s: f64 },
}

impl core::fmt::Display for SignalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SignalError::EmptyInput(what) => write!(f, "empty input: {what}"),
            SignalError::NonFiniteSample { series, index } => {
                write!(f, "non-finite sample in '{series}' at index {index}")
            }
            SignalError::InvalidRate { rate_hz } => {
                write!(f, "sample rate must be finite and positive, got {rate_hz}")
            }
            SignalError::CutoffOutOfRange { cutoff_hz, nyquist_hz } => write!(
                f,
                "cutoff {cutoff_hz} Hz outside (0, {nyquist_hz}) Hz"
            ),
            SignalError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            SignalError::OcclusionOutOfRange { index, value } => {
                write!(f, "occlusion sample {index} = {value} outside [0, 100]")
            }
            SignalError::MissingChannel(name) => write!(f, "missing channel '{name}'"),
            SignalError::ShortSpan { need_s, have_s } => {
                write!(f, "need at least {need_s} s of data, have {have_s} s")
            }
        }
    }
}

impl core::error::Error for SignalError {}

/// Uniformly sampled channel. Sample `i` sits at `t0_s + i / rate_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    rate_hz: f64,
    t0_s: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        name: impl Into<String>,
        rate_hz: f64,
        t0_s: f64,
        values: Vec<f64>,
    ) -> Result<Self, SignalError> {
        let name = name.into();
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(SignalError::InvalidRate { rate_hz });
        }
        if !t0_s.is_finite() {
            return Err(SignalError::InvalidParameter(format!(
                "start time of '{name}' is not finite"
            )));
        }
        if values.is_empty() {
            return Err(SignalError::EmptyInput("time series values"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFiniteSample { series: name, index });
        }
        Ok(Self { name, rate_hz, t0_s, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0_s + index as f64 / self.rate_hz
    }

    pub fn start_s(&self) -> f64 {
        self.t0_s
    }

    pub fn end_s(&self) -> f64 {
        self.time_at(self.values.len() - 1)
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s() - self.start_s()
    }
}

/// Detected beat (R-peak) times in seconds, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatTrain {
    beat_times_s: Vec<f64>,
    degenerate: bool,
}

impl BeatTrain {
    /// `degenerate` marks trains with fewer than two beats in some 60 s span.
    pub fn new(beat_times_s: Vec<f64>, degenerate: bool) -> Result<Self, SignalError> {
        for w in beat_times_s.windows(2) {
            if !(w[1] > w[0]) {
                return Err(SignalError::InvalidParameter(String::from(
                    "beat times must be strictly increasing",
                )));
            }
        }
        if beat_times_s.iter().any(|t| !t.is_finite()) {
            return Err(SignalError::InvalidParameter(String::from(
                "beat times must be finite",
            )));
        }
        Ok(Self { beat_times_s, degenerate })
    }

    pub fn beat_times_s(&self) -> &[f64] {
        &self.beat_times_s
    }

    pub fn len(&self) -> usize {
        self.beat_times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beat_times_s.is_empty()
    }

    pub fn degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Feature table: one row per 1 Hz tick, eleven feature columns plus the
/// PERCLOS target. Stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    timestamps_s: Vec<f64>,
    subjects: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        y: Vec<f64>,
        timestamps_s: Vec<f64>,
        subjects: Option<Vec<String>>,
    ) -> Result<Self, SignalError> {
        if feature_names.len() != columns.len() {
            return Err(SignalError::InvalidParameter(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                columns.len()
            )));
        }
        let n = y.len();
        if timestamps_s.len() != n {
            return Err(SignalError::InvalidParameter(String::from(
                "timestamps and target length differ",
            )));
        }
        if let Some(s) = &subjects {
            if s.len() != n {
                return Err(SignalError::InvalidParameter(String::from(
                    "subject labels and target length differ",
                )));
            }
        }
        for (name, col) in feature_names.iter().zip(&columns) {
            if col.len() != n {
                return Err(SignalError::InvalidParameter(format!(
                    "column '{name}' length {} != {n}",
                    col.len()
                )));
            }
            if let Some(index) = col.iter().position(|v| !v.is_finite()) {
                return Err(SignalError::NonFiniteSample { series: name.clone(), index });
            }
        }
        for (index, v) in y.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 || *v > 100.0 {
                return Err(SignalError::OcclusionOutOfRange { index, value: *v });
            }
        }
        Ok(Self { feature_names, columns, y, timestamps_s, subjects })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn timestamps_s(&self) -> &[f64] {
        &self.timestamps_s
    }

    pub fn subjects(&self) -> Option<&[String]> {
        self.subjects.as_deref()
    }

    /// Copy row `i` into `buf` (resized to m).
    pub fn row_into(&self, i: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.columns.iter().map(|c| c[i]));
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// New dataset keeping only `features` (indices into the column list, in
    /// the given order).
    pub fn select_features(&self, features: &[usize]) -> Dataset {
        Dataset {
            feature_names: features.iter().map(|&j| self.feature_names[j].clone()).collect(),
            columns: features.iter().map(|&j| self.columns[j].clone()).collect(),
            y: self.y.clone(),
            timestamps_s: self.timestamps_s.clone(),
            subjects: self.subjects.clone(),
        }
    }

    /// New dataset keeping only `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            y: rows.iter().map(|&r| self.y[r]).collect(),
            timestamps_s: rows.iter().map(|&r| self.timestamps_s[r]).collect(),
            subjects: self
                .subjects
                .as_ref()
                .map(|s| rows.iter().map(|&r| s[r].clone()).collect()),
        }
    }

    /// Concatenate datasets row-wise. Feature name lists must match; subject
    /// labels survive only if every part carries them.
    pub fn concat(parts: &[Dataset]) -> Result<Dataset, SignalError> {
        let first = parts.first().ok_or(SignalError::EmptyInput("dataset list"))?;
        let mut out = first.clone();
        for part in &parts[1..] {
            if part.feature_names != first.feature_names {
                return Err(SignalError::InvalidParameter(String::from(
                    "feature name mismatch between dataset parts",
                )));
            }
            for (dst, src) in out.columns.iter_mut().zip(&part.columns) {
                dst.extend_from_slice(src);
            }
            out.y.extend_from_slice(&part.y);
            out.timestamps_s.extend_from_slice(&part.timestamps_s);
            out.subjects = match (out.subjects.take(), &part.subjects) {
                (Some(mut a), Some(b)) => {
                    a.extend_from_slice(b);
                    Some(a)
                }
                _ => None,
            };
        }
        Ok(out)
    }
}
