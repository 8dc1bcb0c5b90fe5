//! Trailing-window statistics on a 1 Hz tick grid, and PERCLOS.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{BeatTrain, SignalError, TimeSeries};
use crate::math;

/// Boundary slack for tick/sample alignment: sample times are derived as
/// `t0 + i / rate`, which can land an ulp away from the nominal instant.
const T_EPS: f64 = 1e-9;

pub const DEFAULT_WINDOW_S: f64 = 60.0;
pub const DEFAULT_WARMUP_S: f64 = 5.0;
const PERCLOS_THRESHOLD: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowStat {
    Mean,
    /// Population standard deviation (divides by the window count).
    Std,
}

/// What the window slides over.
pub enum StatSource<'a> {
    /// Samples of a uniformly sampled series.
    Series(&'a TimeSeries),
    /// Instantaneous heart rate, 60/RR in beats/min, one sample per interval
    /// stamped at the interval end.
    BeatRate(&'a BeatTrain),
    /// RR interval durations in milliseconds, stamped at the interval end.
    /// `Std` over this source is the windowed SDNN.
    RrIntervalMs(&'a BeatTrain),
    /// Arbitrary timestamped samples (times non-decreasing).
    Events { times_s: &'a [f64], values: &'a [f64] },
}

/// 1 Hz tick grid; tick `k` sits at `start_s + k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start_s: f64,
    pub ticks: usize,
}

impl Grid {
    /// Integer-aligned grid covering `[start_s, end_s]`.
    pub fn covering(start_s: f64, end_s: f64) -> Result<Grid, SignalError> {
        let first = math::ceil(start_s - T_EPS);
        let last = math::floor(end_s + T_EPS);
        if last < first {
            return Err(SignalError::ShortSpan { need_s: 1.0, have_s: end_s - start_s });
        }
        Ok(Grid { start_s: first, ticks: (last - first) as usize + 1 })
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.start_s + k as f64
    }
}

/// Windowed output plus how many ticks had to reuse the previous value
/// because their window was empty.
pub struct Windowed {
    pub series: TimeSeries,
    pub carried: usize,
}

struct EventBuf {
    times: Vec<f64>,
    values: Vec<f64>,
}

fn event_buf(source: &StatSource<'_>) -> Result<EventBuf, SignalError> {
    match source {
        StatSource::Series(s) => Ok(EventBuf {
            times: (0..s.len()).map(|i| s.time_at(i)).collect(),
            values: s.values().to_vec(),
        }),
        StatSource::BeatRate(b) => {
            let t = b.beat_times_s();
            Ok(EventBuf {
                times: t[1..].to_vec(),
                values: t.windows(2).map(|w| 60.0 / (w[1] - w[0])).collect(),
            })
        }
        StatSource::RrIntervalMs(b) => {
            let t = b.beat_times_s();
            Ok(EventBuf {
                times: t[1..].to_vec(),
                values: t.windows(2).map(|w| (w[1] - w[0]) * 1000.0).collect(),
            })
        }
        StatSource::Events { times_s, values } => {
            if times_s.len() != values.len() {
                return Err(SignalError::InvalidParameter(String::from(
                    "event times and values differ in length",
                )));
            }
            if times_s.windows(2).any(|w| w[1] < w[0]) {
                return Err(SignalError::InvalidParameter(String::from(
                    "event times must be non-decreasing",
                )));
            }
            Ok(EventBuf { times: times_s.to_vec(), values: values.to_vec() })
        }
    }
}

fn window_value(values: &[f64], stat: WindowStat) -> f64 {
    match stat {
        WindowStat::Mean => math::mean(values),
        WindowStat::Std => math::pop_std(values),
    }
}

/// Trailing-window statistic over `source` on an integer-second grid derived
/// from the source's own span. See [`windowed_stat_on`] for the grid variant.
pub fn windowed_stat(
    source: StatSource<'_>,
    stat: WindowStat,
    window_s: f64,
) -> Result<Windowed, SignalError> {
    let buf = event_buf(&source)?;
    if buf.times.is_empty() {
        return Err(SignalError::EmptyInput("windowed statistic source"));
    }
    let grid = Grid::covering(buf.times[0], buf.times[buf.times.len() - 1])?;
    windowed_buf(&buf, stat, window_s, &grid, DEFAULT_WARMUP_S, "windowed")
}

/// Trailing-window statistic evaluated at each tick of `grid`.
///
/// At tick `t` the window is `(t - window_s, t]`. Ticks earlier than
/// `warmup_s` past the first sample are backfilled with the first valid
/// value; later ticks whose window is empty repeat the previous value and
/// are counted in `carried`.
pub fn windowed_stat_on(
    source: StatSource<'_>,
    stat: WindowStat,
    window_s: f64,
    grid: &Grid,
    warmup_s: f64,
) -> Result<Windowed, SignalError> {
    let buf = event_buf(&source)?;
    windowed_buf(&buf, stat, window_s, grid, warmup_s, "windowed")
}

fn windowed_buf(
    buf: &EventBuf,
    stat: WindowStat,
    window_s: f64,
    grid: &Grid,
    warmup_s: f64,
    name: &str,
) -> Result<Windowed, SignalError> {
    if !(window_s.is_finite() && window_s > 0.0) {
        return Err(SignalError::InvalidParameter(String::from(
            "window must be positive",
        )));
    }
    if buf.times.is_empty() {
        return Err(SignalError::EmptyInput("windowed statistic source"));
    }
    let data_start = buf.times[0];
    let data_end = buf.times[buf.times.len() - 1];
    let mut out = vec![f64::NAN; grid.ticks];
    let mut carried = 0usize;
    let mut first_valid: Option<usize> = None;
    let mut prev = f64::NAN;
    let (mut lo, mut hi) = (0usize, 0usize);
    for k in 0..grid.ticks {
        let t = grid.time_at(k);
        while hi < buf.times.len() && buf.times[hi] <= t + T_EPS {
            hi += 1;
        }
        while lo < hi && buf.times[lo] <= t - window_s {
            lo += 1;
        }
        let span = t - data_start;
        if span + T_EPS < warmup_s {
            continue;
        }
        if first_valid.is_none() && lo == hi {
            continue;
        }
        let v = if lo == hi {
            carried += 1;
            prev
        } else {
            window_value(&buf.values[lo..hi], stat)
        };
        if first_valid.is_none() {
            first_valid = Some(k);
        }
        out[k] = v;
        prev = v;
    }
    let fv = first_valid.ok_or(SignalError::ShortSpan {
        need_s: warmup_s,
        have_s: (data_end - data_start).max(0.0),
    })?;
    for k in 0..fv {
        out[k] = out[fv];
    }
    let series = TimeSeries::new(name, 1.0, grid.start_s, out)?;
    Ok(Windowed { series, carried })
}

/// PERCLOS: percentage of occlusion samples strictly above 80 in the
/// trailing 60 s, on the series' own integer-second grid.
pub fn perclos(occlusion: &TimeSeries) -> Result<TimeSeries, SignalError> {
    let grid = Grid::covering(occlusion.start_s(), occlusion.end_s())?;
    perclos_on(occlusion, &grid, DEFAULT_WARMUP_S)
}

/// PERCLOS evaluated on a caller-supplied grid (same warm-up rules as
/// [`windowed_stat_on`]).
pub fn perclos_on(
    occlusion: &TimeSeries,
    grid: &Grid,
    warmup_s: f64,
) -> Result<TimeSeries, SignalError> {
    for (index, v) in occlusion.values().iter().enumerate() {
        if !(*v >= 0.0 && *v <= 100.0) {
            return Err(SignalError::OcclusionOutOfRange { index, value: *v });
        }
    }
    let buf = EventBuf {
        times: (0..occlusion.len()).map(|i| occlusion.time_at(i)).collect(),
        values: occlusion
            .values()
            .iter()
            .map(|&v| if v > PERCLOS_THRESHOLD { 100.0 } else { 0.0 })
            .collect(),
    };
    let w = windowed_buf(&buf, WindowStat::Mean, DEFAULT_WINDOW_S, grid, warmup_s, "perclos")?;
    Ok(w.series)
}
