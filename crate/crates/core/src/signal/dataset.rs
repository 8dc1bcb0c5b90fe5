//! Assembly of the model-ready feature table from conditioned channels.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{
    biquad_filter, detect_cycles, moving_average, perclos_on, windowed_stat_on, BeatTrain,
    Dataset, FilterKind, Grid, SignalError, StatSource, TimeSeries, WindowStat, FEATURE_NAMES,
};

pub const CH_BREATHING: &str = "breathing";
pub const CH_ECG: &str = "ECG";
pub const CH_HEART_RATE: &str = "heart rate";
pub const CH_INTERTQ: &str = "intertq";
pub const CH_SWA: &str = "swa";
pub const CH_POSTURE: &str = "posture";
pub const CH_OCCLUSION: &str = "occlusion";

/// Conditioning and windowing knobs for feature extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizeConfig {
    /// ECG chain: high-pass (baseline wander removal) then low-pass.
    pub ecg_highpass_hz: f64,
    pub ecg_lowpass_hz: f64,
    /// Breathing is smoothed with a short trailing moving average.
    pub breathing_ma_s: f64,
    /// Low-pass cutoff for the behavioral channels (intertq, swa).
    pub behavior_lowpass_hz: f64,
    pub posture_lowpass_hz: f64,
    /// Trailing window for all windowed statistics.
    pub window_s: f64,
    /// Minimum data span before windowed outputs count as valid.
    pub warmup_s: f64,
    /// Baseline window for breath cycle detection.
    pub breath_baseline_s: f64,
    pub breath_refractory_s: f64,
}

impl Default for FeaturizeConfig {
    fn default() -> Self {
        Self {
            ecg_highpass_hz: 0.5,
            ecg_lowpass_hz: 40.0,
            breathing_ma_s: 0.5,
            behavior_lowpass_hz: 5.0,
            posture_lowpass_hz: 0.2,
            window_s: 60.0,
            warmup_s: 5.0,
            breath_baseline_s: 10.0,
            breath_refractory_s: 1.5,
        }
    }
}

const FILTER_Q: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Apply the per-channel conditioning chain. Channels are matched by name;
/// unknown names pass through untouched.
pub fn condition_channels(
    raw: &[TimeSeries],
    cfg: &FeaturizeConfig,
) -> Result<Vec<TimeSeries>, SignalError> {
    raw.iter()
        .map(|ch| match ch.name() {
            CH_ECG => {
                let hp = biquad_filter(ch, FilterKind::HighPass, cfg.ecg_highpass_hz, FILTER_Q)?;
                biquad_filter(&hp, FilterKind::LowPass, cfg.ecg_lowpass_hz, FILTER_Q)
            }
            CH_BREATHING => moving_average(ch, cfg.breathing_ma_s),
            CH_INTERTQ | CH_SWA => {
                biquad_filter(ch, FilterKind::LowPass, cfg.behavior_lowpass_hz, FILTER_Q)
            }
            CH_POSTURE => {
                biquad_filter(ch, FilterKind::LowPass, cfg.posture_lowpass_hz, FILTER_Q)
            }
            _ => Ok(ch.clone()),
        })
        .collect()
}

/// Feature table plus bookkeeping from its construction.
#[derive(Debug, Clone)]
pub struct BuiltDataset {
    pub dataset: Dataset,
    /// Rows discarded because some entry came out non-finite.
    pub dropped_rows: usize,
    pub warnings: Vec<String>,
}

fn find<'a>(channels: &'a [TimeSeries], name: &str) -> Result<&'a TimeSeries, SignalError> {
    channels
        .iter()
        .find(|c| c.name() == name)
        .ok_or_else(|| SignalError::MissingChannel(name.to_string()))
}

/// Per-tick mean of the samples in `(t-1, t]` for each grid tick.
fn second_means(ch: &TimeSeries, grid: &Grid) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.ticks);
    let (mut lo, mut hi) = (0usize, 0usize);
    let n = ch.len();
    let mut prev = 0.0;
    for k in 0..grid.ticks {
        let t = grid.time_at(k);
        while hi < n && ch.time_at(hi) <= t + 1e-9 {
            hi += 1;
        }
        while lo < hi && ch.time_at(lo) <= t - 1.0 {
            lo += 1;
        }
        let v = if lo == hi {
            prev
        } else {
            let mut sum = 0.0;
            for i in lo..hi {
                sum += ch.values()[i];
            }
            sum / (hi - lo) as f64
        };
        out.push(v);
        prev = v;
    }
    out
}

/// Beats per minute as a windowed count: beats in `(t-60, t]`, scaled up
/// while the window is still partially covered by data.
fn beat_count_per_minute(
    beats: &BeatTrain,
    grid: &Grid,
    window_s: f64,
    warmup_s: f64,
) -> Result<Vec<f64>, SignalError> {
    let times = beats.beat_times_s();
    if times.is_empty() {
        return Err(SignalError::EmptyInput("beat train"));
    }
    let data_start = times[0];
    let mut out = alloc::vec![f64::NAN; grid.ticks];
    let mut first_valid: Option<usize> = None;
    let (mut lo, mut hi) = (0usize, 0usize);
    for k in 0..grid.ticks {
        let t = grid.time_at(k);
        while hi < times.len() && times[hi] <= t + 1e-9 {
            hi += 1;
        }
        while lo < hi && times[lo] <= t - window_s {
            lo += 1;
        }
        let span = t - data_start;
        if span + 1e-9 < warmup_s {
            continue;
        }
        let covered = span.min(window_s);
        let count = (hi - lo) as f64;
        let v = if covered > 0.0 { count * window_s / covered } else { count };
        if first_valid.is_none() {
            first_valid = Some(k);
        }
        out[k] = v;
    }
    let fv = first_valid.ok_or(SignalError::ShortSpan {
        need_s: warmup_s,
        have_s: times[times.len() - 1] - data_start,
    })?;
    for k in 0..fv {
        out[k] = out[fv];
    }
    Ok(out)
}

/// Build the feature table from conditioned channels and a beat train.
///
/// Channels must include breathing, ECG, intertq, swa, posture and
/// occlusion; a "heart rate" channel is used for the heart-rate column when
/// present, otherwise the column falls back to the windowed beat count.
/// Rows sit on the integer-second grid over the common channel span, minus
/// the warm-up prefix; rows with any non-finite entry are dropped and
/// counted.
pub fn build_dataset(
    channels: &[TimeSeries],
    beats: &BeatTrain,
    subject: Option<&str>,
    cfg: &FeaturizeConfig,
) -> Result<BuiltDataset, SignalError> {
    let breathing = find(channels, CH_BREATHING)?;
    let ecg = find(channels, CH_ECG)?;
    let intertq = find(channels, CH_INTERTQ)?;
    let swa = find(channels, CH_SWA)?;
    let posture = find(channels, CH_POSTURE)?;
    let occlusion = find(channels, CH_OCCLUSION)?;
    let heart_rate_ch = channels.iter().find(|c| c.name() == CH_HEART_RATE);

    let mut warnings = Vec::new();
    if beats.degenerate() {
        warnings.push(String::from(
            "beat train is degenerate (fewer than two beats in some 60 s span)",
        ));
    }

    let required = [breathing, ecg, intertq, swa, posture, occlusion];
    let mut start = f64::NEG_INFINITY;
    let mut end = f64::INFINITY;
    for ch in required {
        start = start.max(ch.start_s());
        end = end.min(ch.end_s());
    }
    if let Some(ch) = heart_rate_ch {
        start = start.max(ch.start_s());
        end = end.min(ch.end_s());
    }
    let grid = Grid::covering(start, end)?;

    let w = cfg.window_s;
    let wu = cfg.warmup_s;
    let hrv = windowed_stat_on(StatSource::RrIntervalMs(beats), WindowStat::Std, w, &grid, wu)?;
    let hr_avg = windowed_stat_on(StatSource::BeatRate(beats), WindowStat::Mean, w, &grid, wu)?;
    let hr_std = windowed_stat_on(StatSource::BeatRate(beats), WindowStat::Std, w, &grid, wu)?;
    for (name, carried) in [("hrv", hrv.carried), ("hr", hr_avg.carried)] {
        if carried > 0 {
            warnings.push(format!("{name}: {carried} ticks carried over an empty window"));
        }
    }

    let breath_times = detect_cycles(breathing, cfg.breath_baseline_s, cfg.breath_refractory_s)?;
    if breath_times.len() < 2 {
        return Err(SignalError::ShortSpan {
            need_s: wu,
            have_s: breathing.duration_s(),
        });
    }
    let br_times: Vec<f64> = breath_times[1..].to_vec();
    let br_rates: Vec<f64> =
        breath_times.windows(2).map(|p| 60.0 / (p[1] - p[0])).collect();
    let br_src = StatSource::Events { times_s: &br_times, values: &br_rates };
    let br_avg = windowed_stat_on(br_src, WindowStat::Mean, w, &grid, wu)?;
    let br_src = StatSource::Events { times_s: &br_times, values: &br_rates };
    let br_std = windowed_stat_on(br_src, WindowStat::Std, w, &grid, wu)?;

    let heart_rate = match heart_rate_ch {
        Some(ch) => second_means(ch, &grid),
        None => beat_count_per_minute(beats, &grid, w, wu)?,
    };

    let columns_full: [Vec<f64>; 11] = [
        hrv.series.values().to_vec(),
        hr_avg.series.values().to_vec(),
        br_avg.series.values().to_vec(),
        br_std.series.values().to_vec(),
        hr_std.series.values().to_vec(),
        heart_rate,
        second_means(breathing, &grid),
        second_means(ecg, &grid),
        second_means(intertq, &grid),
        second_means(swa, &grid),
        second_means(posture, &grid),
    ];
    let target = perclos_on(occlusion, &grid, wu)?;

    // drop the warm-up prefix, then any row with a non-finite entry
    let mut k0 = 0;
    while k0 < grid.ticks && grid.time_at(k0) - start + 1e-9 < wu {
        k0 += 1;
    }
    let mut columns: Vec<Vec<f64>> = (0..11).map(|_| Vec::new()).collect();
    let mut y = Vec::new();
    let mut timestamps = Vec::new();
    let mut dropped = 0usize;
    for k in k0..grid.ticks {
        let row_ok = columns_full.iter().all(|c| c[k].is_finite())
            && target.values()[k].is_finite();
        if !row_ok {
            dropped += 1;
            continue;
        }
        for (dst, src) in columns.iter_mut().zip(&columns_full) {
            dst.push(src[k]);
        }
        y.push(target.values()[k]);
        timestamps.push(grid.time_at(k));
    }
    if dropped > 0 {
        warnings.push(format!("{dropped} rows dropped for non-finite entries"));
    }

    let n = y.len();
    let subjects = subject.map(|s| alloc::vec![s.to_string(); n]);
    let dataset = Dataset::new(
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        columns,
        y,
        timestamps,
        subjects,
    )?;
    Ok(BuiltDataset { dataset, dropped_rows: dropped, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;
    use crate::signal::{detect_beats, F_BR_AVG60, F_HEART_RATE, F_HRV, F_HR_AVG60, F_POSTURE};
    use alloc::vec;
    use alloc::vec::Vec;
    use approx::assert_relative_eq;

    /// 300 s recording: 1 Hz beats, 0.25 Hz breathing, constant behavior
    /// channels, occlusion closed during the middle two minutes.
    fn toy_channels(duration_s: f64) -> Vec<TimeSeries> {
        let n250 = (250.0 * duration_s) as usize;
        let mut ecg = vec![0.0; n250];
        let mut i = 50;
        while i < n250 {
            ecg[i] = 1.0;
            i += 250;
        }
        let n16 = (16.0 * duration_s) as usize;
        let breathing: Vec<f64> = (0..n16)
            .map(|i| math::sin(2.0 * core::f64::consts::PI * 0.25 * i as f64 / 16.0))
            .collect();
        let n200 = (200.0 * duration_s) as usize;
        let n60 = (60.0 * duration_s) as usize;
        let occlusion: Vec<f64> = (0..n60)
            .map(|i| {
                let t = i as f64 / 60.0;
                if t >= 120.0 && t < 240.0 {
                    95.0
                } else {
                    5.0
                }
            })
            .collect();
        let n1 = duration_s as usize;
        vec![
            TimeSeries::new(CH_ECG, 250.0, 0.0, ecg).unwrap(),
            TimeSeries::new(CH_BREATHING, 16.0, 0.0, breathing).unwrap(),
            TimeSeries::new(CH_INTERTQ, 200.0, 0.0, vec![1.5; n200]).unwrap(),
            TimeSeries::new(CH_SWA, 200.0, 0.0, vec![-2.0; n200]).unwrap(),
            TimeSeries::new(CH_POSTURE, 1.0, 0.0, vec![12.0; n1]).unwrap(),
            TimeSeries::new(CH_OCCLUSION, 60.0, 0.0, occlusion).unwrap(),
            TimeSeries::new(CH_HEART_RATE, 1.0, 0.0, vec![70.0; n1]).unwrap(),
        ]
    }

    fn build_toy() -> BuiltDataset {
        let cfg = FeaturizeConfig::default();
        let raw = toy_channels(300.0);
        let channels = condition_channels(&raw, &cfg).unwrap();
        let ecg = channels.iter().find(|c| c.name() == CH_ECG).unwrap();
        let beats = detect_beats(ecg).unwrap();
        build_dataset(&channels, &beats, Some("s0"), &cfg).unwrap()
    }

    #[test]
    fn feature_names_and_shape() {
        let built = build_toy();
        let d = &built.dataset;
        assert_eq!(d.m(), 11);
        let names: Vec<&str> = d.feature_names().iter().map(|s| s.as_str()).collect();
        assert_eq!(names, FEATURE_NAMES);
        assert!(d.n() > 280, "rows: {}", d.n());
        assert_eq!(built.dropped_rows, 0);
        // timestamps are integer seconds, warm-up dropped
        assert!(d.timestamps_s()[0] >= 5.0);
        for t in d.timestamps_s() {
            assert_eq!(*t, math::floor(*t));
        }
        assert_eq!(d.subjects().unwrap()[0], "s0");
    }

    #[test]
    fn steady_signals_recover_known_values() {
        let built = build_toy();
        let d = &built.dataset;
        let last = d.n() - 1;
        // 1 Hz beats -> 60 bpm, zero spread
        assert!((d.column(F_HR_AVG60)[last] - 60.0).abs() < 0.5);
        assert!(d.column(F_HRV)[last] < 5.0, "sdnn {}", d.column(F_HRV)[last]);
        // 0.25 Hz breathing -> 15 breaths/min
        assert!((d.column(F_BR_AVG60)[last] - 15.0).abs() < 0.5);
        // device heart-rate channel passes through as a within-second mean
        assert_relative_eq!(d.column(F_HEART_RATE)[last], 70.0, max_relative = 1e-9);
        // posture is constant; the low-pass leaves a constant untouched
        assert_relative_eq!(d.column(F_POSTURE)[last], 12.0, epsilon = 1e-6);
    }

    #[test]
    fn perclos_target_tracks_occlusion() {
        let built = build_toy();
        let d = &built.dataset;
        let at = |t: f64| -> f64 {
            let i = d.timestamps_s().iter().position(|&x| x == t).unwrap();
            d.y()[i]
        };
        assert_eq!(at(100.0), 0.0);
        assert!((at(200.0) - 100.0).abs() < 2.0);
        assert!((at(270.0) - 50.0).abs() < 3.0);
    }

    #[test]
    fn hr_avg_matches_independent_recompute() {
        let built = build_toy();
        let d = &built.dataset;
        let cfg = FeaturizeConfig::default();
        let raw = toy_channels(300.0);
        let channels = condition_channels(&raw, &cfg).unwrap();
        let ecg = channels.iter().find(|c| c.name() == CH_ECG).unwrap();
        let beats = detect_beats(ecg).unwrap();
        let bt = beats.beat_times_s();
        for (i, &t) in d.timestamps_s().iter().enumerate() {
            let mut rates = Vec::new();
            for w in bt.windows(2) {
                if w[1] > t - 60.0 && w[1] <= t + 1e-9 {
                    rates.push(60.0 / (w[1] - w[0]));
                }
            }
            if rates.is_empty() {
                continue;
            }
            let expect = math::mean(&rates);
            assert!(
                (d.column(F_HR_AVG60)[i] - expect).abs() <= 1e-9,
                "tick {t}: {} vs {expect}",
                d.column(F_HR_AVG60)[i]
            );
        }
    }

    #[test]
    fn missing_channel_is_reported() {
        let cfg = FeaturizeConfig::default();
        let mut raw = toy_channels(120.0);
        raw.retain(|c| c.name() != CH_SWA);
        let channels = condition_channels(&raw, &cfg).unwrap();
        let ecg = channels.iter().find(|c| c.name() == CH_ECG).unwrap();
        let beats = detect_beats(ecg).unwrap();
        let err = build_dataset(&channels, &beats, None, &cfg);
        assert!(matches!(err, Err(SignalError::MissingChannel(n)) if n == CH_SWA));
    }

    #[test]
    fn heart_rate_falls_back_to_beat_count() {
        let cfg = FeaturizeConfig::default();
        let mut raw = toy_channels(300.0);
        raw.retain(|c| c.name() != CH_HEART_RATE);
        let channels = condition_channels(&raw, &cfg).unwrap();
        let ecg = channels.iter().find(|c| c.name() == CH_ECG).unwrap();
        let beats = detect_beats(ecg).unwrap();
        let built = build_dataset(&channels, &beats, None, &cfg).unwrap();
        let d = built.dataset;
        let last = d.n() - 1;
        // one beat per second -> sixty per minute
        assert!((d.column(F_HEART_RATE)[last] - 60.0).abs() < 1.5);
        assert!(d.subjects().is_none());
    }
}
