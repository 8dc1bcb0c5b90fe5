//! R-peak detection on conditioned ECG and zero-crossing cycle detection
//! for slower oscillatory channels (breathing).

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;

use super::{moving_average, BeatTrain, SignalError, TimeSeries};

const THRESHOLD_FRACTION: f64 = 0.6;
const ROLLING_MAX_SPAN_S: f64 = 2.0;
const REFRACTORY_S: f64 = 0.3;
const DEGENERATE_SPAN_S: f64 = 60.0;

/// Detect R peaks as local maxima above an adaptive threshold of 0.6 times
/// the rolling 2 s maximum, separated by at least 0.3 s.
///
/// The output is flagged degenerate when any 60 s span of the recording
/// (or the whole recording, if shorter) holds fewer than two beats. A flat
/// or sub-100 Hz input is rejected only for rate; flat signals simply yield
/// an empty, degenerate train.
pub fn detect_beats(ecg: &TimeSeries) -> Result<BeatTrain, SignalError> {
    if ecg.rate_hz() < 100.0 {
        return Err(SignalError::InvalidParameter(String::from(
            "beat detection needs at least 100 Hz input",
        )));
    }
    let x = ecg.values();
    let n = x.len();
    let rate = ecg.rate_hz();
    let half = ((ROLLING_MAX_SPAN_S / 2.0) * rate) as usize;

    // centered rolling max via a monotonic deque over [i - half, i + half]
    let mut rolling = Vec::with_capacity(n);
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut hi = 0usize;
    for i in 0..n {
        let end = (i + half).min(n - 1);
        while hi <= end {
            while let Some(&back) = deque.back() {
                if x[back] <= x[hi] {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(hi);
            hi += 1;
        }
        while let Some(&front) = deque.front() {
            if front + half < i {
                deque.pop_front();
            } else {
                break;
            }
        }
        rolling.push(x[*deque.front().expect("window never empty")]);
    }

    let refractory = REFRACTORY_S;
    let mut beats = Vec::new();
    let mut last_accepted = f64::NEG_INFINITY;
    for i in 1..n.saturating_sub(1) {
        if x[i] <= 0.0 {
            continue;
        }
        if !(x[i] >= x[i - 1] && x[i] > x[i + 1]) {
            continue;
        }
        if x[i] <= THRESHOLD_FRACTION * rolling[i] {
            continue;
        }
        let t = ecg.time_at(i);
        if t - last_accepted < refractory {
            continue;
        }
        beats.push(t);
        last_accepted = t;
    }

    let degenerate = is_degenerate(&beats, ecg.start_s(), ecg.end_s());
    BeatTrain::new(beats, degenerate)
}

fn is_degenerate(beats: &[f64], start_s: f64, end_s: f64) -> bool {
    let duration = end_s - start_s;
    if duration < DEGENERATE_SPAN_S {
        return beats.len() < 2;
    }
    // slide a 60 s span in 1 s steps; two-pointer over the sorted beat times
    let mut lo = 0usize;
    let mut hi = 0usize;
    let mut t = start_s;
    while t + DEGENERATE_SPAN_S <= end_s + 1e-9 {
        let span_end = t + DEGENERATE_SPAN_S;
        while hi < beats.len() && beats[hi] <= span_end {
            hi += 1;
        }
        while lo < beats.len() && beats[lo] < t {
            lo += 1;
        }
        if hi - lo < 2 {
            return true;
        }
        t += 1.0;
    }
    false
}

/// Detect oscillation cycles as upward zero crossings of the deviation from
/// a trailing moving-average baseline. Crossing times are linearly
/// interpolated between samples; crossings closer than `refractory_s` to the
/// previous one are ignored. Returns the crossing times in seconds.
pub fn detect_cycles(
    waveform: &TimeSeries,
    baseline_window_s: f64,
    refractory_s: f64,
) -> Result<Vec<f64>, SignalError> {
    if !(refractory_s.is_finite() && refractory_s >= 0.0) {
        return Err(SignalError::InvalidParameter(String::from(
            "refractory must be non-negative",
        )));
    }
    let baseline = moving_average(waveform, baseline_window_s)?;
    let x = waveform.values();
    let b = baseline.values();
    let dt = 1.0 / waveform.rate_hz();
    let mut crossings = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for i in 1..x.len() {
        let d0 = x[i - 1] - b[i - 1];
        let d1 = x[i] - b[i];
        if d0 <= 0.0 && d1 > 0.0 {
            let frac = if d1 - d0 > 0.0 { -d0 / (d1 - d0) } else { 0.0 };
            let t = waveform.time_at(i - 1) + frac * dt;
            if t - last >= refractory_s {
                crossings.push(t);
                last = t;
            }
        }
    }
    Ok(crossings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;
    use alloc::vec;
    use alloc::vec::Vec;

    fn impulse_train(rate: f64, duration_s: f64, period_s: f64) -> TimeSeries {
        let n = (rate * duration_s) as usize;
        let mut v = vec![0.0; n];
        let step = (period_s * rate) as usize;
        let mut i = step / 2;
        while i < n {
            v[i] = 1.0;
            i += step;
        }
        TimeSeries::new("ecg", rate, 0.0, v).unwrap()
    }

    #[test]
    fn rejects_low_rate() {
        let s = TimeSeries::new("ecg", 50.0, 0.0, vec![0.0; 100]).unwrap();
        assert!(detect_beats(&s).is_err());
    }

    #[test]
    fn impulse_train_recovers_sixty_bpm() {
        let s = impulse_train(250.0, 120.0, 1.0);
        let beats = detect_beats(&s).unwrap();
        assert!(!beats.degenerate());
        // one beat per second over two minutes, minus edge effects
        assert!((118..=121).contains(&beats.len()), "got {}", beats.len());
        for w in beats.beat_times_s().windows(2) {
            assert!((w[1] - w[0] - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn flat_signal_yields_empty_degenerate_train() {
        let s = TimeSeries::new("ecg", 250.0, 0.0, vec![0.0; 25_000]).unwrap();
        let beats = detect_beats(&s).unwrap();
        assert!(beats.is_empty());
        assert!(beats.degenerate());
    }

    #[test]
    fn refractory_suppresses_double_peaks() {
        let rate = 250.0;
        let n = 5000;
        let mut v = vec![0.0; n];
        let mut i = 125;
        while i + 25 < n {
            v[i] = 1.0;
            v[i + 25] = 0.9; // echo 0.1 s later, inside the refractory window
            i += 250;
        }
        let s = TimeSeries::new("ecg", rate, 0.0, v).unwrap();
        let beats = detect_beats(&s).unwrap();
        for w in beats.beat_times_s().windows(2) {
            assert!(w[1] - w[0] >= 0.3);
        }
        assert!((18..=20).contains(&beats.len()), "got {}", beats.len());
    }

    #[test]
    fn amplitude_scale_does_not_matter() {
        let s = impulse_train(250.0, 60.0, 0.8);
        let scaled_values: Vec<f64> = s.values().iter().map(|v| v * 1e-3).collect();
        let scaled = TimeSeries::new("ecg", 250.0, 0.0, scaled_values).unwrap();
        let a = detect_beats(&s).unwrap();
        let b = detect_beats(&scaled).unwrap();
        assert_eq!(a.beat_times_s(), b.beat_times_s());
    }

    #[test]
    fn sparse_beats_flagged_degenerate() {
        // beats only in the first minute of a three minute recording
        let rate = 250.0;
        let n = (rate * 180.0) as usize;
        let mut v = vec![0.0; n];
        for k in 0..50 {
            v[125 + k * 250] = 1.0;
        }
        let s = TimeSeries::new("ecg", rate, 0.0, v).unwrap();
        let beats = detect_beats(&s).unwrap();
        assert!(beats.degenerate());
    }

    #[test]
    fn cycle_detection_recovers_sinusoid_period() {
        let rate = 16.0;
        let freq = 0.3; // Hz
        let n = (rate * 120.0) as usize;
        let v: Vec<f64> = (0..n)
            .map(|i| math::sin(2.0 * core::f64::consts::PI * freq * i as f64 / rate))
            .collect();
        let s = TimeSeries::new("breathing", rate, 0.0, v).unwrap();
        let crossings = detect_cycles(&s, 10.0, 1.5).unwrap();
        assert!(crossings.len() > 30);
        // skip the first few cycles while the baseline warms up
        for w in crossings[3..].windows(2) {
            let period = w[1] - w[0];
            assert!((period - 1.0 / freq).abs() < 0.05, "period {period}");
        }
    }
}
