//! Second-order IIR (biquad) filtering and trailing moving averages.

use alloc::string::String;
use alloc::vec::Vec;

use super::{SignalError, TimeSeries};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    LowPass,
    HighPass,
}

/// Normalized biquad coefficients (a0 divided out).
struct Coeffs {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

fn design(kind: FilterKind, cutoff_hz: f64, q: f64, rate_hz: f64) -> Result<Coeffs, SignalError> {
    let nyquist = rate_hz / 2.0;
    if !(cutoff_hz.is_finite() && cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(SignalError::CutoffOutOfRange { cutoff_hz, nyquist_hz: nyquist });
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(SignalError::InvalidParameter(String::from("q must be positive")));
    }
    let w0 = 2.0 * core::f64::consts::PI * cutoff_hz / rate_hz;
    let cos_w0 = math::cos(w0);
    let alpha = math::sin(w0) / (2.0 * q);
    let a0 = 1.0 + alpha;
    let (b0, b1, b2) = match kind {
        FilterKind::LowPass => {
            let k = (1.0 - cos_w0) / 2.0;
            (k, 1.0 - cos_w0, k)
        }
        FilterKind::HighPass => {
            let k = (1.0 + cos_w0) / 2.0;
            (k, -(1.0 + cos_w0), k)
        }
    };
    Ok(Coeffs {
        b0: b0 / a0,
        b1: b1 / a0,
        b2: b2 / a0,
        a1: -2.0 * cos_w0 / a0,
        a2: (1.0 - alpha) / a0,
    })
}

/// Filter a series forward with a biquad (direct form I).
///
/// The filter starts as if the first sample had been held forever, so a
/// constant input passes a low-pass unchanged (and zeroes a high-pass) from
/// sample zero with no start-up transient. That state is linear in the
/// input, so filter(a + b) == filter(a) + filter(b) holds exactly in exact
/// arithmetic.
pub fn biquad_filter(
    series: &TimeSeries,
    kind: FilterKind,
    cutoff_hz: f64,
    q: f64,
) -> Result<TimeSeries, SignalError> {
    let c = design(kind, cutoff_hz, q, series.rate_hz())?;
    let dc_gain = match kind {
        FilterKind::LowPass => 1.0,
        FilterKind::HighPass => 0.0,
    };
    let x = series.values();
    let mut out = Vec::with_capacity(x.len());
    let mut x1 = x[0];
    let mut x2 = x[0];
    let mut y1 = x[0] * dc_gain;
    let mut y2 = y1;
    for &xi in x {
        let yi = c.b0 * xi + c.b1 * x1 + c.b2 * x2 - c.a1 * y1 - c.a2 * y2;
        out.push(yi);
        x2 = x1;
        x1 = xi;
        y2 = y1;
        y1 = yi;
    }
    TimeSeries::new(series.name(), series.rate_hz(), series.start_s(), out)
}

/// Magnitude of the biquad frequency response at `freq_hz`. Exposed so
/// measured attenuation can be checked against the closed form.
pub fn biquad_response(
    kind: FilterKind,
    cutoff_hz: f64,
    q: f64,
    rate_hz: f64,
    freq_hz: f64,
) -> Result<f64, SignalError> {
    let c = design(kind, cutoff_hz, q, rate_hz)?;
    let w = 2.0 * core::f64::consts::PI * freq_hz / rate_hz;
    // |H(e^jw)| with H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
    let (cw, sw) = (math::cos(w), math::sin(w));
    let (c2w, s2w) = (math::cos(2.0 * w), math::sin(2.0 * w));
    let num_re = c.b0 + c.b1 * cw + c.b2 * c2w;
    let num_im = -(c.b1 * sw + c.b2 * s2w);
    let den_re = 1.0 + c.a1 * cw + c.a2 * c2w;
    let den_im = -(c.a1 * sw + c.a2 * s2w);
    let num = num_re * num_re + num_im * num_im;
    let den = den_re * den_re + den_im * den_im;
    Ok(math::sqrt(num / den))
}

/// Trailing moving average. The window spans `ceil(window_s * rate)` samples;
/// early outputs average whatever has been seen so far.
pub fn moving_average(series: &TimeSeries, window_s: f64) -> Result<TimeSeries, SignalError> {
    if !(window_s.is_finite() && window_s > 0.0) {
        return Err(SignalError::InvalidParameter(String::from(
            "moving average window must be positive",
        )));
    }
    let w = math::ceil(window_s * series.rate_hz()) as usize;
    let w = w.max(1);
    let x = series.values();
    let mut out = Vec::with_capacity(x.len());
    let mut sum = 0.0;
    for i in 0..x.len() {
        sum += x[i];
        if i >= w {
            sum -= x[i - w];
        }
        let count = (i + 1).min(w);
        out.push(sum / count as f64);
    }
    TimeSeries::new(series.name(), series.rate_hz(), series.start_s(), out)
}
