//! Deterministic synthetic recordings with a planted fatigue effect.
//!
//! A slowly drifting latent fatigue level drives five physiological
//! controls (heart rate, RR-interval spread, breathing rate and spread, and
//! the implied beat-rate spread); the eye-occlusion trace closes in
//! proportion to a fixed piecewise-linear function of those controls, so
//! the ground truth behind every generated dataset is known in closed form.
//! Six further channels are fatigue-independent noise.

mod subject;

pub use subject::{gen_subject, SubjectRecording};

use alloc::format;
use alloc::string::String;

use crate::signal::{F_BR_AVG60, F_BR_STD60, F_HRV, F_HR_AVG60, F_HR_STD60};

/// Knobs of the planted effect shapes. Units match the features they act
/// on: beats/min, ms, breaths/min.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectParams {
    /// PERCLOS drop per beat/min on the steep 50..55 segment of the heart
    /// rate shape.
    pub hr_slope: f64,
    /// Heart-rate-variability value at the bottom of its V.
    pub hrv_vertex_ms: f64,
    /// Breathing rate below which its effect saturates.
    pub br_threshold: f64,
    /// Breathing-spread value where its effect flattens to zero.
    pub brstd_knee: f64,
    /// Beat-rate-spread value at the bottom of its V.
    pub hrstd_vertex: f64,
}

impl Default for EffectParams {
    fn default() -> Self {
        Self {
            hr_slope: 5.4,
            hrv_vertex_ms: 50.0,
            br_threshold: 15.0,
            brstd_knee: 0.8,
            hrstd_vertex: 2.0,
        }
    }
}

/// Per-channel corruption scales. 1.0 is the calibrated default; 0 turns a
/// source off entirely. These scale only the corrupting terms — the
/// fatigue-independent nuisance channels keep their intrinsic variation so
/// that they stay informative-looking (but useless) at every level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLevels {
    /// Innovations of the latent fatigue walk.
    pub latent: f64,
    /// Jitter on the four physiological controls.
    pub controls: f64,
    /// Additive wander and sensor noise on the ECG.
    pub ecg: f64,
    /// Additive sensor noise on the breathing trace.
    pub breathing: f64,
    /// Bounded per-second noise on the closed fraction.
    pub occlusion: f64,
}

impl NoiseLevels {
    pub fn zero() -> Self {
        Self { latent: 0.0, controls: 0.0, ecg: 0.0, breathing: 0.0, occlusion: 0.0 }
    }
}

impl Default for NoiseLevels {
    fn default() -> Self {
        Self { latent: 1.0, controls: 1.0, ecg: 1.0, breathing: 1.0, occlusion: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    /// Whole seconds are generated; a fractional tail is dropped.
    pub duration_s: f64,
    pub subjects: usize,
    pub noise: NoiseLevels,
    pub effect: EffectParams,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            duration_s: 3600.0,
            subjects: 20,
            noise: NoiseLevels::default(),
            effect: EffectParams::default(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::InvalidSpec(msg));
        if !(self.duration_s.is_finite() && self.duration_s > 120.0) {
            return fail(format!(
                "duration_s must exceed 120 seconds, got {}",
                self.duration_s
            ));
        }
        if self.subjects == 0 {
            return fail(String::from("subjects must be at least 1"));
        }
        let levels = [
            ("latent", self.noise.latent),
            ("controls", self.noise.controls),
            ("ecg", self.noise.ecg),
            ("breathing", self.noise.breathing),
            ("occlusion", self.noise.occlusion),
        ];
        for (name, v) in levels {
            if !(v.is_finite() && v >= 0.0) {
                return fail(format!("noise level {name} must be finite and >= 0, got {v}"));
            }
        }
        let e = &self.effect;
        if !(e.hr_slope.is_finite() && e.hr_slope >= 0.0) {
            return fail(format!("hr_slope must be finite and >= 0, got {}", e.hr_slope));
        }
        if !(e.hrv_vertex_ms > 10.0 && e.hrv_vertex_ms < 140.0) {
            return fail(format!(
                "hrv_vertex_ms must lie in (10, 140), got {}",
                e.hrv_vertex_ms
            ));
        }
        if !(e.br_threshold > 0.0 && e.br_threshold < 25.0) {
            return fail(format!(
                "br_threshold must lie in (0, 25), got {}",
                e.br_threshold
            ));
        }
        if !(e.brstd_knee > 0.0 && e.brstd_knee.is_finite()) {
            return fail(format!("brstd_knee must be positive, got {}", e.brstd_knee));
        }
        if !(e.hrstd_vertex > 0.5 && e.hrstd_vertex < 8.0) {
            return fail(format!(
                "hrstd_vertex must lie in (0.5, 8), got {}",
                e.hrstd_vertex
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    InvalidSpec(String),
}

impl core::fmt::Display for SynthError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SynthError::InvalidSpec(msg) => write!(f, "invalid synth spec: {msg}"),
        }
    }
}

impl core::error::Error for SynthError {}

/// Linear interpolation over `knots` (ascending in x), constant outside.
fn piecewise(knots: &[(f64, f64)], x: f64) -> f64 {
    if x <= knots[0].0 {
        return knots[0].1;
    }
    for w in knots.windows(2) {
        if x <= w[1].0 {
            let t = (x - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + t * (w[1].1 - w[0].1);
        }
    }
    knots[knots.len() - 1].1
}

fn shape_hr(p: &EffectParams, x: f64) -> f64 {
    let top = 18.0 + 5.0 * p.hr_slope;
    piecewise(&[(50.0, top), (55.0, 18.0), (63.0, 15.0), (95.0, 0.0)], x)
}

fn shape_hrv(p: &EffectParams, x: f64) -> f64 {
    piecewise(&[(10.0, 18.0), (p.hrv_vertex_ms, 6.0), (140.0, 24.0)], x)
}

fn shape_br(p: &EffectParams, x: f64) -> f64 {
    piecewise(&[(p.br_threshold, 12.0), (25.0, 0.0)], x)
}

fn shape_brstd(p: &EffectParams, x: f64) -> f64 {
    piecewise(&[(0.0, 10.0), (p.brstd_knee, 0.0)], x)
}

fn shape_hrstd(p: &EffectParams, x: f64) -> f64 {
    piecewise(&[(0.5, 8.0), (p.hrstd_vertex, 4.0), (8.0, 16.0)], x)
}

const EFFECT_OFFSET: f64 = 26.0;

/// Ground-truth PERCLOS for an 11-entry feature row in
/// [`crate::signal::FEATURE_NAMES`] order. Only the five heart/breathing
/// statistics contribute; the remaining six entries are ignored by
/// construction.
pub fn planted_effect(params: &EffectParams, features: &[f64]) -> f64 {
    assert_eq!(features.len(), 11, "planted_effect expects the 11 standard features");
    let total = shape_hr(params, features[F_HR_AVG60])
        + shape_hrv(params, features[F_HRV])
        + shape_br(params, features[F_BR_AVG60])
        + shape_brstd(params, features[F_BR_STD60])
        + shape_hrstd(params, features[F_HR_STD60]);
    (total - EFFECT_OFFSET).clamp(0.0, 100.0)
}
