//! One synthetic subject: latent fatigue walk, physiological channel
//! synthesis, and the occlusion trace that encodes the planted effect.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::rng::SplitMix64;
use crate::signal::{
    TimeSeries, CH_BREATHING, CH_ECG, CH_HEART_RATE, CH_INTERTQ, CH_OCCLUSION, CH_POSTURE,
    CH_SWA, F_BR_AVG60, F_BR_STD60, F_HRV, F_HR_AVG60, F_HR_STD60,
};

use super::{planted_effect, SynthError, SynthSpec};

const TAU: f64 = 2.0 * core::f64::consts::PI;

/// Latent relaxation time, seconds.
const LATENT_TAU_S: f64 = 150.0;
/// Control jitter relaxation time, seconds.
const JITTER_TAU_S: f64 = 240.0;

/// Raw channels plus the ground truth that generated them. `latent` is the
/// dimensionless fatigue level in [0, 1]; `planted` is the target PERCLOS
/// implied by the instantaneous controls, both on the 1 Hz grid.
#[derive(Debug, Clone)]
pub struct SubjectRecording {
    pub subject: String,
    /// breathing, ECG, heart rate, intertq, swa, posture, occlusion —
    /// everything the feature extraction stage consumes.
    pub channels: Vec<TimeSeries>,
    pub latent: TimeSeries,
    pub planted: TimeSeries,
}

/// Mean-reverting unit-variance-ish noise process, stepped at 1 Hz unless
/// `dt` says otherwise.
struct Ou {
    x: f64,
    tau_s: f64,
    sigma: f64,
}

impl Ou {
    fn new(tau_s: f64, sigma: f64) -> Self {
        Self { x: 0.0, tau_s, sigma }
    }

    fn step(&mut self, dt: f64, rng: &mut SplitMix64) -> f64 {
        self.x += -self.x * dt / self.tau_s
            + self.sigma * math::sqrt(2.0 * dt / self.tau_s) * rng.next_normal();
        self.x
    }
}

/// Alternation amplitude (beats/min) around mean rate `hr` that yields an
/// RR-interval spread of exactly `hrv` ms: beats alternate hr - s, hr + s.
fn rate_spread(hr: f64, hrv_ms: f64) -> f64 {
    let disc = 60_000.0 * 60_000.0 + 4.0 * hrv_ms * hrv_ms * hr * hr;
    (math::sqrt(disc) - 60_000.0) / (2.0 * hrv_ms)
}

struct Controls {
    hr: Vec<f64>,
    hrv: Vec<f64>,
    br: Vec<f64>,
    brstd: Vec<f64>,
    /// Beat-rate alternation amplitude implied by (hr, hrv).
    srate: Vec<f64>,
}

/// Generate one subject's full recording. Pure function of
/// (spec, subject_index): every internal component draws from its own
/// seeded substream, so noise levels change amplitudes without disturbing
/// event times elsewhere.
pub fn gen_subject(spec: &SynthSpec, subject_index: usize) -> Result<SubjectRecording, SynthError> {
    spec.validate()?;
    if subject_index >= spec.subjects {
        return Err(SynthError::InvalidSpec(format!(
            "subject_index {subject_index} out of range for {} subjects",
            spec.subjects
        )));
    }
    let n1 = spec.duration_s as usize;
    let root = SplitMix64::new(spec.seed).fork(subject_index as u64 + 1);

    // latent fatigue: rise-and-fall target with a mean-reverting walk on top
    let mut rng = root.fork(1);
    let period = 2800.0 + 1600.0 * rng.next_f64();
    let mu = |t: f64| 0.5 - 0.48 * math::cos(TAU * t / period);
    let mut z = Vec::with_capacity(n1);
    let mut zk = mu(0.0);
    for k in 0..n1 {
        z.push(zk);
        zk += (mu((k + 1) as f64) - zk) / LATENT_TAU_S
            + 0.015 * spec.noise.latent * rng.next_normal();
        zk = zk.clamp(0.01, 0.99);
    }

    // controls: linear in the latent level, plus slow per-control jitter
    let mut rng = root.fork(2);
    let cj = spec.noise.controls;
    let mut j_hr = Ou::new(JITTER_TAU_S, 3.0 * cj);
    let mut j_hrv = Ou::new(JITTER_TAU_S, 8.0 * cj);
    let mut j_br = Ou::new(JITTER_TAU_S, 1.0 * cj);
    let mut j_brstd = Ou::new(JITTER_TAU_S, 0.12 * cj);
    let mut ctl = Controls {
        hr: Vec::with_capacity(n1),
        hrv: Vec::with_capacity(n1),
        br: Vec::with_capacity(n1),
        brstd: Vec::with_capacity(n1),
        srate: Vec::with_capacity(n1),
    };
    for &zk in &z {
        let hr = (78.0 - 28.0 * zk + j_hr.step(1.0, &mut rng)).clamp(42.0, 110.0);
        let hrv = (25.0 + 95.0 * zk + j_hrv.step(1.0, &mut rng)).clamp(12.0, 138.0);
        let br = (18.5 - 6.5 * zk + j_br.step(1.0, &mut rng)).clamp(10.5, 24.0);
        let brstd = (1.25 - 0.95 * zk + j_brstd.step(1.0, &mut rng)).clamp(0.1, 2.2);
        ctl.srate.push(rate_spread(hr, hrv));
        ctl.hr.push(hr);
        ctl.hrv.push(hrv);
        ctl.br.push(br);
        ctl.brstd.push(brstd);
    }

    let ecg = gen_ecg(spec, &ctl, n1, root.fork(3));
    let breathing = gen_breathing(spec, &ctl, n1, root.fork(4));
    let (occlusion, planted) = gen_occlusion(spec, &ctl, n1, root.fork(5));

    // nuisance channels: intrinsic variation, no latent coupling. Their
    // correlation times are kept short so sample correlations with the
    // slow fatigue trend wash out within one recording.
    let mut rng = root.fork(6);
    let mut device = Ou::new(3.0, 1.0);
    let hr_device: Vec<f64> =
        (0..n1).map(|_| 70.0 + 8.0 * device.step(1.0, &mut rng)).collect();
    let mut rng = root.fork(7);
    let n200 = 200 * n1;
    let mut torque = Ou::new(1.5, 1.0);
    let intertq: Vec<f64> =
        (0..n200).map(|_| 0.8 * torque.step(1.0 / 200.0, &mut rng)).collect();
    let mut rng = root.fork(8);
    let mut wheel = Ou::new(2.0, 1.0);
    let swa: Vec<f64> = (0..n200).map(|_| 15.0 * wheel.step(1.0 / 200.0, &mut rng)).collect();
    let mut rng = root.fork(9);
    let mut lean = Ou::new(1.0, 1.0);
    let posture: Vec<f64> = (0..n1).map(|_| 5.0 + 2.0 * lean.step(1.0, &mut rng)).collect();

    let series = |name: &str, rate: f64, values: Vec<f64>| {
        TimeSeries::new(name, rate, 0.0, values)
            .map_err(|e| SynthError::InvalidSpec(format!("internal channel build failed: {e}")))
    };
    let channels = vec![
        series(CH_BREATHING, 16.0, breathing)?,
        series(CH_ECG, 250.0, ecg)?,
        series(CH_HEART_RATE, 1.0, hr_device)?,
        series(CH_INTERTQ, 200.0, intertq)?,
        series(CH_SWA, 200.0, swa)?,
        series(CH_POSTURE, 1.0, posture)?,
        series(CH_OCCLUSION, 60.0, occlusion)?,
    ];
    Ok(SubjectRecording {
        subject: format!("s{subject_index:02}"),
        channels,
        latent: series("latent", 1.0, z)?,
        planted: series("planted", 1.0, planted)?,
    })
}

/// Beat train with alternating instantaneous rate hr ± s, rendered as
/// zero-sum triangular complexes so the channel mean carries no rate
/// information, plus scaled wander and sensor noise.
fn gen_ecg(spec: &SynthSpec, ctl: &Controls, n1: usize, mut rng: SplitMix64) -> Vec<f64> {
    let n250 = 250 * n1;
    let mut ecg = vec![0.0; n250];
    let mut t = 0.2 + 0.6 * rng.next_f64();
    let mut sign = 1.0;
    while t < n1 as f64 {
        let i = math::round(250.0 * t) as usize;
        if i >= 1 && i + 1 < n250 {
            ecg[i - 1] += -0.35;
            ecg[i] += 1.0;
            ecg[i + 1] += -0.65;
        }
        let k = (t as usize).min(n1 - 1);
        let rate = ctl.hr[k] + sign * ctl.srate[k];
        sign = -sign;
        t += 60.0 / rate;
    }
    let wander_phase = TAU * rng.next_f64();
    let level = spec.noise.ecg;
    for (i, v) in ecg.iter_mut().enumerate() {
        let ts = i as f64 / 250.0;
        *v += level
            * (0.08 * math::sin(TAU * 0.18 * ts + wander_phase) + 0.03 * rng.next_normal());
    }
    ecg
}

/// Sinusoid whose frequency is piecewise constant per breath cycle,
/// alternating br ± brstd so the cycle-rate spread matches the control.
fn gen_breathing(spec: &SynthSpec, ctl: &Controls, n1: usize, mut rng: SplitMix64) -> Vec<f64> {
    let n16 = 16 * n1;
    let mut out = Vec::with_capacity(n16);
    let mut phase = 0.0;
    let mut csign = 1.0;
    let mut rate = ctl.br[0] + csign * ctl.brstd[0];
    let level = spec.noise.breathing;
    for i in 0..n16 {
        if phase >= TAU {
            phase -= TAU;
            csign = -csign;
            let k = (i / 16).min(n1 - 1);
            rate = ctl.br[k] + csign * ctl.brstd[k];
        }
        out.push(math::sin(phase) + level * 0.04 * rng.next_normal());
        phase += TAU * rate / 60.0 / 16.0;
    }
    out
}

/// 60 Hz open/closed trace. Each second closes a dithered number of
/// samples so the trailing-window closed fraction tracks the planted
/// effect of the instantaneous controls; returns the per-second planted
/// PERCLOS alongside.
fn gen_occlusion(
    spec: &SynthSpec,
    ctl: &Controls,
    n1: usize,
    mut rng: SplitMix64,
) -> (Vec<f64>, Vec<f64>) {
    let mut occl = Vec::with_capacity(60 * n1);
    let mut planted = Vec::with_capacity(n1);
    let mut carry = 0.0;
    let level = spec.noise.occlusion;
    let mut f = [0.0f64; 11];
    for k in 0..n1 {
        f[F_HRV] = ctl.hrv[k];
        f[F_HR_AVG60] = ctl.hr[k];
        f[F_BR_AVG60] = ctl.br[k];
        f[F_BR_STD60] = ctl.brstd[k];
        f[F_HR_STD60] = ctl.srate[k];
        let truth = planted_effect(&spec.effect, &f);
        planted.push(truth);
        let p = (truth / 100.0 + level * 0.02 * (2.0 * rng.next_f64() - 1.0)).clamp(0.0, 1.0);
        let target = 60.0 * p + carry;
        let closed = (math::floor(target) as usize).min(60);
        carry = target - closed as f64;
        for j in 0..60 {
            occl.push(if j < closed { 95.0 } else { 5.0 });
        }
    }
    (occl, planted)
}
