//! Closed-loop check: generate a noise-free synthetic subject, run the full
//! signal pipeline on it, and confirm the extracted target equals the
//! planted effect evaluated on the extracted features.

use fatigue_forge_core::signal::{
    build_dataset, condition_channels, detect_beats, FeaturizeConfig, CH_ECG, F_HR_AVG60,
};
use fatigue_forge_core::synth::{gen_subject, planted_effect, NoiseLevels, SynthSpec};

#[test]
fn zero_noise_pipeline_recovers_the_planted_effect() {
    let spec = SynthSpec {
        duration_s: 900.0,
        subjects: 1,
        noise: NoiseLevels::zero(),
        ..SynthSpec::default()
    };
    let rec = gen_subject(&spec, 0).unwrap();
    let cfg = FeaturizeConfig::default();
    let channels = condition_channels(&rec.channels, &cfg).unwrap();
    let ecg = channels.iter().find(|c| c.name() == CH_ECG).unwrap();
    let beats = detect_beats(ecg).unwrap();
    assert!(!beats.degenerate());
    let built = build_dataset(&channels, &beats, Some(&rec.subject), &cfg).unwrap();
    let d = &built.dataset;

    // skip the first 150 s: trailing windows must fill and filters settle
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for (i, &t) in d.timestamps_s().iter().enumerate() {
        if t < 150.0 {
            continue;
        }
        let want = planted_effect(&spec.effect, &d.row(i));
        let got = d.y()[i];
        worst = worst.max((got - want).abs());
        checked += 1;
    }
    assert!(checked > 700, "only {checked} rows past warm-up");
    assert!(worst <= 2.0, "worst recovered-vs-planted gap {worst}");

    // independent recomputation oracle for the windowed heart rate column
    let bt = beats.beat_times_s();
    for (i, &t) in d.timestamps_s().iter().enumerate() {
        if t < 150.0 {
            continue;
        }
        let mut rates = Vec::new();
        for w in bt.windows(2) {
            if w[1] > t - 60.0 && w[1] <= t + 1e-9 {
                rates.push(60.0 / (w[1] - w[0]));
            }
        }
        let expect: f64 = rates.iter().sum::<f64>() / rates.len() as f64;
        let col = d.column(F_HR_AVG60)[i];
        assert!((col - expect).abs() <= 1e-9, "tick {t}: {col} vs {expect}");
    }
}

#[test]
fn default_noise_still_tracks_the_truth_loosely() {
    let spec = SynthSpec { duration_s: 600.0, subjects: 1, ..SynthSpec::default() };
    let rec = gen_subject(&spec, 0).unwrap();
    let cfg = FeaturizeConfig::default();
    let channels = condition_channels(&rec.channels, &cfg).unwrap();
    let ecg = channels.iter().find(|c| c.name() == CH_ECG).unwrap();
    let beats = detect_beats(ecg).unwrap();
    let built = build_dataset(&channels, &beats, Some(&rec.subject), &cfg).unwrap();
    let d = &built.dataset;
    let mut err_sum = 0.0;
    let mut count = 0usize;
    for (i, &t) in d.timestamps_s().iter().enumerate() {
        if t < 150.0 {
            continue;
        }
        err_sum += (d.y()[i] - planted_effect(&spec.effect, &d.row(i))).abs();
        count += 1;
    }
    let mean_err = err_sum / count as f64;
    assert!(mean_err < 6.0, "mean |recovered - planted| = {mean_err}");
}
