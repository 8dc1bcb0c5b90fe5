//! One function per subcommand. Every parameter can come from a flag or
//! from the `--config` key of the same name (flag wins); defaults match the
//! library defaults. Each command writes its primary output plus a run
//! manifest beside it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;

use fatigue_forge_core::eval::{
    forward_feature_curve, kfold_cv, ols_baseline, tree_baselines, CvOptions, FoldGrouping,
    R2Convention,
};
use fatigue_forge_core::gbt::{train, TrainConfig};
use fatigue_forge_core::shap::{dependence, explain_instance, importance};
use fatigue_forge_core::signal::{
    build_dataset, condition_channels, detect_beats, Dataset, FeaturizeConfig, CH_ECG,
};
use fatigue_forge_core::synth::{gen_subject, EffectParams, NoiseLevels, SynthSpec};

use crate::config::FileConfig;
use crate::error::CliError;
use crate::formats::{
    read_dataset_csv, read_explanations_csv, read_importance_csv, read_model, read_subject,
    write_curve_csv, write_dataset_csv, write_dependence_csvs, write_explanations_csv,
    write_force_json, write_importance_csv, write_json_pretty, write_model,
    write_predictions_csv, write_run_manifest, write_subject, BaselinesDoc, ReportDoc,
    RunManifest, SUBJECT_MANIFEST,
};
use crate::parallel::map_indexed;

// ---- shared flag groups -------------------------------------------------

#[derive(Args, Debug, Clone, Default)]
pub struct TrainFlags {
    /// Split levels per tree.
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Learning rate (shrinkage).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Boosting rounds.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// L1 penalty on leaf weights.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// L2 penalty on leaf weights.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Minimum split gain.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Row fraction drawn per tree.
    #[arg(long)]
    pub subsample: Option<f64>,
    /// Feature fraction drawn per tree.
    #[arg(long)]
    pub colsample: Option<f64>,
    /// Minimum hessian sum per child.
    #[arg(long)]
    pub min_child_weight: Option<f64>,
    /// Seed for sampling and, where applicable, fold assignment.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub const TRAIN_KEYS: &[&str] = &[
    "max-depth",
    "eta",
    "rounds",
    "alpha",
    "lambda",
    "gamma",
    "subsample",
    "colsample",
    "min-child-weight",
    "seed",
];

fn resolve_train(flags: &TrainFlags, file: &FileConfig) -> Result<TrainConfig, CliError> {
    let d = TrainConfig::default();
    Ok(TrainConfig {
        max_depth: file.resolve(&flags.max_depth, "max-depth", d.max_depth)?,
        learning_rate: file.resolve(&flags.eta, "eta", d.learning_rate)?,
        n_estimators: file.resolve(&flags.rounds, "rounds", d.n_estimators)?,
        lambda: file.resolve(&flags.lambda, "lambda", d.lambda)?,
        alpha: file.resolve(&flags.alpha, "alpha", d.alpha)?,
        gamma: file.resolve(&flags.gamma, "gamma", d.gamma)?,
        subsample: file.resolve(&flags.subsample, "subsample", d.subsample)?,
        colsample: file.resolve(&flags.colsample, "colsample", d.colsample)?,
        min_child_weight: file.resolve(
            &flags.min_child_weight,
            "min-child-weight",
            d.min_child_weight,
        )?,
        seed: file.resolve(&flags.seed, "seed", d.seed)?,
    })
}

#[derive(Args, Debug, Clone, Default)]
pub struct CvFlags {
    /// Number of folds.
    #[arg(long)]
    pub k: Option<usize>,
    /// Fold grouping: rows | subject.
    #[arg(long)]
    pub grouping: Option<String>,
    /// R-squared convention: paper | standard.
    #[arg(long)]
    pub convention: Option<String>,
}

pub const CV_KEYS: &[&str] = &["k", "grouping", "convention"];

fn parse_grouping(raw: &str) -> Result<FoldGrouping, CliError> {
    match raw {
        "rows" => Ok(FoldGrouping::Rows),
        "subject" => Ok(FoldGrouping::Subject),
        other => Err(CliError::Validation(format!(
            "field `grouping`: expected `rows` or `subject`, got `{other}`"
        ))),
    }
}

fn parse_convention(raw: &str) -> Result<R2Convention, CliError> {
    match raw {
        "paper" => Ok(R2Convention::Paper),
        "standard" => Ok(R2Convention::Standard),
        other => Err(CliError::Validation(format!(
            "field `convention`: expected `paper` or `standard`, got `{other}`"
        ))),
    }
}

fn resolve_cv(
    flags: &CvFlags,
    seed: u64,
    file: &FileConfig,
) -> Result<CvOptions, CliError> {
    let grouping = parse_grouping(&file.resolve(
        &flags.grouping,
        "grouping",
        String::from("rows"),
    )?)?;
    let convention = parse_convention(&file.resolve(
        &flags.convention,
        "convention",
        String::from("paper"),
    )?)?;
    Ok(CvOptions {
        k: file.resolve(&flags.k, "k", 10)?,
        seed,
        grouping,
        convention,
        explain: true,
        keep_models: false,
    })
}

/// `report.json` -> `report.explanations.csv` and the like.
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    match path.file_stem() {
        Some(stem) => {
            let mut name = stem.to_os_string();
            name.push(suffix);
            path.with_file_name(name)
        }
        None => path.with_file_name(suffix.trim_start_matches('.')),
    }
}

fn check_feature_names(
    expected: &[String],
    expected_src: &str,
    got: &[String],
    got_src: &str,
) -> Result<(), CliError> {
    if expected.len() != got.len() {
        return Err(CliError::Validation(format!(
            "{got_src} has {} feature columns but {expected_src} expects {}",
            got.len(),
            expected.len()
        )));
    }
    for (j, (e, g)) in expected.iter().zip(got).enumerate() {
        if e != g {
            return Err(CliError::Validation(format!(
                "feature {j} is `{g}` in {got_src} but `{e}` in {expected_src}"
            )));
        }
    }
    Ok(())
}

// ---- synth --------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory; one subdirectory per subject.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub subjects: Option<usize>,
    /// Recording length per subject, seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scales every corruption source at once; 0 disables them.
    #[arg(long)]
    pub noise: Option<f64>,
    /// PERCLOS drop per beat/min on the steep heart-rate segment.
    #[arg(long)]
    pub hr_slope: Option<f64>,
    /// Heart-rate-variability value at the bottom of its V, ms.
    #[arg(long)]
    pub hrv_vertex: Option<f64>,
    /// Breathing rate below which its effect saturates, breaths/min.
    #[arg(long)]
    pub br_threshold: Option<f64>,
    /// Breathing-spread value where its effect reaches zero.
    #[arg(long)]
    pub brstd_knee: Option<f64>,
    /// Beat-rate-spread value at the bottom of its V, beats/min.
    #[arg(long)]
    pub hrstd_vertex: Option<f64>,
}

pub const SYNTH_KEYS: &[&str] = &[
    "out",
    "subjects",
    "duration",
    "seed",
    "noise",
    "hr-slope",
    "hrv-vertex",
    "br-threshold",
    "brstd-knee",
    "hrstd-vertex",
];

pub fn run_synth(a: &SynthArgs, file: &FileConfig, threads: usize) -> Result<(), CliError> {
    let started = Instant::now();
    let out = file.resolve(&a.out, "out", PathBuf::from("synth_data"))?;
    let d = SynthSpec::default();
    let e = EffectParams::default();
    let noise = file.resolve(&a.noise, "noise", 1.0)?;
    let spec = SynthSpec {
        seed: file.resolve(&a.seed, "seed", d.seed)?,
        duration_s: file.resolve(&a.duration, "duration", d.duration_s)?,
        subjects: file.resolve(&a.subjects, "subjects", d.subjects)?,
        noise: NoiseLevels {
            latent: noise,
            controls: noise,
            ecg: noise,
            breathing: noise,
            occlusion: noise,
        },
        effect: EffectParams {
            hr_slope: file.resolve(&a.hr_slope, "hr-slope", e.hr_slope)?,
            hrv_vertex_ms: file.resolve(&a.hrv_vertex, "hrv-vertex", e.hrv_vertex_ms)?,
            br_threshold: file.resolve(&a.br_threshold, "br-threshold", e.br_threshold)?,
            brstd_knee: file.resolve(&a.brstd_knee, "brstd-knee", e.brstd_knee)?,
            hrstd_vertex: file.resolve(&a.hrstd_vertex, "hrstd-vertex", e.hrstd_vertex)?,
        },
    };
    spec.validate()?;

    let indices: Vec<usize> = (0..spec.subjects).collect();
    let recordings = map_indexed(&indices, threads, |_, &i| gen_subject(&spec, i));

    let mut manifest = RunManifest::new("synth", threads);
    manifest.seed = Some(spec.seed);
    for rec in recordings {
        let rec = rec?;
        let dir = out.join(&rec.subject);
        write_subject(&dir, &rec)?;
        manifest.output(&dir);
    }
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_run_manifest(&out, &manifest)
}

// ---- featurize ----------------------------------------------------------

#[derive(Args, Debug)]
pub struct FeaturizeArgs {
    /// Directory of subject recordings, as written by `synth`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Feature-table CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trailing statistics window, seconds.
    #[arg(long)]
    pub window: Option<f64>,
    /// Data span required before windowed rows count, seconds.
    #[arg(long)]
    pub warmup: Option<f64>,
}

pub const FEATURIZE_KEYS: &[&str] = &["input", "out", "window", "warmup"];

fn subject_dirs(input: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(input).map_err(|e| CliError::io(input, e))? {
        let entry = entry.map_err(|e| CliError::io(input, e))?;
        let path = entry.path();
        if path.is_dir() && path.join(SUBJECT_MANIFEST).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Validation(format!(
            "no subject directories with {SUBJECT_MANIFEST} under `{}`",
            input.display()
        )));
    }
    Ok(dirs)
}

pub fn run_featurize(
    a: &FeaturizeArgs,
    file: &FileConfig,
    threads: usize,
) -> Result<(), CliError> {
    let started = Instant::now();
    let input = file.resolve(&a.input, "input", PathBuf::from("synth_data"))?;
    let out = file.resolve(&a.out, "out", PathBuf::from("dataset.csv"))?;
    let d = FeaturizeConfig::default();
    let cfg = FeaturizeConfig {
        window_s: file.resolve(&a.window, "window", d.window_s)?,
        warmup_s: file.resolve(&a.warmup, "warmup", d.warmup_s)?,
        ..d
    };

    let dirs = subject_dirs(&input)?;
    let built = map_indexed(&dirs, threads, |_, dir| -> Result<_, CliError> {
        let (subject, raw) = read_subject(dir)?;
        let channels = condition_channels(&raw, &cfg)?;
        let ecg = channels
            .iter()
            .find(|c| c.name() == CH_ECG)
            .ok_or_else(|| {
                CliError::Validation(format!(
                    "{}: no `{CH_ECG}` channel in the manifest",
                    dir.display()
                ))
            })?;
        let beats = detect_beats(ecg)?;
        let built = build_dataset(&channels, &beats, Some(&subject), &cfg)?;
        Ok((subject, built))
    });

    let mut manifest = RunManifest::new("featurize", threads);
    let mut parts = Vec::with_capacity(dirs.len());
    let mut dropped = 0usize;
    for (dir, result) in dirs.iter().zip(built) {
        manifest.input(dir);
        let (subject, b) = result?;
        dropped += b.dropped_rows;
        for w in &b.warnings {
            manifest.notes.push(format!("{subject}: {w}"));
        }
        parts.push(b.dataset);
    }
    let data = Dataset::concat(&parts)?;
    write_dataset_csv(&out, &data)?;

    if dropped > 0 {
        manifest.notes.push(format!("{dropped} non-finite rows dropped"));
    }
    manifest.output(&out);
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_run_manifest(&out, &manifest)
}

// ---- train --------------------------------------------------------------

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Feature-table CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
}

pub const TRAIN_CMD_KEYS: &[&str] = &["data", "out"];

pub fn run_train(a: &TrainArgs, file: &FileConfig, threads: usize) -> Result<(), CliError> {
    let started = Instant::now();
    let data_path = file.resolve(&a.data, "data", PathBuf::from("dataset.csv"))?;
    let out = file.resolve(&a.out, "out", PathBuf::from("model.json"))?;
    let cfg = resolve_train(&a.train, file)?;

    let data = read_dataset_csv(&data_path)?;
    let model = train(&data, &cfg)?;
    write_model(&out, &model)?;

    let mut manifest = RunManifest::new("train", threads);
    manifest.seed = Some(cfg.seed);
    manifest.input(&data_path);
    manifest.output(&out);
    manifest.notes.push(format!(
        "{} rows x {} features, {} trees",
        data.n(),
        data.m(),
        model.trees.len()
    ));
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_run_manifest(&out, &manifest)
}

// ---- predict ------------------------------------------------------------

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Feature-table CSV to score.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Predictions CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const PREDICT_KEYS: &[&str] = &["model", "data", "out"];

pub fn run_predict(a: &PredictArgs, file: &FileConfig, threads: usize) -> Result<(), CliError> {
    let started = Instant::now();
    let model_path = file.resolve(&a.model, "model", PathBuf::from("model.json"))?;
    let data_path = file.resolve(&a.data, "data", PathBuf::from("dataset.csv"))?;
    let out = file.resolve(&a.out, "out", PathBuf::from("predictions.csv"))?;

    let model = read_model(&model_path)?;
    let data = read_dataset_csv(&data_path)?;
    check_feature_names(&model.feature_names, "the model", data.feature_names(), "the dataset")?;
    let predictions = model.predict_dataset(&data)?;
    write_predictions_csv(&out, &predictions)?;

    let mut manifest = RunManifest::new("predict", threads);
    manifest.input(&model_path);
    manifest.input(&data_path);
    manifest.output(&out);
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_run_manifest(&out, &manifest)
}

// ---- evaluate -----------------------------------------------------------

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Feature-table CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Report JSON path; the out-of-fold explanations CSV lands beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also score OLS, single-tree and random-forest baselines.
    #[arg(long)]
    pub baselines: bool,
    /// Trees in the random-forest baseline.
    #[arg(long)]
    pub forest_size: Option<usize>,
    #[command(flatten)]
    pub cv: CvFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

pub const EVALUATE_KEYS: &[&str] = &["data", "out", "baselines", "forest-size"];

pub fn run_evaluate(a: &EvaluateArgs, file: &FileConfig, threads: usize) -> Result<(), CliError> {
    let started = Instant::now();
    let data_path = file.resolve(&a.data, "data", PathBuf::from("dataset.csv"))?;
    let out = file.resolve(&a.out, "out", PathBuf::from("report.json"))?;
    let cfg = resolve_train(&a.train, file)?;
    let opts = resolve_cv(&a.cv, cfg.seed, file)?;
    let with_baselines = file.resolve_switch(a.baselines, "baselines")?;
    let forest_size = file.resolve(&a.forest_size, "forest-size", 50)?;

    let data = read_dataset_csv(&data_path)?;
    let outcome = kfold_cv(&data, &cfg, &opts)?;
    let baselines = if with_baselines {
        let trees = tree_baselines(&data, &cfg, &opts, forest_size)?;
        Some(BaselinesDoc {
            ols: ols_baseline(&data, &opts)?,
            single_tree: trees.single_tree,
            random_forest: trees.random_forest,
        })
    } else {
        None
    };

    write_json_pretty(&out, &ReportDoc { report: &outcome.report, baselines })?;
    let expl_path = with_suffix(&out, ".explanations.csv");
    write_explanations_csv(&expl_path, &outcome.explanations, data.feature_names())?;

    let mut manifest = RunManifest::new("evaluate", threads);
    manifest.seed = Some(opts.seed);
    manifest.input(&data_path);
    manifest.output(&out);
    manifest.output(&expl_path);
    manifest.notes.push(format!(
        "k={}, grouping={}, convention={}",
        opts.k,
        match opts.grouping {
            FoldGrouping::Rows => "rows",
            FoldGrouping::Subject => "subject",
        },
        match opts.convention {
            R2Convention::Paper => "paper",
            R2Convention::Standard => "standard",
        },
    ));
    if with_baselines {
        manifest.notes.push(format!("baselines with forest_size={forest_size}"));
    }
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_run_manifest(&out, &manifest)
}

// ---- explain ------------------------------------------------------------

#[derive(Args, Debug)]
pub struct ExplainArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Feature-table CSV holding the row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Row to explain (0-based).
    #[arg(long)]
    pub row: Option<usize>,
    /// Force-record JSON to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const EXPLAIN_KEYS: &[&str] = &["model", "data", "row", "out"];

pub fn run_explain(a: &ExplainArgs, file: &FileConfig, threads: usize) -> Result<(), CliError> {
    let started = Instant::now();
    let model_path = file.resolve(&a.model, "model", PathBuf::from("model.json"))?;
    let data_path = file.resolve(&a.data, "data", PathBuf::from("dataset.csv"))?;
    let row = file.resolve(&a.row, "row", 0usize)?;
    let out = file.resolve(&a.out, "out", PathBuf::from("force.json"))?;

    let model = read_model(&model_path)?;
    let data = read_dataset_csv(&data_path)?;
    check_feature_names(&model.feature_names, "the model", data.feature_names(), "the dataset")?;
    if row >= data.n() {
        return Err(CliError::Validation(format!(
            "field `row`: {row} out of range, dataset has {} rows",
            data.n()
        )));
    }
    let record = explain_instance(&model, &data.row(row))?;
    write_force_json(&out, &record)?;

    let mut manifest = RunManifest::new("explain", threads);
    manifest.input(&model_path);
    manifest.input(&data_path);
    manifest.output(&out);
    manifest.notes.push(format!("row={row}"));
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_run_manifest(&out, &manifest)
}

// ---- importance ---------------------------------------------------------

#[derive(Args, Debug)]
pub struct ImportanceArgs {
    /// Explanations CSV, as written by `evaluate`.
    #[arg(long)]
    pub explanations: Option<PathBuf>,
    /// Ranking CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const IMPORTANCE_KEYS: &[&str] = &["explanations", "out"];

pub fn run_importance(
    a: &ImportanceArgs,
    file: &FileConfig,
    threads: usize,
) -> Result<(), CliError> {
    let started = Instant::now();
    let expl_path = file.resolve(
        &a.explanations,
        "explanations",
        PathBuf::from("report.explanations.csv"),
    )?;
    let out = file.resolve(&a.out, "out", PathBuf::from("importance.csv"))?;

    let (names, explanations) = read_explanations_csv(&expl_path)?;
    let ranking = importance(&explanations, &names)?;
    write_importance_csv(&out, &ranking)?;

    let mut manifest = RunManifest::new("importance", threads);
    manifest.input(&expl_path);
    manifest.output(&out);
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_run_manifest(&out, &manifest)
}

// ---- dependence ---------------------------------------------------------

#[derive(Args, Debug)]
pub struct DependenceArgs {
    /// Explanations CSV, as written by `evaluate`.
    #[arg(long)]
    pub explanations: Option<PathBuf>,
    /// Feature-table CSV the explanations refer to.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Feature to plot.
    #[arg(long)]
    pub feature: Option<String>,
    /// Number of equal-width bins for the mean curve.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Output prefix; writes PREFIX.points.csv and PREFIX.bins.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const DEPENDENCE_KEYS: &[&str] = &["explanations", "data", "feature", "bins", "out"];

pub fn run_dependence(
    a: &DependenceArgs,
    file: &FileConfig,
    threads: usize,
) -> Result<(), CliError> {
    let started = Instant::now();
    let expl_path = file.resolve(
        &a.explanations,
        "explanations",
        PathBuf::from("report.explanations.csv"),
    )?;
    let data_path = file.resolve(&a.data, "data", PathBuf::from("dataset.csv"))?;
    let feature: String = file.require(&a.feature, "feature")?;
    let bins = file.resolve(&a.bins, "bins", 20usize)?;
    let prefix = file.resolve(&a.out, "out", PathBuf::from("dependence"))?;

    let data = read_dataset_csv(&data_path)?;
    let (names, explanations) = read_explanations_csv(&expl_path)?;
    check_feature_names(data.feature_names(), "the dataset", &names, "the explanations file")?;
    let j = data.feature_index(&feature).ok_or_else(|| {
        CliError::Validation(format!(
            "field `feature`: unknown feature `{feature}`; dataset has: {}",
            data.feature_names().join(", ")
        ))
    })?;
    let column = data.column(j);
    let mut values = Vec::with_capacity(explanations.len());
    for e in &explanations {
        let r = e.row_index.unwrap_or(0);
        if r >= data.n() {
            return Err(CliError::Validation(format!(
                "{}: row {r} not present in `{}`",
                expl_path.display(),
                data_path.display()
            )));
        }
        values.push(column[r]);
    }
    let dep = dependence(&explanations, &values, j, &feature, bins)?;

    let points_path = with_suffix(&prefix, ".points.csv");
    let bins_path = with_suffix(&prefix, ".bins.csv");
    write_dependence_csvs(&points_path, &bins_path, &dep)?;

    let mut manifest = RunManifest::new("dependence", threads);
    manifest.input(&expl_path);
    manifest.input(&data_path);
    manifest.output(&points_path);
    manifest.output(&bins_path);
    manifest.notes.push(format!("feature={feature}, bins={bins}"));
    if let Some(note) = &dep.note {
        manifest.notes.push(note.clone());
    }
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_json_pretty(&with_suffix(&prefix, ".run.json"), &manifest)
}

// ---- ablate -------------------------------------------------------------

#[derive(Args, Debug)]
pub struct AblateArgs {
    /// Feature-table CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Curve CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Importance CSV fixing the feature order; defaults to an internal
    /// out-of-fold ranking computed with the same seed.
    #[arg(long)]
    pub importance: Option<PathBuf>,
    #[command(flatten)]
    pub cv: CvFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

pub const ABLATE_KEYS: &[&str] = &["data", "out", "importance"];

pub fn run_ablate(a: &AblateArgs, file: &FileConfig, threads: usize) -> Result<(), CliError> {
    let started = Instant::now();
    let data_path = file.resolve(&a.data, "data", PathBuf::from("dataset.csv"))?;
    let out = file.resolve(&a.out, "out", PathBuf::from("curve.csv"))?;
    let importance_path = match &a.importance {
        Some(p) => Some(p.clone()),
        None => file.parse::<PathBuf>("importance")?,
    };
    let cfg = resolve_train(&a.train, file)?;
    let opts = resolve_cv(&a.cv, cfg.seed, file)?;

    let data = read_dataset_csv(&data_path)?;
    let mut manifest = RunManifest::new("ablate", threads);
    manifest.seed = Some(opts.seed);
    manifest.input(&data_path);

    let ranking: Vec<usize> = match &importance_path {
        Some(path) => {
            manifest.input(path);
            let ordered = read_importance_csv(path)?;
            let mut ranking = Vec::with_capacity(ordered.len());
            for name in &ordered {
                let j = data.feature_index(name).ok_or_else(|| {
                    CliError::Validation(format!(
                        "{}: feature `{name}` not in `{}`",
                        path.display(),
                        data_path.display()
                    ))
                })?;
                ranking.push(j);
            }
            ranking
        }
        None => {
            manifest.notes.push(String::from("ranking from internal out-of-fold pass"));
            let outcome = kfold_cv(&data, &cfg, &opts)?;
            importance(&outcome.explanations, data.feature_names())?.order()
        }
    };

    let points = forward_feature_curve(&data, &cfg, &opts, &ranking)?;
    write_curve_csv(&out, &points)?;

    manifest.output(&out);
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    write_run_manifest(&out, &manifest)
}
