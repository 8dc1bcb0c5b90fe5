mod commands;
mod config;
mod error;
mod formats;
mod parallel;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{
    run_ablate, run_dependence, run_evaluate, run_explain, run_featurize, run_importance,
    run_predict, run_synth, run_train, AblateArgs, DependenceArgs, EvaluateArgs, ExplainArgs,
    FeaturizeArgs, ImportanceArgs, PredictArgs, SynthArgs, TrainArgs, ABLATE_KEYS, CV_KEYS,
    DEPENDENCE_KEYS, EVALUATE_KEYS, EXPLAIN_KEYS, FEATURIZE_KEYS, IMPORTANCE_KEYS, PREDICT_KEYS,
    SYNTH_KEYS, TRAIN_CMD_KEYS, TRAIN_KEYS,
};
use config::FileConfig;
use error::CliError;

/// Driver-fatigue pipeline: synthetic recordings, windowed physiological
/// features, gradient-boosted PERCLOS regression, exact attributions.
#[derive(Parser, Debug)]
#[command(name = "fatigue-forge", version, arg_required_else_help = true)]
struct Cli {
    /// key=value file supplying any long option of the subcommand; flags
    /// win over file entries.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker cap; falls back to FATIGUE_FORGE_THREADS, then all cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic subject recordings with known ground truth.
    Synth(SynthArgs),
    /// Extract the windowed feature table from raw recordings.
    Featurize(FeaturizeArgs),
    /// Fit the gradient-boosted regressor.
    Train(TrainArgs),
    /// Score a feature table with a trained model.
    Predict(PredictArgs),
    /// k-fold cross-validation with out-of-fold attributions.
    Evaluate(EvaluateArgs),
    /// Force-layout explanation for a single row.
    Explain(ExplainArgs),
    /// Rank features by global impact.
    Importance(ImportanceArgs),
    /// Dependence data for one feature.
    Dependence(DependenceArgs),
    /// Feature-addition curve over a ranked order.
    Ablate(AblateArgs),
}

fn known_keys(command: &Command) -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = Vec::new();
    match command {
        Command::Synth(_) => keys.extend(SYNTH_KEYS),
        Command::Featurize(_) => keys.extend(FEATURIZE_KEYS),
        Command::Train(_) => {
            keys.extend(TRAIN_CMD_KEYS);
            keys.extend(TRAIN_KEYS);
        }
        Command::Predict(_) => keys.extend(PREDICT_KEYS),
        Command::Evaluate(_) => {
            keys.extend(EVALUATE_KEYS);
            keys.extend(CV_KEYS);
            keys.extend(TRAIN_KEYS);
        }
        Command::Explain(_) => keys.extend(EXPLAIN_KEYS),
        Command::Importance(_) => keys.extend(IMPORTANCE_KEYS),
        Command::Dependence(_) => keys.extend(DEPENDENCE_KEYS),
        Command::Ablate(_) => {
            keys.extend(ABLATE_KEYS);
            keys.extend(CV_KEYS);
            keys.extend(TRAIN_KEYS);
        }
    }
    keys
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path, &known_keys(&cli.command))?,
        None => FileConfig::empty(),
    };
    let threads = parallel::resolve_threads(cli.threads);
    match &cli.command {
        Command::Synth(a) => run_synth(a, &file, threads),
        Command::Featurize(a) => run_featurize(a, &file, threads),
        Command::Train(a) => run_train(a, &file, threads),
        Command::Predict(a) => run_predict(a, &file, threads),
        Command::Evaluate(a) => run_evaluate(a, &file, threads),
        Command::Explain(a) => run_explain(a, &file, threads),
        Command::Importance(a) => run_importance(a, &file, threads),
        Command::Dependence(a) => run_dependence(a, &file, threads),
        Command::Ablate(a) => run_ablate(a, &file, threads),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
