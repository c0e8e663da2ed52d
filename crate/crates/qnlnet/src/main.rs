//! Command-line interface: train, eval, and sweep. Every flag can also be
//! set through a QNLNET_* environment variable.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qnlnet::checkpoint::Checkpoint;
use qnlnet::circuit::EncoderMode;
use qnlnet::data::{normalize, shuffle};
use qnlnet::sweep::sweep;
use qnlnet::train::{
    evaluate, expected_param_counts, load_test_split, parameter_report, train, DatasetKind,
    HeadKind, MetricsRow, RunConfig,
};
use qnlnet::Result;

#[derive(Parser)]
#[command(name = "qnlnet", version, about = "Hybrid quantum-classical binary image classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model; writes metrics.csv and checkpoint.json to --out.
    Train(TrainArgs),
    /// Evaluate a checkpoint on its configured test split.
    Eval(EvalArgs),
    /// Train every (encoder reps, ansatz depth) pair in {1,2,3}x{1,2,3}.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Mnist,
    Cifar10,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeadArg {
    Cnn,
    Pca,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncoderModeArg {
    /// Fixed encoding phases 2*x.
    Data,
    /// Per-repetition trainable phase scales, initialized at 2.
    Trainable,
}

fn parse_classes(text: &str) -> std::result::Result<(u8, u8), String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"A,B\", got {text:?}"));
    }
    let parse = |p: &str| {
        p.trim()
            .parse::<u8>()
            .map_err(|_| format!("bad class id {:?}", p.trim()))
    };
    Ok((parse(parts[0])?, parse(parts[1])?))
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, value_enum, env = "QNLNET_DATASET")]
    dataset: DatasetArg,
    /// Class pair "A,B" to classify, e.g. "0,1".
    #[arg(long, value_parser = parse_classes, env = "QNLNET_CLASSES")]
    classes: (u8, u8),
    #[arg(long, value_enum, env = "QNLNET_HEAD")]
    head: HeadArg,
    /// Entanglement pattern: 0 cyclic, 1 reverse chain, 2 mixed.
    #[arg(long, env = "QNLNET_ANSATZ", value_parser = clap::value_parser!(u8).range(0..=2))]
    ansatz: u8,
    #[arg(long, env = "QNLNET_EPOCHS")]
    epochs: usize,
    #[arg(long, env = "QNLNET_LR")]
    lr: f64,
    /// Exponential learning-rate decay per epoch.
    #[arg(long, env = "QNLNET_GAMMA")]
    gamma: f64,
    #[arg(long, env = "QNLNET_SEED")]
    seed: u64,
    /// Use only the first N training samples after the seeded shuffle.
    #[arg(long, env = "QNLNET_TRAIN_LIMIT")]
    train_limit: Option<usize>,
    #[arg(long, env = "QNLNET_TEST_LIMIT")]
    test_limit: Option<usize>,
    #[arg(long, value_enum, default_value = "data", env = "QNLNET_ENCODER_MODE")]
    encoder_mode: EncoderModeArg,
    /// Directory holding the dataset files under their standard names.
    #[arg(long, env = "QNLNET_DATA_DIR")]
    data_dir: PathBuf,
    /// Output directory for metrics and checkpoints.
    #[arg(long = "out", env = "QNLNET_OUT")]
    out_dir: PathBuf,
    /// Write 0 in the metrics seconds column so reruns are bit-identical.
    #[arg(long, env = "QNLNET_NO_TIMING")]
    no_timing: bool,
}

impl CommonArgs {
    fn config(&self, reps_encoder: usize, reps_ansatz: usize) -> RunConfig {
        RunConfig {
            dataset: match self.dataset {
                DatasetArg::Mnist => DatasetKind::Mnist,
                DatasetArg::Cifar10 => DatasetKind::Cifar10,
            },
            classes: self.classes,
            head: match self.head {
                HeadArg::Cnn => HeadKind::Cnn,
                HeadArg::Pca => HeadKind::Pca,
            },
            ansatz: self.ansatz as usize,
            reps_encoder,
            reps_ansatz,
            epochs: self.epochs,
            lr: self.lr,
            gamma: self.gamma,
            seed: self.seed,
            train_limit: self.train_limit,
            test_limit: self.test_limit,
            encoder_mode: match self.encoder_mode {
                EncoderModeArg::Data => EncoderMode::DataBound,
                EncoderModeArg::Trainable => EncoderMode::TrainableScale,
            },
            data_dir: self.data_dir.clone(),
            out_dir: self.out_dir.clone(),
            record_timing: !self.no_timing,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Encoder repetitions r.
    #[arg(long, env = "QNLNET_REPS_ENCODER")]
    reps_encoder: usize,
    /// Ansatz depth D.
    #[arg(long, env = "QNLNET_REPS_ANSATZ")]
    reps_ansatz: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint file written by train or sweep.
    #[arg(long, env = "QNLNET_CHECKPOINT")]
    checkpoint: PathBuf,
    #[arg(long, env = "QNLNET_DATA_DIR")]
    data_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
}

fn print_row(row: &MetricsRow, timed: bool) {
    let seconds = if timed {
        format!("  {:.1}s", row.seconds)
    } else {
        String::new()
    };
    println!(
        "epoch {:>3}: loss {:.6}  train {:.2}%  test {:.2}%  lr {:.3e}{seconds}",
        row.epoch, row.loss, row.train_acc, row.test_acc, row.lr
    );
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let config = args.common.config(args.reps_encoder, args.reps_ansatz);
    config.validate()?;
    println!("{}", parameter_report(expected_param_counts(&config)?));
    let timed = config.record_timing;
    let (_, report) = train(&config, |row| print_row(row, timed))?;
    println!(
        "best test accuracy {:.2}%, checkpoint {}",
        report.best_test_acc,
        report.checkpoint_path.display()
    );
    println!("metrics written to {}", report.metrics_path.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let mut state = Checkpoint::load(&args.checkpoint)?.restore()?;
    let mut config = state.config.clone();
    config.data_dir = args.data_dir;

    // Reproduce the training-time evaluation protocol exactly: seeded
    // shuffle, optional truncation, then the stored normalization.
    let mut test_split = load_test_split(&config)?;
    shuffle(&mut test_split, config.seed);
    if let Some(limit) = config.test_limit {
        test_split.truncate(limit);
    }
    normalize(&mut test_split, &state.norm)?;

    let acc = evaluate(&mut state.model, &test_split)?;
    println!(
        "test accuracy over {} samples: {:.2}%",
        test_split.len(),
        acc
    );
    println!(
        "checkpoint from epoch {}, best recorded test accuracy {:.2}%",
        state.epoch, state.best_test_acc
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let base = args.common.config(1, 1);
    base.validate()?;
    let report = sweep(&base, |run| match &run.result {
        Ok(outcome) => println!(
            "r={} D={}: ok  train {:.2}%  test {:.2}%",
            run.reps_encoder, run.reps_ansatz, outcome.train_acc, outcome.test_acc
        ),
        Err(msg) => println!("r={} D={}: failed  {msg}", run.reps_encoder, run.reps_ansatz),
    })?;
    let agg = report.aggregate;
    println!(
        "sweep done: {} ok, {} failed; test acc mean {:.2}% (std {:.2})",
        agg.runs_ok, agg.runs_failed, agg.test_acc_mean, agg.test_acc_std
    );
    println!("per-run table {}", report.runs_csv.display());
    println!("summary {}", report.summary_csv.display());
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
