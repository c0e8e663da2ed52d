//! Run configuration, the sequential batch-1 training loop, evaluation,
//! and metrics logging.

use std::fs::{self, File};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::circuit::{Ansatz, EncoderConfig, EncoderMode};
use crate::data::{
    self, filter_and_relabel, fit_norm_stats, normalize, DatasetSplit, NormStats, Role, Sample,
};
use crate::error::{Error, Result};
use crate::model::{HybridModel, ParamCounts};
use crate::nn::{CnnHead, PcaModel};
use crate::optim::{nll_loss, AdamState, LrSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Mnist,
    Cifar10,
}

impl DatasetKind {
    pub fn input_shape(self) -> [usize; 3] {
        match self {
            DatasetKind::Mnist => [28, 28, 1],
            DatasetKind::Cifar10 => [32, 32, 3],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::Cifar10 => "cifar10",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    Cnn,
    Pca,
}

impl HeadKind {
    pub fn name(self) -> &'static str {
        match self {
            HeadKind::Cnn => "cnn",
            HeadKind::Pca => "pca",
        }
    }
}

/// Everything that defines one training run. Serialized into checkpoints
/// so a run can be identified and rebuilt from its artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetKind,
    pub classes: (u8, u8),
    pub head: HeadKind,
    pub ansatz: usize,
    pub reps_encoder: usize,
    pub reps_ansatz: usize,
    pub epochs: usize,
    pub lr: f64,
    pub gamma: f64,
    pub seed: u64,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub encoder_mode: EncoderMode,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// When false the metrics seconds column is written as 0, keeping the
    /// file bit-reproducible across runs.
    pub record_timing: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.classes;
        if a == b {
            return Err(Error::Config(format!(
                "class pair must be distinct, got ({a}, {b})"
            )));
        }
        if a > 9 || b > 9 {
            return Err(Error::Config(format!(
                "class ids must be 0..=9, got ({a}, {b})"
            )));
        }
        self.ansatz_id()?;
        self.encoder_config().validate()?;
        if self.reps_ansatz == 0 {
            return Err(Error::Config("ansatz depth must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        LrSchedule::new(self.lr, self.gamma)?;
        for (name, limit) in [("train", self.train_limit), ("test", self.test_limit)] {
            if limit == Some(0) {
                return Err(Error::Config(format!("{name} limit must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn ansatz_id(&self) -> Result<Ansatz> {
        Ansatz::from_index(self.ansatz)
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig::new(self.reps_encoder, self.encoder_mode)
    }
}

/// Live training state; everything a checkpoint persists.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub model: HybridModel,
    pub adam: AdamState,
    pub schedule: LrSchedule,
    /// Completed epochs.
    pub epoch: u64,
    pub best_test_acc: f64,
    pub norm: NormStats,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub lr: f64,
    pub seconds: f64,
}

impl MetricsRow {
    pub const CSV_HEADER: &'static str = "epoch,loss,train_acc,test_acc,lr,seconds";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.epoch, self.loss, self.train_acc, self.test_acc, self.lr, self.seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub rows: Vec<MetricsRow>,
    pub final_train_acc: f64,
    pub final_test_acc: f64,
    pub best_test_acc: f64,
    pub metrics_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

/// Closed-form parameter counts for a configuration, computable without
/// data. The trained model's actual counts must match these exactly.
pub fn expected_param_counts(config: &RunConfig) -> Result<ParamCounts> {
    let head = match config.head {
        HeadKind::Cnn => CnnHead::zeroed(config.dataset.input_shape(), 0.5, 0)?.n_params(),
        HeadKind::Pca => 20,
    };
    let encoder_scales = match config.encoder_mode {
        EncoderMode::TrainableScale => 4 * config.reps_encoder,
        EncoderMode::DataBound => 0,
    };
    Ok(ParamCounts {
        head,
        quantum_angles: 5 * config.reps_ansatz,
        encoder_scales,
        post: 2,
    })
}

/// One line summarizing the trainable parameter budget.
pub fn parameter_report(counts: ParamCounts) -> String {
    format!(
        "parameters: head {} + ansatz angles {} + encoder scales {} + final unit {} = {}",
        counts.head,
        counts.quantum_angles,
        counts.encoder_scales,
        counts.post,
        counts.total()
    )
}

/// Loads and two-class-filters the configured training data from disk.
/// MNIST expects the standard IDX file names, CIFAR-10 the binary batch
/// names.
pub fn load_train_split(config: &RunConfig) -> Result<DatasetSplit> {
    let dir = &config.data_dir;
    let raw = match config.dataset {
        DatasetKind::Mnist => data::load_mnist(
            &dir.join("train-images-idx3-ubyte"),
            &dir.join("train-labels-idx1-ubyte"),
        )?,
        DatasetKind::Cifar10 => {
            let batches: Vec<PathBuf> = (1..=5)
                .map(|i| dir.join(format!("data_batch_{i}.bin")))
                .collect();
            data::load_cifar10(&batches)?
        }
    };
    let (a, b) = config.classes;
    filter_and_relabel(&raw, a, b, Role::Train)
}

/// Test-split counterpart of [`load_train_split`].
pub fn load_test_split(config: &RunConfig) -> Result<DatasetSplit> {
    let dir = &config.data_dir;
    let raw = match config.dataset {
        DatasetKind::Mnist => data::load_mnist(
            &dir.join("t10k-images-idx3-ubyte"),
            &dir.join("t10k-labels-idx1-ubyte"),
        )?,
        DatasetKind::Cifar10 => data::load_cifar10(&[dir.join("test_batch.bin")])?,
    };
    let (a, b) = config.classes;
    filter_and_relabel(&raw, a, b, Role::Test)
}

pub fn load_splits(config: &RunConfig) -> Result<(DatasetSplit, DatasetSplit)> {
    Ok((load_train_split(config)?, load_test_split(config)?))
}

/// Accuracy percent of the model over a split, dropout in inference mode.
/// Side-effect free: repeated calls give identical results.
pub fn evaluate(model: &mut HybridModel, split: &DatasetSplit) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::Config("cannot evaluate an empty split".into()));
    }
    model.set_training(false);
    let mut correct = 0usize;
    for sample in &split.samples {
        let out = model.forward(&sample.pixels)?;
        if out.predicted() == sample.label {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / split.len() as f64)
}

fn train_one(state: &mut TrainState, sample: &Sample) -> Result<f64> {
    let out = state.model.forward(&sample.pixels)?;
    let loss = nll_loss(out.p0, out.p1, sample.label)?;
    if !loss.is_finite() {
        return Err(Error::Domain(format!("non-finite training loss {loss}")));
    }
    let grads = state.model.backprop(&out, sample.label)?;
    let mut params = state.model.params_flat();
    state.adam.step(&mut params, &grads)?;
    state.model.set_params_flat(&params)?;
    Ok(loss)
}

/// Full run: loads data per the config, then trains. `progress` receives
/// each completed epoch's metrics row.
pub fn train(
    config: &RunConfig,
    progress: impl FnMut(&MetricsRow),
) -> Result<(TrainState, TrainReport)> {
    let (train_split, test_split) = load_splits(config)?;
    train_on_splits(config, train_split, test_split, progress)
}

/// Trains on already-filtered raw splits: shuffles, applies limits,
/// normalizes with train statistics, fits the PCA head if configured, then
/// runs the sequential epoch loop, writing one metrics row per epoch and
/// checkpointing whenever test accuracy improves.
pub fn train_on_splits(
    config: &RunConfig,
    mut train_split: DatasetSplit,
    mut test_split: DatasetSplit,
    mut progress: impl FnMut(&MetricsRow),
) -> Result<(TrainState, TrainReport)> {
    config.validate()?;
    if train_split.meta.role != Role::Train || test_split.meta.role != Role::Test {
        return Err(Error::Config("split roles are swapped or duplicated".into()));
    }

    // Subset selection: one base-seed shuffle, then the first k samples.
    data::shuffle(&mut train_split, config.seed);
    data::shuffle(&mut test_split, config.seed);
    if let Some(limit) = config.train_limit {
        train_split.truncate(limit);
    }
    if let Some(limit) = config.test_limit {
        test_split.truncate(limit);
    }

    let stats = fit_norm_stats(&train_split)?;
    normalize(&mut train_split, &stats)?;
    normalize(&mut test_split, &stats)?;

    let encoder = config.encoder_config();
    let ansatz = config.ansatz_id()?;
    let model = match config.head {
        HeadKind::Cnn => HybridModel::new_cnn(
            config.dataset.input_shape(),
            encoder,
            ansatz,
            config.reps_ansatz,
            config.seed,
        )?,
        HeadKind::Pca => {
            let rows: Vec<&[f64]> = train_split.samples.iter().map(|s| s.pixels.data()).collect();
            let pca = PcaModel::fit(&rows)?;
            HybridModel::new_pca(pca, encoder, ansatz, config.reps_ansatz, config.seed)?
        }
    };
    let counts = model.param_counts();
    debug_assert_eq!(counts, expected_param_counts(config)?);

    let adam = AdamState::new(counts.total(), config.lr)?;
    let schedule = LrSchedule::new(config.lr, config.gamma)?;
    let mut state = TrainState {
        model,
        adam,
        schedule,
        epoch: 0,
        best_test_acc: f64::NEG_INFINITY,
        norm: stats,
        config: config.clone(),
    };

    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let metrics_path = config.out_dir.join("metrics.csv");
    let checkpoint_path = config.out_dir.join("checkpoint.json");
    let mut metrics = File::create(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
    writeln!(metrics, "{}", MetricsRow::CSV_HEADER).map_err(|e| Error::io(&metrics_path, e))?;

    let mut rows = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let timer = Instant::now();
        data::shuffle(&mut train_split, config.seed ^ state.epoch);
        state.adam.set_lr(state.schedule.lr());
        state.model.set_training(true);

        let mut loss_sum = 0.0;
        for (i, sample) in train_split.samples.iter().enumerate() {
            loss_sum += train_one(&mut state, sample).map_err(|e| Error::at_sample(i, e))?;
        }
        let loss = loss_sum / train_split.len() as f64;

        let train_acc = evaluate(&mut state.model, &train_split)?;
        let test_acc = evaluate(&mut state.model, &test_split)?;
        let lr = state.schedule.lr();
        state.schedule.advance();
        state.epoch += 1;

        let row = MetricsRow {
            epoch: state.epoch as usize,
            loss,
            train_acc,
            test_acc,
            lr,
            seconds: if config.record_timing {
                timer.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        writeln!(metrics, "{}", row.csv_line()).map_err(|e| Error::io(&metrics_path, e))?;
        metrics.flush().map_err(|e| Error::io(&metrics_path, e))?;

        if test_acc > state.best_test_acc {
            state.best_test_acc = test_acc;
            Checkpoint::from_state(&state).save(&checkpoint_path)?;
        }
        progress(&row);
        rows.push(row);
    }

    let last = rows.last().expect("epochs >= 1 validated");
    let report = TrainReport {
        final_train_acc: last.train_acc,
        final_test_acc: last.test_acc,
        best_test_acc: state.best_test_acc,
        rows,
        metrics_path,
        checkpoint_path,
    };
    Ok((state, report))
}
