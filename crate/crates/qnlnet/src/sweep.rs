//! Grid sweep over encoder repetitions and ansatz depth. Each cell trains
//! in its own subdirectory; a run that fails is recorded and the sweep
//! keeps going.

use std::fs::{self, File};
use std::io::Write;
use std::path::PathBuf;

use crate::data::DatasetSplit;
use crate::error::{Error, Result};
use crate::train::{load_splits, train_on_splits, RunConfig};

/// Values swept for both encoder repetitions and ansatz depth.
pub const GRID: [usize; 3] = [1, 2, 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub train_acc: f64,
    pub test_acc: f64,
}

/// One grid cell; failures carry the stringified error.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub reps_encoder: usize,
    pub reps_ansatz: usize,
    pub out_dir: PathBuf,
    pub result: std::result::Result<RunOutcome, String>,
}

impl SweepRun {
    pub const CSV_HEADER: &'static str =
        "reps_encoder,ansatz_depth,status,train_acc,test_acc,detail";

    pub fn csv_line(&self) -> String {
        match &self.result {
            Ok(outcome) => format!(
                "{},{},ok,{},{},",
                self.reps_encoder, self.reps_ansatz, outcome.train_acc, outcome.test_acc
            ),
            Err(msg) => format!(
                "{},{},failed,,,{}",
                self.reps_encoder,
                self.reps_ansatz,
                csv_field(msg)
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub train_acc_mean: f64,
    pub train_acc_std: f64,
    pub test_acc_mean: f64,
    pub test_acc_std: f64,
    pub runs_ok: usize,
    pub runs_failed: usize,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub runs: Vec<SweepRun>,
    pub aggregate: Aggregate,
    pub runs_csv: PathBuf,
    pub summary_csv: PathBuf,
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    match values.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (values[0], 0.0),
        n => {
            let mean = values.iter().sum::<f64>() / n as f64;
            let var =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (mean, var.sqrt())
        }
    }
}

/// Means and sample (n-1) deviations of final-epoch accuracy over the
/// successful runs. With no successes the means are NaN.
pub fn aggregate(runs: &[SweepRun]) -> Aggregate {
    let ok: Vec<RunOutcome> = runs
        .iter()
        .filter_map(|r| r.result.as_ref().ok().copied())
        .collect();
    let train: Vec<f64> = ok.iter().map(|o| o.train_acc).collect();
    let test: Vec<f64> = ok.iter().map(|o| o.test_acc).collect();
    let (train_acc_mean, train_acc_std) = mean_std(&train);
    let (test_acc_mean, test_acc_std) = mean_std(&test);
    Aggregate {
        train_acc_mean,
        train_acc_std,
        test_acc_mean,
        test_acc_std,
        runs_ok: ok.len(),
        runs_failed: runs.len() - ok.len(),
    }
}

pub const SUMMARY_HEADER: &str = "dataset,ansatz,model,lr,train_acc_mean,train_acc_std,\
test_acc_mean,test_acc_std,runs_ok,runs_failed";

fn summary_lines(base: &RunConfig, agg: &Aggregate) -> [String; 3] {
    [
        format!(
            "# final-epoch accuracy aggregated over the {} successful of {} grid runs; \
std is the n-1 sample deviation",
            agg.runs_ok,
            agg.runs_ok + agg.runs_failed
        ),
        SUMMARY_HEADER.to_string(),
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            base.dataset.name(),
            base.ansatz,
            base.head.name(),
            base.lr,
            agg.train_acc_mean,
            agg.train_acc_std,
            agg.test_acc_mean,
            agg.test_acc_std,
            agg.runs_ok,
            agg.runs_failed
        ),
    ]
}

/// Full sweep: loads data once per the base config, then runs every grid
/// cell. `progress` receives each cell as it finishes.
pub fn sweep(
    base: &RunConfig,
    progress: impl FnMut(&SweepRun),
) -> Result<SweepReport> {
    let (train_split, test_split) = load_splits(base)?;
    sweep_on_splits(base, &train_split, &test_split, progress)
}

/// Sweeps over already-filtered raw splits. Every cell trains from the
/// same splits and base seed, differing only in (reps, depth); artifacts
/// land in `<out_dir>/r<reps>_D<depth>/`.
pub fn sweep_on_splits(
    base: &RunConfig,
    train_split: &DatasetSplit,
    test_split: &DatasetSplit,
    mut progress: impl FnMut(&SweepRun),
) -> Result<SweepReport> {
    base.validate()?;
    fs::create_dir_all(&base.out_dir).map_err(|e| Error::io(&base.out_dir, e))?;
    let runs_csv = base.out_dir.join("sweep_runs.csv");
    let mut runs_file = File::create(&runs_csv).map_err(|e| Error::io(&runs_csv, e))?;
    writeln!(runs_file, "{}", SweepRun::CSV_HEADER).map_err(|e| Error::io(&runs_csv, e))?;

    let mut runs = Vec::with_capacity(GRID.len() * GRID.len());
    for &reps in &GRID {
        for &depth in &GRID {
            let mut config = base.clone();
            config.reps_encoder = reps;
            config.reps_ansatz = depth;
            config.out_dir = base.out_dir.join(format!("r{reps}_D{depth}"));
            let result =
                train_on_splits(&config, train_split.clone(), test_split.clone(), |_| {})
                    .map(|(_, report)| RunOutcome {
                        train_acc: report.final_train_acc,
                        test_acc: report.final_test_acc,
                    })
                    .map_err(|e| e.to_string());
            let run = SweepRun {
                reps_encoder: reps,
                reps_ansatz: depth,
                out_dir: config.out_dir,
                result,
            };
            writeln!(runs_file, "{}", run.csv_line()).map_err(|e| Error::io(&runs_csv, e))?;
            runs_file.flush().map_err(|e| Error::io(&runs_csv, e))?;
            progress(&run);
            runs.push(run);
        }
    }

    let agg = aggregate(&runs);
    let summary_csv = base.out_dir.join("sweep_summary.csv");
    let text = summary_lines(base, &agg).join("\n") + "\n";
    fs::write(&summary_csv, text).map_err(|e| Error::io(&summary_csv, e))?;

    Ok(SweepReport {
        runs,
        aggregate: agg,
        runs_csv,
        summary_csv,
    })
}
