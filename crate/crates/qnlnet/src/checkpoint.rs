//! Self-describing JSON checkpoints. Every float array is hex-encoded from
//! the raw 64-bit pattern so save/load round-trips are bit-exact, including
//! signed zero and subnormals.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::model::{Head, HybridModel};
use crate::nn::{PcaModel, N_COMPONENTS};
use crate::optim::{AdamState, LrSchedule};
use crate::train::{HeadKind, RunConfig, TrainState};

pub const FORMAT: &str = "qnlnet-checkpoint";
pub const VERSION: u32 = 1;

/// Raw bits of an f64 as 16 lowercase hex digits.
pub fn encode_f64(value: f64) -> String {
    format!("{:016x}", value.to_bits())
}

/// Inverse of [`encode_f64`]; rejects anything but exactly 16 hex digits.
pub fn decode_f64(text: &str) -> Result<f64> {
    if text.len() != 16 {
        return Err(Error::Checkpoint(format!(
            "bad float encoding {text:?}: expected 16 hex digits"
        )));
    }
    let bits = u64::from_str_radix(text, 16)
        .map_err(|_| Error::Checkpoint(format!("bad float encoding {text:?}")))?;
    Ok(f64::from_bits(bits))
}

fn encode_all(values: &[f64]) -> Vec<String> {
    values.iter().copied().map(encode_f64).collect()
}

fn decode_all(values: &[String]) -> Result<Vec<f64>> {
    values.iter().map(|s| decode_f64(s)).collect()
}

fn decode_four(values: &[String], what: &str) -> Result<[f64; N_COMPONENTS]> {
    decode_all(values)?
        .try_into()
        .map_err(|_| Error::Checkpoint(format!("{what} must hold exactly {N_COMPONENTS} values")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamSection {
    pub lr: f64,
    pub t: u64,
    pub m_hex: Vec<String>,
    pub v_hex: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropoutSection {
    pub seed: u64,
    /// RNG word position; u128 kept as a decimal string since JSON numbers
    /// cannot hold it.
    pub word_pos: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSection {
    pub dim: usize,
    pub mean_hex: Vec<String>,
    pub components_hex: Vec<String>,
    pub out_mean_hex: Vec<String>,
    pub out_std_hex: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSection {
    pub mean_hex: Vec<String>,
    pub std_hex: Vec<String>,
    pub from_train: bool,
}

/// On-disk document. [`Checkpoint::restore`] rebuilds a [`TrainState`]
/// whose next prediction is bit-identical to the saved model's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: RunConfig,
    pub epoch: u64,
    pub best_test_acc: f64,
    pub params_hex: Vec<String>,
    pub adam: AdamSection,
    pub schedule_epoch: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropout: Option<DropoutSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca: Option<PcaSection>,
    pub norm: NormSection,
}

impl Checkpoint {
    pub fn from_state(state: &TrainState) -> Self {
        let (m, v, t) = state.adam.state();
        let pca = match &state.model.head {
            Head::Pca(head) => Some(PcaSection {
                dim: head.pca.dim(),
                mean_hex: encode_all(&head.pca.mean),
                components_hex: encode_all(&head.pca.components),
                out_mean_hex: encode_all(&head.pca.out_mean),
                out_std_hex: encode_all(&head.pca.out_std),
            }),
            Head::Cnn(_) => None,
        };
        Checkpoint {
            format: FORMAT.to_string(),
            version: VERSION,
            config: state.config.clone(),
            epoch: state.epoch,
            best_test_acc: state.best_test_acc,
            params_hex: encode_all(&state.model.params_flat()),
            adam: AdamSection {
                lr: state.adam.lr(),
                t,
                m_hex: encode_all(m),
                v_hex: encode_all(v),
            },
            schedule_epoch: state.schedule.epoch,
            dropout: state
                .model
                .dropout_state()
                .map(|(seed, word_pos)| DropoutSection {
                    seed,
                    word_pos: word_pos.to_string(),
                }),
            pca,
            norm: NormSection {
                mean_hex: encode_all(&state.norm.mean),
                std_hex: encode_all(&state.norm.std),
                from_train: state.norm.from_train,
            },
        }
    }

    /// Rebuilds the training state. Fails with a checkpoint error when the
    /// stored arrays disagree with the stored configuration, e.g. a hand-
    /// edited ansatz depth.
    pub fn restore(&self) -> Result<TrainState> {
        self.config.validate()?;
        let encoder = self.config.encoder_config();
        let ansatz = self.config.ansatz_id()?;

        let mut model = match self.config.head {
            HeadKind::Cnn => HybridModel::new_cnn(
                self.config.dataset.input_shape(),
                encoder,
                ansatz,
                self.config.reps_ansatz,
                self.config.seed,
            )?,
            HeadKind::Pca => {
                let section = self.pca.as_ref().ok_or_else(|| {
                    Error::Checkpoint("pca head configured but no pca section stored".into())
                })?;
                let pca = PcaModel {
                    mean: decode_all(&section.mean_hex)?,
                    components: decode_all(&section.components_hex)?,
                    out_mean: decode_four(&section.out_mean_hex, "pca output mean")?,
                    out_std: decode_four(&section.out_std_hex, "pca output std")?,
                };
                if pca.mean.len() != section.dim
                    || pca.components.len() != section.dim * N_COMPONENTS
                {
                    return Err(Error::Checkpoint(format!(
                        "pca arrays disagree with stored dim {}",
                        section.dim
                    )));
                }
                HybridModel::new_pca(
                    pca,
                    encoder,
                    ansatz,
                    self.config.reps_ansatz,
                    self.config.seed,
                )?
            }
        };

        let params = decode_all(&self.params_hex)?;
        if params.len() != model.n_params() {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds {} parameters but the stored configuration requires {}",
                params.len(),
                model.n_params()
            )));
        }
        model.set_params_flat(&params)?;
        if let Some(section) = &self.dropout {
            let word_pos: u128 = section.word_pos.parse().map_err(|_| {
                Error::Checkpoint(format!("bad dropout word position {:?}", section.word_pos))
            })?;
            model.restore_dropout(section.seed, word_pos)?;
        } else if matches!(self.config.head, HeadKind::Cnn) {
            return Err(Error::Checkpoint(
                "cnn head configured but no dropout section stored".into(),
            ));
        }

        let m = decode_all(&self.adam.m_hex)?;
        let v = decode_all(&self.adam.v_hex)?;
        if m.len() != params.len() || v.len() != params.len() {
            return Err(Error::Checkpoint(
                "optimizer moment arrays disagree with the parameter count".into(),
            ));
        }
        let adam = AdamState::restore(self.adam.lr, m, v, self.adam.t)?;
        let schedule = LrSchedule::restore(self.config.lr, self.config.gamma, self.schedule_epoch)?;
        let norm = NormStats {
            mean: decode_all(&self.norm.mean_hex)?,
            std: decode_all(&self.norm.std_hex)?,
            from_train: self.norm.from_train,
        };

        Ok(TrainState {
            model,
            adam,
            schedule,
            epoch: self.epoch,
            best_test_acc: self.best_test_acc,
            norm,
            config: self.config.clone(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Checkpoint(format!("cannot serialize checkpoint: {e}")))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::Checkpoint(format!("cannot parse checkpoint: {e}")))?;
        if doc.format != FORMAT {
            return Err(Error::Checkpoint(format!(
                "not a recognized checkpoint (format {:?})",
                doc.format
            )));
        }
        if doc.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {}, this build reads version {}",
                doc.version, VERSION
            )));
        }
        Ok(doc)
    }
}
