//! Full-batch training of the perceptron and success-rate evaluation.
//!
//! One epoch is one accepted optimizer update on the training loss; the
//! validation loss is recorded each epoch but never influences parameters.
//! Networks regress column-scaled values; judging happens in natural units
//! after unscaling. A prediction of a bit column counts as correct when it
//! lands within 0.5 of the target; a prediction of a code column is rounded,
//! clamped to the column's known range, and must then match exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::codec::{scale_row, unscale_value, Dataset, Scheme};
use crate::error::{Error, Result};
use crate::lbfgs::{Lbfgs, LbfgsConfig, Objective, StepKind, StepOutcome};
use crate::mlp::{batch_loss, batch_loss_and_gradient, MlpDims, MlpModel};

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    pub hidden: usize,
    pub max_epochs: usize,
    /// Seed for the parameter initialization.
    pub seed: u64,
    pub optimizer: LbfgsConfig,
}

impl TrainConfig {
    pub fn new(hidden: usize, max_epochs: usize, seed: u64) -> Result<Self> {
        if hidden == 0 || max_epochs == 0 {
            return Err(Error::InvalidParameter(
                "hidden size and epoch budget must be positive".into(),
            ));
        }
        Ok(Self {
            hidden,
            max_epochs,
            seed,
            optimizer: LbfgsConfig::default(),
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub step_kind: StepKind,
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub model: MlpModel,
    pub history: Vec<EpochRecord>,
    /// The gradient norm fell below tolerance before the budget ran out.
    pub converged: bool,
    /// The optimizer could not decrease the loss any further.
    pub stalled: bool,
}

struct BatchObjective<'a> {
    dims: MlpDims,
    inputs: &'a [Vec<f64>],
    targets: &'a [Vec<f64>],
}

impl Objective for BatchObjective<'_> {
    fn dim(&self) -> usize {
        self.dims.param_count()
    }
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        batch_loss_and_gradient(&self.dims, x, self.inputs, self.targets)
    }
}

/// Trains a fresh model on the training batch, recording validation loss
/// per epoch. Training stops at the epoch budget, at gradient-norm
/// convergence, or when no further decrease is possible.
pub fn lbfgs_train(
    dims: MlpDims,
    train_inputs: &[Vec<f64>],
    train_targets: &[Vec<f64>],
    val_inputs: &[Vec<f64>],
    val_targets: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    check_batch(dims, train_inputs, train_targets)?;
    check_batch(dims, val_inputs, val_targets)?;
    if dims.hidden != cfg.hidden {
        return Err(Error::InvalidParameter(format!(
            "dims carry {} hidden units but the config says {}",
            dims.hidden, cfg.hidden
        )));
    }
    let mut model = MlpModel::init(dims, cfg.seed);
    let objective = BatchObjective {
        dims,
        inputs: train_inputs,
        targets: train_targets,
    };
    let mut opt = Lbfgs::new(objective, model.params().to_vec(), cfg.optimizer);
    let mut history = Vec::new();
    let mut converged = false;
    let mut stalled = false;
    for epoch in 1..=cfg.max_epochs {
        match opt.step() {
            StepOutcome::Converged => {
                converged = true;
                break;
            }
            StepOutcome::Stalled => {
                stalled = true;
                break;
            }
            StepOutcome::Stepped(kind) => {
                history.push(EpochRecord {
                    epoch,
                    train_loss: opt.value(),
                    val_loss: batch_loss(&dims, opt.x(), val_inputs, val_targets),
                    step_kind: kind,
                });
            }
        }
    }
    if !converged && !stalled && opt.grad_norm() < cfg.optimizer.grad_tol {
        converged = true;
    }
    model.set_params(opt.x())?;
    Ok(TrainedModel {
        model,
        history,
        converged,
        stalled,
    })
}

fn check_batch(dims: MlpDims, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<()> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::InvalidParameter(
            "need matching nonempty input and target batches".into(),
        ));
    }
    for x in inputs {
        if x.len() != dims.inputs {
            return Err(Error::DimensionMismatch {
                expected: dims.inputs,
                got: x.len(),
            });
        }
    }
    for t in targets {
        if t.len() != dims.outputs {
            return Err(Error::DimensionMismatch {
                expected: dims.outputs,
                got: t.len(),
            });
        }
    }
    Ok(())
}

/// How to judge a predicted output column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputKind {
    /// Target is 0 or 1; within 0.5 counts.
    Bit,
    /// Target is a code; round, clamp into the range, compare exactly.
    Natural { min: u64, max: u64 },
}

/// Judgement rules for each output column of a dataset.
pub fn output_kinds(scheme: Scheme, n: usize, output_ranges: &[(u64, u64)]) -> Vec<OutputKind> {
    match scheme {
        Scheme::One => {
            let mut kinds = vec![OutputKind::Bit; n];
            kinds.push(OutputKind::Natural {
                min: output_ranges[n].0,
                max: output_ranges[n].1,
            });
            kinds
        }
        Scheme::Two | Scheme::TwoSplit => output_ranges
            .iter()
            .map(|&(min, max)| OutputKind::Natural { min, max })
            .collect(),
    }
}

/// Output columns that together describe the predicted configuration.
pub fn config_output_indices(scheme: Scheme, n: usize) -> Vec<usize> {
    match scheme {
        Scheme::One => (0..n).collect(),
        Scheme::Two | Scheme::TwoSplit => vec![0],
    }
}

/// Judge one predicted value against its target.
pub fn prediction_correct(kind: OutputKind, predicted: f64, target: u64) -> bool {
    match kind {
        OutputKind::Bit => (predicted - target as f64).abs() < 0.5,
        OutputKind::Natural { min, max } => clamp_natural(predicted, min, max) == target,
    }
}

/// Round and clamp a predicted code column into its valid range.
pub fn clamp_natural(predicted: f64, min: u64, max: u64) -> u64 {
    let rounded = predicted.round();
    if !rounded.is_finite() || rounded < min as f64 {
        min
    } else if rounded > max as f64 {
        max
    } else {
        rounded as u64
    }
}

/// Per-column success rates of a model on a batch, plus the rate at which
/// all configuration columns are right at once.
#[derive(Clone, Debug)]
pub struct SuccessReport {
    pub per_output: Vec<f64>,
    pub joint_config: f64,
    pub sample_count: usize,
}

/// Judges a model on a batch. `targets` are in natural units; the model's
/// outputs are unscaled through `ranges` (the per-column training scale)
/// before the judgement rules apply.
pub fn evaluate_success(
    model: &MlpModel,
    inputs: &[Vec<f64>],
    targets: &[Vec<u64>],
    ranges: &[(u64, u64)],
    kinds: &[OutputKind],
    config_columns: &[usize],
) -> Result<SuccessReport> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::InvalidParameter(
            "need matching nonempty inputs and targets".into(),
        ));
    }
    let q = model.dims().outputs;
    if kinds.len() != q || ranges.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: kinds.len().min(ranges.len()),
        });
    }
    let mut per_output = vec![0usize; q];
    let mut joint = 0usize;
    for (x, t) in inputs.iter().zip(targets) {
        if t.len() != q {
            return Err(Error::DimensionMismatch {
                expected: q,
                got: t.len(),
            });
        }
        let y = model.forward(x)?;
        let mut all_config = true;
        for c in 0..q {
            let ok = prediction_correct(kinds[c], unscale_value(y[c], ranges[c]), t[c]);
            per_output[c] += ok as usize;
            if config_columns.contains(&c) && !ok {
                all_config = false;
            }
        }
        joint += all_config as usize;
    }
    let count = inputs.len() as f64;
    Ok(SuccessReport {
        per_output: per_output.iter().map(|&c| c as f64 / count).collect(),
        joint_config: joint as f64 / count,
        sample_count: inputs.len(),
    })
}

/// A trained model plus everything needed to use it on raw samples: the
/// coding scheme, the widths, and the column ranges for scaling inputs and
/// clamping outputs. `output_index` marks a single-column network from the
/// split variant.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub model: MlpModel,
    pub scheme: Scheme,
    pub n: usize,
    pub k: usize,
    pub output_index: Option<usize>,
    pub input_ranges: Vec<(u64, u64)>,
    pub output_ranges: Vec<(u64, u64)>,
    pub seed: u64,
}

const MODEL_MAGIC: &str = "chaoslab-mlp v1";

impl SavedModel {
    /// Scale a raw input row the way training data was scaled.
    pub fn scale_inputs(&self, raw: &[u64]) -> Vec<f64> {
        scale_row(raw, &self.input_ranges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let dims = self.model.dims();
        let mut text = String::new();
        let _ = writeln!(text, "{MODEL_MAGIC}");
        let _ = writeln!(text, "n {}", self.n);
        let _ = writeln!(text, "k {}", self.k);
        let _ = writeln!(text, "scheme {}", self.scheme);
        match self.output_index {
            Some(c) => {
                let _ = writeln!(text, "output_index {c}");
            }
            None => {
                let _ = writeln!(text, "output_index -");
            }
        }
        let _ = writeln!(
            text,
            "dims {} {} {}",
            dims.inputs, dims.hidden, dims.outputs
        );
        let _ = writeln!(text, "seed {}", self.seed);
        let ranges = |rs: &[(u64, u64)]| {
            rs.iter()
                .map(|(lo, hi)| format!("{lo},{hi}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(text, "input_ranges {}", ranges(&self.input_ranges));
        let _ = writeln!(text, "output_ranges {}", ranges(&self.output_ranges));
        let _ = writeln!(text, "params {}", self.model.params().len());
        for p in self.model.params() {
            // Shortest round-trip formatting keeps reloads bit-exact.
            let _ = writeln!(text, "{p:?}");
        }
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let bad = |msg: &str| Error::InvalidModelFile(msg.to_string());
        if lines.next() != Some(MODEL_MAGIC) {
            return Err(bad("missing or unsupported header"));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad("truncated file"))?;
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix(' '))
                .map(|r| r.to_string())
                .ok_or_else(|| bad(&format!("expected `{name}` line, got `{line}`")))
        };
        let n: usize = field("n")?.parse().map_err(|_| bad("bad n"))?;
        let k: usize = field("k")?.parse().map_err(|_| bad("bad k"))?;
        let scheme = Scheme::parse(&field("scheme")?)?;
        let output_index = match field("output_index")?.as_str() {
            "-" => None,
            s => Some(s.parse().map_err(|_| bad("bad output_index"))?),
        };
        let dims_line = field("dims")?;
        let mut it = dims_line.split_whitespace();
        let mut next_dim = || -> Result<usize> {
            it.next()
                .ok_or_else(|| bad("short dims line"))?
                .parse()
                .map_err(|_| bad("bad dims"))
        };
        let dims = MlpDims::new(next_dim()?, next_dim()?, next_dim()?)?;
        let seed: u64 = field("seed")?.parse().map_err(|_| bad("bad seed"))?;
        let parse_ranges = |s: String| -> Result<Vec<(u64, u64)>> {
            s.split_whitespace()
                .map(|pair| {
                    let (lo, hi) = pair.split_once(',').ok_or_else(|| bad("bad range"))?;
                    Ok((
                        lo.parse().map_err(|_| bad("bad range"))?,
                        hi.parse().map_err(|_| bad("bad range"))?,
                    ))
                })
                .collect()
        };
        let input_ranges = parse_ranges(field("input_ranges")?)?;
        let output_ranges = parse_ranges(field("output_ranges")?)?;
        let count: usize = field("params")?.parse().map_err(|_| bad("bad params"))?;
        if count != dims.param_count() {
            return Err(bad("parameter count disagrees with dims"));
        }
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            let line = lines.next().ok_or_else(|| bad("truncated parameters"))?;
            params.push(line.parse().map_err(|_| bad("bad parameter"))?);
        }
        if lines.next().is_some() {
            return Err(bad("trailing content"));
        }
        if input_ranges.len() != dims.inputs || output_ranges.len() != dims.outputs {
            return Err(bad("range counts disagree with dims"));
        }
        Ok(Self {
            model: MlpModel::from_params(dims, params)?,
            scheme,
            n,
            k,
            output_index,
            input_ranges,
            output_ranges,
            seed,
        })
    }
}

/// Writes the per-epoch log: epoch, train loss, validation loss, step kind.
pub fn write_history_csv(history: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "train_loss", "val_loss", "step_kind"])?;
    for r in history {
        w.write_record([
            r.epoch.to_string(),
            format!("{:?}", r.train_loss),
            format!("{:?}", r.val_loss),
            r.step_kind.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One subset of a dataset, ready for training and judging: inputs and
/// regression targets scaled per column to [0, 1], targets also kept in
/// natural units for the success rules.
pub struct Batch {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub raw_targets: Vec<Vec<u64>>,
}

/// Gathers the samples at the given indices into a [`Batch`].
pub fn batch_for_indices(ds: &Dataset, indices: &[usize]) -> Batch {
    Batch {
        inputs: indices
            .iter()
            .map(|&i| scale_row(&ds.samples[i].inputs, &ds.input_ranges))
            .collect(),
        targets: indices
            .iter()
            .map(|&i| scale_row(&ds.samples[i].outputs, &ds.output_ranges))
            .collect(),
        raw_targets: indices
            .iter()
            .map(|&i| ds.samples[i].outputs.clone())
            .collect(),
    }
}
