use std::path::Path;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::kfold::kfold_split;
use crate::fusion::{
    round_to_f32, Architecture, Classifier, EnsembleModel, FusionConfig, FusionModel, InputScaler, ModalityInput,
    Network, NUM_CLASSES,
};
use crate::nn::{mix_rows, sample_mixup, MixupConfig, Optimizer, OptimizerKind};
use crate::{Error, Result, Rng};

const INIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;
const MIXUP_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchSize {
    Full,
    #[serde(untagged)]
    Size(usize),
}

impl std::str::FromStr for BatchSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(BatchSize::Full);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(BatchSize::Size(n)),
            _ => Err(Error::Config(format!("batch size '{s}' is neither 'full' nor a positive count"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: BatchSize,
    pub lr: f64,
    /// Epochs without dev-loss improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub mixup_alpha: f64,
    pub mixup: bool,
    /// Forces the mixing coefficient (testing aid).
    pub mixup_lambda: Option<f64>,
    /// Ensemble folds for the weighted-attention submission.
    pub folds: usize,
}

impl TrainConfig {
    pub fn for_architecture(arch: Architecture) -> Self {
        match arch {
            Architecture::EarlyConcatV1 => Self {
                epochs: 300,
                batch_size: BatchSize::Full,
                lr: 0.05,
                patience: 30,
                seed: 0,
                optimizer: OptimizerKind::Gd,
                mixup_alpha: 0.2,
                mixup: false,
                mixup_lambda: None,
                folds: 5,
            },
            Architecture::ModalityAttentionV2 | Architecture::WeightedAttentionV3 => Self {
                epochs: 150,
                batch_size: BatchSize::Size(32),
                lr: 1e-3,
                patience: 15,
                seed: 0,
                optimizer: OptimizerKind::Adam,
                mixup_alpha: 0.2,
                mixup: arch == Architecture::WeightedAttentionV3,
                mixup_lambda: None,
                folds: 5,
            },
        }
    }

    pub fn mixup_config(&self) -> MixupConfig {
        MixupConfig {
            alpha: self.mixup_alpha,
            enabled: self.mixup,
            fixed_lambda: self.mixup_lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == BatchSize::Size(0) {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        self.mixup_config().validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        for r in &self.epochs {
            w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn one_hot(label: u8) -> [f64; NUM_CLASSES] {
    let mut t = [0.0; NUM_CLASSES];
    t[label as usize] = 1.0;
    t
}

fn mix_inputs(xs: &[ModalityInput], lambda: f64, perm: &[usize]) -> Vec<ModalityInput> {
    if lambda == 1.0 {
        return xs.to_vec();
    }
    let audio = mix_rows(&xs.iter().map(|x| x.audio.clone()).collect::<Vec<_>>(), lambda, perm);
    let text = mix_rows(&xs.iter().map(|x| x.text.clone()).collect::<Vec<_>>(), lambda, perm);
    let acoustic: Option<Vec<Vec<f64>>> = xs.iter().map(|x| x.acoustic.clone()).collect();
    let acoustic = acoustic.map(|a| mix_rows(&a, lambda, perm));
    audio
        .into_iter()
        .zip(text)
        .enumerate()
        .map(|(i, (a, t))| ModalityInput::new(a, t, acoustic.as_ref().map(|c| c[i].clone())))
        .collect()
}

fn accuracy(net: &Network, xs: &[ModalityInput], labels: &[u8]) -> Result<f64> {
    let mut correct = 0;
    for (x, &l) in xs.iter().zip(labels) {
        let logits = net.forward(x)?.logits;
        correct += usize::from(u8::from(logits[1] > logits[0]) == l);
    }
    Ok(correct as f64 / xs.len() as f64)
}

/// Trains one model, early-stopping on `dev` cross-entropy and restoring the
/// best epoch. Inputs are standardised with statistics of `train_set`, and
/// the returned parameters are rounded to `f32` so they match a checkpoint.
pub fn train(
    cfg: &TrainConfig,
    arch: &FusionConfig,
    train_set: &Dataset,
    dev_set: &Dataset,
) -> Result<(FusionModel, TrainHistory)> {
    cfg.validate()?;
    arch.validate()?;
    if train_set.is_empty() || dev_set.is_empty() {
        return Err(Error::InsufficientInput(format!(
            "training needs non-empty splits (train {}, dev {})",
            train_set.len(),
            dev_set.len()
        )));
    }
    for x in train_set.inputs.iter().chain(&dev_set.inputs) {
        arch.check_input(x)?;
    }
    let train_labels = train_set.require_labels()?;
    let dev_labels = dev_set.require_labels()?;

    let scaler = InputScaler::fit(&train_set.inputs)?;
    let xs: Vec<ModalityInput> = train_set.inputs.iter().map(|x| scaler.apply(x)).collect();
    let ys: Vec<[f64; NUM_CLASSES]> = train_labels.iter().map(|&l| one_hot(l)).collect();
    let dev_xs: Vec<ModalityInput> = dev_set.inputs.iter().map(|x| scaler.apply(x)).collect();
    let dev_ys: Vec<[f64; NUM_CLASSES]> = dev_labels.iter().map(|&l| one_hot(l)).collect();

    let mut init_rng = Rng::with_stream(cfg.seed, INIT_STREAM);
    let mut shuffle_rng = Rng::with_stream(cfg.seed, SHUFFLE_STREAM);
    let mut mix_rng = Rng::with_stream(cfg.seed, MIXUP_STREAM);
    let mixup = cfg.mixup_config();

    let mut net = Network::build(arch, &mut init_rng)?;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr, &net);
    let batch = match cfg.batch_size {
        BatchSize::Full => xs.len(),
        BatchSize::Size(b) => b.min(xs.len()),
    };

    let mut history = TrainHistory::default();
    let mut best = (f64::INFINITY, net.clone());
    let mut since_best = 0;
    for epoch in 1..=cfg.epochs {
        let order: Vec<usize> = if batch == xs.len() {
            (0..xs.len()).collect()
        } else {
            shuffle_rng.permutation(xs.len())
        };
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let mut bx: Vec<ModalityInput> = chunk.iter().map(|&i| xs[i].clone()).collect();
            let mut by: Vec<[f64; NUM_CLASSES]> = chunk.iter().map(|&i| ys[i]).collect();
            if mixup.enabled {
                let (lambda, perm) = sample_mixup(bx.len(), &mixup, &mut mix_rng)?;
                bx = mix_inputs(&bx, lambda, &perm);
                let rows: Vec<Vec<f64>> = by.iter().map(|t| t.to_vec()).collect();
                by = mix_rows(&rows, lambda, &perm).into_iter().map(|t| [t[0], t[1]]).collect();
            }
            let (loss, grads) = net.loss_and_grad(&bx, &by)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!("non-finite training loss at epoch {epoch}")));
            }
            opt.step(&mut net, &grads)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            total += loss * chunk.len() as f64;
        }
        let train_loss = total / xs.len() as f64;
        let dev_loss = net.loss(&dev_xs, &dev_ys)?;
        if !dev_loss.is_finite() {
            return Err(Error::Training(format!("non-finite dev loss at epoch {epoch}")));
        }
        let dev_accuracy = accuracy(&net, &dev_xs, &dev_labels)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            dev_loss,
            dev_accuracy,
        });
        debug!("epoch {epoch}: train {train_loss:.4} dev {dev_loss:.4} acc {dev_accuracy:.3}");
        if dev_loss < best.0 {
            best = (dev_loss, net.clone());
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= cfg.patience {
            break;
        }
    }

    let mut model = FusionModel {
        config: *arch,
        network: best.1,
        scaler: Some(scaler),
    };
    round_to_f32(&mut model);
    Ok((model, history))
}

/// Trains one member per fold on `train_set` minus the fold's validation
/// subset (seed `cfg.seed + fold`, mixup on), early-stopping on that subset.
/// `dev_set` is not touched here.
pub fn train_ensemble(
    cfg: &TrainConfig,
    arch: &FusionConfig,
    train_set: &Dataset,
) -> Result<(EnsembleModel, Vec<TrainHistory>)> {
    cfg.validate()?;
    let folds = kfold_split(train_set.len(), cfg.folds, cfg.seed)?;
    let results: Vec<(FusionModel, TrainHistory)> = folds
        .par_iter()
        .enumerate()
        .map(|(f, (tr, val))| {
            let member = TrainConfig {
                seed: cfg.seed.wrapping_add(f as u64),
                mixup: true,
                ..cfg.clone()
            };
            train(&member, arch, &train_set.subset(tr), &train_set.subset(val))
                .map_err(|e| Error::Training(format!("fold {f}: {e}")))
        })
        .collect::<Result<_>>()?;
    let seeds = (0..results.len() as u64).map(|f| cfg.seed.wrapping_add(f)).collect();
    let (members, histories) = results.into_iter().unzip();
    Ok((EnsembleModel::new(members, seeds)?, histories))
}

/// Probability of the at-risk class for every input.
pub fn predict_scores<C: Classifier + Sync>(model: &C, inputs: &[ModalityInput]) -> Result<Vec<f64>> {
    inputs.par_iter().map(|x| model.predict_proba(x).map(|p| p[1])).collect()
}
