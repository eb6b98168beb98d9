use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::checkpoint::{load_checkpoint, save_checkpoint};
use super::{Classifier, FusionModel, ModalityInput};
use crate::{Error, Result};

pub const ENSEMBLE_MANIFEST: &str = "manifest.json";

/// Fold models whose softmax outputs are averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub members: Vec<FusionModel>,
    pub fold_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub architecture: super::Architecture,
    pub fold_seeds: Vec<u64>,
    pub member_paths: Vec<String>,
}

impl EnsembleModel {
    pub fn new(members: Vec<FusionModel>, fold_seeds: Vec<u64>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::Config(format!(
                "an ensemble needs at least two members, got {}",
                members.len()
            )));
        }
        if members.len() != fold_seeds.len() {
            return Err(Error::Config(format!(
                "{} members but {} fold seeds",
                members.len(),
                fold_seeds.len()
            )));
        }
        if members.iter().any(|m| m.config != members[0].config) {
            return Err(Error::Config("ensemble members have different configurations".into()));
        }
        Ok(Self { members, fold_seeds })
    }
}

impl Classifier for EnsembleModel {
    fn predict_proba(&self, input: &ModalityInput) -> Result<[f64; 2]> {
        if self.members.is_empty() {
            return Err(Error::Config("an ensemble needs at least one member".into()));
        }
        let mut acc = [0.0; 2];
        for m in &self.members {
            let p = m.predict_proba(input)?;
            acc[0] += p[0];
            acc[1] += p[1];
        }
        let n = self.members.len() as f64;
        Ok([acc[0] / n, acc[1] / n])
    }
}

/// Writes `member_<i>.ckpt` files and a JSON manifest into `dir`.
pub fn save_ensemble(model: &EnsembleModel, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut member_paths = Vec::new();
    for (i, (m, seed)) in model.members.iter().zip(&model.fold_seeds).enumerate() {
        let name = format!("member_{i}.ckpt");
        save_checkpoint(m, *seed, &dir.join(&name))?;
        member_paths.push(name);
    }
    let manifest = EnsembleManifest {
        architecture: model.members[0].config.architecture,
        fold_seeds: model.fold_seeds.clone(),
        member_paths,
    };
    let path = dir.join(ENSEMBLE_MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn load_ensemble(dir: &Path) -> Result<EnsembleModel> {
    let path = dir.join(ENSEMBLE_MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: EnsembleManifest =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let members = manifest
        .member_paths
        .iter()
        .map(|p| {
            let p: PathBuf = dir.join(p);
            load_checkpoint(&p).map(|(m, _)| m)
        })
        .collect::<Result<Vec<_>>>()?;
    EnsembleModel::new(members, manifest.fold_seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{Architecture, FusionConfig, Network};
    use crate::nn::Parameters;
    use crate::Rng;

    /// Tiny v1 model whose output layer produces fixed logits `[0, ln(p1/p0)]`.
    fn fixed(p1: f64) -> FusionModel {
        let cfg = FusionConfig {
            hidden_dim: 2,
            ..FusionConfig::new(Architecture::EarlyConcatV1, 1, 1, None)
        };
        let mut m = FusionModel::build(cfg, &mut Rng::new(0)).unwrap();
        let Network::EarlyConcat(n) = &mut m.network else { unreachable!() };
        n.out = n.out.zeros_like();
        n.out.bias[1] = (p1 / (1.0 - p1)).ln();
        m
    }

    fn input() -> ModalityInput {
        ModalityInput::new(vec![0.5], vec![-0.5], None)
    }

    #[test]
    fn averages_member_probabilities() {
        let e = EnsembleModel::new(vec![fixed(0.2), fixed(0.4)], vec![0, 1]).unwrap();
        let p = e.predict_proba(&input()).unwrap();
        assert!((p[0] - 0.7).abs() < 1e-12 && (p[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn member_order_does_not_matter() {
        let a = EnsembleModel::new(vec![fixed(0.1), fixed(0.55), fixed(0.9)], vec![0, 1, 2]).unwrap();
        let b = EnsembleModel::new(vec![fixed(0.9), fixed(0.1), fixed(0.55)], vec![2, 0, 1]).unwrap();
        let (p, q) = (a.predict_proba(&input()).unwrap(), b.predict_proba(&input()).unwrap());
        assert!((p[1] - q[1]).abs() <= 1e-12);
    }

    #[test]
    fn tie_goes_to_class_zero() {
        let e = EnsembleModel::new(vec![fixed(0.5), fixed(0.5)], vec![0, 1]).unwrap();
        let p = e.predict_proba(&input()).unwrap();
        assert_eq!(crate::fusion::predicted_label(p), 0);
    }

    #[test]
    fn identical_members_match_one_member() {
        let e = EnsembleModel::new(vec![fixed(0.3), fixed(0.3)], vec![0, 1]).unwrap();
        let p = e.predict_proba(&input()).unwrap();
        let q = fixed(0.3).predict_proba(&input()).unwrap();
        assert!((p[1] - q[1]).abs() <= 1e-15);
    }

    #[test]
    fn too_few_members_are_rejected() {
        assert!(matches!(EnsembleModel::new(vec![], vec![]), Err(Error::Config(_))));
        assert!(matches!(EnsembleModel::new(vec![fixed(0.5)], vec![0]), Err(Error::Config(_))));
    }

    #[test]
    fn round_trips_through_a_directory() {
        let dir = tempfile::tempdir().unwrap();
        let e = EnsembleModel::new(vec![fixed(0.25), fixed(0.75)], vec![42, 43]).unwrap();
        save_ensemble(&e, dir.path()).unwrap();
        let back = load_ensemble(dir.path()).unwrap();
        assert_eq!(back.fold_seeds, vec![42, 43]);
        let (p, q) = (e.predict_proba(&input()).unwrap(), back.predict_proba(&input()).unwrap());
        assert!((p[1] - q[1]).abs() < 1e-6);
    }
}
