use serde::{Deserialize, Serialize};

use super::config::ModalityInput;
use crate::{Error, Result};

/// Per-dimension z-scoring fitted on training rows. Dimensions whose spread
/// falls below `STD_FLOOR` are only centred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const STD_FLOOR: f64 = 1e-8;

impl Standardizer {
    pub fn fit<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut n = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        for r in rows {
            if n == 0 {
                sum = vec![0.0; r.len()];
                sq = vec![0.0; r.len()];
            } else if r.len() != sum.len() {
                return Err(Error::Shape(format!("row of width {} among width {}", r.len(), sum.len())));
            }
            for ((s, q), v) in sum.iter_mut().zip(sq.iter_mut()).zip(r) {
                *s += v;
                *q += v * v;
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::InsufficientInput("cannot fit a standardizer on zero rows".into()));
        }
        let nf = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let sd = (q / nf - m * m).max(0.0).sqrt();
                if sd < STD_FLOOR {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }
}

/// One standardizer per modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    pub audio: Standardizer,
    pub text: Standardizer,
    pub acoustic: Option<Standardizer>,
}

impl InputScaler {
    pub fn fit(inputs: &[ModalityInput]) -> Result<Self> {
        let acoustic = if inputs.first().is_some_and(|x| x.acoustic.is_some()) {
            let rows: Option<Vec<&[f64]>> = inputs.iter().map(|x| x.acoustic.as_deref()).collect();
            let rows = rows.ok_or_else(|| Error::Input("acoustic features present for only some inputs".into()))?;
            Some(Standardizer::fit(rows)?)
        } else {
            None
        };
        Ok(Self {
            audio: Standardizer::fit(inputs.iter().map(|x| x.audio.as_slice()))?,
            text: Standardizer::fit(inputs.iter().map(|x| x.text.as_slice()))?,
            acoustic,
        })
    }

    pub fn apply(&self, input: &ModalityInput) -> ModalityInput {
        ModalityInput {
            audio: self.audio.apply(&input.audio),
            text: self.text.apply(&input.text),
            acoustic: match (&self.acoustic, &input.acoustic) {
                (Some(s), Some(a)) => Some(s.apply(a)),
                (None, a) => a.clone(),
                (Some(_), None) => None,
            },
        }
    }

    /// Flat `(name, values)` view used by checkpoints.
    pub fn blocks(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![
            ("scaler.audio.mean".into(), &self.audio.mean),
            ("scaler.audio.std".into(), &self.audio.std),
            ("scaler.text.mean".into(), &self.text.mean),
            ("scaler.text.std".into(), &self.text.std),
        ];
        if let Some(a) = &self.acoustic {
            out.push(("scaler.acoustic.mean".into(), &a.mean));
            out.push(("scaler.acoustic.std".into(), &a.std));
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = vec![
            &mut self.audio.mean,
            &mut self.audio.std,
            &mut self.text.mean,
            &mut self.text.std,
        ];
        if let Some(a) = &mut self.acoustic {
            out.push(&mut a.mean);
            out.push(&mut a.std);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_scores_training_rows() {
        let rows = [vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardizer::fit(rows.iter().map(|r| r.as_slice())).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
        assert_eq!(s.apply(&[3.0, 7.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn empty_fit_fails() {
        let none: Vec<&[f64]> = Vec::new();
        assert!(Standardizer::fit(none).is_err());
    }

    #[test]
    fn partial_acoustic_is_rejected() {
        let a = ModalityInput::new(vec![0.0], vec![0.0], Some(vec![1.0]));
        let b = ModalityInput::new(vec![1.0], vec![1.0], None);
        assert!(matches!(InputScaler::fit(&[a, b]), Err(Error::Input(_))));
    }
}
