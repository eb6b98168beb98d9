use rand_distr::{Beta, Distribution};

use crate::{Error, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixupConfig {
    /// Shape of the symmetric Beta(alpha, alpha) mixing distribution.
    pub alpha: f64,
    pub enabled: bool,
    /// Overrides the Beta draw; the partner permutation is still sampled.
    pub fixed_lambda: Option<f64>,
}

impl Default for MixupConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            enabled: true,
            fixed_lambda: None,
        }
    }
}

impl MixupConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("mixup alpha {} must be positive", self.alpha)));
        }
        if let Some(l) = self.fixed_lambda {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::Config(format!("fixed mixup lambda {l} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixupBatch {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub lambda: f64,
    pub perm: Vec<usize>,
}

/// Draws one mixing coefficient and a partner permutation for a batch of `n`
/// rows. Returns `(1, identity)` for batches smaller than two.
pub fn sample_mixup(n: usize, cfg: &MixupConfig, rng: &mut Rng) -> Result<(f64, Vec<usize>)> {
    cfg.validate()?;
    if n < 2 {
        return Ok((1.0, (0..n).collect()));
    }
    let lambda = match cfg.fixed_lambda {
        Some(l) => l,
        None => Beta::new(cfg.alpha, cfg.alpha)
            .map_err(|e| Error::Config(format!("mixup beta: {e}")))?
            .sample(rng),
    };
    Ok((lambda, rng.permutation(n)))
}

/// `λ·rows[i] + (1−λ)·rows[perm[i]]`; λ = 1 returns the rows untouched.
pub fn mix_rows(rows: &[Vec<f64>], lambda: f64, perm: &[usize]) -> Vec<Vec<f64>> {
    if lambda == 1.0 {
        return rows.to_vec();
    }
    rows.iter()
        .zip(perm)
        .map(|(r, &j)| {
            r.iter()
                .zip(&rows[j])
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect()
        })
        .collect()
}

pub fn mixup_batch(x: &[Vec<f64>], y: &[Vec<f64>], cfg: &MixupConfig, rng: &mut Rng) -> Result<MixupBatch> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} inputs vs {} targets", x.len(), y.len())));
    }
    let (lambda, perm) = sample_mixup(x.len(), cfg, rng)?;
    Ok(MixupBatch {
        x: mix_rows(x, lambda, &perm),
        y: mix_rows(y, lambda, &perm),
        lambda,
        perm,
    })
}
