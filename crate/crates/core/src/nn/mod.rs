//! Minimal float64 neural-network toolkit with hand-written backward passes.
//!
//! Layers own their parameters as flat vectors; gradients are stored in a
//! value of the same type (see [`Parameters`]) so optimizers, gradient checks
//! and checkpoints can walk parameters and gradients block by block.

mod dense;
mod gradcheck;
mod loss;
mod mixup;
mod norm;
mod optim;

pub use dense::Dense;
pub use gradcheck::{grad_check, grad_check_strata, sample_coordinates, GradCheck, REL_ERROR_FLOOR};
pub use loss::{softmax, softmax_xent};
pub use mixup::{mix_rows, mixup_batch, sample_mixup, MixupBatch, MixupConfig};
pub use norm::{LayerNorm, LayerNormCache};
pub use optim::{AdamConfig, AdamState, Optimizer, OptimizerKind};

use crate::{Error, Result};

/// Ordered, named view over a model's trainable parameters.
///
/// Gradients are represented as a value of the implementing type, so
/// `model.blocks()` and `grad.blocks()` line up index by index.
pub trait Parameters {
    fn blocks(&self) -> Vec<(String, &[f64])>;
    fn blocks_mut(&mut self) -> Vec<&mut [f64]>;

    /// Same structure with every parameter set to zero.
    fn zeros_like(&self) -> Self
    where
        Self: Sized;

    fn num_params(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.blocks().iter().flat_map(|(_, b)| b.iter().copied()).collect()
    }

    fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        let n = self.num_params();
        if flat.len() != n {
            return Err(Error::Shape(format!("{} values for {n} parameters", flat.len())));
        }
        let mut at = 0;
        for b in self.blocks_mut() {
            b.copy_from_slice(&flat[at..at + b.len()]);
            at += b.len();
        }
        Ok(())
    }

    /// `[start, end)` offsets of each block in the flattened vector.
    fn block_ranges(&self) -> Vec<(String, std::ops::Range<usize>)> {
        let mut at = 0;
        self.blocks()
            .into_iter()
            .map(|(name, b)| {
                let r = at..at + b.len();
                at = r.end;
                (name, r)
            })
            .collect()
    }

    fn scale(&mut self, factor: f64) {
        for b in self.blocks_mut() {
            b.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

pub fn relu(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Zeroes `grad` wherever the pre-activation was not positive.
pub fn relu_backward(pre: &[f64], grad: &mut [f64]) {
    for (g, p) in grad.iter_mut().zip(pre) {
        if *p <= 0.0 {
            *g = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_round_trip() {
        let mut rng = crate::Rng::new(4);
        let d = Dense::xavier(3, 2, &mut rng);
        let flat = d.flatten();
        assert_eq!(flat.len(), 8);
        let mut z = d.zeros_like();
        z.load_flat(&flat).unwrap();
        assert_eq!(z, d);
        assert!(z.load_flat(&flat[1..]).is_err());
        let r = d.block_ranges();
        assert_eq!(r[0].1, 0..6);
        assert_eq!(r[1].1, 6..8);
    }
}
