use super::Parameters;
use crate::{Error, Result};

/// Layer normalisation with learned scale and shift (population variance).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    pub x_hat: Vec<f64>,
    pub inv_std: f64,
}

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            eps: 1e-5,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, LayerNormCache)> {
        if x.len() < 2 || x.len() != self.dim() {
            return Err(Error::Shape(format!(
                "layer norm of width {} applied to {} values",
                self.dim(),
                x.len()
            )));
        }
        if self.eps <= 0.0 {
            return Err(Error::Config("layer norm eps must be positive".into()));
        }
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv_std = 1.0 / (var + self.eps).sqrt();
        let x_hat: Vec<f64> = x.iter().map(|v| (v - mean) * inv_std).collect();
        let y = x_hat
            .iter()
            .zip(self.gamma.iter().zip(&self.beta))
            .map(|(h, (g, b))| g * h + b)
            .collect();
        Ok((y, LayerNormCache { x_hat, inv_std }))
    }

    /// Accumulates dL/dgamma and dL/dbeta into `grad`, returns dL/dx.
    pub fn backward(&self, cache: &LayerNormCache, grad_y: &[f64], grad: &mut LayerNorm) -> Vec<f64> {
        let n = grad_y.len() as f64;
        let mut gx_hat = Vec::with_capacity(grad_y.len());
        for (i, g) in grad_y.iter().enumerate() {
            grad.gamma[i] += g * cache.x_hat[i];
            grad.beta[i] += g;
            gx_hat.push(g * self.gamma[i]);
        }
        let sum_g: f64 = gx_hat.iter().sum();
        let sum_gx: f64 = gx_hat.iter().zip(&cache.x_hat).map(|(a, b)| a * b).sum();
        gx_hat
            .iter()
            .zip(&cache.x_hat)
            .map(|(g, h)| cache.inv_std / n * (n * g - sum_g - h * sum_gx))
            .collect()
    }
}

impl Parameters for LayerNorm {
    fn blocks(&self) -> Vec<(String, &[f64])> {
        vec![("gamma".into(), &self.gamma), ("beta".into(), &self.beta)]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn zeros_like(&self) -> Self {
        Self {
            gamma: vec![0.0; self.dim()],
            beta: vec![0.0; self.dim()],
            eps: self.eps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use crate::Rng;

    #[test]
    fn constant_input_normalises_to_zero() {
        let ln = LayerNorm::new(4);
        let (y, _) = ln.forward(&[3.0; 4]).unwrap();
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_input_is_unchanged() {
        let mut ln = LayerNorm::new(2);
        ln.eps = 1e-12;
        let (y, _) = ln.forward(&[-1.0, 1.0]).unwrap();
        assert!((y[0] + 1.0).abs() < 1e-9 && (y[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_narrow() {
        assert!(matches!(LayerNorm::new(1).forward(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = Rng::new(13);
        let mut ln = LayerNorm::new(9);
        ln.gamma.iter_mut().for_each(|g| *g = rng.normal());
        ln.beta.iter_mut().for_each(|b| *b = rng.normal());
        let x: Vec<f64> = (0..9).map(|_| rng.normal()).collect();
        let c: Vec<f64> = (0..9).map(|_| rng.normal()).collect();
        let loss = |l: &LayerNorm, x: &[f64]| {
            let (y, _) = l.forward(x).unwrap();
            y.iter().zip(&c).map(|(a, b)| a * b + 0.25 * a * a * a).sum::<f64>()
        };
        let (y, cache) = ln.forward(&x).unwrap();
        let gy: Vec<f64> = y.iter().zip(&c).map(|(a, b)| b + 0.75 * a * a).collect();
        let mut grad = ln.zeros_like();
        let gx = ln.backward(&cache, &gy, &mut grad);

        let r = grad_check(|xp| loss(&ln, xp), &x, &gx, 1e-5, 200, &mut rng);
        assert!(r.max_rel_error <= 1e-6, "{r:?}");
        let mut probe = ln.clone();
        let r = grad_check(
            |p| {
                probe.load_flat(p).unwrap();
                loss(&probe, &x)
            },
            &ln.flatten(),
            &grad.flatten(),
            1e-5,
            200,
            &mut rng,
        );
        assert!(r.max_rel_error <= 1e-6, "{r:?}");
    }
}
