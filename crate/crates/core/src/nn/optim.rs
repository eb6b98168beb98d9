use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments, one accumulator per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new<P: Parameters>(config: AdamConfig, params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params.blocks().iter().map(|(_, b)| vec![0.0; b.len()]).collect();
        Self {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One update over matching parameter and gradient blocks.
    pub fn update(&mut self, params: Vec<&mut [f64]>, grads: &[(String, &[f64])]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "{} parameter blocks, {} gradient blocks, {} moment blocks",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for (p, (name, g)) in params.iter().zip(grads) {
            if p.len() != g.len() {
                return Err(Error::Shape(format!("{name}: {} params vs {} grads", p.len(), g.len())));
            }
            if let Some(i) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::Training(format!("non-finite gradient in {name}[{i}]")));
            }
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, (_, g)), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Plain gradient descent.
    Gd,
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Gd { lr: f64 },
    Adam(AdamState),
}

impl Optimizer {
    pub fn new<P: Parameters>(kind: OptimizerKind, lr: f64, params: &P) -> Self {
        match kind {
            OptimizerKind::Gd => Optimizer::Gd { lr },
            OptimizerKind::Adam => Optimizer::Adam(AdamState::new(
                AdamConfig {
                    lr,
                    ..AdamConfig::default()
                },
                params,
            )),
        }
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let g = grads.blocks();
        match self {
            Optimizer::Adam(state) => state.update(params.blocks_mut(), &g),
            Optimizer::Gd { lr } => {
                for (name, b) in &g {
                    if let Some(i) = b.iter().position(|v| !v.is_finite()) {
                        return Err(Error::Training(format!("non-finite gradient in {name}[{i}]")));
                    }
                }
                for (p, (_, b)) in params.blocks_mut().into_iter().zip(&g) {
                    for (x, d) in p.iter_mut().zip(b.iter()) {
                        *x -= *lr * d;
                    }
                }
                Ok(())
            }
        }
    }
}
