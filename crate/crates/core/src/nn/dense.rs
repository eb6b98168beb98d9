use super::Parameters;
use crate::{Error, Result, Rng};

/// Fully connected layer `y = W·x + b` with `W` stored row-major `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// Uniform weights in ±sqrt(6 / (fan_in + fan_out)), zero bias.
    pub fn xavier(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weight = (0..in_dim * out_dim)
            .map(|_| rng.uniform_range(-bound, bound))
            .collect();
        Self {
            in_dim,
            out_dim,
            weight,
            bias: vec![0.0; out_dim],
        }
    }

    pub fn from_parts(in_dim: usize, out_dim: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 || weight.len() != in_dim * out_dim || bias.len() != out_dim {
            return Err(Error::Shape(format!(
                "dense {in_dim}->{out_dim} with {} weights and {} biases",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weight,
            bias,
        })
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim {
            return Err(Error::Shape(format!(
                "dense layer expects {} inputs, got {}",
                self.in_dim,
                x.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut y = vec![0.0; self.out_dim];
        self.apply(x, &mut y);
        Ok(y)
    }

    pub(crate) fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, row), b) in y.iter_mut().zip(self.weight.chunks_exact(self.in_dim)).zip(&self.bias) {
            *yi = b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Returns `(grad_x, grad)` where `grad` holds dL/dW and dL/db.
    pub fn backward(&self, x: &[f64], grad_out: &[f64]) -> Result<(Vec<f64>, Dense)> {
        self.check_input(x)?;
        if grad_out.len() != self.out_dim {
            return Err(Error::Shape(format!(
                "dense layer has {} outputs, gradient has {}",
                self.out_dim,
                grad_out.len()
            )));
        }
        let mut grad = self.zeros_like();
        let mut grad_x = vec![0.0; self.in_dim];
        self.accumulate(x, grad_out, &mut grad, Some(&mut grad_x));
        Ok((grad_x, grad))
    }

    /// Adds this sample's parameter gradients into `grad`; writes dL/dx into
    /// `grad_x` when requested.
    pub(crate) fn accumulate(&self, x: &[f64], grad_out: &[f64], grad: &mut Dense, grad_x: Option<&mut [f64]>) {
        for ((g, gw), gb) in grad_out
            .iter()
            .zip(grad.weight.chunks_exact_mut(self.in_dim))
            .zip(grad.bias.iter_mut())
        {
            *gb += g;
            if *g != 0.0 {
                for (w, v) in gw.iter_mut().zip(x) {
                    *w += g * v;
                }
            }
        }
        if let Some(gx) = grad_x {
            gx.fill(0.0);
            for (g, row) in grad_out.iter().zip(self.weight.chunks_exact(self.in_dim)) {
                if *g != 0.0 {
                    for (o, w) in gx.iter_mut().zip(row) {
                        *o += g * w;
                    }
                }
            }
        }
    }
}

impl Parameters for Dense {
    fn blocks(&self) -> Vec<(String, &[f64])> {
        vec![("weight".into(), &self.weight), ("bias".into(), &self.bias)]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn zeros_like(&self) -> Self {
        Dense::zeros(self.in_dim, self.out_dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;

    #[test]
    fn identity_and_arithmetic() {
        let mut eye = Dense::zeros(3, 3);
        for i in 0..3 {
            eye.weight[i * 3 + i] = 1.0;
        }
        assert_eq!(eye.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
        let d = Dense::from_parts(2, 1, vec![1.0, 2.0], vec![3.0]).unwrap();
        assert_eq!(d.forward(&[4.0, 5.0]).unwrap(), vec![17.0]);
    }

    #[test]
    fn shape_errors() {
        let d = Dense::zeros(2, 1);
        assert!(matches!(d.forward(&[1.0]), Err(Error::Shape(_))));
        assert!(matches!(d.backward(&[1.0, 2.0], &[1.0, 1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(8);
        let layer = Dense::xavier(7, 5, &mut rng);
        let x: Vec<f64> = (0..7).map(|_| rng.normal()).collect();
        let c: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
        // L = c · y + ½‖y‖², nonlinear in the parameters through the square
        let loss = |l: &Dense, x: &[f64]| {
            let y = l.forward(x).unwrap();
            y.iter().zip(&c).map(|(a, b)| a * b + 0.5 * a * a).sum::<f64>()
        };
        let y = layer.forward(&x).unwrap();
        let g: Vec<f64> = y.iter().zip(&c).map(|(a, b)| a + b).collect();
        let (gx, grad) = layer.backward(&x, &g).unwrap();

        let mut probe = layer.clone();
        let report = grad_check(
            |p| {
                probe.load_flat(p).unwrap();
                loss(&probe, &x)
            },
            &layer.flatten(),
            &grad.flatten(),
            1e-5,
            200,
            &mut rng,
        );
        assert!(report.max_rel_error <= 1e-6, "{report:?}");

        let report = grad_check(|xp| loss(&layer, xp), &x, &gx, 1e-5, 200, &mut rng);
        assert!(report.max_rel_error <= 1e-6, "{report:?}");
    }
}
