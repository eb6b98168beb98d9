//! Pre-logit extraction, exact t-SNE and labelled scatter export.

mod scatter;
mod tsne;

pub use scatter::{export_scatter, read_scatter_csv, render_svg, write_scatter_csv};
pub use tsne::{conditional_p, joint_p, pairwise_sq_dists, tsne, Projection2D, TsneConfig};

use crate::fusion::{FusionModel, ModalityInput};
use crate::{Matrix, Result};

/// Penultimate-layer activations, one row per input.
pub fn extract_prelogit(model: &FusionModel, inputs: &[ModalityInput]) -> Result<Matrix> {
    let rows = inputs
        .iter()
        .map(|x| model.forward(x).map(|t| t.prelogit))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, model.config.hidden_dim));
    }
    Matrix::from_rows(&rows)
}

/// Per-column z-scoring; constant columns are only centred.
pub fn zscore_columns(m: &Matrix) -> Matrix {
    let (n, d) = m.shape();
    let mean = m.column_means();
    let mut sd = vec![0.0; d];
    for r in m.iter_rows() {
        for ((s, v), mu) in sd.iter_mut().zip(r).zip(&mean) {
            *s += (v - mu) * (v - mu);
        }
    }
    sd.iter_mut().for_each(|s| {
        *s = (*s / n.max(1) as f64).sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    });
    let mut out = m.clone();
    for i in 0..n {
        for (j, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = (*v - mean[j]) / sd[j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{Architecture, FusionConfig};
    use crate::Rng;

    #[test]
    fn prelogit_shape_and_purity() {
        let cfg = FusionConfig {
            proj_dim: 4,
            hidden_dim: 6,
            ..FusionConfig::new(Architecture::ModalityAttentionV2, 3, 2, Some(2))
        };
        let model = FusionModel::build(cfg, &mut Rng::new(1)).unwrap();
        let mut rng = Rng::new(2);
        let mut xs: Vec<ModalityInput> = (0..5)
            .map(|_| {
                let mut v = |n: usize| (0..n).map(|_| rng.normal()).collect::<Vec<_>>();
                ModalityInput::new(v(3), v(2), Some(v(2)))
            })
            .collect();
        xs.push(xs[0].clone());
        let m = extract_prelogit(&model, &xs).unwrap();
        assert_eq!(m.shape(), (6, 6));
        assert_eq!(m.row(0), m.row(5));
        assert_eq!(m, extract_prelogit(&model, &xs).unwrap());
        let bad = vec![ModalityInput::new(vec![0.0; 4], vec![0.0; 2], Some(vec![0.0; 2]))];
        assert!(matches!(extract_prelogit(&model, &bad), Err(crate::Error::Input(_))));
    }

    #[test]
    fn zscore_centres_and_scales() {
        let m = Matrix::from_rows(&[vec![1.0, 4.0], vec![3.0, 4.0]]).unwrap();
        let z = zscore_columns(&m);
        assert_eq!(z.to_rows(), vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
    }
}
