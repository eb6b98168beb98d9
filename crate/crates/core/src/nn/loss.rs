use crate::{Error, Result};

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Cross-entropy of `softmax(logits)` against a (possibly soft) target
/// distribution. Returns the loss and dL/dlogits = softmax − target.
pub fn softmax_xent(logits: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != target.len() || logits.is_empty() {
        return Err(Error::Shape(format!(
            "{} logits vs {} target entries",
            logits.len(),
            target.len()
        )));
    }
    let mass: f64 = target.iter().sum();
    if target.iter().any(|t| !(*t >= 0.0)) || (mass - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "target is not a probability distribution (sum {mass})"
        )));
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
    let log_z = m + z.ln();
    let loss = target
        .iter()
        .zip(logits)
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, l)| t * (log_z - l))
        .sum();
    let grad = logits
        .iter()
        .zip(target)
        .map(|(l, t)| (l - log_z).exp() - t)
        .collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits() {
        let (l, g) = softmax_xent(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(g, vec![-0.5, 0.5]);
    }

    #[test]
    fn large_logits_are_stable() {
        let (l, g) = softmax_xent(&[1000.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(l.is_finite() && l.abs() < 1e-12);
        assert!(g.iter().all(|v| v.is_finite()));
        let p = softmax(&[1000.0, -1000.0]);
        assert_eq!(p[0], 1.0);
    }

    #[test]
    fn soft_target_is_a_mixture() {
        let logits = [0.3, -1.2];
        let (mixed, _) = softmax_xent(&logits, &[0.6, 0.4]).unwrap();
        let (a, _) = softmax_xent(&logits, &[1.0, 0.0]).unwrap();
        let (b, _) = softmax_xent(&logits, &[0.0, 1.0]).unwrap();
        assert!((mixed - (0.6 * a + 0.4 * b)).abs() <= 1e-12);
    }

    #[test]
    fn rejects_bad_targets() {
        assert!(matches!(softmax_xent(&[0.0, 0.0], &[0.7, 0.7]), Err(Error::Domain(_))));
        assert!(matches!(softmax_xent(&[0.0, 0.0], &[1.5, -0.5]), Err(Error::Domain(_))));
        assert!(matches!(softmax_xent(&[0.0], &[0.5, 0.5]), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(l in prop::collection::vec(-50.0f64..50.0, 2..6)) {
            let p = softmax(&l);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(p.iter().all(|v| *v > 0.0));
        }

        #[test]
        fn linear_in_target(a in -20.0f64..20.0, b in -20.0f64..20.0, lam in 0.0f64..=1.0, t in 0.0f64..=1.0) {
            let logits = [a, b];
            let t1 = [1.0, 0.0];
            let t2 = [t, 1.0 - t];
            let mix = [lam * t1[0] + (1.0 - lam) * t2[0], lam * t1[1] + (1.0 - lam) * t2[1]];
            let (l, _) = softmax_xent(&logits, &mix).unwrap();
            let (l1, _) = softmax_xent(&logits, &t1).unwrap();
            let (l2, _) = softmax_xent(&logits, &t2).unwrap();
            prop_assert!((l - (lam * l1 + (1.0 - lam) * l2)).abs() <= 1e-12 * (1.0 + l.abs()));
        }
    }
}
