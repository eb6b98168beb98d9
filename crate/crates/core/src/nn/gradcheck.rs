use std::ops::Range;

use crate::Rng;

/// Denominator floor for the relative error, so coordinates whose true
/// gradient is ~0 are judged on absolute error instead.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Flat index of the worst coordinate.
    pub worst_index: usize,
    pub checked: usize,
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Picks up to `max_coords` distinct coordinates, spreading the quota evenly
/// over `strata` so small parameter blocks are always represented.
pub fn sample_coordinates(strata: &[Range<usize>], max_coords: usize, rng: &mut Rng) -> Vec<usize> {
    let total: usize = strata.iter().map(|r| r.len()).sum();
    if total <= max_coords {
        return strata.iter().flat_map(|r| r.clone()).collect();
    }
    let mut picked = Vec::with_capacity(max_coords);
    let mut leftovers = Vec::new();
    let quota = (max_coords / strata.len().max(1)).max(1);
    for r in strata {
        let mut idx: Vec<usize> = r.clone().collect();
        rng.shuffle(&mut idx);
        let take = quota.min(idx.len()).min(max_coords - picked.len());
        picked.extend_from_slice(&idx[..take]);
        leftovers.extend_from_slice(&idx[take..]);
    }
    rng.shuffle(&mut leftovers);
    let need = max_coords - picked.len();
    picked.extend(leftovers.into_iter().take(need));
    picked.sort_unstable();
    picked
}

/// Central-difference check of `analytic` against `loss` at `params`.
pub fn grad_check<F>(loss: F, params: &[f64], analytic: &[f64], eps: f64, max_coords: usize, rng: &mut Rng) -> GradCheck
where
    F: FnMut(&[f64]) -> f64,
{
    grad_check_strata(loss, params, analytic, eps, &[0..params.len()], max_coords, rng)
}

pub fn grad_check_strata<F>(
    mut loss: F,
    params: &[f64],
    analytic: &[f64],
    eps: f64,
    strata: &[Range<usize>],
    max_coords: usize,
    rng: &mut Rng,
) -> GradCheck
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "parameter and gradient lengths differ");
    let coords = sample_coordinates(strata, max_coords, rng);
    let mut p = params.to_vec();
    let mut worst = (0.0, 0);
    for &i in &coords {
        let orig = p[i];
        p[i] = orig + eps;
        let up = loss(&p);
        p[i] = orig - eps;
        let down = loss(&p);
        p[i] = orig;
        let err = rel_error(analytic[i], (up - down) / (2.0 * eps));
        if err > worst.0 || err.is_nan() {
            worst = (err, i);
        }
    }
    GradCheck {
        max_rel_error: worst.0,
        worst_index: worst.1,
        checked: coords.len(),
    }
}
