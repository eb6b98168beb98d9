use serde::{Deserialize, Serialize};

use super::EmbeddingMatrix;
use crate::{Error, Result};

/// Trailing spans shorter than this merge into their predecessor.
const MIN_TAIL_S: f64 = 0.5;

/// Half-open time span `[start_s, end_s)` of one encoder chunk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkSpan {
    pub start_s: f64,
    pub end_s: f64,
}

impl ChunkSpan {
    pub fn len_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Splits `[0, duration_s)` into windows of `chunk_s` seconds advancing by
/// `chunk_s · (1 − overlap_frac)`. The last window is clipped to the duration
/// and windows stop once one reaches the end.
pub fn chunk_spans(duration_s: f64, chunk_s: f64, overlap_frac: f64) -> Result<Vec<ChunkSpan>> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::Domain(format!("duration {duration_s} s must be positive")));
    }
    if !(chunk_s > 0.0 && chunk_s.is_finite()) {
        return Err(Error::Domain(format!("chunk length {chunk_s} s must be positive")));
    }
    if !(0.0..1.0).contains(&overlap_frac) {
        return Err(Error::Domain(format!("overlap {overlap_frac} outside [0, 1)")));
    }
    let hop = chunk_s * (1.0 - overlap_frac);
    let mut spans: Vec<ChunkSpan> = Vec::new();
    for i in 0.. {
        let start_s = i as f64 * hop;
        let end_s = (start_s + chunk_s).min(duration_s);
        spans.push(ChunkSpan { start_s, end_s });
        if end_s >= duration_s {
            break;
        }
    }
    if spans.len() > 1 && spans.last().unwrap().len_s() < MIN_TAIL_S {
        spans.pop();
        spans.last_mut().unwrap().end_s = duration_s;
    }
    Ok(spans)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolStrategy {
    /// Per-column mean over all rows (chunks or tokens).
    #[default]
    Mean,
    /// Row 0, i.e. the classifier token of a text encoder.
    ClsFirst,
}

impl std::str::FromStr for PoolStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(PoolStrategy::Mean),
            "cls" | "cls_first" => Ok(PoolStrategy::ClsFirst),
            other => Err(Error::Value(format!("unknown pooling strategy {other:?}"))),
        }
    }
}

pub fn pool_rows(m: &EmbeddingMatrix, strategy: PoolStrategy) -> Vec<f64> {
    match strategy {
        PoolStrategy::ClsFirst => m.row(0).iter().map(|v| f64::from(*v)).collect(),
        PoolStrategy::Mean => m.to_matrix().column_means(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spans(d: f64, c: f64, o: f64) -> Vec<(f64, f64)> {
        chunk_spans(d, c, o).unwrap().iter().map(|s| (s.start_s, s.end_s)).collect()
    }

    #[test]
    fn spec_examples() {
        assert_eq!(spans(25.0, 10.0, 0.0), vec![(0.0, 10.0), (10.0, 20.0), (20.0, 25.0)]);
        assert_eq!(spans(20.0, 10.0, 0.5), vec![(0.0, 10.0), (5.0, 15.0), (10.0, 20.0)]);
        assert_eq!(spans(3.2, 1.0, 0.0), vec![(0.0, 1.0), (1.0, 2.0), (2.0, 3.2)]);
    }

    #[test]
    fn short_audio_is_one_span() {
        assert_eq!(spans(0.3, 1.0, 0.0), vec![(0.0, 0.3)]);
        assert_eq!(spans(7.0, 10.0, 0.5), vec![(0.0, 7.0)]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(chunk_spans(0.0, 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(chunk_spans(5.0, -1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(chunk_spans(5.0, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn pooling_examples() {
        let m = EmbeddingMatrix::new(2, 2, vec![1.0, 3.0, 3.0, 5.0]).unwrap();
        assert_eq!(pool_rows(&m, PoolStrategy::Mean), vec![2.0, 4.0]);
        let m = EmbeddingMatrix::new(2, 2, vec![7.0, 8.0, 9.0, 10.0]).unwrap();
        assert_eq!(pool_rows(&m, PoolStrategy::ClsFirst), vec![7.0, 8.0]);
        let one = EmbeddingMatrix::new(1, 3, vec![1.5, -2.0, 0.25]).unwrap();
        assert_eq!(pool_rows(&one, PoolStrategy::Mean), pool_rows(&one, PoolStrategy::ClsFirst));
    }

    proptest! {
        #[test]
        fn span_invariants(d in 0.1f64..200.0, c in 0.2f64..30.0, o in 0.0f64..0.9) {
            let s = chunk_spans(d, c, o).unwrap();
            let hop = c * (1.0 - o);
            prop_assert_eq!(s[0].start_s, 0.0);
            prop_assert_eq!(s.last().unwrap().end_s, d);
            for w in s.windows(2) {
                prop_assert!(w[0].start_s < w[1].start_s);
                prop_assert!((w[1].start_s - w[0].start_s - hop).abs() < 1e-9 * (1.0 + w[1].start_s));
                // no gaps
                prop_assert!(w[1].start_s <= w[0].end_s);
            }
            for sp in &s {
                prop_assert!(sp.start_s < sp.end_s);
            }
        }

        #[test]
        fn mean_pooling_is_permutation_invariant_and_linear(
            rows in 2usize..6, cols in 1usize..5, seed in any::<u64>(), scale in -4.0f64..4.0
        ) {
            let mut rng = crate::Rng::new(seed);
            let data: Vec<f32> = (0..rows * cols).map(|_| rng.normal() as f32).collect();
            let m = EmbeddingMatrix::new(rows, cols, data.clone()).unwrap();
            let perm = rng.permutation(rows);
            let mut shuffled = Vec::with_capacity(data.len());
            for &r in &perm {
                shuffled.extend_from_slice(m.row(r));
            }
            let p = EmbeddingMatrix::new(rows, cols, shuffled).unwrap();
            let a = pool_rows(&m, PoolStrategy::Mean);
            let b = pool_rows(&p, PoolStrategy::Mean);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            if perm[0] != 0 && m.row(0) != m.row(perm[0]) {
                prop_assert_ne!(pool_rows(&m, PoolStrategy::ClsFirst), pool_rows(&p, PoolStrategy::ClsFirst));
            }

            // Scaling in f32 storage is inexact, so scale the widened matrix.
            let scaled: Vec<f64> = m.to_matrix().as_slice().iter().map(|v| v * scale).collect();
            let sm = crate::Matrix::from_vec(rows, cols, scaled).unwrap().column_means();
            for (x, y) in a.iter().zip(&sm) {
                prop_assert!((x * scale - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }
}
