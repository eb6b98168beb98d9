//! Precomputed-embedding interchange and dataset assembly.

mod dataset;
mod pooling;
mod swem;

pub use dataset::{
    assemble_dataset, load_labels, AssembleOptions, DatasetSplit, Manifest, ManifestSubject, Split,
    SubjectRecord,
};
pub use pooling::{chunk_spans, pool_rows, ChunkSpan, PoolStrategy};
pub use swem::{decode_swem, encode_swem, read_swem, write_swem, SWEM_MAGIC, SWEM_VERSION};

use crate::{Error, Matrix, Result};

/// Row-major float32 matrix: chunk or token embeddings from an upstream
/// encoder, or a 1×D per-file feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("embedding matrix must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("entry {i} is not finite")));
        }
        Ok(Self { rows, cols, data })
    }

    /// Single-row matrix, narrowing to f32.
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        Self::new(1, v.len(), v.iter().map(|x| *x as f32).collect())
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        Self::new(m.rows(), m.cols(), m.as_slice().iter().map(|x| *x as f32).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(
            self.rows,
            self.cols,
            self.data.iter().map(|v| f64::from(*v)).collect(),
        )
        .expect("dimensions checked at construction")
    }
}
