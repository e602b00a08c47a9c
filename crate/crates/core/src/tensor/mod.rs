//! Dense row-major `f64` tensors with a reverse-mode gradient tape.
//!
//! A [`Tape`] records operations on [`Var`] handles while computing forward
//! values. Trainable weights live in a [`ParamStore`] that the tape borrows, so
//! large weight matrices are never copied into the tape. [`Tape::backward`]
//! returns one gradient buffer per parameter that the loss depends on, which
//! [`Adam`] consumes.

mod optim;
mod params;
mod tape;

pub use optim::{Adam, AdamConfig, LrSchedule};
pub use params::{Gradients, ParamId, ParamStore, MODEL_MAGIC, MODEL_FORMAT_VERSION};
pub use tape::{Tape, Var};

use crate::error::{Error, Result, Shape};

/// A dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension {
                op: "tensor",
                lhs: Shape(shape),
                rhs: Shape(vec![data.len()]),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor { shape, data: vec![0.0; len] }
    }

    pub fn scalar(x: f64) -> Self {
        Tensor { shape: vec![1, 1], data: vec![x] }
    }

    /// `rows x cols` matrix from row-major data.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    /// Column vector.
    pub fn column(data: Vec<f64>) -> Self {
        Tensor { shape: vec![data.len(), 1], data }
    }

    /// Row vector.
    pub fn row(data: Vec<f64>) -> Self {
        Tensor { shape: vec![1, data.len()], data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Leading dimension (1 for a rank-0 tensor).
    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    /// Product of the trailing dimensions; tensors are viewed as
    /// `rows x cols` matrices by every tape op.
    pub fn cols(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    pub fn row_slice(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub(crate) fn shape_err(&self) -> Shape {
        Shape(self.shape.clone())
    }
}
