//! Dense row-major tensors and the elementwise/matrix math the network and
//! optimizer are built from.
//!
//! Values are `f64` throughout and stored flat; there are no strided views.
//! Sizes here are desk-scale, so copies are cheap and the semantics stay
//! simple.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("shape {shape:?} implies {expected} elements, data has {actual}")]
    LengthMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    DimMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op} expects rank {expected}, got shape {shape:?}")]
    RankMismatch {
        op: &'static str,
        expected: usize,
        shape: Vec<usize>,
    },
    #[error("axis {axis} out of range for shape {shape:?}")]
    AxisOutOfRange { axis: usize, shape: Vec<usize> },
    #[error("slice {start}..{end} out of range on axis {axis} of {shape:?}")]
    SliceOutOfRange {
        axis: usize,
        start: usize,
        end: usize,
        shape: Vec<usize>,
    },
    #[error("zero-sized dimension in shape {shape:?}")]
    EmptyShape { shape: Vec<usize> },
}

/// Dense array with explicit shape and flat row-major data.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking that `data.len()` matches the shape product
    /// and every dimension is positive.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        if shape.iter().any(|&d| d == 0) {
            return Err(TensorError::EmptyShape { shape });
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(TensorError::LengthMismatch {
                expected,
                actual: data.len(),
                shape,
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }

    /// 1-D tensor over `values`.
    pub fn vector(values: Vec<f64>) -> Self {
        Self {
            shape: vec![values.len()],
            data: values,
        }
    }

    /// Square identity matrix of side `n`.
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            shape: vec![n, n],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
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

    /// Value at a multi-index (row-major).
    pub fn at(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.shape.len());
        let mut offset = 0;
        for (i, &ix) in index.iter().enumerate() {
            debug_assert!(ix < self.shape[i]);
            offset = offset * self.shape[i] + ix;
        }
        self.data[offset]
    }

    /// Applies `f` to every element.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Standard matrix product of two rank-2 tensors.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.rank() != 2 {
            return Err(TensorError::RankMismatch {
                op: "matmul",
                expected: 2,
                shape: self.shape.clone(),
            });
        }
        if other.rank() != 2 {
            return Err(TensorError::RankMismatch {
                op: "matmul",
                expected: 2,
                shape: other.shape.clone(),
            });
        }
        let (m, k) = (self.shape[0], self.shape[1]);
        let (k2, n) = (other.shape[0], other.shape[1]);
        if k != k2 {
            return Err(TensorError::DimMismatch {
                op: "matmul",
                lhs: self.shape.clone(),
                rhs: other.shape.clone(),
            });
        }
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let a = self.data[i * k + p];
                for j in 0..n {
                    data[i * n + j] += a * other.data[p * n + j];
                }
            }
        }
        Ok(Tensor {
            shape: vec![m, n],
            data,
        })
    }

    /// Matrix-vector product: rank-2 `[m, k]` times rank-1 `[k]` gives `[m]`.
    pub fn matvec(&self, v: &Tensor) -> Result<Tensor, TensorError> {
        if self.rank() != 2 {
            return Err(TensorError::RankMismatch {
                op: "matvec",
                expected: 2,
                shape: self.shape.clone(),
            });
        }
        if v.rank() != 1 || v.shape[0] != self.shape[1] {
            return Err(TensorError::DimMismatch {
                op: "matvec",
                lhs: self.shape.clone(),
                rhs: v.shape.clone(),
            });
        }
        let (m, k) = (self.shape[0], self.shape[1]);
        let mut data = vec![0.0; m];
        for i in 0..m {
            let row = &self.data[i * k..(i + 1) * k];
            data[i] = row.iter().zip(&v.data).map(|(a, b)| a * b).sum();
        }
        Ok(Tensor {
            shape: vec![m],
            data,
        })
    }

    /// Elementwise logistic function; outputs lie strictly inside (0, 1).
    pub fn sigmoid(&self) -> Tensor {
        self.map(sigmoid_scalar)
    }

    /// Elementwise hyperbolic tangent; outputs lie strictly inside (-1, 1).
    pub fn tanh_map(&self) -> Tensor {
        self.map(tanh_scalar)
    }

    /// Elementwise product of tensors with identical shape.
    pub fn hadamard(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.shape != other.shape {
            return Err(TensorError::DimMismatch {
                op: "hadamard",
                lhs: self.shape.clone(),
                rhs: other.shape.clone(),
            });
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// Elementwise sum of tensors with identical shape.
    pub fn add(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        if self.shape != other.shape {
            return Err(TensorError::DimMismatch {
                op: "add",
                lhs: self.shape.clone(),
                rhs: other.shape.clone(),
            });
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Concatenates two tensors along `axis`; the off-axis dimensions must
    /// agree.
    pub fn concat(&self, other: &Tensor, axis: usize) -> Result<Tensor, TensorError> {
        if self.rank() != other.rank() {
            return Err(TensorError::DimMismatch {
                op: "concat",
                lhs: self.shape.clone(),
                rhs: other.shape.clone(),
            });
        }
        if axis >= self.rank() {
            return Err(TensorError::AxisOutOfRange {
                axis,
                shape: self.shape.clone(),
            });
        }
        for d in 0..self.rank() {
            if d != axis && self.shape[d] != other.shape[d] {
                return Err(TensorError::DimMismatch {
                    op: "concat",
                    lhs: self.shape.clone(),
                    rhs: other.shape.clone(),
                });
            }
        }
        let mut shape = self.shape.clone();
        shape[axis] += other.shape[axis];

        // Row-major concat: iterate over the outer block index, then copy the
        // contiguous inner run of each operand.
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let lhs_run = self.shape[axis] * inner;
        let rhs_run = other.shape[axis] * inner;
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for o in 0..outer {
            data.extend_from_slice(&self.data[o * lhs_run..(o + 1) * lhs_run]);
            data.extend_from_slice(&other.data[o * rhs_run..(o + 1) * rhs_run]);
        }
        Ok(Tensor { shape, data })
    }

    /// Sub-tensor taking indices `start..end` along `axis`.
    pub fn slice(&self, axis: usize, start: usize, end: usize) -> Result<Tensor, TensorError> {
        if axis >= self.rank() {
            return Err(TensorError::AxisOutOfRange {
                axis,
                shape: self.shape.clone(),
            });
        }
        if start >= end || end > self.shape[axis] {
            return Err(TensorError::SliceOutOfRange {
                axis,
                start,
                end,
                shape: self.shape.clone(),
            });
        }
        let mut shape = self.shape.clone();
        shape[axis] = end - start;
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let src_run = self.shape[axis] * inner;
        let mut data = Vec::with_capacity(outer * (end - start) * inner);
        for o in 0..outer {
            let base = o * src_run + start * inner;
            data.extend_from_slice(&self.data[base..base + (end - start) * inner]);
        }
        Ok(Tensor { shape, data })
    }
}

/// Largest double below 1.
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

/// Scalar logistic function, shared with the network head.
///
/// Deeply saturated inputs would round to exactly 0 or 1; those are nudged
/// one representable value into the open interval so outputs stay strictly
/// inside (0, 1).
pub fn sigmoid_scalar(x: f64) -> f64 {
    let s = 1.0 / (1.0 + (-x).exp());
    if s <= 0.0 {
        f64::MIN_POSITIVE
    } else if s >= 1.0 {
        ONE_BELOW
    } else {
        s
    }
}

/// Scalar tanh with the same open-interval guarantee on (-1, 1).
pub fn tanh_scalar(x: f64) -> f64 {
    let t = x.tanh();
    if t <= -1.0 {
        -ONE_BELOW
    } else if t >= 1.0 {
        ONE_BELOW
    } else {
        t
    }
}
