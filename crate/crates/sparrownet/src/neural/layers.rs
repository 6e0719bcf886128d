//! Convolutional, pooling, residual and dense layers, forward pass only.

use serde::{Deserialize, Serialize};

use super::NeuralError;
use crate::tensor::Tensor;

/// Zero-padding mode for convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Padding {
    /// No padding; output shrinks by the kernel extent.
    Valid,
    /// Zero padding sized so that at stride 1 the output keeps the input's
    /// spatial shape (asymmetric surplus goes to the bottom/right edge).
    Same,
}

/// 2-D convolution with a `[kh, kw, in_ch, out_ch]` kernel.
///
/// The forward pass is plain cross-correlation:
/// `Y[i,j,k] = sum over (m,n,l) of X[i*s+m, j*s+n, l] * W[m,n,l,k] + b[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub kernel: Tensor,
    pub bias: Tensor,
    pub stride: usize,
    pub padding: Padding,
}

impl ConvLayer {
    pub fn new(
        kernel: Tensor,
        bias: Tensor,
        stride: usize,
        padding: Padding,
    ) -> Result<Self, NeuralError> {
        if kernel.rank() != 4 {
            return Err(NeuralError::Shape(format!(
                "conv kernel must be rank 4 [kh, kw, in, out], got {:?}",
                kernel.shape()
            )));
        }
        if bias.rank() != 1 || bias.shape()[0] != kernel.shape()[3] {
            return Err(NeuralError::Shape(format!(
                "conv bias {:?} must match kernel output channels {}",
                bias.shape(),
                kernel.shape()[3]
            )));
        }
        if stride == 0 {
            return Err(NeuralError::Shape("conv stride must be >= 1".into()));
        }
        Ok(Self {
            kernel,
            bias,
            stride,
            padding,
        })
    }

    /// All-zero kernel and bias.
    pub fn zeros(
        kh: usize,
        kw: usize,
        in_ch: usize,
        out_ch: usize,
        stride: usize,
        padding: Padding,
    ) -> Self {
        Self {
            kernel: Tensor::zeros(vec![kh, kw, in_ch, out_ch]),
            bias: Tensor::zeros(vec![out_ch]),
            stride,
            padding,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape()[2]
    }

    pub fn out_channels(&self) -> usize {
        self.kernel.shape()[3]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, NeuralError> {
        if x.rank() != 3 {
            return Err(NeuralError::Shape(format!(
                "conv input must be rank 3 [H, W, C], got {:?}",
                x.shape()
            )));
        }
        let (kh, kw) = (self.kernel.shape()[0], self.kernel.shape()[1]);
        let in_ch = self.in_channels();
        if x.shape()[2] != in_ch {
            return Err(NeuralError::Shape(format!(
                "conv input channels {} do not match kernel input channels {in_ch}",
                x.shape()[2]
            )));
        }
        let padded;
        let x = match self.padding {
            Padding::Valid => x,
            Padding::Same => {
                padded = pad_same(x, kh, kw, self.stride);
                &padded
            }
        };
        let (h, w) = (x.shape()[0], x.shape()[1]);
        if h < kh || w < kw {
            return Err(NeuralError::Shape(format!(
                "conv input {}x{} smaller than kernel {kh}x{kw}",
                h, w
            )));
        }
        let out_ch = self.out_channels();
        let out_h = (h - kh) / self.stride + 1;
        let out_w = (w - kw) / self.stride + 1;
        let xd = x.data();
        let kd = self.kernel.data();
        let bd = self.bias.data();
        let mut out = vec![0.0; out_h * out_w * out_ch];
        for i in 0..out_h {
            for j in 0..out_w {
                let base = (i * out_w + j) * out_ch;
                for m in 0..kh {
                    for n in 0..kw {
                        let x_row = ((i * self.stride + m) * w + (j * self.stride + n)) * in_ch;
                        let k_row = ((m * kw + n) * in_ch) * out_ch;
                        for l in 0..in_ch {
                            let xv = xd[x_row + l];
                            let k_base = k_row + l * out_ch;
                            for k in 0..out_ch {
                                out[base + k] += xv * kd[k_base + k];
                            }
                        }
                    }
                }
                for k in 0..out_ch {
                    out[base + k] += bd[k];
                }
            }
        }
        Ok(Tensor::new(vec![out_h, out_w, out_ch], out).expect("shape matches data"))
    }
}

fn pad_same(x: &Tensor, kh: usize, kw: usize, stride: usize) -> Tensor {
    let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let out_h = h.div_ceil(stride);
    let out_w = w.div_ceil(stride);
    let pad_h = ((out_h - 1) * stride + kh).saturating_sub(h);
    let pad_w = ((out_w - 1) * stride + kw).saturating_sub(w);
    let (top, left) = (pad_h / 2, pad_w / 2);
    let mut data = vec![0.0; (h + pad_h) * (w + pad_w) * c];
    let xd = x.data();
    for i in 0..h {
        for j in 0..w {
            let src = (i * w + j) * c;
            let dst = ((i + top) * (w + pad_w) + (j + left)) * c;
            data[dst..dst + c].copy_from_slice(&xd[src..src + c]);
        }
    }
    Tensor::new(vec![h + pad_h, w + pad_w, c], data).expect("shape matches data")
}

/// Per-channel max over sliding rectangular regions.
pub fn maxpool_forward(
    x: &Tensor,
    window: (usize, usize),
    stride: usize,
) -> Result<Tensor, NeuralError> {
    if x.rank() != 3 {
        return Err(NeuralError::Shape(format!(
            "maxpool input must be rank 3 [H, W, C], got {:?}",
            x.shape()
        )));
    }
    let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (ph, pw) = window;
    if ph == 0 || pw == 0 || stride == 0 {
        return Err(NeuralError::Shape("maxpool window and stride must be >= 1".into()));
    }
    if ph > h || pw > w {
        return Err(NeuralError::Shape(format!(
            "maxpool window {ph}x{pw} larger than input {h}x{w}"
        )));
    }
    let out_h = (h - ph) / stride + 1;
    let out_w = (w - pw) / stride + 1;
    let xd = x.data();
    let mut out = vec![f64::NEG_INFINITY; out_h * out_w * c];
    for i in 0..out_h {
        for j in 0..out_w {
            let base = (i * out_w + j) * c;
            for m in 0..ph {
                for n in 0..pw {
                    let src = ((i * stride + m) * w + (j * stride + n)) * c;
                    for k in 0..c {
                        if xd[src + k] > out[base + k] {
                            out[base + k] = xd[src + k];
                        }
                    }
                }
            }
        }
    }
    Ok(Tensor::new(vec![out_h, out_w, c], out).expect("shape matches data"))
}

/// Spatial mean per channel: `[H, W, C]` collapses to `[C]`.
pub fn gap_forward(x: &Tensor) -> Result<Tensor, NeuralError> {
    if x.rank() != 3 {
        return Err(NeuralError::Shape(format!(
            "global average pool input must be rank 3, got {:?}",
            x.shape()
        )));
    }
    let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let mut sums = vec![0.0; c];
    for (idx, &v) in x.data().iter().enumerate() {
        sums[idx % c] += v;
    }
    let area = (h * w) as f64;
    Ok(Tensor::vector(sums.into_iter().map(|s| s / area).collect()))
}

/// Elementwise rectifier.
pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// A stack of same-padded convolutions plus the skip connection:
/// `Y = branch(X) + X`, with a 1x1 projection on the skip path when the
/// channel counts differ. ReLU sits between branch convolutions; nothing
/// follows the addition.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub branch: Vec<ConvLayer>,
    pub projection: Option<ConvLayer>,
}

impl ResidualBlock {
    pub fn new(
        branch: Vec<ConvLayer>,
        projection: Option<ConvLayer>,
    ) -> Result<Self, NeuralError> {
        if branch.is_empty() {
            return Err(NeuralError::Shape("residual branch must hold at least one conv".into()));
        }
        for conv in &branch {
            if conv.padding != Padding::Same || conv.stride != 1 {
                return Err(NeuralError::Shape(
                    "residual branch convs must use same padding and stride 1".into(),
                ));
            }
        }
        if let Some(p) = &projection {
            if p.kernel.shape()[0] != 1 || p.kernel.shape()[1] != 1 || p.stride != 1 {
                return Err(NeuralError::Shape(
                    "residual projection must be a 1x1, stride-1 conv".into(),
                ));
            }
        }
        Ok(Self { branch, projection })
    }

    pub fn in_channels(&self) -> usize {
        self.branch[0].in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.branch.last().expect("non-empty branch").out_channels()
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, NeuralError> {
        let mut h = self.branch[0].forward(x)?;
        for conv in &self.branch[1..] {
            h = conv.forward(&relu(&h))?;
        }
        let skip = match &self.projection {
            Some(p) => p.forward(x)?,
            None => {
                if self.in_channels() != self.out_channels() {
                    return Err(NeuralError::Shape(format!(
                        "residual channels {} -> {} need a projection on the skip path",
                        self.in_channels(),
                        self.out_channels()
                    )));
                }
                x.clone()
            }
        };
        if skip.shape() != h.shape() {
            return Err(NeuralError::Shape(format!(
                "residual branch output {:?} does not match skip path {:?}",
                h.shape(),
                skip.shape()
            )));
        }
        Ok(h.add(&skip)?)
    }
}

/// Fully connected layer: `y = transpose(W) . x + b` with `W` stored
/// `[in, out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    pub fn new(weights: Tensor, bias: Tensor) -> Result<Self, NeuralError> {
        if weights.rank() != 2 || bias.rank() != 1 || weights.shape()[1] != bias.shape()[0] {
            return Err(NeuralError::Shape(format!(
                "dense weights {:?} and bias {:?} do not agree",
                weights.shape(),
                bias.shape()
            )));
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weights: Tensor::zeros(vec![input, output]),
            bias: Tensor::zeros(vec![output]),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, NeuralError> {
        if x.rank() != 1 || x.shape()[0] != self.weights.shape()[0] {
            return Err(NeuralError::Shape(format!(
                "dense input {:?} does not match weights {:?}",
                x.shape(),
                self.weights.shape()
            )));
        }
        let (input, output) = (self.weights.shape()[0], self.weights.shape()[1]);
        let wd = self.weights.data();
        let xd = x.data();
        let mut out = self.bias.data().to_vec();
        for i in 0..input {
            let xi = xd[i];
            for o in 0..output {
                out[o] += wd[i * output + o] * xi;
            }
        }
        Ok(Tensor::vector(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Prng, RandomSource};

    fn conv(kernel: Vec<usize>, kdata: Vec<f64>, bias: Vec<f64>, padding: Padding) -> ConvLayer {
        ConvLayer::new(
            Tensor::new(kernel, kdata).unwrap(),
            Tensor::vector(bias),
            1,
            padding,
        )
        .unwrap()
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        let layer = conv(vec![1, 1, 1, 1], vec![1.0], vec![0.0], Padding::Valid);
        let x = Tensor::new(vec![2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(layer.forward(&x).unwrap(), x);
    }

    #[test]
    fn all_ones_kernel_sums_the_window() {
        let layer = conv(vec![2, 2, 1, 1], vec![1.0; 4], vec![0.0], Padding::Valid);
        let x = Tensor::new(vec![2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1]);
        assert_eq!(y.data(), &[10.0]);
    }

    #[test]
    fn zero_kernel_reduces_to_bias() {
        let layer = conv(vec![2, 2, 1, 1], vec![0.0; 4], vec![5.0], Padding::Valid);
        let x = Tensor::new(vec![3, 3, 1], (1..=9).map(f64::from).collect()).unwrap();
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.shape(), &[2, 2, 1]);
        assert!(y.data().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn conv_rejects_channel_mismatch_and_small_inputs() {
        let layer = conv(vec![3, 3, 2, 1], vec![0.0; 18], vec![0.0], Padding::Valid);
        let wrong_ch = Tensor::zeros(vec![4, 4, 1]);
        assert!(layer.forward(&wrong_ch).is_err());
        let too_small = Tensor::zeros(vec![2, 2, 2]);
        assert!(layer.forward(&too_small).is_err());
    }

    #[test]
    fn same_padding_keeps_spatial_shape() {
        let layer = conv(vec![3, 3, 1, 2], vec![0.5; 18], vec![0.0, 1.0], Padding::Same);
        let x = Tensor::filled(vec![5, 4, 1], 2.0);
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.shape(), &[5, 4, 2]);
    }

    #[test]
    fn maxpool_examples() {
        let x = Tensor::new(vec![2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = maxpool_forward(&x, (2, 2), 2).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1]);
        assert_eq!(y.data(), &[4.0]);

        let constant = Tensor::filled(vec![4, 4, 2], 3.25);
        let y = maxpool_forward(&constant, (2, 2), 2).unwrap();
        assert!(y.data().iter().all(|&v| v == 3.25));

        // 1x1 window at stride 1 is the identity.
        let x = Tensor::new(vec![2, 3, 1], vec![1.0, -2.0, 3.0, 4.0, 5.0, -6.0]).unwrap();
        assert_eq!(maxpool_forward(&x, (1, 1), 1).unwrap(), x);

        assert!(maxpool_forward(&x, (3, 3), 1).is_err());
    }

    #[test]
    fn gap_examples() {
        let constant = Tensor::filled(vec![3, 5, 4], -1.5);
        let y = gap_forward(&constant).unwrap();
        assert_eq!(y.shape(), &[4]);
        assert!(y.data().iter().all(|&v| v == -1.5));

        let x = Tensor::new(vec![2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(gap_forward(&x).unwrap().data(), &[2.5]);

        let single = Tensor::new(vec![1, 1, 3], vec![7.0, -8.0, 9.0]).unwrap();
        assert_eq!(gap_forward(&single).unwrap().data(), &[7.0, -8.0, 9.0]);
    }

    #[test]
    fn gap_commutes_with_scaling() {
        let mut rng = Prng::new(4);
        let x = Tensor::new(
            vec![3, 3, 2],
            (0..18).map(|_| rng.next_uniform_in(-2.0, 2.0)).collect(),
        )
        .unwrap();
        let scaled = x.map(|v| 3.0 * v);
        let a = gap_forward(&scaled).unwrap();
        let b = gap_forward(&x).unwrap().map(|v| 3.0 * v);
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_branch_residual_is_identity() {
        let block = ResidualBlock::new(
            vec![ConvLayer::zeros(3, 3, 2, 2, 1, Padding::Same)],
            None,
        )
        .unwrap();
        let mut rng = Prng::new(7);
        let x = Tensor::new(
            vec![4, 4, 2],
            (0..32).map(|_| rng.next_uniform_in(-1.0, 1.0)).collect(),
        )
        .unwrap();
        assert_eq!(block.forward(&x).unwrap(), x);
    }

    #[test]
    fn zero_input_residual_is_branch_of_zero() {
        let mut rng = Prng::new(8);
        let kernel = Tensor::new(
            vec![3, 3, 1, 1],
            (0..9).map(|_| rng.next_uniform_in(-1.0, 1.0)).collect(),
        )
        .unwrap();
        let bias = Tensor::vector(vec![0.75]);
        let layer = ConvLayer::new(kernel, bias, 1, Padding::Same).unwrap();
        let block = ResidualBlock::new(vec![layer.clone()], None).unwrap();
        let zero = Tensor::zeros(vec![4, 4, 1]);
        assert_eq!(block.forward(&zero).unwrap(), layer.forward(&zero).unwrap());
    }

    #[test]
    fn residual_channel_change_needs_projection() {
        let block = ResidualBlock::new(
            vec![ConvLayer::zeros(3, 3, 1, 2, 1, Padding::Same)],
            None,
        )
        .unwrap();
        let x = Tensor::zeros(vec![4, 4, 1]);
        assert!(block.forward(&x).is_err());

        let with_projection = ResidualBlock::new(
            vec![ConvLayer::zeros(3, 3, 1, 2, 1, Padding::Same)],
            Some(ConvLayer::zeros(1, 1, 1, 2, 1, Padding::Valid)),
        )
        .unwrap();
        let y = with_projection.forward(&x).unwrap();
        assert_eq!(y.shape(), &[4, 4, 2]);
    }

    #[test]
    fn dense_examples() {
        let id = DenseLayer::new(Tensor::identity(3), Tensor::zeros(vec![3])).unwrap();
        let x = Tensor::vector(vec![1.0, -2.0, 3.0]);
        assert_eq!(id.forward(&x).unwrap(), x);

        let zero = DenseLayer::new(
            Tensor::zeros(vec![3, 2]),
            Tensor::vector(vec![4.0, -4.0]),
        )
        .unwrap();
        assert_eq!(zero.forward(&x).unwrap().data(), &[4.0, -4.0]);

        // x = [1, 2], transpose(W) = [[1, 1], [1, -1]] so W = [[1, 1], [1, -1]].
        let w = Tensor::new(vec![2, 2], vec![1.0, 1.0, 1.0, -1.0]).unwrap();
        let layer = DenseLayer::new(w, Tensor::zeros(vec![2])).unwrap();
        let y = layer.forward(&Tensor::vector(vec![1.0, 2.0])).unwrap();
        assert_eq!(y.data(), &[3.0, -1.0]);
    }
}
