//! Forward-only network: a convolutional feature extractor (stem, max pool,
//! residual blocks, global average pool) over each frame, a bidirectional
//! GRU over the per-frame features, and a sigmoid head that turns the final
//! step into one anomaly score.
//!
//! There is no training machinery here: all weights are plain tensors, and
//! [`ParamCodec`] maps them to and from one flat vector so an external
//! optimizer can search them directly.

mod codec;
mod gru;
mod layers;

pub use codec::{CodecScope, ParamCodec};
pub use gru::{gru_step, BiGruLayer, GruParams};
pub use layers::{gap_forward, maxpool_forward, relu, ConvLayer, DenseLayer, Padding, ResidualBlock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Prng;
use crate::tensor::{sigmoid_scalar, Tensor, TensorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("dimension error: {0}")]
    Shape(String),
    #[error("sequence must hold at least one frame")]
    EmptySequence,
    #[error("parameter vector has {actual} values, codec expects {expected}")]
    CodecLength { expected: usize, actual: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Architecture description; every network is built from one of these.
///
/// The per-frame feature dimension equals the residual channel count (the
/// global average pool collapses space), and the head input is twice the GRU
/// hidden size, so the chain is consistent by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub frame_height: usize,
    pub frame_width: usize,
    pub frame_channels: usize,
    /// Square stem kernel side; the stem conv runs valid at stride 1.
    pub stem_kernel: usize,
    pub stem_channels: usize,
    pub pool_window: usize,
    pub pool_stride: usize,
    /// Residual blocks after the pool, at least one.
    pub block_count: usize,
    /// Square branch kernel side inside each block.
    pub block_kernel: usize,
    /// Channels carried by every block; the first block projects its skip
    /// path when this differs from `stem_channels`.
    pub block_channels: usize,
    /// Convolutions per residual branch.
    pub block_depth: usize,
    pub gru_hidden: usize,
    /// When set, training treats the convolutional extractor as fixed
    /// (seed-derived) and searches only the GRU and head weights.
    pub freeze_extractor: bool,
}

impl NetworkConfig {
    /// Desk-scale default: 8x8 single-channel frames, a 3x3x1x2 stem, one
    /// 2x2/2 pool, one residual block at 2 channels, GRU hidden size 4 and
    /// an 8-to-1 head — 235 parameters in total.
    pub fn desk_scale() -> Self {
        Self {
            frame_height: 8,
            frame_width: 8,
            frame_channels: 1,
            stem_kernel: 3,
            stem_channels: 2,
            pool_window: 2,
            pool_stride: 2,
            block_count: 1,
            block_kernel: 3,
            block_channels: 2,
            block_depth: 1,
            gru_hidden: 4,
            freeze_extractor: false,
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let positive = [
            ("frame_height", self.frame_height),
            ("frame_width", self.frame_width),
            ("frame_channels", self.frame_channels),
            ("stem_kernel", self.stem_kernel),
            ("stem_channels", self.stem_channels),
            ("pool_window", self.pool_window),
            ("pool_stride", self.pool_stride),
            ("block_count", self.block_count),
            ("block_kernel", self.block_kernel),
            ("block_channels", self.block_channels),
            ("block_depth", self.block_depth),
            ("gru_hidden", self.gru_hidden),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(NeuralError::Shape(format!("{name} must be positive")));
            }
        }
        if self.stem_kernel > self.frame_height || self.stem_kernel > self.frame_width {
            return Err(NeuralError::Shape(format!(
                "stem kernel {} exceeds frame {}x{}",
                self.stem_kernel, self.frame_height, self.frame_width
            )));
        }
        if self.pool_window > self.frame_height || self.pool_window > self.frame_width {
            return Err(NeuralError::Shape(format!(
                "pool window {} exceeds frame {}x{}",
                self.pool_window, self.frame_height, self.frame_width
            )));
        }
        Ok(())
    }

    /// Per-frame feature dimension after the extractor, which is also the
    /// GRU input size.
    pub fn feature_dim(&self) -> usize {
        self.block_channels
    }

    /// Head input dimension: both GRU directions concatenated.
    pub fn head_input(&self) -> usize {
        2 * self.gru_hidden
    }
}

/// The full model: extractor, bidirectional GRU and scoring head.
///
/// `feature_shift`/`feature_scale` standardize the extractor output per
/// channel before the GRU. They are fixed calibration values (fitted once on
/// training data when the extractor is frozen), not searched parameters, so
/// the codec does not cover them.
#[derive(Debug, Clone, PartialEq)]
pub struct ResNetMiniBiGru {
    pub config: NetworkConfig,
    pub stem: ConvLayer,
    pub blocks: Vec<ResidualBlock>,
    pub feature_shift: Tensor,
    pub feature_scale: Tensor,
    pub bigru: BiGruLayer,
    pub head: DenseLayer,
}

impl ResNetMiniBiGru {
    /// All-zero parameters (scores every input exactly 0.5).
    ///
    /// The stem conv same-pads so the per-frame features cover the whole
    /// frame; pooling then shrinks the map.
    pub fn zeros(config: &NetworkConfig) -> Result<Self, NeuralError> {
        config.validate()?;
        let stem = ConvLayer::zeros(
            config.stem_kernel,
            config.stem_kernel,
            config.frame_channels,
            config.stem_channels,
            1,
            Padding::Same,
        );
        let mut blocks = Vec::with_capacity(config.block_count);
        for b in 0..config.block_count {
            let in_ch = if b == 0 {
                config.stem_channels
            } else {
                config.block_channels
            };
            let mut branch = Vec::with_capacity(config.block_depth);
            for d in 0..config.block_depth {
                let conv_in = if d == 0 { in_ch } else { config.block_channels };
                branch.push(ConvLayer::zeros(
                    config.block_kernel,
                    config.block_kernel,
                    conv_in,
                    config.block_channels,
                    1,
                    Padding::Same,
                ));
            }
            let projection = (in_ch != config.block_channels)
                .then(|| ConvLayer::zeros(1, 1, in_ch, config.block_channels, 1, Padding::Valid));
            blocks.push(ResidualBlock::new(branch, projection)?);
        }
        let bigru = BiGruLayer::zeros(config.feature_dim(), config.gru_hidden);
        let head = DenseLayer::zeros(config.head_input(), 1);
        Ok(Self {
            config: config.clone(),
            stem,
            blocks,
            feature_shift: Tensor::zeros(vec![config.feature_dim()]),
            feature_scale: Tensor::filled(vec![config.feature_dim()], 1.0),
            bigru,
            head,
        })
    }

    /// Uniform random parameters in `[-range, range]` drawn from `rng`.
    pub fn randomized(
        config: &NetworkConfig,
        rng: &mut Prng,
        range: f64,
    ) -> Result<Self, NeuralError> {
        let mut net = Self::zeros(config)?;
        for tensor in net.param_tensors_mut(CodecScope::Full) {
            for v in tensor.data_mut() {
                *v = crate::rng::RandomSource::next_uniform_in(rng, -range, range);
            }
        }
        Ok(net)
    }

    /// Extractor features for one frame: stem conv, max pool, residual
    /// blocks, global average pool.
    pub fn frame_features(&self, frame: &Tensor) -> Result<Tensor, NeuralError> {
        let expected = [
            self.config.frame_height,
            self.config.frame_width,
            self.config.frame_channels,
        ];
        if frame.shape() != expected {
            return Err(NeuralError::Shape(format!(
                "frame shape {:?} does not match configured {:?}",
                frame.shape(),
                expected
            )));
        }
        let mut x = self.stem.forward(frame)?;
        x = maxpool_forward(
            &x,
            (self.config.pool_window, self.config.pool_window),
            self.config.pool_stride,
        )?;
        for block in &self.blocks {
            x = block.forward(&x)?;
        }
        let pooled = gap_forward(&x)?;
        let standardized = pooled
            .data()
            .iter()
            .zip(self.feature_shift.data().iter().zip(self.feature_scale.data()))
            .map(|(&f, (&shift, &scale))| (f - shift) * scale)
            .collect();
        Ok(Tensor::vector(standardized))
    }

    /// Scores a frame sequence: features per frame, BiGRU across time, the
    /// final step through the dense head and a sigmoid. Always in (0, 1).
    pub fn forward(&self, frames: &[Tensor]) -> Result<f64, NeuralError> {
        if frames.is_empty() {
            return Err(NeuralError::EmptySequence);
        }
        let features = frames
            .iter()
            .map(|f| self.frame_features(f))
            .collect::<Result<Vec<_>, _>>()?;
        let states = self.bigru.forward_sequence(&features)?;
        let last = states.last().expect("non-empty sequence");
        let logit = self.head.forward(last)?;
        Ok(sigmoid_scalar(logit.data()[0]))
    }

    /// Parameter tensors in the documented codec order.
    ///
    /// Layout: stem kernel, stem bias; per block the branch conv kernels and
    /// biases in order, then the projection kernel and bias when present;
    /// GRU forward direction (update, reset, candidate weights, then the
    /// matching biases); GRU backward direction; head weights, head bias.
    /// [`CodecScope::FrozenExtractor`] skips everything before the GRU.
    pub fn param_tensors(&self, scope: CodecScope) -> Vec<&Tensor> {
        let mut out = Vec::new();
        if scope == CodecScope::Full {
            out.push(&self.stem.kernel);
            out.push(&self.stem.bias);
            for block in &self.blocks {
                for conv in &block.branch {
                    out.push(&conv.kernel);
                    out.push(&conv.bias);
                }
                if let Some(p) = &block.projection {
                    out.push(&p.kernel);
                    out.push(&p.bias);
                }
            }
        }
        for gru in [&self.bigru.forward, &self.bigru.backward] {
            out.push(&gru.w_update);
            out.push(&gru.w_reset);
            out.push(&gru.w_candidate);
            out.push(&gru.b_update);
            out.push(&gru.b_reset);
            out.push(&gru.b_candidate);
        }
        out.push(&self.head.weights);
        out.push(&self.head.bias);
        out
    }

    /// Mutable variant of [`ResNetMiniBiGru::param_tensors`], same order.
    pub fn param_tensors_mut(&mut self, scope: CodecScope) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        if scope == CodecScope::Full {
            out.push(&mut self.stem.kernel);
            out.push(&mut self.stem.bias);
            for block in &mut self.blocks {
                for conv in &mut block.branch {
                    out.push(&mut conv.kernel);
                    out.push(&mut conv.bias);
                }
                if let Some(p) = &mut block.projection {
                    out.push(&mut p.kernel);
                    out.push(&mut p.bias);
                }
            }
        }
        for gru in [&mut self.bigru.forward, &mut self.bigru.backward] {
            out.push(&mut gru.w_update);
            out.push(&mut gru.w_reset);
            out.push(&mut gru.w_candidate);
            out.push(&mut gru.b_update);
            out.push(&mut gru.b_reset);
            out.push(&mut gru.b_candidate);
        }
        out.push(&mut self.head.weights);
        out.push(&mut self.head.bias);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    fn frames(config: &NetworkConfig, count: usize, seed: u64) -> Vec<Tensor> {
        let mut rng = Prng::new(seed);
        (0..count)
            .map(|_| {
                let n = config.frame_height * config.frame_width * config.frame_channels;
                Tensor::new(
                    vec![config.frame_height, config.frame_width, config.frame_channels],
                    (0..n).map(|_| rng.next_uniform_in(-1.0, 1.0)).collect(),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_network_scores_one_half() {
        let config = NetworkConfig::desk_scale();
        let net = ResNetMiniBiGru::zeros(&config).unwrap();
        for t in [1, 3, 16] {
            let score = net.forward(&frames(&config, t, t as u64)).unwrap();
            assert_eq!(score, 0.5);
        }
    }

    #[test]
    fn scores_stay_in_open_interval() {
        let config = NetworkConfig::desk_scale();
        let mut rng = Prng::new(42);
        for trial in 0..10 {
            let net = ResNetMiniBiGru::randomized(&config, &mut rng, 3.0).unwrap();
            let score = net.forward(&frames(&config, 16, trial)).unwrap();
            assert!(score > 0.0 && score < 1.0);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let config = NetworkConfig::desk_scale();
        let mut rng = Prng::new(7);
        let net = ResNetMiniBiGru::randomized(&config, &mut rng, 1.0).unwrap();
        let input = frames(&config, 16, 1);
        assert_eq!(net.forward(&input).unwrap(), net.forward(&input).unwrap());
    }

    #[test]
    fn wrong_frame_shape_is_rejected() {
        let config = NetworkConfig::desk_scale();
        let net = ResNetMiniBiGru::zeros(&config).unwrap();
        let bad = vec![Tensor::zeros(vec![4, 4, 1])];
        assert!(net.forward(&bad).is_err());
        assert!(matches!(net.forward(&[]), Err(NeuralError::EmptySequence)));
    }

    #[test]
    fn channel_changing_block_gets_projection() {
        let mut config = NetworkConfig::desk_scale();
        config.block_channels = 3;
        let net = ResNetMiniBiGru::zeros(&config).unwrap();
        assert!(net.blocks[0].projection.is_some());
        assert_eq!(net.config.feature_dim(), 3);
        let score = net.forward(&frames(&config, 4, 2)).unwrap();
        assert_eq!(score, 0.5);
    }

    #[test]
    fn config_validation_catches_oversized_kernels() {
        let mut config = NetworkConfig::desk_scale();
        config.stem_kernel = 9;
        assert!(config.validate().is_err());
        let mut config = NetworkConfig::desk_scale();
        config.pool_window = 7;
        assert!(config.validate().is_err());
        let mut config = NetworkConfig::desk_scale();
        config.block_count = 0;
        assert!(config.validate().is_err());
    }
}
