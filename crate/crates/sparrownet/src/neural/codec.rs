//! Bijection between a network's structured parameters and one flat vector,
//! so an optimizer can treat all weights as a single search position.

use super::{NetworkConfig, NeuralError, ResNetMiniBiGru};

/// Which parameters the codec covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CodecScope {
    /// Every parameter in the network.
    Full,
    /// Only the GRU and head parameters; the convolutional extractor is
    /// treated as fixed.
    FrozenExtractor,
}

#[derive(Debug, Clone, PartialEq)]
struct CodecEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

/// Stable, documented layout of every covered tensor with offsets into one
/// flat vector. See [`ResNetMiniBiGru::param_tensors`] for the order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCodec {
    entries: Vec<CodecEntry>,
    total: usize,
    scope: CodecScope,
}

impl ParamCodec {
    pub fn new(config: &NetworkConfig, scope: CodecScope) -> Result<Self, NeuralError> {
        config.validate()?;
        let mut entries = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, shape: Vec<usize>| {
            let len: usize = shape.iter().product();
            entries.push(CodecEntry {
                name,
                shape,
                offset,
            });
            offset += len;
        };

        if scope == CodecScope::Full {
            let k = config.stem_kernel;
            push(
                "stem.kernel".into(),
                vec![k, k, config.frame_channels, config.stem_channels],
            );
            push("stem.bias".into(), vec![config.stem_channels]);
            for b in 0..config.block_count {
                let block_in = if b == 0 {
                    config.stem_channels
                } else {
                    config.block_channels
                };
                for d in 0..config.block_depth {
                    let conv_in = if d == 0 { block_in } else { config.block_channels };
                    push(
                        format!("block{b}.conv{d}.kernel"),
                        vec![
                            config.block_kernel,
                            config.block_kernel,
                            conv_in,
                            config.block_channels,
                        ],
                    );
                    push(format!("block{b}.conv{d}.bias"), vec![config.block_channels]);
                }
                if block_in != config.block_channels {
                    push(
                        format!("block{b}.projection.kernel"),
                        vec![1, 1, block_in, config.block_channels],
                    );
                    push(format!("block{b}.projection.bias"), vec![config.block_channels]);
                }
            }
        }
        let input = config.feature_dim();
        let hidden = config.gru_hidden;
        for direction in ["gru_fwd", "gru_bwd"] {
            for gate in ["update", "reset", "candidate"] {
                push(format!("{direction}.w_{gate}"), vec![hidden, hidden + input]);
            }
            for gate in ["update", "reset", "candidate"] {
                push(format!("{direction}.b_{gate}"), vec![hidden]);
            }
        }
        push("head.weights".into(), vec![config.head_input(), 1]);
        push("head.bias".into(), vec![1]);

        Ok(Self {
            entries,
            total: offset,
            scope,
        })
    }

    /// Number of values in the flat vector.
    pub fn total_count(&self) -> usize {
        self.total
    }

    pub fn scope(&self) -> CodecScope {
        self.scope
    }

    /// FNV-1a hash over the layout (names, shapes, scope); persisted next to
    /// saved parameter vectors to catch configuration drift.
    pub fn layout_hash(&self) -> u64 {
        let mut hash: u64 = 0xCBF2_9CE4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
            }
        };
        eat(match self.scope {
            CodecScope::Full => b"full",
            CodecScope::FrozenExtractor => b"frozen-extractor",
        });
        for entry in &self.entries {
            eat(entry.name.as_bytes());
            for &d in &entry.shape {
                eat(&(d as u64).to_le_bytes());
            }
        }
        hash
    }

    /// Reads the covered parameters out of `net` into one flat vector.
    pub fn flatten(&self, net: &ResNetMiniBiGru) -> Result<Vec<f64>, NeuralError> {
        let tensors = net.param_tensors(self.scope);
        self.check_entries(&tensors.iter().map(|t| t.shape().to_vec()).collect::<Vec<_>>())?;
        let mut out = Vec::with_capacity(self.total);
        for tensor in tensors {
            out.extend_from_slice(tensor.data());
        }
        Ok(out)
    }

    /// Writes a flat vector into the covered parameters of `net`.
    pub fn unflatten_into(
        &self,
        net: &mut ResNetMiniBiGru,
        values: &[f64],
    ) -> Result<(), NeuralError> {
        if values.len() != self.total {
            return Err(NeuralError::CodecLength {
                expected: self.total,
                actual: values.len(),
            });
        }
        let mut tensors = net.param_tensors_mut(self.scope);
        self.check_entries(&tensors.iter().map(|t| t.shape().to_vec()).collect::<Vec<_>>())?;
        for (entry, tensor) in self.entries.iter().zip(tensors.iter_mut()) {
            let len = tensor.len();
            tensor
                .data_mut()
                .copy_from_slice(&values[entry.offset..entry.offset + len]);
        }
        Ok(())
    }

    /// Convenience: fresh network from a config and a flat vector (extractor
    /// left at zero under [`CodecScope::FrozenExtractor`]).
    pub fn unflatten(
        &self,
        config: &NetworkConfig,
        values: &[f64],
    ) -> Result<ResNetMiniBiGru, NeuralError> {
        let mut net = ResNetMiniBiGru::zeros(config)?;
        self.unflatten_into(&mut net, values)?;
        Ok(net)
    }

    fn check_entries(&self, shapes: &[Vec<usize>]) -> Result<(), NeuralError> {
        if shapes.len() != self.entries.len() {
            return Err(NeuralError::Shape(format!(
                "codec covers {} tensors, network exposes {}",
                self.entries.len(),
                shapes.len()
            )));
        }
        for (entry, shape) in self.entries.iter().zip(shapes) {
            if &entry.shape != shape {
                return Err(NeuralError::Shape(format!(
                    "codec entry {} expects shape {:?}, network has {:?}",
                    entry.name, entry.shape, shape
                )));
            }
        }
        Ok(())
    }
}
