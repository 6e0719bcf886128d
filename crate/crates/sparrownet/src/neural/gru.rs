//! Gated recurrent unit cell and its bidirectional wrapper.

use super::NeuralError;
use crate::rng::{Prng, RandomSource};
use crate::tensor::Tensor;

/// Weights of one GRU cell. Each gate matrix is `[hidden, hidden + input]`
/// and multiplies the concatenation `[previous hidden, current input]`, in
/// that order.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_update: Tensor,
    pub w_reset: Tensor,
    pub w_candidate: Tensor,
    pub b_update: Tensor,
    pub b_reset: Tensor,
    pub b_candidate: Tensor,
}

impl GruParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = || Tensor::zeros(vec![hidden, hidden + input]);
        let b = || Tensor::zeros(vec![hidden]);
        Self {
            w_update: w(),
            w_reset: w(),
            w_candidate: w(),
            b_update: b(),
            b_reset: b(),
            b_candidate: b(),
        }
    }

    /// Uniform random weights in `[-range, range]`.
    pub fn randomized(input: usize, hidden: usize, rng: &mut Prng, range: f64) -> Self {
        let mut fill = |t: &mut Tensor| {
            for v in t.data_mut() {
                *v = rng.next_uniform_in(-range, range);
            }
        };
        let mut params = Self::zeros(input, hidden);
        fill(&mut params.w_update);
        fill(&mut params.w_reset);
        fill(&mut params.w_candidate);
        fill(&mut params.b_update);
        fill(&mut params.b_reset);
        fill(&mut params.b_candidate);
        params
    }

    pub fn hidden_size(&self) -> usize {
        self.w_update.shape()[0]
    }

    pub fn input_size(&self) -> usize {
        self.w_update.shape()[1] - self.hidden_size()
    }

    fn validate(&self) -> Result<(), NeuralError> {
        let shape = self.w_update.shape();
        if shape.len() != 2 || shape[1] <= shape[0] {
            return Err(NeuralError::Shape(format!(
                "GRU weight matrices must be [hidden, hidden + input], got {shape:?}"
            )));
        }
        for w in [&self.w_reset, &self.w_candidate] {
            if w.shape() != shape {
                return Err(NeuralError::Shape(format!(
                    "GRU weight matrices disagree: {:?} vs {shape:?}",
                    w.shape()
                )));
            }
        }
        for b in [&self.b_update, &self.b_reset, &self.b_candidate] {
            if b.shape() != [shape[0]] {
                return Err(NeuralError::Shape(format!(
                    "GRU bias {:?} must have hidden size {}",
                    b.shape(),
                    shape[0]
                )));
            }
        }
        Ok(())
    }
}

/// One GRU transition.
///
/// With `cat = [h_prev, x_t]`:
/// update gate `z = sigmoid(Wz.cat + bz)`, reset gate
/// `r = sigmoid(Wr.cat + br)`, candidate
/// `c = tanh(W.[r*h_prev, x_t] + b)`, and the next state is the convex
/// combination `h = (1 - z)*h_prev + z*c`.
pub fn gru_step(
    x_t: &Tensor,
    h_prev: &Tensor,
    params: &GruParams,
) -> Result<Tensor, NeuralError> {
    params.validate()?;
    let hidden = params.hidden_size();
    let input = params.input_size();
    if x_t.rank() != 1 || x_t.shape()[0] != input {
        return Err(NeuralError::Shape(format!(
            "GRU input {:?} does not match expected length {input}",
            x_t.shape()
        )));
    }
    if h_prev.rank() != 1 || h_prev.shape()[0] != hidden {
        return Err(NeuralError::Shape(format!(
            "GRU hidden state {:?} does not match expected length {hidden}",
            h_prev.shape()
        )));
    }

    let cat = h_prev.concat(x_t, 0)?;
    let update = params.w_update.matvec(&cat)?.add(&params.b_update)?.sigmoid();
    let reset = params.w_reset.matvec(&cat)?.add(&params.b_reset)?.sigmoid();

    let gated = reset.hadamard(h_prev)?.concat(x_t, 0)?;
    let candidate = params
        .w_candidate
        .matvec(&gated)?
        .add(&params.b_candidate)?
        .tanh_map();

    let keep = update.map(|z| 1.0 - z).hadamard(h_prev)?;
    let take = update.hadamard(&candidate)?;
    Ok(keep.add(&take)?)
}

/// Runs a cell across `seq` from a zero initial state, returning one hidden
/// state per step.
fn run_direction(seq: &[Tensor], params: &GruParams) -> Result<Vec<Tensor>, NeuralError> {
    let mut h = Tensor::zeros(vec![params.hidden_size()]);
    let mut states = Vec::with_capacity(seq.len());
    for x in seq {
        h = gru_step(x, &h, params)?;
        states.push(h.clone());
    }
    Ok(states)
}

/// Two GRU cells over opposite directions of the sequence; each step's
/// output is the forward state concatenated with the backward state
/// re-aligned to the original time index.
#[derive(Debug, Clone, PartialEq)]
pub struct BiGruLayer {
    pub forward: GruParams,
    pub backward: GruParams,
    pub hidden: usize,
}

impl BiGruLayer {
    pub fn new(forward: GruParams, backward: GruParams) -> Result<Self, NeuralError> {
        forward.validate()?;
        backward.validate()?;
        if forward.hidden_size() != backward.hidden_size()
            || forward.input_size() != backward.input_size()
        {
            return Err(NeuralError::Shape(format!(
                "bidirectional halves disagree: {}x{} vs {}x{}",
                forward.hidden_size(),
                forward.input_size(),
                backward.hidden_size(),
                backward.input_size()
            )));
        }
        let hidden = forward.hidden_size();
        Ok(Self {
            forward,
            backward,
            hidden,
        })
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            forward: GruParams::zeros(input, hidden),
            backward: GruParams::zeros(input, hidden),
            hidden,
        }
    }

    /// Output dimension per step: both directions concatenated.
    pub fn output_size(&self) -> usize {
        2 * self.hidden
    }

    pub fn forward_sequence(&self, seq: &[Tensor]) -> Result<Vec<Tensor>, NeuralError> {
        if seq.is_empty() {
            return Err(NeuralError::EmptySequence);
        }
        let fwd = run_direction(seq, &self.forward)?;
        let reversed: Vec<Tensor> = seq.iter().rev().cloned().collect();
        let mut bwd = run_direction(&reversed, &self.backward)?;
        bwd.reverse();
        fwd.iter()
            .zip(&bwd)
            .map(|(f, b)| Ok(f.concat(b, 0)?))
            .collect()
    }
}
