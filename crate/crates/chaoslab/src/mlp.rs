//! A one-hidden-layer perceptron with sigmoid units and linear outputs.
//!
//! Parameters live in one flat vector, ordered first-layer weights (row
//! major), first-layer biases, second-layer weights (row major), output
//! biases, so the whole model is a point an optimizer can move. The batch
//! loss is mean squared error with a 1/2 factor: (1/2N) sum of squared
//! output errors.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct MlpDims {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
}

impl MlpDims {
    pub fn new(inputs: usize, hidden: usize, outputs: usize) -> Result<Self> {
        if inputs == 0 || hidden == 0 || outputs == 0 {
            return Err(Error::InvalidParameter(
                "layer sizes must be positive".into(),
            ));
        }
        Ok(Self {
            inputs,
            hidden,
            outputs,
        })
    }

    pub fn param_count(&self) -> usize {
        self.hidden * (self.inputs + 1) + self.outputs * (self.hidden + 1)
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct MlpModel {
    dims: MlpDims,
    params: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl MlpModel {
    /// Fresh model with weights uniform in +-1/sqrt(fan-in) and zero biases,
    /// drawn in parameter order from the seeded generator.
    pub fn init(dims: MlpDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; dims.param_count()];
        let bound1 = 1.0 / (dims.inputs as f64).sqrt();
        for w in params.iter_mut().take(dims.hidden * dims.inputs) {
            *w = rng.gen_range(-bound1..=bound1);
        }
        let offset = dims.hidden * (dims.inputs + 1);
        let bound2 = 1.0 / (dims.hidden as f64).sqrt();
        for w in params
            .iter_mut()
            .skip(offset)
            .take(dims.outputs * dims.hidden)
        {
            *w = rng.gen_range(-bound2..=bound2);
        }
        Self { dims, params }
    }

    pub fn from_params(dims: MlpDims, params: Vec<f64>) -> Result<Self> {
        if params.len() != dims.param_count() {
            return Err(Error::InvalidParameter(format!(
                "{} parameters for dims needing {}",
                params.len(),
                dims.param_count()
            )));
        }
        Ok(Self { dims, params })
    }

    pub fn dims(&self) -> MlpDims {
        self.dims
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::InvalidParameter(format!(
                "{} parameters for dims needing {}",
                params.len(),
                self.params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.dims.inputs {
            return Err(Error::DimensionMismatch {
                expected: self.dims.inputs,
                got: input.len(),
            });
        }
        let mut hidden = vec![0.0; self.dims.hidden];
        let mut output = vec![0.0; self.dims.outputs];
        forward_into(&self.dims, &self.params, input, &mut hidden, &mut output);
        Ok(output)
    }
}

fn forward_into(
    dims: &MlpDims,
    params: &[f64],
    input: &[f64],
    hidden: &mut [f64],
    output: &mut [f64],
) {
    let (w1, rest) = params.split_at(dims.hidden * dims.inputs);
    let (b1, rest) = rest.split_at(dims.hidden);
    let (w2, b2) = rest.split_at(dims.outputs * dims.hidden);
    for h in 0..dims.hidden {
        let row = &w1[h * dims.inputs..(h + 1) * dims.inputs];
        let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
        hidden[h] = sigmoid(z + b1[h]);
    }
    for o in 0..dims.outputs {
        let row = &w2[o * dims.hidden..(o + 1) * dims.hidden];
        let z: f64 = row.iter().zip(hidden.iter()).map(|(w, a)| w * a).sum();
        output[o] = z + b2[o];
    }
}

/// Batch loss (1/2N) sum over samples of the squared output error.
pub fn batch_loss(
    dims: &MlpDims,
    params: &[f64],
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> f64 {
    let mut hidden = vec![0.0; dims.hidden];
    let mut output = vec![0.0; dims.outputs];
    let mut loss = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        forward_into(dims, params, x, &mut hidden, &mut output);
        loss += output
            .iter()
            .zip(t)
            .map(|(y, t)| (y - t) * (y - t))
            .sum::<f64>();
    }
    loss / (2.0 * inputs.len() as f64)
}

/// Batch loss and its gradient with respect to the flat parameter vector,
/// by backpropagation.
pub fn batch_loss_and_gradient(
    dims: &MlpDims,
    params: &[f64],
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> (f64, Vec<f64>) {
    assert_eq!(inputs.len(), targets.len());
    assert!(!inputs.is_empty());
    let n_w1 = dims.hidden * dims.inputs;
    let n_b1 = dims.hidden;
    let n_w2 = dims.outputs * dims.hidden;
    let (w1, rest) = params.split_at(n_w1);
    let (b1, rest) = rest.split_at(n_b1);
    let (w2, b2) = rest.split_at(n_w2);

    let mut grad = vec![0.0; params.len()];
    let mut hidden = vec![0.0; dims.hidden];
    let mut delta_out = vec![0.0; dims.outputs];
    let mut delta_hidden = vec![0.0; dims.hidden];
    let scale = 1.0 / inputs.len() as f64;
    let mut loss = 0.0;

    for (x, t) in inputs.iter().zip(targets) {
        debug_assert_eq!(x.len(), dims.inputs);
        debug_assert_eq!(t.len(), dims.outputs);
        for h in 0..dims.hidden {
            let row = &w1[h * dims.inputs..(h + 1) * dims.inputs];
            let z: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
            hidden[h] = sigmoid(z + b1[h]);
        }
        for o in 0..dims.outputs {
            let row = &w2[o * dims.hidden..(o + 1) * dims.hidden];
            let z: f64 = row.iter().zip(hidden.iter()).map(|(w, a)| w * a).sum();
            let err = z + b2[o] - t[o];
            loss += 0.5 * err * err;
            delta_out[o] = err * scale;
        }
        {
            let (gw2, gb2) = grad[n_w1 + n_b1..].split_at_mut(n_w2);
            for o in 0..dims.outputs {
                let d = delta_out[o];
                let grow = &mut gw2[o * dims.hidden..(o + 1) * dims.hidden];
                for (g, a) in grow.iter_mut().zip(hidden.iter()) {
                    *g += d * a;
                }
                gb2[o] += d;
            }
        }
        for h in 0..dims.hidden {
            let back: f64 = (0..dims.outputs)
                .map(|o| delta_out[o] * w2[o * dims.hidden + h])
                .sum();
            delta_hidden[h] = back * hidden[h] * (1.0 - hidden[h]);
        }
        {
            let (gw1, rest) = grad.split_at_mut(n_w1);
            let gb1 = &mut rest[..n_b1];
            for h in 0..dims.hidden {
                let d = delta_hidden[h];
                let grow = &mut gw1[h * dims.inputs..(h + 1) * dims.inputs];
                for (g, xi) in grow.iter_mut().zip(x) {
                    *g += d * xi;
                }
                gb1[h] += d;
            }
        }
    }
    (loss * scale, grad)
}

/// Convenience wrapper that validates against a model's dimensions.
pub fn loss_and_gradient(
    model: &MlpModel,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::InvalidParameter(
            "need matching nonempty input and target batches".into(),
        ));
    }
    for x in inputs {
        if x.len() != model.dims.inputs {
            return Err(Error::DimensionMismatch {
                expected: model.dims.inputs,
                got: x.len(),
            });
        }
    }
    for t in targets {
        if t.len() != model.dims.outputs {
            return Err(Error::DimensionMismatch {
                expected: model.dims.outputs,
                got: t.len(),
            });
        }
    }
    Ok(batch_loss_and_gradient(
        &model.dims,
        &model.params,
        inputs,
        targets,
    ))
}
