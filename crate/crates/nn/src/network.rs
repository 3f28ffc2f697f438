use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, NnError, Result};
use crate::layer::{Layer, LayerSpec, Scratch};
use crate::loss::softmax_cross_entropy;
use crate::tensor::Tensor;

/// Flat vector of a network's trainable parameters, in layer order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ModelParams(Vec<f64>);

impl ModelParams {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ModelParams {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ModelParams {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Train,
    Eval,
}

/// Local solver settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Weight of the `(mu/2)·‖w − anchor‖²` term; 0 disables it.
    pub proximal_mu: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 10,
            epochs: 5,
            proximal_mu: 0.0,
        }
    }
}

impl SgdConfig {
    pub const FEDPROX_MU: f64 = 0.01;

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NnError::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(NnError::InvalidConfig(
                "batch_size and epochs must be positive".into(),
            ));
        }
        if !(self.proximal_mu.is_finite() && self.proximal_mu >= 0.0) {
            return Err(NnError::InvalidConfig(format!(
                "proximal_mu must be nonnegative, got {}",
                self.proximal_mu
            )));
        }
        Ok(())
    }
}

/// A labelled mini-batch: `inputs` is `[batch, features]`.
#[derive(Clone, Debug)]
pub struct Batch {
    pub inputs: Tensor,
    pub labels: Vec<usize>,
}

/// Value and gradient of `(mu/2)·‖w − anchor‖²`.
pub fn proximal_term(params: &[f64], anchor: &[f64], mu: f64) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let grad = params
        .iter()
        .zip(anchor)
        .map(|(&w, &a)| {
            let d = w - a;
            value += d * d;
            mu * d
        })
        .collect();
    (0.5 * mu * value, grad)
}

#[derive(Clone, Debug)]
struct ForwardCache {
    batch: usize,
    rank1: bool,
    /// `acts[i]` is the input of layer `i`; the last entry is the network output.
    acts: Vec<Vec<f64>>,
    scratch: Vec<Scratch>,
}

#[derive(Clone, Debug)]
pub struct Network {
    specs: Vec<LayerSpec>,
    layers: Vec<Layer>,
    params: Vec<f64>,
    mode: Mode,
    cache: Option<ForwardCache>,
}

fn resolve(specs: &[LayerSpec]) -> Result<(Vec<Layer>, usize)> {
    if specs.is_empty() {
        return Err(NnError::InvalidLayers("no layers".into()));
    }
    let mut layers = Vec::with_capacity(specs.len());
    let mut width: Option<usize> = None;
    let mut offset = 0usize;
    for spec in specs {
        let (in_w, out_w) = match spec.widths() {
            Some(w) => {
                let (i, o) = w?;
                if let Some(prev) = width {
                    if prev != i {
                        return Err(NnError::InvalidLayers(format!(
                            "{spec} expects width {i}, previous layer produces {prev}"
                        )));
                    }
                }
                (i, o)
            }
            None => {
                let w = width.ok_or_else(|| {
                    NnError::InvalidLayers("first layer must have a fixed input width".into())
                })?;
                (w, w)
            }
        };
        if in_w == 0 || out_w == 0 {
            return Err(NnError::InvalidLayers(format!("{spec} has zero width")));
        }
        let count = spec.param_count()?;
        layers.push(Layer {
            spec: *spec,
            in_width: in_w,
            out_width: out_w,
            offset,
            param_count: count,
        });
        offset = offset
            .checked_add(count)
            .ok_or_else(|| NnError::InvalidLayers("parameter count overflows".into()))?;
        width = Some(out_w);
    }
    Ok((layers, offset))
}

impl Network {
    /// Builds a network with weights and biases drawn from
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new<R: Rng + ?Sized>(specs: Vec<LayerSpec>, rng: &mut R) -> Result<Self> {
        let (layers, total) = resolve(&specs)?;
        let mut params = Vec::with_capacity(total);
        for layer in &layers {
            let fan_in = match layer.spec {
                LayerSpec::Dense { inputs, .. } => inputs,
                LayerSpec::Conv2d {
                    in_channels, kernel, ..
                } => in_channels * kernel * kernel,
                _ => continue,
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            params.extend((0..layer.param_count).map(|_| rng.random_range(-bound..=bound)));
        }
        Ok(Self {
            specs,
            layers,
            params,
            mode: Mode::Train,
            cache: None,
        })
    }

    pub fn with_params(specs: Vec<LayerSpec>, params: Vec<f64>) -> Result<Self> {
        let (layers, total) = resolve(&specs)?;
        if params.len() != total {
            return Err(shape_err(format!("{total} parameters"), params.len()));
        }
        Ok(Self {
            specs,
            layers,
            params,
            mode: Mode::Train,
            cache: None,
        })
    }

    /// Parameter count implied by a layer stack.
    pub fn count_params(specs: &[LayerSpec]) -> Result<usize> {
        resolve(specs).map(|(_, n)| n)
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_width
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map(|l| l.out_width).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn export_params(&self) -> ModelParams {
        ModelParams(self.params.clone())
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(shape_err(format!("{} parameters", self.params.len()), params.len()));
        }
        self.params.copy_from_slice(params);
        self.cache = None;
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn run(&self, input: &Tensor, keep: bool) -> Result<(Tensor, Option<ForwardCache>)> {
        let (batch, width) = input.batch_dims()?;
        if width != self.input_width() {
            return Err(shape_err(
                format!("input width {}", self.input_width()),
                format!("{:?}", input.shape()),
            ));
        }
        let mut acts = Vec::with_capacity(if keep { self.layers.len() + 1 } else { 0 });
        let mut scratch = vec![Scratch::default(); self.layers.len()];
        let mut x = input.data().to_vec();
        for (layer, sc) in self.layers.iter().zip(scratch.iter_mut()) {
            let y = layer.forward(&self.params, &x, batch, sc);
            if keep {
                acts.push(std::mem::replace(&mut x, y));
            } else {
                x = y;
            }
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(NnError::NonFinite("forward activation"));
        }
        let rank1 = input.shape().len() == 1;
        let shape = if rank1 {
            vec![self.output_width()]
        } else {
            vec![batch, self.output_width()]
        };
        let cache = keep.then(|| {
            acts.push(x.clone());
            ForwardCache {
                batch,
                rank1,
                acts,
                scratch,
            }
        });
        Ok((Tensor::new(shape, x)?, cache))
    }

    /// Forward pass that records activations for a following [`Network::backward`].
    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let (out, cache) = self.run(input, true)?;
        self.cache = cache;
        Ok(out)
    }

    /// Forward pass without recording anything.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor> {
        self.run(input, false).map(|(out, _)| out)
    }

    fn backprop(&self, loss_grad: &Tensor, want_input: bool) -> Result<(ModelParams, Option<Tensor>)> {
        let cache = self.cache.as_ref().ok_or(NnError::BackwardBeforeForward)?;
        let expected = cache.batch * self.output_width();
        if loss_grad.len() != expected {
            return Err(shape_err(
                format!("{} x {}", cache.batch, self.output_width()),
                format!("{:?}", loss_grad.shape()),
            ));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut dy = loss_grad.data().to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let need_dx = i > 0 || want_input;
            let dx = layer.backward(
                &self.params,
                &cache.acts[i],
                &cache.acts[i + 1],
                &dy,
                cache.batch,
                &cache.scratch[i],
                &mut grad,
                need_dx,
            );
            if i == 0 {
                let input_grad = dx.map(|d| {
                    let shape = if cache.rank1 {
                        vec![layer.in_width]
                    } else {
                        vec![cache.batch, layer.in_width]
                    };
                    Tensor::new(shape, d).expect("input gradient shape")
                });
                if !grad.iter().all(|v| v.is_finite()) {
                    return Err(NnError::NonFinite("parameter gradient"));
                }
                return Ok((ModelParams(grad), input_grad));
            }
            debug_assert!(i <= last);
            dy = dx.expect("hidden layers always propagate");
        }
        unreachable!("network has at least one layer")
    }

    /// Gradient of `sum(loss_grad ⊙ output)` with respect to the parameters.
    pub fn backward(&mut self, loss_grad: &Tensor) -> Result<ModelParams> {
        self.backprop(loss_grad, false).map(|(g, _)| g)
    }

    /// Like [`Network::backward`], also returning the gradient with respect to the input.
    pub fn backward_with_input(&mut self, loss_grad: &Tensor) -> Result<(ModelParams, Tensor)> {
        let (g, dx) = self.backprop(loss_grad, true)?;
        Ok((g, dx.expect("input gradient requested")))
    }

    /// `w ← w − lr·grad`.
    pub fn apply_gradient(&mut self, grad: &[f64], learning_rate: f64) -> Result<()> {
        if grad.len() != self.params.len() {
            return Err(shape_err(format!("{} gradients", self.params.len()), grad.len()));
        }
        for (w, g) in self.params.iter_mut().zip(grad) {
            *w -= learning_rate * g;
        }
        Ok(())
    }

    /// One SGD step on mean softmax cross-entropy, plus the proximal term when
    /// `cfg.proximal_mu > 0`. Returns the loss at the pre-step parameters.
    pub fn sgd_step(
        &mut self,
        batch: &Batch,
        cfg: &SgdConfig,
        anchor: Option<&ModelParams>,
    ) -> Result<f64> {
        if batch.labels.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        let anchor = if cfg.proximal_mu > 0.0 {
            let a = anchor.ok_or(NnError::MissingAnchor)?;
            if a.len() != self.params.len() {
                return Err(shape_err(format!("{} anchor values", self.params.len()), a.len()));
            }
            Some(a)
        } else {
            None
        };
        let logits = self.forward(&batch.inputs)?;
        let (mut loss, dlogits) = softmax_cross_entropy(&logits, &batch.labels)?;
        let mut grad = self.backward(&dlogits)?.into_inner();
        if let Some(a) = anchor {
            let (value, prox) = proximal_term(&self.params, a, cfg.proximal_mu);
            loss += value;
            for (g, p) in grad.iter_mut().zip(prox) {
                *g += p;
            }
        }
        if !loss.is_finite() {
            return Err(NnError::NonFinite("training loss"));
        }
        self.apply_gradient(&grad, cfg.learning_rate)?;
        Ok(loss)
    }
}
