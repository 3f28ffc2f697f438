//! Minimal neural-network core: dense, convolution, pooling and activation
//! layers over `f64`, manual backpropagation, and SGD with an optional
//! proximal term.

mod checkpoint;
mod error;
mod layer;
mod loss;
mod network;
mod tensor;

pub use error::{NnError, Result};
pub use layer::{Activation, LayerSpec, LEAKY_RELU_SLOPE};
pub use loss::{cross_entropy_loss, softmax, softmax_cross_entropy};
pub use network::{proximal_term, Batch, Mode, ModelParams, Network, SgdConfig};
pub use tensor::Tensor;

/// Dense stack `inputs → hidden... → outputs` with `act` after every hidden layer
/// and no activation on the output.
pub fn mlp(inputs: usize, hidden: &[usize], outputs: usize, act: Activation) -> Vec<LayerSpec> {
    let mut specs = Vec::new();
    let mut width = inputs;
    for &h in hidden {
        specs.push(LayerSpec::dense(width, h));
        specs.push(LayerSpec::act(act));
        width = h;
    }
    specs.push(LayerSpec::dense(width, outputs));
    specs
}
