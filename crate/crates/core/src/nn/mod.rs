//! Minimal dense network engine: matrices, linear layers, activations,
//! losses, Adam and hand-written backpropagation.

pub mod activation;
pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod linear;
pub mod loss;
pub mod matrix;
pub mod mlp;

pub use activation::Activation;
pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, Record};
pub use linear::LinearLayer;
pub use loss::{cross_entropy, l1, mse, softmax, LossKind};
pub use matrix::{Matrix, Scalar};
pub use mlp::{Mlp, ParamRef, Params, Trace};
