//! Minimal reverse-mode differentiation engine and the layer set used by the
//! classifier and the VQVAE.

pub mod checkpoint;
pub mod gradcheck;
pub mod graph;
pub mod layers;
pub mod loss;
pub mod matmul;
pub mod optim;
pub mod tensor;

pub use graph::{Activations, Graph, Node};
pub use layers::Layer;
pub use optim::{Adam, AdamConfig};
pub use tensor::{Real, Tensor};
