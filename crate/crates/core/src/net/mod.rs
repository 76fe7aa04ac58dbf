//! Coordinate networks: activations, initializers, forward and backward passes.

mod activation;
mod init;
mod network;

pub use activation::Activation;
pub use init::{InitScheme, WeightLaw};
pub use network::{
    loss_sum_sq, rff_embed, rff_embed_batch, DenseNet, Gradients, NetworkConfig, PeConfig, Trace,
};
