//! Reverse-mode autodiff, dense spectrally-normalized networks, Adam, and
//! the checkpoint container.

pub mod adam;
pub mod checkpoint;
pub mod net;
pub mod tape;

pub use adam::{AdamHyper, AdamState};
pub use net::{spectral_norm, Activation, DenseLayer, DenseNet, LayerNodes, CERTIFIED_ITERS};
pub use tape::{Gradients, NodeId, Tape, POWER_FLOOR};
