//! Dense numerics: matrices, the GRU with manual backprop, Adam, and a
//! finite-difference oracle.

mod adam;
mod gradcheck;
pub mod gru;
mod matrix;
mod params;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::finite_difference_check;
pub use gru::{
    backward_batch, backward_sequence, batch_loss, bce_with_logit, forward_batch,
    forward_sequence, gru_cell_forward, predict_logit, sigmoid, BatchCache, SeqBatch,
};
pub use matrix::Matrix;
pub use params::{GradBundle, GruParams, LinearParams, NetParams, TENSOR_COUNT, TENSOR_NAMES};
