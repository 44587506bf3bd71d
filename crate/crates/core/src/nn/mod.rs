//! Small numeric kernel: dense arrays, a reverse-mode tape over the layer
//! set both networks need, Adam, dropout, the L2 penalty and the checkpoint container.

mod adam;
mod array;
mod container;
pub mod gradcheck;
mod kernels;
mod params;
mod tape;

pub use adam::AdamState;
pub use array::Array;
pub use container::{Container, Entry, CONTAINER_VERSION};
pub(crate) use kernels::dot;
pub use kernels::{conv_maxpool, dropout_mask, l2_gradient, l2_penalty, log_softmax, sigmoid, softmax, Activation, ConvBank, LstmWeights};
pub use params::{Grads, Param, ParamSet};
pub use tape::{Tape, Var};
