//! Small dense networks for the value surrogate and the RL agents:
//! batched forward and backward passes, Adam, target-network averaging and
//! JSON weight files.

mod adam;
mod mlp;

pub use adam::Adam;
pub use mlp::{Activation, ForwardCache, Gradients, Mlp};
pub(crate) use mlp::MlpFile;
