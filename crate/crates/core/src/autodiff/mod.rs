//! Dense tensors, reverse-mode differentiation and the Adam optimizer.

mod adam;
mod graph;
mod params;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use graph::{Graph, Var};
pub use params::{ParamId, ParamStore};
pub use tensor::Tensor;
