//! Topic-adversarial zero-shot stance detection.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for the common cases.

pub mod analysis;
pub mod autodiff;
pub mod data;
pub mod model;
pub mod training;
mod error;
mod scalar;
mod seed;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use seed::derive_seed;

pub type Tensor64 = autodiff::Tensor<f64>;
pub type Tensor32 = autodiff::Tensor<f32>;
pub type Graph64 = autodiff::Graph<f64>;
pub type Graph32 = autodiff::Graph<f32>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type ModelParams32 = model::ModelParams<f32>;
pub type Embeddings64 = data::EmbeddingTable<f64>;
pub type Embeddings32 = data::EmbeddingTable<f32>;
