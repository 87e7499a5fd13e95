//! Directional monoidal embeddings of images.
//!
//! Sequences and grids are embedded by composing elements with
//! block-rotation operators, one per axis. The crate also provides the
//! low-frequency DFT and MLP baselines, IDX data loading, and the training
//! protocol shared by all three.

pub mod algebra;
pub mod data;
pub mod embedding;
pub mod error;
pub mod laws;
pub mod model;
pub mod spectral;

pub use error::{Error, Result};
