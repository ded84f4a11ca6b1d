//! Domain adaptation of a small dense retriever by MarginMSE distillation,
//! with hard negatives mined once (GPL) or remined every k steps (R-GPL).

pub mod analysis;
pub mod benchmark;
pub mod bm25;
pub mod commands;
pub mod data;
pub mod dense_index;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod teacher;
pub mod trainer;
mod util;

pub use error::{Error, Result};
pub use util::sha256_hex;
