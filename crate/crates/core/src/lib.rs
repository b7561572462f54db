//! Pixel approximate entropy (PAE) for line charts: rasterization, entropy
//! scoring, target-seeking noise, statistics and stimulus generation.

pub mod entropy;
pub mod error;
pub mod noise;
pub mod raster;
pub mod series;
pub mod stats;
pub mod studio;

pub use error::{Error, Result};
