//! Quad-pol SAR ship detection: polarimetric representations, the
//! four-component decomposition, wave-polarization anisotropy, detector maps,
//! generalized-Gamma CFAR and a synthetic scene simulator.

pub mod anisotropy;
pub mod cfar;
pub mod decomposition;
pub mod detectors;
pub mod error;
pub mod io;
pub mod ggd;
pub mod pipeline;
pub mod polarimetry;
pub mod simulator;

pub use error::{Error, Result};
