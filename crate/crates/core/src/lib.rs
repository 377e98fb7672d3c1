//! Roadside radar network simulation and processing.

pub mod error;
pub mod interference;
pub mod scalar;
pub mod scene;
pub mod seeds;
pub mod sensor;
pub mod waveform;

pub use error::{Error, Result};
pub use scalar::{convert, to_f64, Scalar};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
