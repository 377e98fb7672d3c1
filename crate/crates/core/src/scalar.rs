//! Floating-point abstraction the simulation math is generic over.
//!
//! Everything numeric in this crate is written against [`Scalar`] so the same
//! code runs in `f32` or `f64`. The crate root exposes `f64` type aliases for
//! the common instantiations; the CLI and all file formats use `f64`.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use rand::distributions::uniform::SampleUniform;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Scalar type for all simulation math: `f32` or `f64`.
pub trait Scalar:
    RealField
    + rustfft::FftNum
    + FromPrimitive
    + ToPrimitive
    + SampleUniform
    + Serialize
    + DeserializeOwned
    + Default
    + Copy
{
    /// Draw a sample from the standard normal distribution N(0, 1).
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f32 {
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for f64 {
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

/// Convert an `f64` constant into the working scalar type.
pub fn convert<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant")
}

/// Convert the working scalar into `f64` (for reports and exports).
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().expect("scalar convertible to f64")
}
