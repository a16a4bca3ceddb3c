//! Spherical Bessel/Hankel functions and the lowest vector spherical waves.
//!
//! Wave normalization is fixed so that the outgoing energy flux of every
//! partial wave equals ω; [`flux_bracket`] evaluates the corresponding surface
//! integral numerically and returns `δ_ab` for outgoing pairs.

mod bessel;
mod waves;

pub use bessel::{spherical_bessel_j, spherical_bessel_y, spherical_hankel1, MAX_BESSEL_ORDER};
pub use waves::{
    flux_bracket, outgoing_wave, vector_wave, FieldSample, RadialKind, WaveIndex, MAX_WAVE_ORDER,
};

pub use crate::scattering::Polarization;
