//! Spontaneous electromagnetic emission by slowly rotating lossy bodies.
//!
//! The radiated power of a body spinning about its symmetry axis is written
//! entirely in terms of its scattering matrix: every channel with azimuthal
//! index `m` sees source fluctuations at the co-rotating frequency `ω − Ωm`,
//! and at zero temperature the emission is confined to the superradiant
//! window `0 < ω < Ωm` where `|S| > 1`.
//!
//! Module map:
//!
//! * [`special_waves`]: spherical Bessel/Hankel functions, vector spherical
//!   waves and the surface-flux bracket that fixes their normalization.
//! * [`materials`]: dielectric models and the small-body response factors.
//! * [`statistics`]: Bose–Einstein occupation algebra.
//! * [`scattering`]: sphere and cylinder S-matrix blocks, tabulated channels.
//! * [`radiation`]: the trace formula, closed forms and photon spectra.
//! * [`interactions`]: torque and shear force on a nearby test object.
//! * [`dynamics`]: spin-down timescale and trajectories.
//! * [`quadrature`]: the adaptive Gauss–Kronrod engine shared by all of the above.

// `!(x > 0.0)` is how parameter checks reject NaN along with non-positives
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod interactions;
pub mod materials;
pub mod quadrature;
pub mod radiation;
pub mod scattering;
pub mod special_waves;
pub mod statistics;
pub mod verify;

pub use error::{Error, Result};
pub use materials::DielectricModel;
pub use num_complex::Complex64;
pub use quadrature::QuadratureConfig;
pub use radiation::RadiationResult;
pub use scattering::{ChannelId, Polarization, SMatrixBlock};
pub use statistics::ThermalState;
