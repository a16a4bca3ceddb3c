//! Shared fixtures for the kernel benchmarks.

use spinrad_core::interactions::TestObject;
use spinrad_core::scattering::{RegimeGuard, SphereBody};
use spinrad_core::DielectricModel;

pub const SPHERE_RADIUS_M: f64 = 1e-8;
pub const CYLINDER_RADIUS_M: f64 = 1e-9;
pub const CYLINDER_LENGTH_M: f64 = 1e-6;
pub const ANGULAR_VELOCITY_RAD_S: f64 = 1e14;

pub fn lorentz() -> DielectricModel {
    DielectricModel::Lorentz { strength: 2.0, resonance_rad_s: 2e14, damping_rad_s: 3e13 }
}

pub fn rotor() -> SphereBody {
    SphereBody {
        model: lorentz(),
        radius_m: SPHERE_RADIUS_M,
        angular_velocity_rad_s: ANGULAR_VELOCITY_RAD_S,
        guard: RegimeGuard::Enforce,
    }
}

pub fn test_object(separation_m: f64) -> TestObject {
    TestObject {
        model: DielectricModel::Lorentz { strength: 1.5, resonance_rad_s: 3e14, damping_rad_s: 5e13 },
        radius_m: SPHERE_RADIUS_M,
        separation_m,
    }
}
