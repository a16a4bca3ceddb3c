//! Torque and shear force exerted on a small static test object by the
//! radiation of a rotating body.
//!
//! Only the first reflection off the test object is kept. The rotator
//! radiates in its `(1, 1, E)` channel; about the test object that wave is
//! re-expanded into regular `(1, 1, E)` and `(1, 0, M)` waves. The
//! zero-point (non-radiation) part of the field gives a potential that depends
//! on the separation only, so it adds nothing to the torque or the tangential
//! force and is not computed.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{C, HBAR};
use crate::error::{Error, Result};
use crate::materials::{sphere_polarizability, DielectricModel};
use crate::quadrature::{integrate_adaptive, QuadratureConfig};
use crate::scattering::{dipole_t, ChannelId, ChannelProvider, Polarization, RegimeGuard, SphereBody, REGIME_LIMIT};
use crate::special_waves::spherical_hankel1;

/// The separation must exceed this multiple of the larger body size.
pub const SEPARATION_RATIO: f64 = 10.0;

/// Small static sphere at distance `separation_m` along `x̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestObject {
    pub model: DielectricModel,
    pub radius_m: f64,
    pub separation_m: f64,
}

/// Torque about `ẑ` and force along `ŷ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionResult {
    pub separation_m: f64,
    pub angular_velocity_rad_s: f64,
    pub torque_nm: f64,
    pub torque_error_nm: f64,
    pub force_y_n: f64,
    pub force_error_n: f64,
}

/// How the shear force is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShearForm {
    /// `(ħ/32πd)∫(|S|² − 1)(1 − Re 𝔖₁₁ᴱ)`, i.e. `𝔖₁₀ᴹ = 1`.
    #[default]
    Simplified,
    /// Two-channel product `Re(−1 + conj(𝔖₁₀ᴹ) 𝔖₁₁ᴱ)` with a constant
    /// magnetic amplitude, contracted through the stress element.
    TwoChannel { s10m_re: f64, s10m_im: f64 },
}

/// `(U₁₁ᴱ,₁₁ᴱ, U₁₀ᴹ,₁₁ᴱ) = (h₀(kd), (√2 kd/4) h₀(kd))`.
pub fn translation_coefficients(omega: f64, separation_m: f64) -> Result<(Complex64, Complex64)> {
    if !(omega > 0.0) || !(separation_m > 0.0) {
        return Err(Error::Domain(format!(
            "translation needs omega > 0 and d > 0, got {omega:e}, {separation_m:e}"
        )));
    }
    let kd = omega * separation_m / C;
    let u_ee = spherical_hankel1(0, kd)?;
    Ok((u_ee, u_ee * (std::f64::consts::SQRT_2 * kd / 4.0)))
}

/// Stress-tensor element between the `(1,0,M)` and `(1,1,E)` waves, `−πc/(2√2ω)`.
pub fn stress_element(omega: f64) -> f64 {
    -std::f64::consts::PI * C / (2.0 * std::f64::consts::SQRT_2 * omega)
}

impl TestObject {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        for (name, v) in [("test radius", self.radius_m), ("separation", self.separation_m)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `T` of the `(1,1,E)` channel, `i(2/3)(ω/c)³ β(ω)`.
    pub fn t_11e(&self, omega: f64, guard: RegimeGuard) -> Result<Complex64> {
        if guard == RegimeGuard::Enforce && !(omega * self.radius_m / C < REGIME_LIMIT) {
            return Err(Error::Regime { guard: "omega*r_test/c", value: omega * self.radius_m / C, limit: REGIME_LIMIT });
        }
        let beta = sphere_polarizability(&self.model, self.radius_m, omega)?;
        Ok(dipole_t(2.0 / 3.0 * (omega / C).powi(3) * beta))
    }
}

/// `𝔖₁₁ᴱ = 1 + i(4/3)(ω/c)³ β(ω)` of the static test object, to leading
/// order; radiation reaction is included as for the rotator.
pub fn test_s_11e(test: &TestObject, omega: f64, guard: RegimeGuard) -> Result<Complex64> {
    Ok(1.0 + 2.0 * test.t_11e(omega, guard)?)
}

fn separation_guard(rotator: &dyn ChannelProvider, test: &TestObject, guard: RegimeGuard) -> Result<()> {
    let size = rotator.size_m().unwrap_or(0.0).max(test.radius_m);
    let value = size / test.separation_m;
    if guard == RegimeGuard::Enforce && !(value < 1.0 / SEPARATION_RATIO) {
        return Err(Error::Regime { guard: "max_radius/d", value, limit: 1.0 / SEPARATION_RATIO });
    }
    Ok(())
}

/// `|S₁₁ᴱ|² − 1 = 4 Re T + 4|T|²` of the rotator.
fn rotator_gain(rotator: &dyn ChannelProvider, omega: f64) -> Result<f64> {
    let block = rotator.s_matrix(&ChannelId::sphere(1, 1, Polarization::E), omega)?;
    let t = block.t[(0, 0)];
    Ok(4.0 * t.re + 4.0 * t.norm_sqr())
}

fn window_integral(
    angular_velocity: f64,
    cfg: &QuadratureConfig,
    f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    if angular_velocity <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut points = vec![0.0, angular_velocity];
    points.extend(cfg.split_points.iter().copied().filter(|&p| p > 0.0 && p < angular_velocity));
    points.sort_by(f64::total_cmp);
    points.dedup();
    let i = integrate_adaptive(f, &points, cfg.rel_tol, 0.0, cfg.max_panels)?;
    Ok((i.value, i.error))
}

/// `M = (ħc²/8πd²) ∫₀^Ω ω⁻² (|S₁₁ᴱ|² − 1)(1 − |𝔖₁₁ᴱ|²)`, with error estimate.
pub fn torque_on_test(
    rotator: &dyn ChannelProvider,
    test: &TestObject,
    angular_velocity: f64,
    cfg: &QuadratureConfig,
    guard: RegimeGuard,
) -> Result<(f64, f64)> {
    test.validate()?;
    cfg.validate()?;
    separation_guard(rotator, test, guard)?;
    let (v, e) = window_integral(angular_velocity, cfg, |w| {
        let tau = test.t_11e(w, guard)?;
        let absorbed = -4.0 * tau.re - 4.0 * tau.norm_sqr();
        Ok(rotator_gain(rotator, w)? * absorbed / (w * w))
    })?;
    let pre = HBAR * C * C / (8.0 * std::f64::consts::PI * test.separation_m.powi(2));
    Ok((pre * v, pre * e))
}

/// Shear force `F_y` along `ŷ`, with error estimate.
pub fn shear_force_on_test(
    rotator: &dyn ChannelProvider,
    test: &TestObject,
    angular_velocity: f64,
    cfg: &QuadratureConfig,
    form: ShearForm,
    guard: RegimeGuard,
) -> Result<(f64, f64)> {
    test.validate()?;
    cfg.validate()?;
    separation_guard(rotator, test, guard)?;
    let d = test.separation_m;
    match form {
        ShearForm::Simplified => {
            let (v, e) = window_integral(angular_velocity, cfg, |w| {
                // 1 − Re 𝔖 = −2 Re T
                let tau = test.t_11e(w, guard)?;
                Ok(rotator_gain(rotator, w)? * (-2.0 * tau.re))
            })?;
            let pre = HBAR / (32.0 * std::f64::consts::PI * d);
            Ok((pre * v, pre * e))
        }
        ShearForm::TwoChannel { s10m_re, s10m_im } => {
            let s10m = Complex64::new(s10m_re, s10m_im);
            let (v, e) = window_integral(angular_velocity, cfg, |w| {
                let tau = test.t_11e(w, guard)?;
                // Re(−1 + conj(s)(1 + 2T)) without forming 1 + 2T
                let mix = (s10m.re - 1.0) + 2.0 * (s10m.conj() * tau).re;
                Ok(rotator_gain(rotator, w)? * shear_chain_factor(w, d)? * mix)
            })?;
            let pre = HBAR / (4.0 * std::f64::consts::PI);
            Ok((pre * v, pre * e))
        }
    }
}

/// `(ω²/c²) U₁₀ᴹ conj(U₁₁ᴱ) 𝒯 / π`: the frequency factor of the two-channel
/// force. The `1/π` brings the chain in line with the dipole force/torque
/// ratio `k²d/8`, which the simplified formula satisfies.
pub fn shear_chain_factor(omega: f64, separation_m: f64) -> Result<f64> {
    let (u_ee, u_me) = translation_coefficients(omega, separation_m)?;
    let k = omega / C;
    Ok(k * k * (u_me * u_ee.conj()).re * stress_element(omega) / std::f64::consts::PI)
}

/// Torque and simplified force together.
pub fn interaction(
    rotator: &dyn ChannelProvider,
    test: &TestObject,
    angular_velocity: f64,
    cfg: &QuadratureConfig,
    guard: RegimeGuard,
) -> Result<InteractionResult> {
    let (torque_nm, torque_error_nm) = torque_on_test(rotator, test, angular_velocity, cfg, guard)?;
    let (force_y_n, force_error_n) = shear_force_on_test(rotator, test, angular_velocity, cfg, ShearForm::Simplified, guard)?;
    Ok(InteractionResult {
        separation_m: test.separation_m,
        angular_velocity_rad_s: angular_velocity,
        torque_nm,
        torque_error_nm,
        force_y_n,
        force_error_n,
    })
}

/// Sphere rotator of radius `rotator_radius_m` swept over separations and
/// angular velocities; rows are ordered by `(Ω, d)` in input order.
pub fn sphere_interaction_sweep(
    rotator_model: &DielectricModel,
    rotator_radius_m: f64,
    test: &TestObject,
    separations_m: &[f64],
    angular_velocities: &[f64],
    cfg: &QuadratureConfig,
    guard: RegimeGuard,
) -> Result<Vec<InteractionResult>> {
    let jobs: Vec<(f64, f64)> =
        angular_velocities.iter().flat_map(|&om| separations_m.iter().map(move |&d| (om, d))).collect();
    jobs.par_iter()
        .map(|&(om, d)| {
            let body = SphereBody {
                model: rotator_model.clone(),
                radius_m: rotator_radius_m,
                angular_velocity_rad_s: om,
                guard,
            };
            let t = TestObject { separation_m: d, ..test.clone() };
            interaction(&body, &t, om, cfg, guard)
        })
        .collect()
}

/// Sweep CSV: `d_m,Omega_rad_s,M_Nm,Fy_N`.
pub fn write_sweep_csv<W: Write>(rows: &[InteractionResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["d_m", "Omega_rad_s", "M_Nm", "Fy_N"]).map_err(io)?;
    for r in rows {
        w.write_record([
            format!("{:e}", r.separation_m),
            format!("{:e}", r.angular_velocity_rad_s),
            format!("{:e}", r.torque_nm),
            format!("{:e}", r.force_y_n),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
