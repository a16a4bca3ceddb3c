//! Bose–Einstein occupation algebra.

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};

/// Above this value of `ħ|ω|/k_BT` the occupation is taken to be exactly 0 (or −1).
pub const EXPONENT_CUTOFF: f64 = 700.0;

/// Body temperature, environment temperature and angular velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalState {
    pub body_temperature_k: f64,
    pub environment_temperature_k: f64,
    pub angular_velocity_rad_s: f64,
}

impl ThermalState {
    pub fn new(body_temperature_k: f64, environment_temperature_k: f64, angular_velocity_rad_s: f64) -> Result<Self> {
        let s = Self { body_temperature_k, environment_temperature_k, angular_velocity_rad_s };
        s.validate()?;
        Ok(s)
    }

    /// Zero temperature everywhere.
    pub fn cold(angular_velocity_rad_s: f64) -> Self {
        Self { body_temperature_k: 0.0, environment_temperature_k: 0.0, angular_velocity_rad_s }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("body temperature", self.body_temperature_k),
            ("environment temperature", self.environment_temperature_k),
        ] {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be a finite non-negative kelvin value, got {t}")));
            }
        }
        let w = self.angular_velocity_rad_s;
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidParameter(format!("angular velocity must be finite and non-negative, got {w}")));
        }
        Ok(())
    }

    pub fn is_cold(&self) -> bool {
        self.body_temperature_k == 0.0 && self.environment_temperature_k == 0.0
    }

    pub fn max_temperature(&self) -> f64 {
        self.body_temperature_k.max(self.environment_temperature_k)
    }
}

fn occupation_unchecked(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return if omega < 0.0 { -1.0 } else { 0.0 };
    }
    let x = HBAR * omega / (K_B * temperature);
    if x > EXPONENT_CUTOFF {
        0.0
    } else if x < -EXPONENT_CUTOFF {
        -1.0
    } else {
        1.0 / x.exp_m1()
    }
}

/// `n_T(ω) = 1/(exp(ħω/k_BT) − 1)` for signed `ω`.
///
/// At `T = 0` this is `−Θ(−ω)` with `Θ(0) = 0`; at `T > 0` the pole at
/// `ω = 0` is an error.
pub fn bose_occupation(omega: f64, temperature_k: f64) -> Result<f64> {
    if !(temperature_k >= 0.0) || !temperature_k.is_finite() {
        return Err(Error::InvalidParameter(format!("temperature must be non-negative, got {temperature_k}")));
    }
    if !omega.is_finite() {
        return Err(Error::Domain(format!("frequency must be finite, got {omega}")));
    }
    if omega == 0.0 && temperature_k > 0.0 {
        return Err(Error::Pole { temperature: temperature_k });
    }
    Ok(occupation_unchecked(omega, temperature_k))
}

/// Source-fluctuation weight `a_T(ω) = 2ħ(n_T(ω) + 1/2)` (J·s); odd in `ω`.
pub fn source_weight(omega: f64, temperature_k: f64) -> Result<f64> {
    Ok(2.0 * HBAR * (bose_occupation(omega, temperature_k)? + 0.5))
}

/// `n_T(ω − Ωm) − n_{T₀}(ω)` for `ω > 0`.
///
/// At `T = T₀ = 0` this is `−Θ(Ωm − ω)` with the boundary value 0. For
/// `T > 0` exactly at `ω = Ωm` the result is `+∞`; quadrature panels never
/// evaluate that point.
pub fn occupation_difference(omega: f64, m: i32, state: &ThermalState) -> f64 {
    let shifted = omega - state.angular_velocity_rad_s * m as f64;
    let body = if shifted == 0.0 {
        if state.body_temperature_k > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        occupation_unchecked(shifted, state.body_temperature_k)
    };
    let env = occupation_unchecked(omega, state.environment_temperature_k);
    body - env
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_temperature_limits() {
        assert_eq!(bose_occupation(1e14, 0.0).unwrap(), 0.0);
        assert_eq!(bose_occupation(-1e14, 0.0).unwrap(), -1.0);
    }

    #[test]
    fn unit_exponent() {
        let t = 300.0;
        let w = K_B * t / HBAR;
        let got = bose_occupation(w, t).unwrap();
        let want = 1.0 / (std::f64::consts::E - 1.0);
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn reflection_identity() {
        let t = 50.0;
        let unit = K_B * t / HBAR;
        for f in [0.5, 1.0, 2.0] {
            let w = f * unit;
            let s = bose_occupation(w, t).unwrap() + bose_occupation(-w, t).unwrap();
            assert!((s + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pole_at_zero_frequency() {
        assert!(matches!(bose_occupation(0.0, 10.0), Err(Error::Pole { .. })));
        assert_eq!(bose_occupation(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn overflow_guard() {
        let t = 1.0;
        let w = 800.0 * K_B * t / HBAR;
        assert_eq!(bose_occupation(w, t).unwrap(), 0.0);
        assert_eq!(bose_occupation(-w, t).unwrap(), -1.0);
    }

    #[test]
    fn equilibrium_difference_vanishes() {
        let s = ThermalState::new(300.0, 300.0, 0.0).unwrap();
        for w in [1e10, 1e13, 3e14] {
            for m in -2..=2 {
                assert_eq!(occupation_difference(w, m, &s), 0.0);
            }
        }
    }

    #[test]
    fn cold_window() {
        let om = 1e14;
        let s = ThermalState::cold(om);
        assert_eq!(occupation_difference(0.3 * om, 1, &s), -1.0);
        assert_eq!(occupation_difference(1.7 * om, 1, &s), 0.0);
        assert_eq!(occupation_difference(om, 1, &s), 0.0);
        assert_eq!(occupation_difference(0.3 * om, 0, &s), 0.0);
        assert_eq!(occupation_difference(0.3 * om, -1, &s), 0.0);
        assert_eq!(occupation_difference(1.5 * om, 2, &s), -1.0);
    }

    #[test]
    fn hot_body_pole_marker() {
        let s = ThermalState::new(10.0, 0.0, 1e13).unwrap();
        assert_eq!(occupation_difference(1e13, 1, &s), f64::INFINITY);
    }

    #[test]
    fn invalid_states() {
        assert!(ThermalState::new(-1.0, 0.0, 0.0).is_err());
        assert!(ThermalState::new(0.0, f64::NAN, 0.0).is_err());
        assert!(ThermalState::new(0.0, 0.0, -5.0).is_err());
    }

    proptest! {
        #[test]
        fn window_never_closes_with_temperature(t in 0.0f64..2000.0, frac in 0.001f64..0.999, om in 1e11f64..1e15) {
            let s = ThermalState::new(t, t, om).unwrap();
            let d = occupation_difference(frac * om, 1, &s);
            prop_assert!(d <= -1.0 + 1e-15, "{d}");
        }

        #[test]
        fn source_weight_is_odd(t in 0.1f64..1000.0, f in 0.01f64..50.0) {
            let w = f * K_B * t / HBAR;
            let a = source_weight(w, t).unwrap();
            let b = source_weight(-w, t).unwrap();
            prop_assert!((a + b).abs() <= 1e-12 * a.abs());
        }
    }
}
