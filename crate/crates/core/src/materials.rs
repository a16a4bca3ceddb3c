//! Dielectric response on the whole real frequency axis.
//!
//! Every model satisfies `ε(−ω) = ε(ω)*` by construction, so the co-rotating
//! frequency `ω − Ωm` may be negative without any extra bookkeeping.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance to the surface-mode pole below which the response factors refuse
/// to evaluate.
pub const POLE_TOLERANCE: f64 = 1e-9;

/// Complex dielectric function `ε(ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DielectricModel {
    /// `ε = 1`; a non-scatterer.
    Vacuum,
    /// `ε = 1 − ω_p² / (ω (ω + iγ))`.
    Drude { plasma_frequency_rad_s: f64, damping_rad_s: f64 },
    /// `ε = 1 + f ω₀² / (ω₀² − ω² − iγω)`.
    Lorentz { strength: f64, resonance_rad_s: f64, damping_rad_s: f64 },
    /// `ε = ε' + i sign(ω) ε''`.
    ConstantLoss { eps_real: f64, eps_imag: f64 },
    /// Non-physical toy whose small-body response factor is exactly
    /// `i·A·ω` (both `α/R³` for spheres and `(ε−1)/(ε+1)` for cylinders).
    /// `epsilon` returns the `ε` reproducing the sphere factor.
    LinearLossPolarizabilityToy { a_s: f64 },
    /// Sampled `ε` on a strictly increasing positive grid, linear in Re and Im.
    Tabulated(TabulatedEpsilon),
}

/// Tabulated dielectric data for `ω > 0`; negative frequencies use reflection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedEpsilon {
    omega_rad_s: Vec<f64>,
    eps: Vec<Complex64>,
}

impl TabulatedEpsilon {
    pub fn new(omega_rad_s: Vec<f64>, eps: Vec<Complex64>) -> Result<Self> {
        if omega_rad_s.len() != eps.len() {
            return Err(Error::Parse(format!(
                "tabulated epsilon: {} frequencies but {} values",
                omega_rad_s.len(),
                eps.len()
            )));
        }
        if omega_rad_s.len() < 2 {
            return Err(Error::Parse("tabulated epsilon needs at least two rows".into()));
        }
        for (i, w) in omega_rad_s.iter().enumerate() {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::Parse(format!("row {}: frequency must be positive, got {w}", i + 1)));
            }
        }
        if let Some(i) = omega_rad_s.windows(2).position(|p| p[1] <= p[0]) {
            return Err(Error::Parse(format!("row {}: frequencies must be strictly increasing", i + 2)));
        }
        if let Some(i) = eps.iter().position(|e| !e.re.is_finite() || !e.im.is_finite() || e.im < 0.0) {
            return Err(Error::Parse(format!(
                "row {}: epsilon must be finite with non-negative imaginary part",
                i + 1
            )));
        }
        Ok(Self { omega_rad_s, eps })
    }

    /// Read `omega_rad_s,eps_re,eps_im` CSV.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let expected = ["omega_rad_s", "eps_re", "eps_im"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Parse(format!(
                "line 1: expected header `omega_rad_s,eps_re,eps_im`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut omega = Vec::new();
        let mut eps = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
            let field = |j: usize| -> Result<f64> {
                rec.get(j)
                    .ok_or_else(|| Error::Parse(format!("line {line}: missing column {}", j + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {line}: {e}")))
            };
            omega.push(field(0)?);
            eps.push(Complex64::new(field(1)?, field(2)?));
        }
        Self::new(omega, eps)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.omega_rad_s[0], *self.omega_rad_s.last().unwrap())
    }

    fn eval_positive(&self, w: f64) -> Result<Complex64> {
        let (min, max) = self.range();
        if !(w >= min && w <= max) {
            return Err(Error::Range { omega: w, min, max });
        }
        let i = self.omega_rad_s.partition_point(|&x| x <= w).clamp(1, self.omega_rad_s.len() - 1);
        let (x0, x1) = (self.omega_rad_s[i - 1], self.omega_rad_s[i]);
        let t = (w - x0) / (x1 - x0);
        let (e0, e1) = (self.eps[i - 1], self.eps[i]);
        Ok(Complex64::new(e0.re + t * (e1.re - e0.re), e0.im + t * (e1.im - e0.im)))
    }
}

impl DielectricModel {
    /// Check parameter signs; passivity requires non-negative losses.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            DielectricModel::Vacuum | DielectricModel::Tabulated(_) => Ok(()),
            DielectricModel::Drude { plasma_frequency_rad_s, damping_rad_s } => {
                positive("plasma_frequency_rad_s", plasma_frequency_rad_s)?;
                positive("damping_rad_s", damping_rad_s)
            }
            DielectricModel::Lorentz { strength, resonance_rad_s, damping_rad_s } => {
                positive("strength", strength)?;
                positive("resonance_rad_s", resonance_rad_s)?;
                positive("damping_rad_s", damping_rad_s)
            }
            DielectricModel::ConstantLoss { eps_real, eps_imag } => {
                if !eps_real.is_finite() {
                    return Err(Error::InvalidParameter("eps_real must be finite".into()));
                }
                positive("eps_imag", eps_imag)
            }
            DielectricModel::LinearLossPolarizabilityToy { a_s } => positive("a_s", a_s),
        }
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self, DielectricModel::Vacuum)
    }

    /// `ε(ω)` for signed `ω` (rad/s).
    pub fn epsilon(&self, omega: f64) -> Result<Complex64> {
        if !omega.is_finite() {
            return Err(Error::Domain(format!("frequency must be finite, got {omega}")));
        }
        let one = Complex64::new(1.0, 0.0);
        match self {
            DielectricModel::Vacuum => Ok(one),
            DielectricModel::Drude { plasma_frequency_rad_s: wp, damping_rad_s: g } => {
                if omega == 0.0 {
                    return Err(Error::Singularity("Drude permittivity diverges at omega = 0".into()));
                }
                Ok(one - wp * wp / (omega * Complex64::new(omega, *g)))
            }
            DielectricModel::Lorentz { strength, resonance_rad_s: w0, damping_rad_s: g } => {
                Ok(one + strength * w0 * w0 / Complex64::new(w0 * w0 - omega * omega, -g * omega))
            }
            DielectricModel::ConstantLoss { eps_real, eps_imag } => {
                let sign = if omega > 0.0 {
                    1.0
                } else if omega < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                Ok(Complex64::new(*eps_real, sign * eps_imag))
            }
            DielectricModel::LinearLossPolarizabilityToy { a_s } => {
                // (ε−1)/(ε+2) = iAω  ⇒  ε = (1 + 2iAω)/(1 − iAω)
                let x = Complex64::new(0.0, a_s * omega);
                Ok((one + 2.0 * x) / (one - x))
            }
            DielectricModel::Tabulated(t) => {
                let v = t.eval_positive(omega.abs())?;
                Ok(if omega < 0.0 { v.conj() } else { v })
            }
        }
    }
}

/// Which small-body response a [`ResponseFactor`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    /// `α/R³ = (ε−1)/(ε+2)`
    SphereAlphaOverR3,
    /// `(ε−1)/(ε+1)`
    CylinderSurface,
}

/// Dimensionless response at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseFactor {
    pub kind: ResponseKind,
    pub value: Complex64,
}

/// Dimensionless response factor of `kind` at signed `ω`.
pub fn response_factor(model: &DielectricModel, kind: ResponseKind, omega: f64) -> Result<ResponseFactor> {
    if let DielectricModel::LinearLossPolarizabilityToy { a_s } = model {
        return Ok(ResponseFactor { kind, value: Complex64::new(0.0, a_s * omega) });
    }
    let eps = model.epsilon(omega)?;
    let (shift, what) = match kind {
        ResponseKind::SphereAlphaOverR3 => (2.0, "epsilon = -2 (sphere surface mode)"),
        ResponseKind::CylinderSurface => (1.0, "epsilon = -1 (cylinder surface mode)"),
    };
    let denom = eps + shift;
    if denom.norm() < POLE_TOLERANCE {
        return Err(Error::Singularity(format!("{what} at omega = {omega:e} rad/s")));
    }
    let value = if eps.norm() > 1e100 {
        // avoids overflow of |ε|² inside the complex division
        1.0 - (1.0 + shift) / denom
    } else {
        (eps - 1.0) / denom
    };
    Ok(ResponseFactor { kind, value })
}

/// Polarizability of a small sphere, `α = ((ε−1)/(ε+2)) R³` (m³).
pub fn sphere_polarizability(model: &DielectricModel, radius_m: f64, omega: f64) -> Result<Complex64> {
    if !(radius_m > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius_m}")));
    }
    let f = response_factor(model, ResponseKind::SphereAlphaOverR3, omega)?;
    Ok(f.value * radius_m.powi(3))
}

/// Cylinder surface factor `(ε−1)/(ε+1)`.
pub fn cylinder_surface_factor(model: &DielectricModel, omega: f64) -> Result<Complex64> {
    Ok(response_factor(model, ResponseKind::CylinderSurface, omega)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn builtins() -> Vec<DielectricModel> {
        vec![
            DielectricModel::Drude { plasma_frequency_rad_s: 1.4e16, damping_rad_s: 3.0e13 },
            DielectricModel::Lorentz { strength: 2.5, resonance_rad_s: 8.0e14, damping_rad_s: 4.0e13 },
            DielectricModel::ConstantLoss { eps_real: 2.0, eps_imag: 0.5 },
            DielectricModel::LinearLossPolarizabilityToy { a_s: 1e-15 },
        ]
    }

    #[test]
    fn drude_reflection() {
        let g = 3.0e13;
        let m = DielectricModel::Drude { plasma_frequency_rad_s: 1.4e16, damping_rad_s: g };
        for w in [0.1 * g, g, 10.0 * g] {
            assert_eq!(m.epsilon(-w).unwrap(), m.epsilon(w).unwrap().conj());
        }
    }

    #[test]
    fn constant_loss_by_definition() {
        let m = DielectricModel::ConstantLoss { eps_real: 2.0, eps_imag: 0.5 };
        assert_eq!(m.epsilon(3.0).unwrap(), Complex64::new(2.0, 0.5));
        assert_eq!(m.epsilon(-3.0).unwrap(), Complex64::new(2.0, -0.5));
    }

    #[test]
    fn drude_at_damping_frequency() {
        let (wp, g) = (1.4e16, 3.0e13);
        let m = DielectricModel::Drude { plasma_frequency_rad_s: wp, damping_rad_s: g };
        let oracle = Complex64::new(1.0, 0.0) - Complex64::new(wp * wp, 0.0) / (Complex64::new(g, 0.0) * Complex64::new(g, g));
        let got = m.epsilon(g).unwrap();
        assert!((got.im - oracle.im).abs() <= 1e-14 * oracle.im.abs());
        assert!((got.im - wp * wp / (2.0 * g * g)).abs() <= 1e-14 * got.im);
    }

    #[test]
    fn perfect_conductor_limit() {
        let m = DielectricModel::Drude { plasma_frequency_rad_s: 1e16, damping_rad_s: 1e-3 };
        let r = 2e-9;
        let a = sphere_polarizability(&m, r, 1e3).unwrap();
        assert!((a - r.powi(3)).norm() / r.powi(3) < 1e-6);
    }

    #[test]
    fn vacuum_is_transparent() {
        assert_eq!(sphere_polarizability(&DielectricModel::Vacuum, 1e-8, 1e14).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(cylinder_surface_factor(&DielectricModel::Vacuum, 1e14).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn toy_factor_is_linear() {
        let m = DielectricModel::LinearLossPolarizabilityToy { a_s: 2e-15 };
        let r: f64 = 1e-8;
        let a = sphere_polarizability(&m, r, 3e14).unwrap();
        assert_eq!(a.re, 0.0);
        assert!((a.im - r.powi(3) * 2e-15 * 3e14).abs() < 1e-16 * r.powi(3));
        let f = cylinder_surface_factor(&m, -3e14).unwrap();
        assert_eq!(f.re, 0.0);
        assert!((f.im + 0.6).abs() < 1e-15);
        // the returned ε reproduces the sphere factor
        let eps = m.epsilon(3e14).unwrap();
        let back = (eps - 1.0) / (eps + 2.0);
        assert!((back - Complex64::new(0.0, 0.6)).norm() < 1e-15);
    }

    #[test]
    fn cylinder_factor_against_direct_division() {
        let m = DielectricModel::ConstantLoss { eps_real: 3.0, eps_imag: 4.0 };
        let got = cylinder_surface_factor(&m, 1.0).unwrap();
        let e = Complex64::new(3.0, 4.0);
        // (2+4i)/(4+4i) = (2+4i)(4−4i)/32 = (24+8i)/32
        let oracle = Complex64::new(24.0 / 32.0, 8.0 / 32.0);
        assert!((got - oracle).norm() < 1e-14);
        assert!((got - (e - 1.0) / (e + 1.0)).norm() < 1e-14);
        assert_eq!(cylinder_surface_factor(&DielectricModel::ConstantLoss { eps_real: 1.0, eps_imag: 1e-300 }, 1.0).unwrap().re, 0.0);
    }

    #[test]
    fn surface_mode_poles_raise() {
        let sphere_pole = DielectricModel::ConstantLoss { eps_real: -2.0, eps_imag: 1e-12 };
        assert!(matches!(sphere_polarizability(&sphere_pole, 1e-8, 1.0), Err(Error::Singularity(_))));
        let cyl_pole = DielectricModel::ConstantLoss { eps_real: -1.0, eps_imag: 1e-12 };
        assert!(matches!(cylinder_surface_factor(&cyl_pole, 1.0), Err(Error::Singularity(_))));
    }

    #[test]
    fn tabulated_interpolates_and_reflects() {
        let t = TabulatedEpsilon::new(
            vec![1.0, 2.0, 4.0],
            vec![Complex64::new(2.0, 1.0), Complex64::new(4.0, 3.0), Complex64::new(5.0, 2.0)],
        )
        .unwrap();
        let m = DielectricModel::Tabulated(t);
        assert_eq!(m.epsilon(1.5).unwrap(), Complex64::new(3.0, 2.0));
        assert_eq!(m.epsilon(-3.0).unwrap(), Complex64::new(4.5, -2.5));
        assert!(matches!(m.epsilon(0.5), Err(Error::Range { .. })));
        assert!(matches!(m.epsilon(4.5), Err(Error::Range { .. })));
    }

    #[test]
    fn tabulated_csv_parsing() {
        let ok = "omega_rad_s,eps_re,eps_im\n1e14,2.0,0.1\n2e14,2.5,0.2\n";
        let t = TabulatedEpsilon::from_csv_reader(ok.as_bytes()).unwrap();
        assert_eq!(t.range(), (1e14, 2e14));

        let bad_header = "omega,eps_re,eps_im\n1,2,3\n2,3,4\n";
        assert!(matches!(TabulatedEpsilon::from_csv_reader(bad_header.as_bytes()), Err(Error::Parse(m)) if m.contains("line 1")));

        let non_monotone = "omega_rad_s,eps_re,eps_im\n2e14,2.0,0.1\n1e14,2.5,0.2\n";
        assert!(matches!(TabulatedEpsilon::from_csv_reader(non_monotone.as_bytes()), Err(Error::Parse(m)) if m.contains("row 2")));

        let garbage = "omega_rad_s,eps_re,eps_im\n1e14,abc,0.1\n2e14,2.5,0.2\n";
        assert!(matches!(TabulatedEpsilon::from_csv_reader(garbage.as_bytes()), Err(Error::Parse(m)) if m.contains("line 2")));
    }

    #[test]
    fn validation_rejects_gain() {
        assert!(DielectricModel::ConstantLoss { eps_real: 2.0, eps_imag: -0.1 }.validate().is_err());
        assert!(DielectricModel::Drude { plasma_frequency_rad_s: 1.0, damping_rad_s: 0.0 }.validate().is_err());
        for m in builtins() {
            m.validate().unwrap();
        }
    }

    #[test]
    fn passivity_on_log_grid() {
        for m in builtins() {
            for i in 0..=320 {
                let w = 10f64.powf(i as f64 / 20.0);
                let eps = m.epsilon(w).unwrap();
                assert!(eps.im > 0.0, "{m:?} at {w}: {eps}");
                let a = sphere_polarizability(&m, 1e-8, w).unwrap();
                assert!(a.im > 0.0, "{m:?} alpha at {w}: {a}");
            }
        }
    }

    proptest! {
        #[test]
        fn oddness_of_imaginary_parts(log_w in 8.0f64..16.0, which in 0usize..4) {
            let m = &builtins()[which];
            let w = 10f64.powf(log_w);
            let (ep, em) = (m.epsilon(w).unwrap(), m.epsilon(-w).unwrap());
            prop_assert!((ep.im + em.im).abs() <= 1e-14 * ep.im.abs());
            prop_assert!((ep.re - em.re).abs() <= 1e-14 * ep.re.abs().max(1.0));
            for kind in [ResponseKind::SphereAlphaOverR3, ResponseKind::CylinderSurface] {
                let fp = response_factor(m, kind, w).unwrap().value;
                let fm = response_factor(m, kind, -w).unwrap().value;
                prop_assert!((fp.im + fm.im).abs() <= 1e-14 * fp.norm());
                prop_assert!((fp.re - fm.re).abs() <= 1e-14 * fp.norm());
            }
        }
    }
}
