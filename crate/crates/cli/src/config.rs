//! Scenario configuration. Every physical input is SI with its unit in the key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinrad_core::dynamics::{BodySpec, SpinDownScenario};
use spinrad_core::interactions::{ShearForm, TestObject};
use spinrad_core::materials::TabulatedEpsilon;
use spinrad_core::radiation::CylinderMode;
use spinrad_core::scattering::{load_tabulated_channels, ChannelProvider, CylinderBody, RegimeGuard, SphereBody};
use spinrad_core::verify::VerifyInputs;
use spinrad_core::{DielectricModel, Error, QuadratureConfig, Result, ThermalState};

/// Shipped scenario; also used when `--config` is absent.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyConfig {
    Sphere { radius_m: f64 },
    Cylinder { radius_m: f64, length_m: f64 },
    /// Externally computed S-matrix blocks; `extent_m` feeds the separation guard.
    Tabulated { channels_path: PathBuf, extent_m: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub points: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { points: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestObjectConfig {
    pub material: DielectricModel,
    pub radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorqueConfig {
    pub test_object: TestObjectConfig,
    pub separations_m: Vec<f64>,
    /// Defaults to the thermal-state angular velocity.
    #[serde(default)]
    pub angular_velocities_rad_s: Vec<f64>,
    #[serde(default)]
    pub shear_form: ShearForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinDownConfig {
    pub moment_of_inertia_kg_m2: f64,
    pub end_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub sphere_radius_m: f64,
    pub cylinder_radius_m: f64,
    pub cylinder_length_m: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { sphere_radius_m: 1e-8, cylinder_radius_m: 1e-9, cylinder_length_m: 1e-6 }
    }
}

/// Artifact paths; relative paths resolve against the working directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub power: Option<PathBuf>,
    pub spectrum_csv: Option<PathBuf>,
    pub torque: Option<PathBuf>,
    pub spindown: Option<PathBuf>,
    pub verify: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub body: BodyConfig,
    pub material: DielectricModel,
    /// CSV `omega_rad_s,eps_re,eps_im`; replaces `material` when set.
    #[serde(default)]
    pub material_csv_path: Option<PathBuf>,
    pub thermal: ThermalState,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub cylinder_mode: CylinderMode,
    #[serde(default)]
    pub override_regime_guard: bool,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub torque: Option<TorqueConfig>,
    #[serde(default)]
    pub spindown: Option<SpinDownConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("config line {} column {}: {e}", e.line(), e.column())))?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Self::from_json_str(DEFAULT_CONFIG),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", p.display())))?;
                Self::from_json_str(&text).map_err(|e| match e {
                    Error::Parse(m) => Error::Parse(format!("{}: {m}", p.display())),
                    other => other,
                })
            }
        }
    }

    /// Resolves file-backed inputs and checks everything a command may touch.
    pub fn validate(&mut self) -> Result<()> {
        if let Some(path) = &self.material_csv_path {
            self.material = DielectricModel::Tabulated(TabulatedEpsilon::from_csv_path(path)?);
        }
        self.material.validate()?;
        self.thermal.validate()?;
        self.quadrature.validate()?;
        match &self.body {
            BodyConfig::Sphere { radius_m } => BodySpec::Sphere { radius_m: *radius_m }.validate()?,
            BodyConfig::Cylinder { radius_m, length_m } => {
                BodySpec::Cylinder { radius_m: *radius_m, length_m: *length_m }.validate()?
            }
            BodyConfig::Tabulated { extent_m, .. } => {
                if let Some(e) = extent_m {
                    if *e <= 0.0 || !e.is_finite() {
                        return Err(Error::InvalidParameter(format!("extent_m must be positive, got {e}")));
                    }
                }
            }
        }
        if let Some(t) = &self.torque {
            t.test_object.material.validate()?;
            if t.separations_m.is_empty() {
                return Err(Error::InvalidParameter("torque.separations_m is empty".into()));
            }
        }
        Ok(())
    }

    pub fn guard(&self) -> RegimeGuard {
        if self.override_regime_guard {
            RegimeGuard::Override
        } else {
            RegimeGuard::Enforce
        }
    }

    /// Channel provider for the configured body at angular velocity `omega`.
    pub fn provider(&self, omega: f64) -> Result<Box<dyn ChannelProvider>> {
        let guard = self.guard();
        Ok(match &self.body {
            BodyConfig::Sphere { radius_m } => Box::new(SphereBody {
                model: self.material.clone(),
                radius_m: *radius_m,
                angular_velocity_rad_s: omega,
                guard,
            }),
            BodyConfig::Cylinder { radius_m, length_m } => Box::new(CylinderBody {
                model: self.material.clone(),
                radius_m: *radius_m,
                length_m: *length_m,
                angular_velocity_rad_s: omega,
                guard,
            }),
            BodyConfig::Tabulated { channels_path, extent_m } => {
                Box::new(Sized(load_tabulated_channels(channels_path)?, *extent_m))
            }
        })
    }

    pub fn test_object(&self, separation_m: f64) -> Result<TestObject> {
        let t = self
            .torque
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("config has no `torque` section".into()))?;
        Ok(TestObject { model: t.test_object.material.clone(), radius_m: t.test_object.radius_m, separation_m })
    }

    pub fn spin_down(&self) -> Result<SpinDownScenario> {
        let s = self
            .spindown
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("config has no `spindown` section".into()))?;
        let body = match &self.body {
            BodyConfig::Sphere { radius_m } => BodySpec::Sphere { radius_m: *radius_m },
            BodyConfig::Cylinder { radius_m, length_m } => BodySpec::Cylinder { radius_m: *radius_m, length_m: *length_m },
            BodyConfig::Tabulated { .. } => {
                return Err(Error::InvalidParameter("spin-down needs a sphere or cylinder body".into()))
            }
        };
        Ok(SpinDownScenario {
            body,
            moment_of_inertia_kg_m2: s.moment_of_inertia_kg_m2,
            model: self.material.clone(),
            initial_angular_velocity_rad_s: self.thermal.angular_velocity_rad_s,
            end_time_s: s.end_time_s,
            guard: self.guard(),
        })
    }

    /// The configured body supplies whichever verify dimensions it has.
    pub fn verify_inputs(&self) -> VerifyInputs {
        let mut v = VerifyInputs {
            model: self.material.clone(),
            sphere_radius_m: self.verify.sphere_radius_m,
            cylinder_radius_m: self.verify.cylinder_radius_m,
            cylinder_length_m: self.verify.cylinder_length_m,
            angular_velocity_rad_s: self.thermal.angular_velocity_rad_s,
            temperature_k: self.thermal.max_temperature(),
        };
        match self.body {
            BodyConfig::Sphere { radius_m } => v.sphere_radius_m = radius_m,
            BodyConfig::Cylinder { radius_m, length_m } => {
                v.cylinder_radius_m = radius_m;
                v.cylinder_length_m = length_m;
            }
            BodyConfig::Tabulated { .. } => {}
        }
        v
    }
}

/// Tabulated set with an optional declared extent.
struct Sized(spinrad_core::scattering::TabulatedChannelSet, Option<f64>);

impl ChannelProvider for Sized {
    fn max_order(&self) -> Option<u32> {
        self.0.max_order()
    }

    fn channels(&self, m: i32) -> Vec<spinrad_core::scattering::ChannelSpec> {
        self.0.channels(m)
    }

    fn s_matrix(&self, channel: &spinrad_core::ChannelId, omega: f64) -> Result<spinrad_core::SMatrixBlock> {
        self.0.s_matrix(channel, omega)
    }

    fn size_m(&self) -> Option<f64> {
        self.1.or_else(|| self.0.size_m())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_parses_and_validates() {
        let mut cfg = ScenarioConfig::load(None).unwrap();
        cfg.validate().unwrap();
        assert!(cfg.torque.is_some() && cfg.spindown.is_some());
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = DEFAULT_CONFIG.replacen("\"thermal\"", "\"radius\": 1.0,\n  \"thermal\"", 1);
        let err = ScenarioConfig::from_json_str(&text).unwrap_err();
        assert_eq!(err.code(), "parse");
        assert!(err.to_string().contains("line"), "{err}");
    }
}
