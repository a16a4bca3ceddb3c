//! Spin-down of a rotating body by its own radiation.
//!
//! The trajectory follows from energy balance, `I Ω dΩ/dt = −P(Ω)`, with
//! `P(Ω)` the zero-temperature radiated power. `P` is memoized on a
//! logarithmic grid in `Ω` and interpolated by cubics in `(ln Ω, ln P)`, which
//! is exact for power laws.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constants::{C, HBAR};
use crate::error::{Error, Result};
use crate::materials::DielectricModel;
use crate::quadrature::QuadratureConfig;
use crate::radiation::{power_cylinder, power_sphere, CylinderMode};
use crate::scattering::RegimeGuard;
use crate::statistics::ThermalState;

/// Memo grid density in `Ω`.
pub const GRID_POINTS_PER_DECADE: f64 = 16.0;

/// Geometry of the rotating body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Sphere { radius_m: f64 },
    Cylinder { radius_m: f64, length_m: f64 },
}

impl BodySpec {
    pub fn radius_m(&self) -> f64 {
        match *self {
            BodySpec::Sphere { radius_m } | BodySpec::Cylinder { radius_m, .. } => radius_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut dims = vec![("radius_m", self.radius_m())];
        if let BodySpec::Cylinder { length_m, .. } = *self {
            dims.push(("length_m", length_m));
        }
        for (name, v) in dims {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinDownScenario {
    pub body: BodySpec,
    pub moment_of_inertia_kg_m2: f64,
    pub model: DielectricModel,
    pub initial_angular_velocity_rad_s: f64,
    pub end_time_s: f64,
    #[serde(default)]
    pub guard: RegimeGuard,
}

impl SpinDownScenario {
    pub fn validate(&self) -> Result<()> {
        self.body.validate()?;
        self.model.validate()?;
        for (name, v) in [
            ("moment_of_inertia_kg_m2", self.moment_of_inertia_kg_m2),
            ("initial_angular_velocity_rad_s", self.initial_angular_velocity_rad_s),
            ("end_time_s", self.end_time_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Zero-temperature radiated power at angular velocity `omega`.
    pub fn power(&self, omega: f64, cfg: &QuadratureConfig) -> Result<f64> {
        let r = match self.body {
            BodySpec::Sphere { radius_m } => {
                power_sphere(&self.model, radius_m, &ThermalState::cold(omega), cfg, self.guard)?
            }
            BodySpec::Cylinder { radius_m, length_m } => {
                power_cylinder(&self.model, radius_m, length_m, omega, cfg, CylinderMode::LinearInT, self.guard)?
            }
        };
        Ok(r.total_power_w)
    }
}

/// `τ = (I/ħ) c³/(L R² Ω³)` at the initial angular velocity.
pub fn spin_down_timescale(scenario: &SpinDownScenario) -> Result<f64> {
    scenario.validate()?;
    let BodySpec::Cylinder { radius_m, length_m } = scenario.body else {
        return Err(Error::InvalidParameter("the spin-down timescale estimate is defined for cylinders only".into()));
    };
    let om = scenario.initial_angular_velocity_rad_s;
    Ok(scenario.moment_of_inertia_kg_m2 / HBAR * C.powi(3) / (length_m * radius_m * radius_m * om.powi(3)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t_s: f64,
    pub omega_rad_s: f64,
    pub power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinDownTrajectory {
    pub points: Vec<TrajectoryPoint>,
    /// Time at which `Ω` reaches `Ω₀/10`, if within the integration span.
    pub t10_s: Option<f64>,
    pub power_evaluations: usize,
}

impl SpinDownTrajectory {
    /// `∫₀^t P dt′` by the trapezoid rule on the recorded points.
    pub fn radiated_energy(&self) -> f64 {
        self.points.windows(2).map(|p| 0.5 * (p[0].power_w + p[1].power_w) * (p[1].t_s - p[0].t_s)).sum()
    }
}

/// Step control of the embedded Runge–Kutta integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step as a fraction of the integration span.
    pub max_step_fraction: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 0.0, max_step_fraction: 1.0 / 20_000.0 }
    }
}

/// `P(Ω)` on the nodes `Ω₀·10^{−j/16}`, filled on demand.
struct PowerMemo<F> {
    top: f64,
    nodes: HashMap<i64, f64>,
    power: F,
}

impl<F: FnMut(f64) -> Result<f64>> PowerMemo<F> {
    fn node(&self, j: i64) -> f64 {
        self.top * 10f64.powf(-(j as f64) / GRID_POINTS_PER_DECADE)
    }

    fn at_node(&mut self, j: i64) -> Result<f64> {
        if let Some(&p) = self.nodes.get(&j) {
            return Ok(p);
        }
        let omega = self.node(j);
        let p = (self.power)(omega)?;
        if !p.is_finite() {
            return Err(Error::Domain(format!("radiated power is not finite at Omega = {omega:e}")));
        }
        self.nodes.insert(j, p);
        Ok(p)
    }

    fn eval(&mut self, omega: f64) -> Result<f64> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("angular velocity left the positive axis: {omega:e}")));
        }
        let s = (self.top / omega).log10() * GRID_POINTS_PER_DECADE;
        // four consecutive nodes bracketing omega, never above the top node
        let j0 = (s.floor() as i64 - 1).max(0);
        let js = [j0, j0 + 1, j0 + 2, j0 + 3];
        let mut ps = [0.0; 4];
        for (p, &j) in ps.iter_mut().zip(&js) {
            *p = self.at_node(j)?;
        }
        let xs = js.map(|j| j as f64);
        if ps.iter().all(|&p| p > 0.0) {
            Ok(lagrange4(&xs, &ps.map(f64::ln), s).exp())
        } else {
            let ws = js.map(|j| self.node(j));
            Ok(lagrange4(&ws, &ps, omega))
        }
    }
}

fn lagrange4(xs: &[f64; 4], ys: &[f64; 4], x: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if j != i {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        sum += w * ys[i];
    }
    sum
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `I Ω dΩ/dt = −P(Ω)` with a caller-supplied power law `power`.
pub fn integrate_spin_down_with<F>(
    moment_of_inertia: f64,
    initial_omega: f64,
    end_time: f64,
    power: F,
    opts: OdeOptions,
) -> Result<SpinDownTrajectory>
where
    F: FnMut(f64) -> Result<f64>,
{
    for (name, v) in [("moment of inertia", moment_of_inertia), ("initial Omega", initial_omega), ("end time", end_time)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    let mut memo = PowerMemo { top: initial_omega, nodes: HashMap::new(), power };
    let mut rhs = |omega: f64| -> Result<(f64, f64)> {
        let p = memo.eval(omega)?;
        Ok((-p / (moment_of_inertia * omega), p))
    };

    let target = initial_omega / 10.0;
    let h_max = end_time * opts.max_step_fraction;
    let (mut t, mut y) = (0.0f64, initial_omega);
    let (mut k1, p0) = rhs(y)?;
    let mut points = vec![TrajectoryPoint { t_s: t, omega_rad_s: y, power_w: p0 }];
    let mut t10 = None;
    let mut h = if k1 == 0.0 { h_max } else { (0.01 * y / k1.abs()).min(h_max) };

    while t < end_time {
        h = h.min(end_time - t);
        if h <= 16.0 * f64::EPSILON * t.max(end_time) {
            return Err(Error::Stiffness { t, step: h });
        }
        let k2 = rhs(y + h * A21 * k1)?.0;
        let k3 = rhs(y + h * (A31 * k1 + A32 * k2))?.0;
        let k4 = rhs(y + h * (A41 * k1 + A42 * k2 + A43 * k3))?.0;
        let k5 = rhs(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?.0;
        let k6 = rhs(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))?.0;
        let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        if !(y_new > 0.0) {
            h *= 0.25;
            continue;
        }
        let (k7, p_new) = rhs(y_new)?;
        let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = opts.abs_tol + opts.rel_tol * y.abs().max(y_new.abs());
        let ratio = if scale > 0.0 { err.abs() / scale } else { 0.0 };
        if ratio <= 1.0 {
            let t_new = t + h;
            if t10.is_none() && y_new <= target {
                t10 = Some(hermite_crossing(t, y, k1, t_new, y_new, k7, target));
            }
            t = if end_time - t_new <= 4.0 * f64::EPSILON * end_time { end_time } else { t_new };
            y = y_new;
            k1 = k7;
            points.push(TrajectoryPoint { t_s: t, omega_rad_s: y, power_w: p_new });
        }
        let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * grow).min(h_max);
    }
    Ok(SpinDownTrajectory { points, t10_s: t10, power_evaluations: memo.nodes.len() })
}

/// Time where the cubic Hermite interpolant of a step crosses `target`.
fn hermite_crossing(t0: f64, y0: f64, d0: f64, t1: f64, y1: f64, d1: f64, target: f64) -> f64 {
    let h = t1 - t0;
    let at = |s: f64| {
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t0 + 0.5 * (lo + hi) * h
}

/// Spin-down trajectory with `P(Ω)` from the radiation module.
pub fn integrate_spin_down(scenario: &SpinDownScenario, cfg: &QuadratureConfig) -> Result<SpinDownTrajectory> {
    scenario.validate()?;
    integrate_spin_down_with(
        scenario.moment_of_inertia_kg_m2,
        scenario.initial_angular_velocity_rad_s,
        scenario.end_time_s,
        |w| scenario.power(w, cfg),
        OdeOptions::default(),
    )
}

/// Trajectory CSV: `t_s,Omega_rad_s,P_W`.
pub fn write_trajectory_csv<W: Write>(traj: &SpinDownTrajectory, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["t_s", "Omega_rad_s", "P_W"]).map_err(io)?;
    for p in &traj.points {
        w.write_record([format!("{:e}", p.t_s), format!("{:e}", p.omega_rad_s), format!("{:e}", p.power_w)])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
