//! Channel-resolved scattering matrices of a body rotating about `ẑ`.
//!
//! Small spheres and thin cylinders are treated at leading order in their
//! size: the rotation only enters through the co-rotating frequency `ω − Ωm`
//! at which the material response is evaluated. Anything else can be supplied
//! as tabulated S-matrices through [`TabulatedChannelSet`].

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::C;
use crate::error::{Error, Result};
use crate::materials::{cylinder_surface_factor, sphere_polarizability, DielectricModel};

/// Upper bound for `ωR/c` and `|√ε|ΩR/c` when the regime guard is enforced.
pub const REGIME_LIMIT: f64 = 0.3;

/// Polarization of a partial wave: magnetic (TE) or electric (TM).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    M,
    E,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::M => "M",
            Polarization::E => "E",
        })
    }
}

/// Whether the small-size validity guards are enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeGuard {
    #[default]
    Enforce,
    Override,
}

impl RegimeGuard {
    fn check(self, guard: &'static str, value: f64) -> Result<()> {
        if self == RegimeGuard::Enforce && !(value < REGIME_LIMIT) {
            return Err(Error::Regime { guard, value, limit: REGIME_LIMIT });
        }
        Ok(())
    }
}

/// Label of one scattering channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelId {
    pub m: i32,
    pub l: Option<u32>,
    pub polarizations: Vec<Polarization>,
    pub kz: Option<f64>,
}

impl ChannelId {
    pub fn sphere(l: u32, m: i32, polarization: Polarization) -> Self {
        Self { m, l: Some(l), polarizations: vec![polarization], kz: None }
    }

    /// Mixed (M, E) cylinder channel; `kz = None` labels the whole axial family.
    pub fn cylinder(m: i32, kz: Option<f64>) -> Self {
        Self { m, l: None, polarizations: vec![Polarization::M, Polarization::E], kz }
    }

    pub fn dimension(&self) -> usize {
        self.polarizations.len()
    }

    /// Compact polarization label, e.g. `E` or `ME`.
    pub fn polarization_label(&self) -> String {
        self.polarizations.iter().map(|p| p.to_string()).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.polarizations.is_empty() || self.polarizations.len() > 2 {
            return Err(Error::Parse("channel must list one or two polarizations".into()));
        }
        if self.polarizations.len() == 2 && self.polarizations[0] == self.polarizations[1] {
            return Err(Error::Parse("channel polarizations must be distinct".into()));
        }
        if let Some(l) = self.l {
            if l == 0 || self.m.unsigned_abs() > l {
                return Err(Error::Parse(format!("sphere channel needs l ≥ max(1, |m|), got l = {l}, m = {}", self.m)));
            }
        }
        if let Some(kz) = self.kz {
            if !kz.is_finite() {
                return Err(Error::Parse("kz must be finite".into()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m={}", self.m)?;
        if let Some(l) = self.l {
            write!(f, " l={l}")?;
        }
        write!(f, " P={}", self.polarization_label())?;
        if let Some(kz) = self.kz {
            write!(f, " kz={kz:e}")?;
        }
        Ok(())
    }
}

/// Scattering block of one channel at one frequency.
///
/// The block stores `T` with `S = I + 2T`: for small bodies `S − I` is many
/// orders below unity and would not survive being added to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrixBlock {
    pub channel: ChannelId,
    pub omega: f64,
    pub t: DMatrix<Complex64>,
}

impl SMatrixBlock {
    pub fn from_t(channel: ChannelId, omega: f64, t: DMatrix<Complex64>) -> Result<Self> {
        let n = channel.dimension();
        if t.nrows() != n || t.ncols() != n {
            return Err(Error::Parse(format!(
                "S block for {channel} must be {n}×{n}, got {}×{}",
                t.nrows(),
                t.ncols()
            )));
        }
        if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite S entry for {channel} at omega = {omega:e}")));
        }
        Ok(Self { channel, omega, t })
    }

    pub fn new(channel: ChannelId, omega: f64, s: DMatrix<Complex64>) -> Result<Self> {
        let n = s.nrows();
        let t = if s.is_square() { (s - DMatrix::identity(n, n)) * Complex64::new(0.5, 0.0) } else { s };
        Self::from_t(channel, omega, t)
    }

    pub fn scalar(channel: ChannelId, omega: f64, s: Complex64) -> Result<Self> {
        Self::new(channel, omega, DMatrix::from_element(1, 1, s))
    }

    pub fn s(&self) -> DMatrix<Complex64> {
        let n = self.t.nrows();
        DMatrix::identity(n, n) + &self.t * Complex64::new(2.0, 0.0)
    }
}

/// `I − S†S = −2(T + T†) − 4T†T`, Hermitian by construction.
pub fn deficiency(block: &SMatrixBlock) -> DMatrix<Complex64> {
    let t = &block.t;
    let lin = t + t.adjoint();
    let d = lin * Complex64::new(-2.0, 0.0) - t.adjoint() * t * Complex64::new(4.0, 0.0);
    (&d + d.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `Tr(I − S†S)`, real by construction.
pub fn deficiency_trace(block: &SMatrixBlock) -> f64 {
    let t = &block.t;
    let lin: f64 = (0..t.nrows()).map(|i| t[(i, i)].re).sum();
    let quad: f64 = t.iter().map(|z| z.norm_sqr()).sum();
    -4.0 * lin - 4.0 * quad
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn rotation_guard(
    model: &DielectricModel,
    radius: f64,
    angular_velocity: f64,
    co_rotating: f64,
    guard: RegimeGuard,
) -> Result<()> {
    if guard == RegimeGuard::Override || angular_velocity == 0.0 {
        return Ok(());
    }
    let eps = model.epsilon(co_rotating)?;
    guard.check("|sqrt(eps)|*Omega*R/c", eps.norm().sqrt() * angular_velocity * radius / C)
}

/// `S = 1 + i(4/3)(ω/c)³ α(ω − Ωm)` to leading order for the `l = 1`
/// electric channel; see [`sphere_t_general`] for the exact form used.
pub fn sphere_s_general(
    model: &DielectricModel,
    radius: f64,
    angular_velocity: f64,
    omega: f64,
    l: u32,
    m: i32,
    guard: RegimeGuard,
) -> Result<Complex64> {
    Ok(1.0 + 2.0 * sphere_t_general(model, radius, angular_velocity, omega, l, m, guard)?)
}

/// `T = ix/(1 − ix)` with `x = (2/3)(ω/c)³ α(ω − Ωm)`: the leading-order
/// `T = ix` completed by radiation reaction, so that `|S| = 1` exactly when
/// `Im α = 0`. The precision-preserving form of [`sphere_s_general`].
pub fn sphere_t_general(
    model: &DielectricModel,
    radius: f64,
    angular_velocity: f64,
    omega: f64,
    l: u32,
    m: i32,
    guard: RegimeGuard,
) -> Result<Complex64> {
    if l != 1 {
        return Err(Error::UnsupportedChannel(format!("sphere channels limited to l = 1, got l = {l}")));
    }
    if m.abs() > 1 {
        return Err(Error::UnsupportedChannel(format!("|m| = {} exceeds l = 1", m.abs())));
    }
    check_positive("radius", radius)?;
    check_positive("omega", omega)?;
    guard.check("omega*R/c", omega * radius / C)?;
    let shifted = omega - angular_velocity * m as f64;
    rotation_guard(model, radius, angular_velocity, shifted, guard)?;
    let k = omega / C;
    let alpha = sphere_polarizability(model, radius, shifted)?;
    Ok(dipole_t(2.0 / 3.0 * k.powi(3) * alpha))
}

/// `ix/(1 − ix)`: unitary for real `x`, `ix + O(x²)` otherwise.
pub(crate) fn dipole_t(x: Complex64) -> Complex64 {
    let ix = Complex64::new(-x.im, x.re);
    ix / (1.0 - ix)
}

/// The superradiant `(l, m, P) = (1, 1, E)` channel.
pub fn sphere_s_11e(
    model: &DielectricModel,
    radius: f64,
    angular_velocity: f64,
    omega: f64,
    guard: RegimeGuard,
) -> Result<Complex64> {
    sphere_s_general(model, radius, angular_velocity, omega, 1, 1, guard)
}

/// Thin-cylinder T-block in the (M, E) basis for `m = 1`.
pub fn cylinder_t_block(
    model: &DielectricModel,
    radius: f64,
    angular_velocity: f64,
    omega: f64,
    kz: f64,
    m: i32,
    guard: RegimeGuard,
) -> Result<Matrix2<Complex64>> {
    if m != 1 {
        return Err(Error::UnsupportedChannel(format!("cylinder T-block available for m = 1 only, got m = {m}")));
    }
    check_positive("radius", radius)?;
    check_positive("omega", omega)?;
    guard.check("omega*R/c", omega * radius / C)?;
    let shifted = omega - angular_velocity;
    rotation_guard(model, radius, angular_velocity, shifted, guard)?;
    let f = cylinder_surface_factor(model, shifted)?;
    let pre = Complex64::new(0.0, std::f64::consts::FRAC_PI_4) * f * radius * radius;
    let k = omega / C;
    let t_mm = pre * (k * k);
    let t_ee = pre * (kz * kz);
    let t_em = pre * (k * kz);
    Ok(Matrix2::new(t_mm, t_em, t_em, t_ee))
}

/// How a channel enters the frequency integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelMeasure {
    Discrete,
    /// Family of propagating axial wavenumbers `|kz| ≤ ω/c`, integrated with
    /// weight `L/(2π)`.
    AxialContinuum { length_m: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub id: ChannelId,
    pub measure: ChannelMeasure,
}

/// Source of S-matrix blocks for the trace engine. Blocks never mix
/// different `m`.
pub trait ChannelProvider: Sync {
    /// Largest `|m|` carried; `None` means the engine truncates by contribution.
    fn max_order(&self) -> Option<u32>;
    /// Channels with azimuthal index `m`.
    fn channels(&self, m: i32) -> Vec<ChannelSpec>;
    /// S-matrix of `channel` at `omega`. Continuum channels are queried with
    /// a concrete `kz`.
    fn s_matrix(&self, channel: &ChannelId, omega: f64) -> Result<SMatrixBlock>;
    /// Largest linear extent of the body, when known.
    fn size_m(&self) -> Option<f64> {
        None
    }
}

/// Small rotating sphere, `l = 1` electric channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereBody {
    pub model: DielectricModel,
    pub radius_m: f64,
    pub angular_velocity_rad_s: f64,
    pub guard: RegimeGuard,
}

impl ChannelProvider for SphereBody {
    fn max_order(&self) -> Option<u32> {
        Some(1)
    }

    fn size_m(&self) -> Option<f64> {
        Some(self.radius_m)
    }

    fn channels(&self, m: i32) -> Vec<ChannelSpec> {
        if m.abs() <= 1 {
            vec![ChannelSpec { id: ChannelId::sphere(1, m, Polarization::E), measure: ChannelMeasure::Discrete }]
        } else {
            Vec::new()
        }
    }

    fn s_matrix(&self, channel: &ChannelId, omega: f64) -> Result<SMatrixBlock> {
        if channel.polarizations != [Polarization::E] {
            return Err(Error::UnsupportedChannel(format!("sphere provider has no channel {channel}")));
        }
        let l = channel.l.unwrap_or(0);
        let t = sphere_t_general(&self.model, self.radius_m, self.angular_velocity_rad_s, omega, l, channel.m, self.guard)?;
        SMatrixBlock::from_t(channel.clone(), omega, DMatrix::from_element(1, 1, t))
    }
}

/// Thin rotating cylinder of length `L`, `m = 1` mixed-polarization channels.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderBody {
    pub model: DielectricModel,
    pub radius_m: f64,
    pub length_m: f64,
    pub angular_velocity_rad_s: f64,
    pub guard: RegimeGuard,
}

impl ChannelProvider for CylinderBody {
    fn max_order(&self) -> Option<u32> {
        Some(1)
    }

    fn size_m(&self) -> Option<f64> {
        Some(self.radius_m.max(0.5 * self.length_m))
    }

    fn channels(&self, m: i32) -> Vec<ChannelSpec> {
        if m == 1 {
            vec![ChannelSpec {
                id: ChannelId::cylinder(1, None),
                measure: ChannelMeasure::AxialContinuum { length_m: self.length_m },
            }]
        } else {
            Vec::new()
        }
    }

    fn s_matrix(&self, channel: &ChannelId, omega: f64) -> Result<SMatrixBlock> {
        let kz = channel
            .kz
            .ok_or_else(|| Error::UnsupportedChannel("cylinder S-matrix needs a concrete kz".into()))?;
        let t = cylinder_t_block(&self.model, self.radius_m, self.angular_velocity_rad_s, omega, kz, channel.m, self.guard)?;
        SMatrixBlock::from_t(channel.clone(), omega, DMatrix::from_iterator(2, 2, t.iter().copied()))
    }
}

/// One tabulated channel: strictly increasing grid and S samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel", into = "RawChannel")]
pub struct TabulatedChannel {
    pub id: ChannelId,
    omega: Vec<f64>,
    samples: Vec<DMatrix<Complex64>>,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    m: i32,
    l: Option<u32>,
    polarizations: Vec<Polarization>,
    kz: Option<f64>,
    omega: Vec<f64>,
    S_re: Vec<Vec<Vec<f64>>>,
    S_im: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<RawChannel> for TabulatedChannel {
    type Error = String;

    fn try_from(raw: RawChannel) -> std::result::Result<Self, String> {
        let id = ChannelId { m: raw.m, l: raw.l, polarizations: raw.polarizations, kz: raw.kz };
        id.validate().map_err(|e| e.to_string())?;
        let n = id.dimension();
        if raw.omega.is_empty() {
            return Err(format!("channel {id}: empty frequency grid"));
        }
        if raw.omega.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(format!("channel {id}: frequencies must be finite and non-negative"));
        }
        if let Some(i) = raw.omega.windows(2).position(|p| p[1] <= p[0]) {
            return Err(format!("channel {id}: frequency grid not strictly increasing at sample {}", i + 1));
        }
        if raw.S_re.len() != raw.omega.len() || raw.S_im.len() != raw.omega.len() {
            return Err(format!(
                "channel {id}: {} frequencies but {} S_re and {} S_im samples",
                raw.omega.len(),
                raw.S_re.len(),
                raw.S_im.len()
            ));
        }
        let mut samples = Vec::with_capacity(raw.omega.len());
        for (i, (re, im)) in raw.S_re.iter().zip(&raw.S_im).enumerate() {
            let square = |mat: &Vec<Vec<f64>>| mat.len() == n && mat.iter().all(|row| row.len() == n);
            if !square(re) || !square(im) {
                return Err(format!("channel {id}: sample {i} is not a {n}×{n} matrix"));
            }
            let s = DMatrix::from_fn(n, n, |r, c| Complex64::new(re[r][c], im[r][c]));
            if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(format!("channel {id}: sample {i} has non-finite entries"));
            }
            samples.push(s);
        }
        Ok(Self { id, omega: raw.omega, samples })
    }
}

impl From<TabulatedChannel> for RawChannel {
    fn from(ch: TabulatedChannel) -> Self {
        let n = ch.id.dimension();
        let part = |f: fn(&Complex64) -> f64| {
            ch.samples
                .iter()
                .map(|s| (0..n).map(|r| (0..n).map(|c| f(&s[(r, c)])).collect()).collect())
                .collect()
        };
        RawChannel {
            m: ch.id.m,
            l: ch.id.l,
            polarizations: ch.id.polarizations.clone(),
            kz: ch.id.kz,
            omega: ch.omega.clone(),
            S_re: part(|z| z.re),
            S_im: part(|z| z.im),
        }
    }
}

impl TabulatedChannel {
    pub fn new(id: ChannelId, omega: Vec<f64>, samples: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let tmp = TabulatedChannel { id, omega, samples };
        TabulatedChannel::try_from(RawChannel::from(tmp)).map_err(Error::Parse)
    }

    pub fn grid(&self) -> &[f64] {
        &self.omega
    }

    pub fn samples(&self) -> &[DMatrix<Complex64>] {
        &self.samples
    }

    /// Linear interpolation of Re and Im entries.
    pub fn s_at(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        let (min, max) = (self.omega[0], *self.omega.last().unwrap());
        if !(omega >= min && omega <= max) {
            return Err(Error::Range { omega, min, max });
        }
        if self.omega.len() == 1 {
            return Ok(self.samples[0].clone());
        }
        let i = self.omega.partition_point(|&x| x <= omega).clamp(1, self.omega.len() - 1);
        let (x0, x1) = (self.omega[i - 1], self.omega[i]);
        let t = (omega - x0) / (x1 - x0);
        let (a, b) = (&self.samples[i - 1], &self.samples[i]);
        Ok(DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| {
            let (p, q) = (a[(r, c)], b[(r, c)]);
            Complex64::new(p.re + t * (q.re - p.re), p.im + t * (q.im - p.im))
        }))
    }
}

/// Externally computed channels, read from the JSON schema
/// `{"channels":[{"m","l","polarizations","kz","omega","S_re","S_im"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedChannelSet {
    pub channels: Vec<TabulatedChannel>,
}

impl TabulatedChannelSet {
    pub fn new(channels: Vec<TabulatedChannel>) -> Result<Self> {
        let set = Self { channels };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::EmptySet);
        }
        for (i, a) in self.channels.iter().enumerate() {
            if self.channels[..i].iter().any(|b| b.id == a.id) {
                return Err(Error::Parse(format!("duplicate channel {}", a.id)));
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let set: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel set serializes")
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// Read a tabulated S-matrix file; parse errors carry line and column.
pub fn load_tabulated_channels(path: impl AsRef<Path>) -> Result<TabulatedChannelSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    TabulatedChannelSet::from_json_str(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl ChannelProvider for TabulatedChannelSet {
    fn max_order(&self) -> Option<u32> {
        self.channels.iter().map(|c| c.id.m.unsigned_abs()).max()
    }

    fn channels(&self, m: i32) -> Vec<ChannelSpec> {
        self.channels
            .iter()
            .filter(|c| c.id.m == m)
            .map(|c| ChannelSpec { id: c.id.clone(), measure: ChannelMeasure::Discrete })
            .collect()
    }

    fn s_matrix(&self, channel: &ChannelId, omega: f64) -> Result<SMatrixBlock> {
        let ch = self
            .channels
            .iter()
            .find(|c| &c.id == channel)
            .ok_or_else(|| Error::UnsupportedChannel(format!("no tabulated channel {channel}")))?;
        SMatrixBlock::new(channel.clone(), omega, ch.s_at(omega)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: f64 = 1e-8;

    fn lossy() -> DielectricModel {
        DielectricModel::Lorentz { strength: 2.0, resonance_rad_s: 1e15, damping_rad_s: 1e14 }
    }

    #[test]
    fn static_lossy_sphere_absorbs() {
        let m = lossy();
        for w in [1e12, 1e13, 1e14] {
            let t = sphere_t_general(&m, R, 0.0, w, 1, 1, RegimeGuard::Enforce).unwrap();
            let b = SMatrixBlock::from_t(ChannelId::sphere(1, 1, Polarization::E), w, DMatrix::from_element(1, 1, t)).unwrap();
            let loss = deficiency_trace(&b);
            assert!(loss > 0.0);
            let k = w / C;
            let a = sphere_polarizability(&m, R, w).unwrap();
            let lead = 8.0 / 3.0 * k.powi(3) * a.im;
            // direct 1 − |1 + 2T|² with T expanded by hand
            let direct = -4.0 * t.re - 4.0 * t.norm_sqr();
            assert!((loss - direct).abs() <= 1e-15 * direct);
            assert!((loss - lead).abs() < 1e-4 * lead);
        }
    }

    #[test]
    fn superradiant_inside_window() {
        let om = 1e14;
        for frac in [0.01, 0.2, 0.5, 0.99] {
            let s = sphere_s_11e(&lossy(), R, om, frac * om, RegimeGuard::Enforce).unwrap();
            assert!(s.norm() > 1.0, "{frac}");
        }
    }

    #[test]
    fn vacuum_sphere_is_identity() {
        let s = sphere_s_11e(&DielectricModel::Vacuum, R, 1e14, 5e13, RegimeGuard::Enforce).unwrap();
        assert_eq!(s, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn m_dependence() {
        let (om, w) = (1e14, 4e13);
        let m = lossy();
        let s0 = sphere_s_general(&m, R, om, w, 1, 0, RegimeGuard::Enforce).unwrap();
        assert_eq!(s0, sphere_s_11e(&m, R, 0.0, w, RegimeGuard::Enforce).unwrap());
        let sm = sphere_s_general(&m, R, om, w, 1, -1, RegimeGuard::Enforce).unwrap();
        assert!(sm.norm() < 1.0);
        let edge = sphere_s_general(&m, R, om, om, 1, 1, RegimeGuard::Enforce).unwrap();
        assert!((edge.norm() - 1.0).abs() < 1e-15);
        assert!(matches!(
            sphere_s_general(&m, R, om, w, 2, 1, RegimeGuard::Enforce),
            Err(Error::UnsupportedChannel(_))
        ));
    }

    #[test]
    fn window_edge_is_unitary_beyond_leading_order() {
        // x ≈ 0.07 here, so the bare 1 + 2ix would miss |S| = 1 by ~5e-3
        let (m, r) = (DielectricModel::ConstantLoss { eps_real: 4.0, eps_imag: 0.5 }, 4e-8);
        let om = 0.3 * C / r;
        let w = om;
        let lossless = DielectricModel::Lorentz { strength: 2.0, resonance_rad_s: 1e17, damping_rad_s: 1e3 };
        let edge = sphere_s_general(&lossless, r, om, w, 1, 1, RegimeGuard::Override).unwrap();
        assert!((edge.norm() - 1.0).abs() < 1e-15, "{}", edge.norm());
        let k = w / C;
        let x = 2.0 / 3.0 * k.powi(3) * sphere_polarizability(&m, r, w).unwrap();
        let t = sphere_t_general(&m, r, 0.0, w, 1, 0, RegimeGuard::Override).unwrap();
        let ix = Complex64::new(0.0, 1.0) * x;
        assert!((t - ix).norm() < 2.0 * x.norm_sqr());
        assert!((t - ix).norm() > 0.1 * x.norm_sqr());
        // deficiency is exactly proportional to the loss: 1 − |S|² = 4 Im x / |1 − ix|²
        let b = SMatrixBlock::from_t(ChannelId::sphere(1, 0, Polarization::E), w, DMatrix::from_element(1, 1, t)).unwrap();
        let want = 4.0 * x.im / (1.0 - ix).norm_sqr();
        assert!((deficiency_trace(&b) - want).abs() < 1e-14 * want);
    }

    #[test]
    fn regime_guard_and_override() {
        let m = lossy();
        let om = 0.5 * C / R;
        let err = sphere_s_11e(&m, R, om, 0.1 * om, RegimeGuard::Enforce).unwrap_err();
        assert!(err.to_string().contains("regime"));
        assert!(sphere_s_11e(&m, R, om, 0.1 * om, RegimeGuard::Override).is_ok());
        let big_w = 0.4 * C / R;
        assert!(matches!(sphere_s_11e(&m, R, 0.0, big_w, RegimeGuard::Enforce), Err(Error::Regime { .. })));
    }

    #[test]
    fn cylinder_block_structure() {
        let m = lossy();
        let (om, w) = (1e14, 6e13);
        let t0 = cylinder_t_block(&m, R, om, w, 0.0, 1, RegimeGuard::Enforce).unwrap();
        assert_eq!(t0[(1, 1)], Complex64::new(0.0, 0.0));
        assert_eq!(t0[(0, 1)], Complex64::new(0.0, 0.0));
        assert_eq!(t0[(1, 0)], Complex64::new(0.0, 0.0));
        assert_ne!(t0[(0, 0)], Complex64::new(0.0, 0.0));

        let kz = 0.6 * w / C;
        let t = cylinder_t_block(&m, R, om, w, kz, 1, RegimeGuard::Enforce).unwrap();
        assert_eq!(t[(0, 1)], t[(1, 0)]);

        // independent evaluation of the three entry formulas
        let eps = m.epsilon(w - om).unwrap();
        let f = (eps - 1.0) / (eps + 1.0);
        let i_pi4 = Complex64::new(0.0, std::f64::consts::PI / 4.0);
        let mm = i_pi4 * f * (w / C).powi(2) * R * R;
        let ee = i_pi4 * f * kz * kz * R * R;
        let em = i_pi4 * f * (w * kz / C) * R * R;
        let (det, tr) = (mm * ee - em * em, mm + ee);
        let scale = mm.norm();
        assert!((t.determinant() - det).norm() <= 1e-14 * scale * scale);
        assert!((t.trace() - tr).norm() <= 1e-14 * scale);

        assert!(matches!(
            cylinder_t_block(&m, R, om, w, kz, 2, RegimeGuard::Enforce),
            Err(Error::UnsupportedChannel(_))
        ));
    }

    #[test]
    fn deficiency_basics() {
        let id = ChannelId::sphere(1, 1, Polarization::E);
        let b = SMatrixBlock::scalar(id.clone(), 1.0, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(deficiency(&b)[(0, 0)], Complex64::new(0.0, 0.0));
        let s = Complex64::new(0.6, 0.7);
        let b = SMatrixBlock::scalar(id, 1.0, s).unwrap();
        let d = deficiency(&b)[(0, 0)];
        assert!((d.re - (1.0 - s.norm_sqr())).abs() < 1e-16);
        assert_eq!(d.im, 0.0);
        assert!((deficiency_trace(&b) - (1.0 - s.norm_sqr())).abs() < 1e-16);
    }

    /// `exp(iH)` for Hermitian `H = a·I + b·σ`: `e^{ia}(cos|b| I + i sin|b| b̂·σ)`.
    fn su2_exponential(a: f64, b: [f64; 3]) -> DMatrix<Complex64> {
        let n = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        let u = [b[0] / n, b[1] / n, b[2] / n];
        let (sn, cs) = n.sin_cos();
        let i = Complex64::new(0.0, 1.0);
        let pauli = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(u[2], 0.0),
                Complex64::new(u[0], -u[1]),
                Complex64::new(u[0], u[1]),
                Complex64::new(-u[2], 0.0),
            ],
        );
        (DMatrix::<Complex64>::identity(2, 2) * Complex64::new(cs, 0.0) + pauli * (i * sn)) * Complex64::from_polar(1.0, a)
    }

    #[test]
    fn unitary_block_has_zero_deficiency() {
        for (a, b) in [(0.3, [0.2, 0.9, -1.1]), (-2.0, [1e-3, 0.0, 0.5]), (1.0, [2.0, -1.0, 0.3])] {
            let u = su2_exponential(a, b);
            let block = SMatrixBlock::new(ChannelId::cylinder(1, Some(0.0)), 1.0, u).unwrap();
            let d = deficiency(&block);
            assert!(d.iter().all(|z| z.norm() < 1e-14), "{d}");
            assert_eq!(d, d.adjoint());
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let id = ChannelId::sphere(1, 1, Polarization::E);
        assert!(SMatrixBlock::new(id, 1.0, DMatrix::identity(2, 2)).is_err());
    }

    fn one_channel_json() -> &'static str {
        r#"{"channels":[{"m":1,"l":1,"polarizations":["E"],"kz":null,
            "omega":[1.0,3.0],"S_re":[[[1.0]],[[2.0]]],"S_im":[[[0.5]],[[-0.5]]]}]}"#
    }

    #[test]
    fn tabulated_midpoint_is_mean() {
        let set = TabulatedChannelSet::from_json_str(one_channel_json()).unwrap();
        assert_eq!(set.channels.len(), 1);
        let s = set.channels[0].s_at(2.0).unwrap();
        assert_eq!(s[(0, 0)], Complex64::new(1.5, 0.0));
        assert!(matches!(set.channels[0].s_at(3.5), Err(Error::Range { .. })));
        assert_eq!(set.max_order(), Some(1));
        assert_eq!(set.channels(1).len(), 1);
        assert!(set.channels(0).is_empty());
    }

    #[test]
    fn tabulated_errors() {
        assert!(matches!(TabulatedChannelSet::from_json_str(r#"{"channels":[]}"#), Err(Error::EmptySet)));
        let non_monotone = r#"{"channels":[
{"m":1,"l":1,"polarizations":["E"],"kz":null,
 "omega":[3.0,1.0],"S_re":[[[1.0]],[[2.0]]],"S_im":[[[0.5]],[[-0.5]]]}]}"#;
        let e = TabulatedChannelSet::from_json_str(non_monotone).unwrap_err().to_string();
        assert!(e.contains("strictly increasing") && e.contains("line 3"), "{e}");
        let wrong_dim = r#"{"channels":[{"m":1,"l":null,"polarizations":["M","E"],"kz":0.0,
            "omega":[1.0],"S_re":[[[1.0]]],"S_im":[[[0.0]]]}]}"#;
        let e = TabulatedChannelSet::from_json_str(wrong_dim).unwrap_err().to_string();
        assert!(e.contains("2×2") && e.contains("line"), "{e}");
        let syntax = "{\"channels\":[\n{\"m\":1,,}]}";
        let e = TabulatedChannelSet::from_json_str(syntax).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn tabulated_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let omega = vec![0.1, 0.2 + 1e-17, std::f64::consts::PI];
        let samples = omega
            .iter()
            .map(|w| {
                DMatrix::from_fn(2, 2, |r, c| Complex64::new((w * (r + 2 * c + 1) as f64).sin() / 3.0, 1.0 / (7.0 + w + r as f64)))
            })
            .collect();
        let ch = TabulatedChannel::new(ChannelId::cylinder(-2, Some(1.0 / 3.0)), omega, samples).unwrap();
        let set = TabulatedChannelSet::new(vec![ch]).unwrap();
        set.write_json(&path).unwrap();
        let back = load_tabulated_channels(&path).unwrap();
        assert_eq!(back, set);
        for (a, b) in back.channels[0].samples().iter().zip(set.channels[0].samples()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }
}
