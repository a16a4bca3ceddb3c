use std::f64::consts::PI;

use num_complex::Complex64;

use super::bessel::{spherical_bessel_j, spherical_bessel_y};
use crate::constants::C;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::scattering::Polarization;

/// Highest `l` with closed-form vector waves.
pub const MAX_WAVE_ORDER: u32 = 2;

type CVec3 = [Complex64; 3];

/// Partial-wave label `(l, m, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveIndex {
    pub l: u32,
    pub m: i32,
    pub polarization: Polarization,
}

impl WaveIndex {
    pub fn new(l: u32, m: i32, polarization: Polarization) -> Result<Self> {
        if l == 0 {
            return Err(Error::Domain("vector waves need l ≥ 1".into()));
        }
        if m.unsigned_abs() > l {
            return Err(Error::Domain(format!("|m| = {} exceeds l = {l}", m.abs())));
        }
        Ok(Self { l, m, polarization })
    }

    /// All indices with `1 ≤ l ≤ max_l`, ordered by `(l, m, P)`.
    pub fn all_up_to(max_l: u32) -> Vec<WaveIndex> {
        let mut out = Vec::new();
        for l in 1..=max_l {
            for m in -(l as i32)..=(l as i32) {
                for p in [Polarization::M, Polarization::E] {
                    out.push(WaveIndex { l, m, polarization: p });
                }
            }
        }
        out
    }
}

/// Field and its curl at one point, Cartesian components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub position: [f64; 3],
    pub e: CVec3,
    pub curl_e: CVec3,
}

/// Radial dependence of a vector wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialKind {
    /// `h_l⁽¹⁾`
    Outgoing,
    /// `h_l⁽²⁾`
    Incoming,
    /// `j_l`
    Regular,
}

fn radial(kind: RadialKind, l: u32, rho: f64) -> Result<(Complex64, Complex64)> {
    let value = |n: u32| -> Result<Complex64> {
        let j = spherical_bessel_j(n, rho)?;
        Ok(match kind {
            RadialKind::Regular => Complex64::new(j, 0.0),
            RadialKind::Outgoing => Complex64::new(j, spherical_bessel_y(n, rho)?),
            RadialKind::Incoming => Complex64::new(j, -spherical_bessel_y(n, rho)?),
        })
    };
    let f = value(l)?;
    let f_prev = value(l - 1)?;
    let df = f_prev - f * ((l + 1) as f64 / rho);
    Ok((f, df))
}

/// Solid harmonic `S = r^l Y_lm(r̂)` (Condon–Shortley phase) and its gradient.
fn solid_harmonic(l: u32, m: i32, p: [f64; 3]) -> (Complex64, CVec3) {
    let [x, y, z] = p;
    let re = |v: f64| Complex64::new(v, 0.0);
    let s = m.signum() as f64;
    let w = Complex64::new(x, s * y);
    let dw = [re(1.0), Complex64::new(0.0, s), re(0.0)];
    match (l, m.abs()) {
        (1, 0) => {
            let a = (3.0 / (4.0 * PI)).sqrt();
            (re(a * z), [re(0.0), re(0.0), re(a)])
        }
        (1, 1) => {
            let b = -s * (3.0 / (8.0 * PI)).sqrt();
            (b * w, dw.map(|d| b * d))
        }
        (2, 0) => {
            let c = (5.0 / (16.0 * PI)).sqrt();
            (
                re(c * (2.0 * z * z - x * x - y * y)),
                [re(-2.0 * c * x), re(-2.0 * c * y), re(4.0 * c * z)],
            )
        }
        (2, 1) => {
            let d = -s * (15.0 / (8.0 * PI)).sqrt();
            (d * z * w, [d * z * dw[0], d * z * dw[1], d * w])
        }
        (2, 2) => {
            let e = (15.0 / (32.0 * PI)).sqrt();
            (e * w * w, dw.map(|d| 2.0 * e * w * d))
        }
        _ => unreachable!("solid harmonic requested outside l ≤ 2"),
    }
}

fn cross_cr(a: CVec3, b: [f64; 3]) -> CVec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn cross(a: CVec3, b: CVec3) -> CVec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Vector wave of the given radial kind.
///
/// With `ψ = f_l(kr) Y_lm`:
/// `E_M = √k/√(l(l+1)) ∇×(ψ x)` and `E_E = −i/(√k √(l(l+1))) ∇×∇×(ψ x)`.
pub fn vector_wave(kind: RadialKind, idx: WaveIndex, omega: f64, position: [f64; 3]) -> Result<FieldSample> {
    let WaveIndex { l, m, polarization } = WaveIndex::new(idx.l, idx.m, idx.polarization)?;
    if l > MAX_WAVE_ORDER {
        return Err(Error::Domain(format!("vector waves supported for l ≤ {MAX_WAVE_ORDER}, got {l}")));
    }
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
    }
    let r = position.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain("wave evaluated at the origin".into()));
    }

    let k = omega / C;
    let rho = k * r;
    let lf = l as f64;
    let ll1 = lf * (lf + 1.0);
    let (f, df) = radial(kind, l, rho)?;
    let (s, grad_s) = solid_harmonic(l, m, position);

    let rl = r.powi(l as i32);
    let g = f / rl;
    let q = f + df * rho;
    let dq = f * (k * (ll1 / rho - rho));
    let big_q = q / rl;
    let big_dq = dq / rl - q * (lf / (rl * r));

    // V1 = ∇×(ψx) = g ∇S × x ;  V2 = ∇×V1 = (Q'/r) S x + Q ∇S + k² g S x
    let v1 = cross_cr(grad_s, position).map(|c| c * g);
    let radial_coeff = big_dq / r * s + g * s * (k * k);
    let v2: CVec3 = std::array::from_fn(|i| radial_coeff * position[i] + big_q * grad_s[i]);

    let (e, curl_e) = match polarization {
        Polarization::M => {
            let n = k.sqrt() / ll1.sqrt();
            (v1.map(|c| c * n), v2.map(|c| c * n))
        }
        Polarization::E => {
            let n = Complex64::new(0.0, -1.0) / (k.sqrt() * ll1.sqrt());
            (v2.map(|c| c * n), v1.map(|c| c * n * (k * k)))
        }
    };
    Ok(FieldSample { position, e, curl_e })
}

/// Outgoing wave `E^out_{lmP}` and its curl at `position` (meters).
pub fn outgoing_wave(idx: WaveIndex, omega: f64, position: [f64; 3]) -> Result<FieldSample> {
    vector_wave(RadialKind::Outgoing, idx, omega, position)
}

/// `(i/2) ∮ dΣ·[(∇×E_a)×E_b* + E_a×(∇×E_b*)]` over the sphere of radius `r`,
/// Gauss–Legendre in `cos θ` times the trapezoid rule in `φ`.
pub fn flux_bracket(
    a: WaveIndex,
    b: WaveIndex,
    omega: f64,
    r: f64,
    n_theta: usize,
    n_phi: usize,
) -> Result<Complex64> {
    if n_theta < 16 || n_phi < 16 {
        return Err(Error::InvalidParameter(format!(
            "flux quadrature orders must be ≥ 16 (got {n_theta} × {n_phi})"
        )));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("flux sphere radius must be positive, got {r}")));
    }
    let (nodes, weights) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (&ct, &wt) in nodes.iter().zip(&weights) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for j in 0..n_phi {
            let phi = j as f64 * dphi;
            let n = [st * phi.cos(), st * phi.sin(), ct];
            let pos = n.map(|c| c * r);
            let fa = outgoing_wave(a, omega, pos)?;
            let fb = outgoing_wave(b, omega, pos)?;
            let eb_conj = fb.e.map(|c| c.conj());
            let curl_b_conj = fb.curl_e.map(|c| c.conj());
            let t1 = cross(fa.curl_e, eb_conj);
            let t2 = cross(fa.e, curl_b_conj);
            let normal: Complex64 = (0..3).map(|i| (t1[i] + t2[i]) * n[i]).sum();
            acc += normal * (wt * dphi * r * r);
        }
    }
    Ok(acc * Complex64::new(0.0, 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    const OMEGA: f64 = 2.0e15;

    fn idx(l: u32, m: i32, p: Polarization) -> WaveIndex {
        WaveIndex::new(l, m, p).unwrap()
    }

    fn dot_real(a: CVec3, b: [f64; 3]) -> Complex64 {
        (0..3).map(|i| a[i] * b[i]).sum()
    }

    /// Central-difference curl of E, step 1e-6·r.
    fn fd_curl(kind: RadialKind, w: WaveIndex, p: [f64; 3]) -> CVec3 {
        let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        let h = 1e-6 * r;
        let d = |axis: usize| -> CVec3 {
            let mut pp = p;
            let mut pm = p;
            pp[axis] += h;
            pm[axis] -= h;
            let ep = vector_wave(kind, w, OMEGA, pp).unwrap().e;
            let em = vector_wave(kind, w, OMEGA, pm).unwrap().e;
            std::array::from_fn(|i| (ep[i] - em[i]) / (2.0 * h))
        };
        let (dx, dy, dz) = (d(0), d(1), d(2));
        [dy[2] - dz[1], dz[0] - dx[2], dx[1] - dy[0]]
    }

    #[test]
    fn curl_matches_finite_differences() {
        let k = OMEGA / C;
        let points = [[0.7, -0.4, 0.9], [-1.3, 0.2, -0.5], [0.1, 2.2, 0.6]];
        for kind in [RadialKind::Outgoing, RadialKind::Regular] {
            for w in WaveIndex::all_up_to(2) {
                for p in points {
                    let pos = p.map(|c| c / k);
                    let exact = vector_wave(kind, w, OMEGA, pos).unwrap().curl_e;
                    let fd = fd_curl(kind, w, pos);
                    let scale = exact.iter().map(|c| c.norm()).fold(0.0, f64::max);
                    for i in 0..3 {
                        assert!(
                            (exact[i] - fd[i]).norm() < 1e-6 * scale,
                            "{w:?} {kind:?} comp {i}: {} vs {}",
                            exact[i],
                            fd[i]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn waves_solve_helmholtz_via_double_curl() {
        // ∇×∇×E = k² E : curl of the analytic curl matches k² E.
        let k = OMEGA / C;
        let pos = [0.4 / k, 0.3 / k, -0.8 / k];
        for w in WaveIndex::all_up_to(2) {
            let kind = RadialKind::Outgoing;
            let r = 0.4f64.hypot(0.3).hypot(0.8) / k;
            let h = 1e-6 * r;
            let curl_at = |p: [f64; 3]| vector_wave(kind, w, OMEGA, p).unwrap().curl_e;
            let d = |axis: usize| -> CVec3 {
                let mut pp = pos;
                let mut pm = pos;
                pp[axis] += h;
                pm[axis] -= h;
                let a = curl_at(pp);
                let b = curl_at(pm);
                std::array::from_fn(|i| (a[i] - b[i]) / (2.0 * h))
            };
            let (dx, dy, dz) = (d(0), d(1), d(2));
            let cc = [dy[2] - dz[1], dz[0] - dx[2], dx[1] - dy[0]];
            let e = vector_wave(kind, w, OMEGA, pos).unwrap().e;
            let scale = e.iter().map(|c| c.norm()).fold(0.0, f64::max) * k * k;
            for i in 0..3 {
                assert!((cc[i] - e[i] * (k * k)).norm() < 1e-6 * scale, "{w:?}");
            }
        }
    }

    #[test]
    fn m_wave_l1_m0_is_azimuthal() {
        let k = OMEGA / C;
        let w = idx(1, 0, Polarization::M);
        for p in [[0.3, 0.5, 0.7], [-1.0, 0.2, -2.0], [0.0, 1.0, 0.0]] {
            let pos = p.map(|c| c / k);
            let e = outgoing_wave(w, OMEGA, pos).unwrap().e;
            let r = pos.iter().map(|c| c * c).sum::<f64>().sqrt();
            let scale = e.iter().map(|c| c.norm()).fold(0.0, f64::max);
            assert!(e[2].norm() <= 1e-15 * scale);
            assert!(dot_real(e, pos.map(|c| c / r)).norm() <= 1e-15 * scale);
        }
    }

    #[test]
    fn rotation_about_z_multiplies_by_phase() {
        let k = OMEGA / C;
        let phi0: f64 = 0.731;
        let (s, c) = phi0.sin_cos();
        let rot = |v: [f64; 3]| [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]];
        let p = [0.6 / k, -0.2 / k, 0.45 / k];
        for w in WaveIndex::all_up_to(2) {
            let e0 = outgoing_wave(w, OMEGA, p).unwrap().e;
            let e1 = outgoing_wave(w, OMEGA, rot(p)).unwrap().e;
            // components of e1 in the rotated basis
            let back = [c * e1[0] + s * e1[1], -s * e1[0] + c * e1[1], e1[2]];
            let phase = Complex64::from_polar(1.0, w.m as f64 * phi0);
            let scale = e0.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for i in 0..3 {
                assert!((back[i] - e0[i] * phase).norm() < 1e-13 * scale, "{w:?} component {i}");
            }
        }
    }

    #[test]
    fn flux_bracket_diagonal_is_one() {
        let k = OMEGA / C;
        let a = idx(1, 1, Polarization::E);
        let v = flux_bracket(a, a, OMEGA, 2.0 / k, 32, 32).unwrap();
        assert!((v - 1.0).norm() < 1e-8, "{v}");
        let off = flux_bracket(a, idx(1, 0, Polarization::M), OMEGA, 2.0 / k, 32, 32).unwrap();
        assert!(off.norm() < 1e-8, "{off}");
    }

    #[test]
    fn flux_bracket_rejects_coarse_rules() {
        let a = idx(1, 1, Polarization::E);
        assert!(matches!(flux_bracket(a, a, OMEGA, 1.0, 8, 32), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn origin_and_order_limits() {
        let w = idx(1, 1, Polarization::E);
        assert!(matches!(outgoing_wave(w, OMEGA, [0.0; 3]), Err(Error::Domain(_))));
        assert!(WaveIndex::new(3, 0, Polarization::M).is_ok());
        assert!(outgoing_wave(WaveIndex { l: 3, m: 0, polarization: Polarization::M }, OMEGA, [1.0, 0.0, 0.0]).is_err());
        assert!(WaveIndex::new(1, 2, Polarization::E).is_err());
        assert!(WaveIndex::new(0, 0, Polarization::E).is_err());
    }
}
