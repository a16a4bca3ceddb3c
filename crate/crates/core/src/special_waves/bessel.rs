use num_complex::Complex64;

use crate::error::{Error, Result};

/// Highest order accepted by the Bessel routines.
pub const MAX_BESSEL_ORDER: u32 = 8;

fn check_order(l: u32) -> Result<()> {
    if l > MAX_BESSEL_ORDER {
        return Err(Error::Domain(format!(
            "spherical Bessel order {l} exceeds supported maximum {MAX_BESSEL_ORDER}"
        )));
    }
    Ok(())
}

/// Ascending series `x^l Σ (−x²/2)^k / (k! (2l+2k+1)!!)`.
fn j_series(l: u32, x: f64) -> f64 {
    let lf = l as f64;
    let mut term = 1.0;
    for k in 0..l {
        term *= x / (2.0 * k as f64 + 3.0);
    }
    // term = x^l / (2l+1)!!
    let mut sum = term;
    let half_x2 = -0.5 * x * x;
    for k in 0..80 {
        let kf = k as f64;
        term *= half_x2 / ((kf + 1.0) * (2.0 * lf + 2.0 * kf + 3.0));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn upward(l: u32, x: f64, f0: f64, f1: f64) -> f64 {
    if l == 0 {
        return f0;
    }
    let (mut prev, mut cur) = (f0, f1);
    for n in 1..l {
        let next = (2.0 * n as f64 + 1.0) / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Spherical Bessel function of the first kind, `j_l(x)`, for `l ≤ 8`.
pub fn spherical_bessel_j(l: u32, x: f64) -> Result<f64> {
    check_order(l)?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("j_{l}: argument must be finite, got {x}")));
    }
    if x < 0.0 {
        let v = spherical_bessel_j(l, -x)?;
        return Ok(if l.is_multiple_of(2) { v } else { -v });
    }
    if x == 0.0 {
        return Ok(if l == 0 { 1.0 } else { 0.0 });
    }
    if l == 0 {
        return Ok(x.sin() / x);
    }
    if x < l as f64 {
        return Ok(j_series(l, x));
    }
    let (s, c) = x.sin_cos();
    Ok(upward(l, x, s / x, s / (x * x) - c / x))
}

/// Spherical Bessel function of the second kind, `y_l(x)`, `x > 0`.
pub fn spherical_bessel_y(l: u32, x: f64) -> Result<f64> {
    check_order(l)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("y_{l}: argument must be positive and finite, got {x}")));
    }
    let (s, c) = x.sin_cos();
    Ok(upward(l, x, -c / x, -c / (x * x) - s / x))
}

/// Spherical Hankel function of the first kind, `h_l⁽¹⁾(x) = j_l(x) + i y_l(x)`.
pub fn spherical_hankel1(l: u32, x: f64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("h_{l}: argument must be positive, got {x}")));
    }
    Ok(Complex64::new(spherical_bessel_j(l, x)?, spherical_bessel_y(l, x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    /// Forty-term ascending series with factorials built from scratch.
    fn series_oracle(l: u32, x: f64) -> f64 {
        let mut double_fact = 1.0;
        for k in (1..=(2 * l + 1)).step_by(2) {
            double_fact *= k as f64;
        }
        let mut sum = 0.0;
        for k in 0..40u32 {
            let mut kfact = 1.0;
            for i in 1..=k {
                kfact *= i as f64;
            }
            let mut denom = 1.0;
            for i in 0..k {
                denom *= (2 * l + 2 * i + 3) as f64;
            }
            sum += (-0.5 * x * x).powi(k as i32) / (kfact * denom);
        }
        x.powi(l as i32) / double_fact * sum
    }

    #[test]
    fn j0_closed_form() {
        for x in [0.01, 0.5, 1.0, 3.7, 12.0, 40.0] {
            assert!(rel(spherical_bessel_j(0, x).unwrap(), x.sin() / x) < 1e-15);
        }
    }

    #[test]
    fn j_limits_at_origin() {
        assert_eq!(spherical_bessel_j(0, 0.0).unwrap(), 1.0);
        for l in 1..=8 {
            assert_eq!(spherical_bessel_j(l, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn j2_matches_series_oracle() {
        let v = spherical_bessel_j(2, 1.5).unwrap();
        assert!(rel(v, series_oracle(2, 1.5)) < 1e-12, "{v}");
    }

    #[test]
    fn j_matches_series_oracle_across_orders() {
        for l in 0..=8 {
            for x in [0.05, 0.3, 1.0, 2.5, 4.0, 6.0] {
                let got = spherical_bessel_j(l, x).unwrap();
                assert!(rel(got, series_oracle(l, x)) < 1e-11, "l={l} x={x} got={got}");
            }
        }
    }

    #[test]
    fn parity_for_negative_arguments() {
        for l in 0..=8 {
            let a = spherical_bessel_j(l, 2.3).unwrap();
            let b = spherical_bessel_j(l, -2.3).unwrap();
            assert_eq!(b, if l % 2 == 0 { a } else { -a });
        }
    }

    #[test]
    fn hankel_low_order_closed_forms() {
        let i = Complex64::i();
        for x in [0.2, 1.0, 2.0, 7.5] {
            let e = (i * x).exp();
            let h0 = -i * e / x;
            let h1 = -(1.0 + i / x) * e / x;
            assert!((spherical_hankel1(0, x).unwrap() - h0).norm() < 1e-15 * h0.norm());
            assert!((spherical_hankel1(1, x).unwrap() - h1).norm() < 1e-14 * h1.norm());
        }
    }

    #[test]
    fn hankel_order_two_matches_recurrence_oracle() {
        let i = Complex64::i();
        let x = 2.0;
        let e = (i * x).exp();
        let h0 = -i * e / x;
        let h1 = -(1.0 + i / x) * e / x;
        let h2 = 3.0 / x * h1 - h0;
        let got = spherical_hankel1(2, x).unwrap();
        assert!((got - h2).norm() / h2.norm() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(spherical_bessel_j(9, 1.0), Err(Error::Domain(_))));
        assert!(matches!(spherical_hankel1(1, 0.0), Err(Error::Domain(_))));
        assert!(matches!(spherical_hankel1(1, -1.0), Err(Error::Domain(_))));
        assert!(matches!(spherical_bessel_j(1, f64::NAN), Err(Error::Domain(_))));
    }

    /// Derivative of `f_l` from `f_l' = f_{l-1} − (l+1) f_l / x` (with `f_0' = −f_1`).
    fn derivative(f: impl Fn(u32, f64) -> Result<f64>, l: u32, x: f64) -> f64 {
        if l == 0 {
            -f(1, x).unwrap()
        } else {
            f(l - 1, x).unwrap() - (l + 1) as f64 / x * f(l, x).unwrap()
        }
    }

    #[test]
    fn wronskian_holds_through_order_eight() {
        for l in 0..=MAX_BESSEL_ORDER {
            for i in 0..=400 {
                let x = 0.1 * (500.0f64).powf(i as f64 / 400.0);
                let j = spherical_bessel_j(l, x).unwrap();
                let y = spherical_bessel_y(l, x).unwrap();
                let w = j * derivative(spherical_bessel_y, l, x) - derivative(spherical_bessel_j, l, x) * y;
                assert!(rel(w, 1.0 / (x * x)) < 1e-10, "l = {l}, x = {x}: {w} vs {}", 1.0 / (x * x));
            }
        }
    }
}
