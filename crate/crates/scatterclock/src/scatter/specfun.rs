//! Riccati-Bessel functions and Legendre polynomials.
//!
//! Only the handful of low partial waves that matter for cold collisions
//! are needed, so plain upward recurrences suffice. The regular upward
//! recurrence is unstable once l exceeds the argument; callers keep
//! x = k r comfortably above l (the radial solver pushes its matching
//! radius out to guarantee it).

/// Riccati-Bessel pair (S_l(x), C_l(x)) = (x j_l(x), -x y_l(x) ... sign
/// convention: C_l here is x n_l(x) with n_0 = -cos(x)/x), returned for
/// all orders 0..=l_max.
///
/// Free-particle radial solutions: u(r) = cos(delta) S_l(kr) - sin(delta) C_l(kr).
pub fn riccati_bessel(l_max: u32, x: f64) -> (Vec<f64>, Vec<f64>) {
    let n = l_max as usize + 1;
    let mut s = vec![0.0; n];
    let mut c = vec![0.0; n];
    let (sin_x, cos_x) = x.sin_cos();
    s[0] = sin_x;
    c[0] = -cos_x;
    if l_max >= 1 {
        s[1] = sin_x / x - cos_x;
        c[1] = -cos_x / x - sin_x;
    }
    for l in 1..(n - 1) {
        let f = (2 * l + 1) as f64 / x;
        s[l + 1] = f * s[l] - s[l - 1];
        c[l + 1] = f * c[l] - c[l - 1];
    }
    (s, c)
}

/// Legendre polynomials P_0(x) ..= P_{l_max}(x) by the Bonnet recurrence.
pub fn legendre(l_max: u32, x: f64) -> Vec<f64> {
    let n = l_max as usize + 1;
    let mut p = vec![0.0; n];
    p[0] = 1.0;
    if l_max >= 1 {
        p[1] = x;
    }
    for l in 1..(n - 1) {
        let lf = l as f64;
        p[l + 1] = ((2.0 * lf + 1.0) * x * p[l] - lf * p[l - 1]) / (lf + 1.0);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riccati_bessel_low_orders() {
        let x = 7.3;
        let (s, c) = riccati_bessel(3, x);
        assert!((s[0] - x.sin()).abs() < 1e-14);
        assert!((c[0] + x.cos()).abs() < 1e-14);
        assert!((s[1] - (x.sin() / x - x.cos())).abs() < 1e-13);
        assert!((c[1] - (-x.cos() / x - x.sin())).abs() < 1e-13);
        // l = 2 closed forms
        let s2 = (3.0 / (x * x) - 1.0) * x.sin() - 3.0 / x * x.cos();
        let c2 = -(3.0 / (x * x) - 1.0) * x.cos() - 3.0 / x * x.sin();
        assert!((s[2] - s2).abs() < 1e-12);
        assert!((c[2] - c2).abs() < 1e-12);
    }

    #[test]
    fn riccati_bessel_cross_product() {
        // S_{l-1} C_l - S_l C_{l-1} = -1 for every l (cross product of
        // two solutions of the same three-term recurrence).
        for &x in &[5.0, 11.0, 23.7] {
            let (s, c) = riccati_bessel(5, x);
            for l in 1..=5 {
                let w = s[l - 1] * c[l] - s[l] * c[l - 1];
                assert!((w + 1.0).abs() < 1e-10, "x={x} l={l} w={w}");
            }
        }
    }

    #[test]
    fn legendre_values() {
        let p = legendre(4, 0.0);
        assert_eq!(p[0], 1.0);
        assert_eq!(p[1], 0.0);
        assert!((p[2] + 0.5).abs() < 1e-15);
        assert_eq!(p[3], 0.0);
        assert!((p[4] - 0.375).abs() < 1e-15);
        let x: f64 = 0.62;
        let p = legendre(3, x);
        assert!((p[2] - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-14);
        assert!((p[3] - 0.5 * (5.0 * x * x * x - 3.0 * x)).abs() < 1e-14);
        // endpoints
        let p1 = legendre(5, 1.0);
        for v in p1 {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}
