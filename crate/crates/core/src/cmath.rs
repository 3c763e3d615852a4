//! Complex special functions used by the transforms.

use num_complex::Complex64;
use std::f64::consts::PI;

/// `(1 − e^{−x})/x`, accurate near `x = 0`.
pub fn phi0(x: Complex64) -> Complex64 {
    if x.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 1..30 {
            term *= -x / n as f64;
            sum += term / (n + 1) as f64;
        }
        sum
    } else {
        (1.0 - (-x).exp()) / x
    }
}

/// `(1 − e^{−x}(1 + x))/x²`, accurate near `x = 0`.
pub fn phi1(x: Complex64) -> Complex64 {
    if x.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term * 0.5;
        for n in 1..30 {
            term *= -x / n as f64;
            sum += term / (n + 2) as f64;
        }
        sum
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}

/// Lower incomplete gamma function `γ(a, x)` for real `a > 0` and `Re x ≥ 0`.
pub fn lower_gamma(a: f64, x: Complex64) -> Complex64 {
    if x.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if x.norm() < 1.5 {
        let mut term = Complex64::new(1.0 / a, 0.0);
        let mut sum = term;
        for n in 1..200 {
            term *= x / (a + n as f64);
            sum += term;
            if term.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        sum * (-x).exp() * x.powf(a)
    } else {
        Complex64::new(gamma_fn(a), 0.0) - upper_gamma_cf(a, x)
    }
}

/// Upper incomplete gamma `Γ(a, x)` by the modified Lentz continued fraction.
fn upper_gamma_cf(a: f64, x: Complex64) -> Complex64 {
    let tiny = Complex64::new(1e-150, 0.0);
    let mut b = x + 1.0 - a;
    let mut c = Complex64::new(1.0, 0.0) / tiny;
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..2000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.norm() < 1e-150 {
            d = tiny;
        }
        c = b + an / c;
        if c.norm() < 1e-150 {
            c = tiny;
        }
        d = Complex64::new(1.0, 0.0) / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln()).exp() * h
}

/// Gamma function for the half-integer and small arguments used here.
fn gamma_fn(a: f64) -> f64 {
    if (a - 1.5).abs() < 1e-15 {
        return 0.5 * PI.sqrt();
    }
    libm::tgamma(a)
}

/// `∫_0^T e^{−st} √t dt = s^{−3/2} γ(3/2, sT)` for `Re s > 0`.
pub fn sqrt_moment(s: Complex64, horizon: f64) -> Complex64 {
    if (s * horizon).norm() < 1e-8 {
        return Complex64::new(2.0 / 3.0 * horizon.powf(1.5), 0.0);
    }
    lower_gamma(1.5, s * horizon) / s.powf(1.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson_sqrt_moment(s: Complex64, horizon: f64, n: usize) -> Complex64 {
        // t = v², composite Simpson in v
        let vmax = horizon.sqrt();
        let h = vmax / n as f64;
        let f = |v: f64| (-s * v * v).exp() * 2.0 * v * v;
        let mut sum = f(0.0) + f(vmax);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += f(i as f64 * h) * w;
        }
        sum * h / 3.0
    }

    #[test]
    fn phi_series_matches_closed_form() {
        for x in [Complex64::new(0.49, 0.0), Complex64::new(0.3, 0.35), Complex64::new(-0.2, 0.4)] {
            let p0 = (1.0 - (-x).exp()) / x;
            let p1 = (1.0 - (-x).exp() * (1.0 + x)) / (x * x);
            assert!((phi0(x) - p0).norm() < 1e-14);
            assert!((phi1(x) - p1).norm() < 1e-13);
        }
    }

    #[test]
    fn sqrt_moment_against_quadrature() {
        for s in [
            Complex64::new(0.3, 0.0),
            Complex64::new(2.0, 5.0),
            Complex64::new(20.0, 180.0),
            Complex64::new(1.0, -0.7),
            Complex64::new(0.05, 1.2),
        ] {
            let exact = sqrt_moment(s, 1.2);
            let num = simpson_sqrt_moment(s, 1.2, 200_000);
            assert!((exact - num).norm() < 1e-10 * num.norm().max(1e-3), "{s}: {exact} vs {num}");
        }
    }

    #[test]
    fn large_argument_limit() {
        let s = Complex64::new(500.0, 3000.0);
        let want = Complex64::new(0.5 * PI.sqrt(), 0.0) / s.powf(1.5);
        assert!((sqrt_moment(s, 1.2) - want).norm() < 1e-12 * want.norm());
    }
}
