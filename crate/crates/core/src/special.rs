//! Small special-function helpers shared by the numerical modules.

pub use statrs::function::gamma::{gamma, ln_gamma};

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// `1 - sin(x)/x`, accurate for small `x`.
pub fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        1.0 - x.sin() / x
    }
}

/// `ln cos(x)` for `|x| < π/2`, accurate near zero.
pub fn ln_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    (-2.0 * s * s).ln_1p()
}

/// `ln |cos(x)|` together with the sign of `cos(x)`.
pub fn ln_abs_cos(x: f64) -> (f64, f64) {
    let c = x.cos();
    if c.abs() > 0.5 {
        // Reduce to the neighbourhood of a multiple of π where the series form is accurate.
        let k = (x / std::f64::consts::PI).round();
        let r = x - k * std::f64::consts::PI;
        (ln_cos(r), c.signum())
    } else {
        (c.abs().ln(), if c == 0.0 { 0.0 } else { c.signum() })
    }
}

/// Table of `ln k!` for `k = 0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// `ln C(n, k)` from a factorial table.
pub fn ln_binomial(table: &[f64], n: usize, k: usize) -> f64 {
    table[n] - table[k] - table[n - k]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_branches_meet() {
        for &x in &[9.9e-5, 1.01e-4, 0.3] {
            assert!((sinc(x) - x.sin() / x).abs() < 1e-15);
        }
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn one_minus_sinc_small_argument() {
        let x = 1e-3_f64;
        let series = x * x / 6.0 - x.powi(4) / 120.0;
        assert!((one_minus_sinc(x) - series).abs() < 1e-20);
        assert!((one_minus_sinc(0.5) - (1.0 - 0.5f64.sin() / 0.5)).abs() < 1e-16);
    }

    #[test]
    fn ln_abs_cos_tracks_sign_and_periodicity() {
        for &x in &[0.1, 1.2, 2.0, 3.0, -2.5, 7.0] {
            let (l, s) = ln_abs_cos(x);
            assert!((l.exp() * s - x.cos()).abs() < 1e-14, "x = {x}");
            let (lp, sp) = ln_abs_cos(x + std::f64::consts::PI);
            assert!((l - lp).abs() < 1e-12);
            assert_eq!(s, -sp);
        }
    }

    #[test]
    fn binomials_from_table() {
        let t = ln_factorials(10);
        assert!((ln_binomial(&t, 10, 3).exp() - 120.0).abs() < 1e-10);
        assert!((ln_gamma(5.0).exp() - 24.0).abs() < 1e-10);
    }
}
