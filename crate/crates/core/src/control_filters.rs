//! Control modulations `y₀(t)`, `y(t)` and the filter functions
//!
//! ```text
//! F⁺(ω,t) = |∫₀ᵗ ds y(s) e^{-iωs}|²
//! F⁻(ω,t) = ∫₀ᵗ ds y(s) ∫₀ˢ du y(u) e^{-iω(u-s)}
//! ```
//!
//! Built-in modulations are finite sums of complex exponentials, for which
//! both filters have closed forms. Sampled modulations fall back to quadrature.

use num_complex::Complex64;

use crate::error::{require_finite, Error, Result};
use crate::quadrature::{integrate_pair, QuadSettings};
use crate::special::{one_minus_sinc, sinc};

#[derive(Debug, Clone, PartialEq)]
pub enum Modulation {
    Constant,
    /// `cos(μt)`
    Cosine { mu: f64 },
    /// `1 - cos(Dt)`
    OneMinusCos { d: f64 },
    /// Linear interpolation between samples, held constant after the last one.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl Modulation {
    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::invalid("modulation", "need at least two (t, y) samples"));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid("modulation", "samples must start at t = 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("modulation", "times must increase and values be finite"));
        }
        Ok(Modulation::Sampled { times, values })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Modulation::Constant => 1.0,
            Modulation::Cosine { mu } => (mu * t).cos(),
            Modulation::OneMinusCos { d } => 1.0 - (d * t).cos(),
            Modulation::Sampled { times, values } => {
                let last = times.len() - 1;
                if t >= times[last] {
                    return values[last];
                }
                let i = times.partition_point(|&v| v <= t).clamp(1, last);
                let u = (t - times[i - 1]) / (times[i] - times[i - 1]);
                values[i - 1] + u * (values[i] - values[i - 1])
            }
        }
    }

    /// `∫₀ᵗ y(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        match self {
            Modulation::Constant => t,
            Modulation::Cosine { mu } => t * sinc(mu * t),
            Modulation::OneMinusCos { d } => t * one_minus_sinc(d * t),
            Modulation::Sampled { times, .. } => {
                let mut acc = 0.0;
                let mut a = 0.0;
                for &knot in times.iter().skip(1).take_while(|&&k| k < t) {
                    acc += 0.5 * (knot - a) * (self.eval(a) + self.eval(knot));
                    a = knot;
                }
                acc + 0.5 * (t - a) * (self.eval(a) + self.eval(t))
            }
        }
    }

    /// `y(s) = Σ c_k e^{iν_k s}` when the modulation is a finite exponential sum.
    fn exponentials(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            Modulation::Constant => Some(vec![(1.0, 0.0)]),
            Modulation::Cosine { mu } => Some(vec![(0.5, mu), (0.5, -mu)]),
            Modulation::OneMinusCos { d } => Some(vec![(1.0, 0.0), (-0.5, d), (-0.5, -d)]),
            Modulation::Sampled { .. } => None,
        }
    }

    fn knots(&self, t: f64) -> Vec<f64> {
        let mut k = vec![0.0];
        if let Modulation::Sampled { times, .. } = self {
            k.extend(times.iter().copied().filter(|&x| x > 0.0 && x < t));
        }
        k.push(t);
        k
    }
}

/// How oscillating terms are treated in the filter functions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FilterMode {
    #[default]
    Exact,
    /// Secular approximation: time-dependent exponentials whose frequency
    /// exceeds `cutoff` in magnitude are dropped from the filter integrals.
    RotatingWave { cutoff: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlProtocol {
    pub y0: Modulation,
    pub y: Modulation,
    pub mode: FilterMode,
    pub label: String,
}

impl ControlProtocol {
    pub fn free_evolution() -> Self {
        ControlProtocol {
            y0: Modulation::Constant,
            y: Modulation::Constant,
            mode: FilterMode::Exact,
            label: "free_evolution".into(),
        }
    }

    /// Spin-dependent force detuned by `D` from a mode at `μ + D`:
    /// `y₀ = 1 - cos Dt`, `y = cos μt`.
    pub fn ion_drive(mu: f64, d: f64) -> Result<Self> {
        require_finite("mu", mu)?;
        require_finite("D", d)?;
        if d == 0.0 {
            return Err(Error::invalid("D", "detuning must be nonzero"));
        }
        Ok(ControlProtocol {
            y0: Modulation::OneMinusCos { d },
            y: Modulation::Cosine { mu },
            mode: FilterMode::Exact,
            label: format!("ion_drive(mu={mu}, D={d})"),
        })
    }

    pub fn with_mode(mut self, mode: FilterMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn y0_integral(&self, t: f64) -> f64 {
        self.y0.integral(t)
    }

    /// Natural frequencies of `y`, used to place quadrature breakpoints.
    pub(crate) fn y_frequencies(&self) -> Vec<f64> {
        self.y
            .exponentials()
            .map(|e| e.into_iter().map(|(_, nu)| nu.abs()).collect())
            .unwrap_or_default()
    }

    pub fn f_plus(&self, omega: f64, t: f64) -> Result<f64> {
        match self.y.exponentials() {
            Some(terms) => Ok(f_plus_exponential(&terms, omega, t, self.mode)),
            None => Ok(sampled_amplitude(&self.y, omega, t).norm_sqr()),
        }
    }

    pub fn f_minus(&self, omega: f64, t: f64) -> Result<Complex64> {
        match self.y.exponentials() {
            Some(terms) => Ok(f_minus_exponential(&terms, omega, t, self.mode)),
            None => f_minus_sampled(&self.y, omega, t),
        }
    }

    /// `(F⁺(ω,t), Im F⁻(ω,t))`, the two filter values entering `χ` and `Ψ`.
    pub(crate) fn filters(&self, omega: f64, t: f64) -> Result<(f64, f64)> {
        Ok((self.f_plus(omega, t)?, self.f_minus(omega, t)?.im))
    }
}

/// `∫₀ᵗ e^{iκs} ds`, written to stay accurate as `κt → 0`.
pub fn phase_integral(kappa: f64, t: f64) -> Complex64 {
    let x = kappa * t;
    let h = sinc(0.5 * x);
    Complex64::new(t * sinc(x), t * 0.5 * x * h * h)
}

fn is_fast(kappa: f64, mode: FilterMode) -> bool {
    matches!(mode, FilterMode::RotatingWave { cutoff } if kappa.abs() > cutoff)
}

/// Secular part of `∫₀ᵗ e^{iκs} ds`: the oscillating piece is dropped when `κ` is fast.
fn phase_integral_secular(kappa: f64, t: f64, mode: FilterMode) -> Complex64 {
    if is_fast(kappa, mode) {
        Complex64::new(0.0, 1.0 / kappa)
    } else {
        phase_integral(kappa, t)
    }
}

fn f_plus_exponential(terms: &[(f64, f64)], omega: f64, t: f64, mode: FilterMode) -> f64 {
    terms
        .iter()
        .filter(|(_, nu)| !is_fast(nu - omega, mode))
        .map(|&(c, nu)| c * phase_integral(nu - omega, t))
        .sum::<Complex64>()
        .norm_sqr()
}

fn f_minus_exponential(terms: &[(f64, f64)], omega: f64, t: f64, mode: FilterMode) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(ck, nuk) in terms {
        for &(cl, nul) in terms {
            acc += ck * cl * ordered_phase_integral(nuk + omega, nul - omega, t, mode);
        }
    }
    acc
}

/// `∫₀ᵗ ds e^{ips} ∫₀ˢ du e^{iqu}`.
pub fn ordered_phase_integral(p: f64, q: f64, t: f64, mode: FilterMode) -> Complex64 {
    let slow = !is_fast(p, mode) && !is_fast(q, mode) && !is_fast(p + q, mode);
    if slow {
        return t * t * unit_ordered_integral(p * t, q * t);
    }
    if !is_fast(q, mode) && is_fast(p, mode) && is_fast(p + q, mode) {
        return Complex64::new(-1.0 / (p * (p + q)), 0.0);
    }
    let i = Complex64::i();
    (phase_integral_secular(p + q, t, mode) - phase_integral_secular(p, t, mode)) / (i * q)
}

/// `J(a,b) = ∫₀¹ dσ e^{iaσ} ∫₀^σ dv e^{ibv}`.
fn unit_ordered_integral(a: f64, b: f64) -> Complex64 {
    let i = Complex64::i();
    let e = |x: f64| phase_integral(x, 1.0);
    if b.abs() >= 0.1 {
        (e(a + b) - e(a)) / (i * b)
    } else if a.abs() >= 0.1 {
        (Complex64::from_polar(1.0, a) * e(b) - e(a + b)) / (i * a)
    } else {
        // Σ (ia)^m (ib)^n / (m! n! (n+1)(m+n+2))
        let ia = i * a;
        let ib = i * b;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut am = Complex64::new(1.0, 0.0);
        for m in 0..16 {
            let mut bn = Complex64::new(1.0, 0.0);
            for n in 0..(16 - m) {
                sum += am * bn / ((n as f64 + 1.0) * (m as f64 + n as f64 + 2.0));
                bn *= ib / (n as f64 + 1.0);
            }
            am *= ia / (m as f64 + 1.0);
        }
        sum
    }
}

/// `∫₀ᵗ y(u) e^{-iωu} du` for a piecewise-linear modulation, exact per segment.
fn sampled_amplitude(y: &Modulation, omega: f64, t: f64) -> Complex64 {
    let knots = y.knots(t);
    knots
        .windows(2)
        .map(|w| linear_phase_segment(w[0], w[1], y.eval(w[0]), y.eval(w[1]), -omega))
        .sum()
}

/// `∫_a^b (linear from fa to fb) e^{iκu} du`.
fn linear_phase_segment(a: f64, b: f64, fa: f64, fb: f64, kappa: f64) -> Complex64 {
    let h = b - a;
    // Split so that every piece has |κh| ≤ 0.5, where the moment series converges fast.
    let pieces = ((kappa * h).abs() / 0.5).ceil().max(1.0) as usize;
    let step = h / pieces as f64;
    (0..pieces)
        .map(|j| {
            let a0 = a + j as f64 * step;
            let f0 = fa + (fb - fa) * (j as f64 / pieces as f64);
            let f1 = fa + (fb - fa) * ((j + 1) as f64 / pieces as f64);
            let mean = phase_integral(kappa, step);
            let first = first_moment(kappa * step) * step;
            Complex64::from_polar(1.0, kappa * a0) * (f0 * mean + (f1 - f0) * first)
        })
        .sum()
}

/// `∫₀¹ u e^{ixu} du`, used with `|x| ≤ 0.5`.
fn first_moment(x: f64) -> Complex64 {
    let i = Complex64::i();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..30 {
        sum += term / (n as f64 + 2.0);
        term *= i * x / (n as f64 + 1.0);
    }
    sum
}

fn f_minus_sampled(y: &Modulation, omega: f64, t: f64) -> Result<Complex64> {
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut knots = y.knots(t);
    let period = if omega != 0.0 { std::f64::consts::PI / omega.abs() } else { t };
    let extra = (t / period).ceil().min(4096.0) as usize;
    knots.extend((1..extra).map(|k| k as f64 * t / extra as f64));
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let r = integrate_pair(
        |s| {
            let inner = sampled_amplitude(y, omega, s);
            let v = y.eval(s) * Complex64::from_polar(1.0, omega * s) * inner;
            [v.re, v.im]
        },
        &knots,
        QuadSettings::with_rel_tol(1e-11),
        "f_minus",
    )?;
    Ok(Complex64::new(r.value[0], r.value[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn free() -> ControlProtocol {
        ControlProtocol::free_evolution()
    }

    #[test]
    fn free_evolution_closed_forms() {
        let p = free();
        for &(w, t) in &[(0.7, 2.0), (3.0, 0.1), (1e-6, 5.0), (40.0, 1.3)] {
            let fp = p.f_plus(w, t).unwrap();
            let expected = 4.0 * (0.5 * w * t).sin().powi(2) / (w * w);
            assert!((fp - expected).abs() < 1e-12 * expected.max(1e-300) + 1e-15, "w={w} t={t}");
            let fm = p.f_minus(w, t).unwrap();
            let im = (w * t - (w * t).sin()) / (w * w);
            let re = (1.0 - (w * t).cos()) / (w * w);
            if (w * t).abs() > 1e-2 {
                assert!((fm.im - im).abs() < 1e-12 * im.abs(), "w={w} t={t}");
                assert!((fm.re - re).abs() < 1e-12 * re.abs(), "w={w} t={t}");
            }
        }
        assert_eq!(p.f_plus(0.0, 3.0).unwrap(), 9.0);
        assert!(p.f_plus(2.0 * PI / 1.7, 1.7).unwrap() < 1e-28);
    }

    #[test]
    fn free_evolution_short_time_imaginary_part() {
        let p = free();
        let (w, t) = (2.0, 1e-3);
        let im = p.f_minus(w, t).unwrap().im;
        assert!((im / (w * t.powi(3) / 6.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_frequency_and_zero_time() {
        let p = ControlProtocol::ion_drive(3.0, 0.4).unwrap();
        let t = 2.2;
        let fm = p.f_minus(0.0, t).unwrap();
        let half_square = 0.5 * p.y.integral(t).powi(2);
        assert!((fm.re - half_square).abs() < 1e-13);
        assert!(fm.im.abs() < 1e-15);
        assert_eq!(p.f_minus(1.0, 0.0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cosine_resonance_stationary_term() {
        let mu = 200.0;
        let p = ControlProtocol {
            y0: Modulation::Constant,
            y: Modulation::Cosine { mu },
            mode: FilterMode::Exact,
            label: String::new(),
        };
        let t = 10.0;
        let fp = p.f_plus(mu, t).unwrap();
        assert!((fp - t * t / 4.0).abs() < 2.0 * t / mu);
    }

    #[test]
    fn y0_integrals() {
        let d = 0.8;
        let t = 3.1;
        assert!((Modulation::OneMinusCos { d }.integral(t) - (t - (d * t).sin() / d)).abs() < 1e-14);
        assert!((Modulation::Cosine { mu: d }.integral(t) - (d * t).sin() / d).abs() < 1e-14);
        let tiny = Modulation::OneMinusCos { d: 1e-3 }.integral(1.0);
        assert!((tiny / (1e-6 / 6.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unit_ordered_integral_branches_agree() {
        // Compare each branch against the series near the switching radius.
        for &(a, b) in &[(0.099, 0.0999), (0.101, 0.05), (0.05, 0.101), (-0.099, 0.099)] {
            let i = Complex64::i();
            let e = |x: f64| phase_integral(x, 1.0);
            let series = {
                let ia = i * a;
                let ib = i * b;
                let mut sum = Complex64::new(0.0, 0.0);
                let mut am = Complex64::new(1.0, 0.0);
                for m in 0..20 {
                    let mut bn = Complex64::new(1.0, 0.0);
                    for n in 0..(20 - m) {
                        sum += am * bn / ((n as f64 + 1.0) * (m as f64 + n as f64 + 2.0));
                        bn *= ib / (n as f64 + 1.0);
                    }
                    am *= ia / (m as f64 + 1.0);
                }
                sum
            };
            let direct = (Complex64::from_polar(1.0, a) * e(b) - e(a + b)) / (i * a);
            assert!((unit_ordered_integral(a, b) - series).norm() < 1e-14);
            assert!((direct - series).norm() < 1e-12);
        }
    }

    #[test]
    fn sampled_constant_matches_closed_form() {
        let y = Modulation::sampled(vec![0.0, 0.4, 1.0, 2.5], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let p = ControlProtocol {
            y0: Modulation::Constant,
            y,
            mode: FilterMode::Exact,
            label: String::new(),
        };
        for &(w, t) in &[(0.3, 2.0), (5.0, 3.0), (0.0, 1.0)] {
            let exact = free().f_minus(w, t).unwrap();
            let fm = p.f_minus(w, t).unwrap();
            assert!((fm - exact).norm() < 1e-9 * exact.norm(), "w={w}");
            let fp = p.f_plus(w, t).unwrap();
            assert!((fp - free().f_plus(w, t).unwrap()).abs() < 1e-12 * fp.max(1.0));
        }
    }

    #[test]
    fn rotating_wave_ion_filters() {
        let (wz, d) = (100.0, 1.0);
        let mu = wz - d;
        let p = ControlProtocol::ion_drive(mu, d)
            .unwrap()
            .with_mode(FilterMode::RotatingWave { cutoff: 0.5 * wz });
        let t = 4.7;
        let fp = p.f_plus(wz, t).unwrap();
        assert!((fp - (0.5 * d * t).sin().powi(2) / (d * d)).abs() < 1e-13);
        let im = p.f_minus(wz, t).unwrap().im;
        let expected = -wz * t * one_minus_sinc(d * t) / (2.0 * (mu * mu - wz * wz));
        assert!((im - expected).abs() < 1e-12 * expected.abs());
    }
}
