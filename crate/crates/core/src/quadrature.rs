//! Globally adaptive Gauss–Kronrod (7/15) quadrature for pairs of real
//! integrands, and Gauss–Legendre rules for fixed-order composite integration.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// The second component's tolerance is at least `rel_tol · cross_weight · |first|`.
    pub cross_weight: f64,
    /// Maximum number of bisections on top of the initial panels.
    pub max_bisections: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            rel_tol: 1e-9,
            abs_tol: 1e-300,
            cross_weight: 0.0,
            max_bisections: 20_000,
        }
    }
}

impl QuadSettings {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadSettings {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: [f64; 2],
    pub error: [f64; 2],
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: [f64; 2],
    error: [f64; 2],
    roundoff: [f64; 2],
    splittable: bool,
}

fn gk15<F: Fn(f64) -> [f64; 2]>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = [fc[0] * WGK[7], fc[1] * WGK[7]];
    let mut gauss = [fc[0] * WG[3], fc[1] * WG[3]];
    let mut resabs = [fc[0].abs() * WGK[7], fc[1].abs() * WGK[7]];
    let mut fv = [[0.0; 2]; 14];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        for c in 0..2 {
            kron[c] += WGK[j] * (f1[c] + f2[c]);
            resabs[c] += WGK[j] * (f1[c].abs() + f2[c].abs());
            if j % 2 == 1 {
                gauss[c] += WG[j / 2] * (f1[c] + f2[c]);
            }
        }
    }
    let mut value = [0.0; 2];
    let mut error = [0.0; 2];
    let mut roundoff = [0.0; 2];
    for c in 0..2 {
        let mean = 0.5 * kron[c];
        let mut resasc = WGK[7] * (fc[c] - mean).abs();
        for j in 0..7 {
            resasc += WGK[j] * ((fv[2 * j][c] - mean).abs() + (fv[2 * j + 1][c] - mean).abs());
        }
        let resasc = resasc * half.abs();
        let resabs = resabs[c] * half.abs();
        let mut err = ((kron[c] - gauss[c]) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        roundoff[c] = 50.0 * f64::EPSILON * resabs;
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(roundoff[c]);
        }
        value[c] = kron[c] * half;
        error[c] = err;
    }
    let splittable = (b - a).abs() > 1e-13 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    Segment {
        a,
        b,
        value,
        error,
        roundoff,
        splittable,
    }
}

/// Integrate a pair of real functions over the panels delimited by the sorted
/// `breakpoints` (at least two), bisecting the panel with the largest error
/// relative to its component tolerance until both components converge.
pub fn integrate_pair<F>(
    f: F,
    breakpoints: &[f64],
    settings: QuadSettings,
    operation: &'static str,
) -> Result<QuadResult>
where
    F: Fn(f64) -> [f64; 2],
{
    assert!(breakpoints.len() >= 2, "need at least one panel");
    let mut segments: Vec<Segment> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    let mut evaluations = 15 * segments.len();
    let mut bisections = 0;
    loop {
        let (value, error, roundoff) = totals(&segments);
        // A tolerance below the accumulated rounding floor cannot be met by bisection.
        let tol = [0, 1].map(|c| {
            let cross = if c == 1 { settings.cross_weight * value[0].abs() } else { 0.0 };
            settings
                .abs_tol
                .max(settings.rel_tol * value[c].abs().max(cross))
                .max(2.0 * roundoff[c])
        });
        if error[0] <= tol[0] && error[1] <= tol[1] {
            return Ok(QuadResult {
                value,
                error,
                evaluations,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.splittable)
            .map(|(i, s)| (i, (s.error[0] / tol[0]).max(s.error[1] / tol[1])))
            .max_by(|x, y| x.1.total_cmp(&y.1));
        let Some((index, _)) = worst.filter(|_| bisections < settings.max_bisections) else {
            let c = if error[0] / tol[0] >= error[1] / tol[1] { 0 } else { 1 };
            return Err(Error::NonConvergence {
                operation,
                error: error[c],
                tolerance: tol[c],
            });
        };
        let seg = segments.swap_remove(index);
        let mid = 0.5 * (seg.a + seg.b);
        segments.push(gk15(&f, seg.a, mid));
        segments.push(gk15(&f, mid, seg.b));
        evaluations += 30;
        bisections += 1;
    }
}

fn totals(segments: &[Segment]) -> ([f64; 2], [f64; 2], [f64; 2]) {
    // Fixed summation order keeps results reproducible.
    let mut sorted: Vec<&Segment> = segments.iter().collect();
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = [0.0; 2];
    let mut error = [0.0; 2];
    let mut roundoff = [0.0; 2];
    for s in sorted {
        for c in 0..2 {
            value[c] += s.value[c];
            error[c] += s.error[c];
            roundoff[c] += s.roundoff[c];
        }
    }
    (value, error, roundoff)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}
