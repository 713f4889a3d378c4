//! Wigner small-d matrices `d^J_{M'M}(β)` by Risbo's recursion over `2J`,
//! which combines matrix elements with bounded coefficients and stays stable
//! for large `J`.

use num_complex::Complex64;

/// Row-major `(2J+1)²` matrix of `d^J_{M'M}(β)` with rows and columns ordered
/// by decreasing `M` (index `i` ↔ `M = J - i`).
#[derive(Debug, Clone, PartialEq)]
pub struct WignerD {
    dim: usize,
    data: Vec<f64>,
}

impl WignerD {
    pub fn new(two_j: usize, beta: f64) -> Self {
        let p = (0.5 * beta).cos();
        let q = (0.5 * beta).sin();
        let sqrt: Vec<f64> = (0..=two_j).map(|k| (k as f64).sqrt()).collect();
        let mut prev = vec![1.0];
        for n in 1..=two_j {
            let dim = n + 1;
            let mut next = vec![0.0; dim * dim];
            let inv_n = 1.0 / n as f64;
            let at = |i: usize, k: usize| prev[i * n + k];
            for i in 0..dim {
                for k in 0..dim {
                    let mut v = 0.0;
                    if i < n && k < n {
                        v += sqrt[n - i] * sqrt[n - k] * p * at(i, k);
                    }
                    if i < n && k > 0 {
                        v -= sqrt[n - i] * sqrt[k] * q * at(i, k - 1);
                    }
                    if i > 0 && k < n {
                        v += sqrt[i] * sqrt[n - k] * q * at(i - 1, k);
                    }
                    if i > 0 && k > 0 {
                        v += sqrt[i] * sqrt[k] * p * at(i - 1, k - 1);
                    }
                    next[i * dim + k] = v * inv_n;
                }
            }
            prev = next;
        }
        WignerD {
            dim: two_j + 1,
            data: prev,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `d^J_{M'M}` with `M' = J - i`, `M = J - k`.
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.dim + k]
    }

    /// `max |d dᵀ - 1|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            let ri = &self.data[i * n..(i + 1) * n];
            for j in i..n {
                let rj = &self.data[j * n..(j + 1) * n];
                let dot: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Apply `e^{-iβJx}` to Dicke amplitudes indexed by `k = M + J`.
///
/// Uses `⟨M'|e^{-iβJx}|M⟩ = i^{M'-M} d^J_{M'M}(β)`.
pub fn rotate_x(amplitudes: &[Complex64], beta: f64) -> Vec<Complex64> {
    let two_j = amplitudes.len() - 1;
    if beta == 0.0 {
        return amplitudes.to_vec();
    }
    let d = WignerD::new(two_j, beta);
    let i_pow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    (0..=two_j)
        .map(|k_out| {
            let row = two_j - k_out;
            (0..=two_j)
                .map(|k_in| {
                    let col = two_j - k_in;
                    let diff = (k_out as i64 - k_in as i64).rem_euclid(4) as usize;
                    i_pow[diff] * (d.get(row, col) * amplitudes[k_in])
                })
                .sum()
        })
        .collect()
}
