//! Gauss–Kronrod rules on `[-1, 1]`, generated at run time.
//!
//! The Gauss nodes come from Newton iteration on the Legendre polynomial.
//! The Kronrod extension nodes are the zeros of the Stieltjes polynomial
//! `E_{n+1}`, expanded in the Legendre basis and fixed by the orthogonality
//! conditions `∫ E_{n+1} P_n P_j = 0` for `j ≤ n`. Weights solve the moment
//! equations in the Legendre basis, which stays well conditioned for the
//! interlaced node set.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// A `(2n+1)`-point Kronrod rule with its embedded `n`-point Gauss rule.
#[derive(Debug, Clone)]
pub struct KronrodRule {
    /// Ascending nodes in `(-1, 1)`.
    pub nodes: Vec<f64>,
    pub kronrod_weights: Vec<f64>,
    /// Zero at the Kronrod-only nodes.
    pub gauss_weights: Vec<f64>,
}

impl KronrodRule {
    pub fn points(&self) -> usize {
        self.nodes.len()
    }
}

/// Legendre `P_k(x)` for `k = 0..=degree`.
fn legendre_all(x: f64, degree: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if degree >= 1 {
        out[1] = x;
    }
    for k in 1..degree {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
    }
}

/// Returns `(P_n(x), P_n'(x))`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Gauss–Legendre nodes (ascending) and weights.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / diag;
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Builds the Kronrod extension of the `n`-point Gauss rule.
pub fn build_kronrod(n: usize) -> KronrodRule {
    assert!(n >= 1);
    let (gauss_nodes, gauss_w) = gauss_legendre(n);

    // Triple products ∫ P_k P_n P_j, exact with an (2n+2)-point Gauss rule.
    let (qx, qw) = gauss_legendre(2 * n + 2);
    let mut table = vec![vec![0.0; n + 2]; qx.len()];
    for (row, &x) in table.iter_mut().zip(&qx) {
        legendre_all(x, n + 1, row);
    }
    let triple = |k: usize, j: usize| -> f64 {
        table
            .iter()
            .zip(&qw)
            .map(|(row, w)| w * row[k] * row[n] * row[j])
            .sum()
    };

    let unknowns: Vec<usize> = (0..n).filter(|k| (k + n + 1) % 2 == 0).collect();
    let equations: Vec<usize> = (1..=n).filter(|j| j % 2 == 1).collect();
    debug_assert_eq!(unknowns.len(), equations.len());
    let matrix: Vec<Vec<f64>> = equations
        .iter()
        .map(|&j| unknowns.iter().map(|&k| triple(k, j)).collect())
        .collect();
    let rhs: Vec<f64> = equations.iter().map(|&j| -triple(n + 1, j)).collect();
    let solved = solve_dense(matrix, rhs);
    let mut coeffs = vec![0.0; n + 2];
    for (k, c) in unknowns.iter().zip(solved) {
        coeffs[*k] = c;
    }
    coeffs[n + 1] = 1.0;

    let mut scratch = vec![0.0; n + 2];
    let mut stieltjes = |x: f64| -> f64 {
        legendre_all(x, n + 1, &mut scratch);
        scratch.iter().zip(&coeffs).map(|(p, c)| p * c).sum()
    };

    let mut brackets = Vec::with_capacity(n + 2);
    brackets.push(-1.0);
    brackets.extend_from_slice(&gauss_nodes);
    brackets.push(1.0);
    let mut extension = Vec::with_capacity(n + 1);
    for pair in brackets.windows(2) {
        let (mut lo, mut hi) = (pair[0], pair[1]);
        let mut f_lo = stieltjes(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f_mid = stieltjes(mid);
            if f_mid == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (f_mid > 0.0) == (f_lo > 0.0) {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        extension.push(0.5 * (lo + hi));
    }
    // Symmetrize against bisection drift.
    let m = extension.len();
    for i in 0..m / 2 {
        let v = 0.5 * (extension[m - 1 - i] - extension[i]);
        extension[i] = -v;
        extension[m - 1 - i] = v;
    }
    if m % 2 == 1 {
        extension[m / 2] = 0.0;
    }

    let mut nodes = Vec::with_capacity(2 * n + 1);
    let mut gauss_weights = Vec::with_capacity(2 * n + 1);
    for i in 0..=n {
        nodes.push(extension[i]);
        gauss_weights.push(0.0);
        if i < n {
            nodes.push(gauss_nodes[i]);
            gauss_weights.push(gauss_w[i]);
        }
    }

    let size = nodes.len();
    let mut vander = vec![vec![0.0; size]; size];
    let mut col = vec![0.0; size];
    for (i, &x) in nodes.iter().enumerate() {
        legendre_all(x, size - 1, &mut col);
        for k in 0..size {
            vander[k][i] = col[k];
        }
    }
    let mut moments = vec![0.0; size];
    moments[0] = 2.0;
    let mut kronrod_weights = solve_dense(vander, moments);
    for i in 0..size / 2 {
        let w = 0.5 * (kronrod_weights[i] + kronrod_weights[size - 1 - i]);
        kronrod_weights[i] = w;
        kronrod_weights[size - 1 - i] = w;
    }

    KronrodRule {
        nodes,
        kronrod_weights,
        gauss_weights,
    }
}

/// Shared, lazily built rule with `points = 2n + 1` nodes.
pub(crate) fn kronrod_rule(points: usize) -> Arc<KronrodRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<KronrodRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(points)
        .or_insert_with(|| Arc::new(build_kronrod((points - 1) / 2)))
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_15_matches_published_table() {
        let rule = build_kronrod(7);
        let xgk = [
            0.991_455_371_120_812_639,
            0.949_107_912_342_758_525,
            0.864_864_423_359_769_073,
            0.741_531_185_599_394_440,
            0.586_087_235_467_691_130,
            0.405_845_151_377_397_167,
            0.207_784_955_007_898_468,
            0.0,
        ];
        let wgk = [
            0.022_935_322_010_529_225,
            0.063_092_092_629_978_553,
            0.104_790_010_322_250_184,
            0.140_653_259_715_525_919,
            0.169_004_726_639_267_903,
            0.190_350_578_064_785_410,
            0.204_432_940_075_298_892,
            0.209_482_141_084_727_828,
        ];
        for i in 0..8 {
            assert!((rule.nodes[i] + xgk[i]).abs() < 1e-15, "node {i}");
            assert!((rule.kronrod_weights[i] - wgk[i]).abs() < 1e-14, "weight {i}");
        }
        assert!((rule.gauss_weights[7] - 0.417_959_183_673_469_388).abs() < 1e-15);
        assert!((rule.gauss_weights[1] - 0.129_484_966_168_869_693).abs() < 1e-15);
    }

    #[test]
    fn larger_rules_match_published_outer_nodes() {
        let k21 = build_kronrod(10);
        assert!((k21.nodes[0] + 0.995_657_163_025_808_081).abs() < 1e-15);
        assert!((k21.kronrod_weights[0] - 0.011_694_638_867_371_874).abs() < 1e-14);
        let k31 = build_kronrod(15);
        assert!((k31.nodes[0] + 0.998_002_298_693_397_060).abs() < 1e-15);
        assert!((k31.kronrod_weights[0] - 0.005_377_479_872_923_349).abs() < 1e-14);
    }

    #[test]
    fn kronrod_rules_have_degree_3n_plus_1() {
        for n in [3usize, 7, 10, 15, 20] {
            let rule = build_kronrod(n);
            for deg in 0..=(3 * n + 1) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let approx: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.kronrod_weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}: {approx}");
            }
            let gauss_total: f64 = rule.gauss_weights.iter().sum();
            assert!((gauss_total - 2.0).abs() < 1e-14);
        }
    }
}
