//! Special functions: Laguerre/Hermite recurrences, Tricomi U(−n, ½, x),
//! displacement-operator and coherent-state amplitudes in the Fock basis.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Associated Laguerre polynomial L_n^{(α)}(x) by the three-term recurrence
/// (k+1) L_{k+1} = (2k+1+α−x) L_k − (k+α) L_{k−1}.
pub fn assoc_laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Tricomi's confluent hypergeometric function U(−n, ½, x), a degree-n
/// polynomial, through U(−n, b, x) = (−1)^n n! L_n^{(b−1)}(x).
pub fn tricomi_u_half(n: usize, x: f64) -> f64 {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * factorial(n) * assoc_laguerre(n, -0.5, x)
}

/// Physicists' Hermite polynomials H_0..=H_max at `x`.
pub fn hermite_table(max: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(max + 1);
    h.push(1.0);
    if max >= 1 {
        h.push(2.0 * x);
    }
    for k in 1..max {
        let next = 2.0 * x * h[k] - 2.0 * k as f64 * h[k - 1];
        h.push(next);
    }
    h
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Fock amplitudes ⟨n|α⟩ = e^{−|α|²/2} αⁿ/√n! for n < `dim`.
pub fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let mut c = Vec::with_capacity(dim);
    if dim == 0 {
        return c;
    }
    c.push(Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0));
    for n in 1..dim {
        let next = c[n - 1] * alpha / (n as f64).sqrt();
        c.push(next);
    }
    c
}

/// Normalized Laguerre functions
/// g_n^{(k)}(x) = √(n!/(n+k)!) x^{k/2} e^{−x/2} L_n^{(k)}(x), n < len.
///
/// These are the moduli-carrying part of ⟨n+k|D(ξ)|n⟩ with x = |ξ|², bounded
/// by one in magnitude, so the forward recurrence never overflows.
fn normalized_laguerre(k: usize, x: f64, len: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(len);
    if len == 0 {
        return g;
    }
    let g0 = if k == 0 {
        (-0.5 * x).exp()
    } else if x == 0.0 {
        0.0
    } else {
        (0.5 * k as f64 * x.ln() - 0.5 * x - 0.5 * ln_factorial(k)).exp()
    };
    g.push(g0);
    if len == 1 {
        return g;
    }
    let kf = k as f64;
    g.push(g0 * (kf + 1.0 - x) / (kf + 1.0).sqrt());
    for n in 1..len - 1 {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + kf - x) * g[n] - (nf * (nf + kf)).sqrt() * g[n - 1])
            / ((nf + 1.0) * (nf + 1.0 + kf)).sqrt();
        g.push(next);
    }
    g
}

/// Matrix elements ⟨m|D(ξ)|n⟩ of the displacement operator
/// D(ξ) = exp(ξ a† − ξ* a) for m < rows, n < cols.
///
/// Each element is exact (no truncation of the operator itself).
pub fn displacement_matrix(xi: Complex64, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let x = xi.norm_sqr();
    let (_, theta) = xi.to_polar();
    let mut d = DMatrix::<Complex64>::zeros(rows, cols);
    let max_dim = rows.max(cols);
    for k in 0..max_dim {
        // m = n + k (below the diagonal) and m + k = n (above it)
        let below = rows.saturating_sub(k).min(cols);
        let above = cols.saturating_sub(k).min(rows);
        let len = below.max(above);
        if len == 0 {
            continue;
        }
        let g = normalized_laguerre(k, x, len);
        let phase = Complex64::from_polar(1.0, k as f64 * theta);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for n in 0..below {
            d[(n + k, n)] = phase * g[n];
        }
        if k > 0 {
            for m in 0..above {
                d[(m, m + k)] = phase.conj() * (sign * g[m]);
            }
        }
    }
    d
}
