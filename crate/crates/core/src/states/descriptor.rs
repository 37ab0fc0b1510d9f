//! Symbolic P-function descriptors.
//!
//! Every descriptor is a distribution on the complex plane. Regular kinds can
//! be evaluated pointwise; singular kinds (delta and its derivatives) are
//! represented by their action on smooth test functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::phase_core::special::{binomial, factorial, hermite_table};
use crate::phase_core::ComplexAmplitude;
use crate::quasiprob::PhaseSpaceGrid;

/// One term `weight · ∂ₓ^dx ∂ᵧ^dy φ(center)` of a delta-derivative functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeWeight {
    pub dx: usize,
    pub dy: usize,
    pub weight: f64,
}

/// `coeff · zʲ z̄ᵏ` with z = α − center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub j: usize,
    pub k: usize,
    pub coeff: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PFunctionDescriptor {
    /// δ²(α − center)
    Delta { center: ComplexAmplitude },
    /// The functional φ ↦ Σ w·∂ₓ^dx ∂ᵧ^dy φ(center), truncated at `order`.
    DeltaDerivativeSeries {
        center: ComplexAmplitude,
        order: usize,
        weights: Vec<DerivativeWeight>,
    },
    /// Σ c_{jk} zʲ z̄ᵏ · exp(−|z|²/width), z = α − center.
    GaussianPolynomial {
        center: ComplexAmplitude,
        width: f64,
        terms: Vec<PolyTerm>,
    },
    /// exp(−|z|²/w)/(πw) · [Σₙ cxⁿ/n! U(−n,½,z_r²/w)] · [Σₘ cyᵐ/m! U(−m,½,z_i²/w)]
    /// with z = α − center, both sums truncated at `order`.
    HypergeometricSeries {
        center: ComplexAmplitude,
        width: f64,
        cx: f64,
        cy: f64,
        order: usize,
    },
    SampledGrid(PhaseSpaceGrid),
}

const NORMALIZATION_TOL: f64 = 1e-8;

impl PFunctionDescriptor {
    /// Normalized Gaussian exp(−|α−center|²/width)/(π·width).
    pub fn gaussian(center: ComplexAmplitude, width: f64) -> Self {
        PFunctionDescriptor::GaussianPolynomial {
            center,
            width,
            terms: vec![PolyTerm { j: 0, k: 0, coeff: Complex64::new(1.0 / (PI * width), 0.0) }],
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PFunctionDescriptor::Delta { .. } => "delta",
            PFunctionDescriptor::DeltaDerivativeSeries { .. } => "delta-derivative-series",
            PFunctionDescriptor::GaussianPolynomial { .. } => "gaussian-polynomial",
            PFunctionDescriptor::HypergeometricSeries { .. } => "hypergeometric-series",
            PFunctionDescriptor::SampledGrid(_) => "sampled-grid",
        }
    }

    pub fn is_regular(&self) -> bool {
        !matches!(
            self,
            PFunctionDescriptor::Delta { .. } | PFunctionDescriptor::DeltaDerivativeSeries { .. }
        )
    }

    /// Checks the structural invariants: positive widths, finite coefficients,
    /// and unit normalization of Gaussian-polynomial descriptors.
    pub fn validate(&self) -> Result<()> {
        match self {
            PFunctionDescriptor::Delta { .. } => Ok(()),
            PFunctionDescriptor::DeltaDerivativeSeries { weights, .. } => {
                if weights.iter().any(|w| !w.weight.is_finite()) {
                    return Err(invalid("weights", "non-finite derivative weight"));
                }
                Ok(())
            }
            PFunctionDescriptor::GaussianPolynomial { width, terms, .. } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(invalid("width", format!("must be > 0, got {width}")));
                }
                if terms.iter().any(|t| !t.coeff.re.is_finite() || !t.coeff.im.is_finite()) {
                    return Err(invalid("terms", "non-finite coefficient"));
                }
                let norm = self.normalization();
                if (norm - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(invalid("terms", format!("integrates to {norm}, not 1")));
                }
                Ok(())
            }
            PFunctionDescriptor::HypergeometricSeries { width, cx, cy, .. } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(invalid("width", format!("must be > 0, got {width}")));
                }
                if !cx.is_finite() || !cy.is_finite() {
                    return Err(invalid("cx/cy", "non-finite series coefficient"));
                }
                Ok(())
            }
            PFunctionDescriptor::SampledGrid(grid) => grid.validate(),
        }
    }

    /// ∫ P d²α.
    pub fn normalization(&self) -> f64 {
        match self {
            PFunctionDescriptor::Delta { .. } => 1.0,
            PFunctionDescriptor::DeltaDerivativeSeries { weights, .. } => weights
                .iter()
                .filter(|w| w.dx == 0 && w.dy == 0)
                .map(|w| w.weight)
                .sum(),
            PFunctionDescriptor::GaussianPolynomial { width, terms, .. } => terms
                .iter()
                .filter(|t| t.j == t.k)
                .map(|t| t.coeff.re * factorial(t.j) * PI * width.powi(t.j as i32 + 1))
                .sum(),
            // every n ≥ 1 term is a derivative of a Gaussian and integrates to zero
            PFunctionDescriptor::HypergeometricSeries { .. } => 1.0,
            PFunctionDescriptor::SampledGrid(grid) => grid.integrate(),
        }
    }

    /// Pointwise value P(α); singular descriptors return [`Error::Singular`].
    pub fn evaluate(&self, alpha: Complex64) -> Result<f64> {
        match self {
            PFunctionDescriptor::Delta { .. } => Err(Error::Singular("delta")),
            PFunctionDescriptor::DeltaDerivativeSeries { .. } => {
                Err(Error::Singular("delta-derivative series"))
            }
            PFunctionDescriptor::GaussianPolynomial { center, width, terms } => {
                let z = alpha - center.to_c64();
                let poly: Complex64 = terms
                    .iter()
                    .map(|t| t.coeff * z.powu(t.j as u32) * z.conj().powu(t.k as u32))
                    .sum();
                Ok(poly.re * (-z.norm_sqr() / width).exp())
            }
            PFunctionDescriptor::HypergeometricSeries { center, width, cx, cy, order } => {
                let z = alpha - center.to_c64();
                let sx = u_series(*cx, z.re * z.re / width, *order);
                let sy = u_series(*cy, z.im * z.im / width, *order);
                Ok((-z.norm_sqr() / width).exp() / (PI * width) * sx * sy)
            }
            PFunctionDescriptor::SampledGrid(grid) => Ok(grid.interpolate(alpha.re, alpha.im)),
        }
    }

    /// Normally ordered moment ⟨a†ᵏ aʲ⟩ = ∫ αʲ ᾱᵏ P(α) d²α.
    ///
    /// Defined analytically for every kind except sampled grids, which use the
    /// grid quadrature.
    pub fn normal_moment(&self, j: usize, k: usize) -> Complex64 {
        match self {
            PFunctionDescriptor::Delta { center } => {
                let c = center.to_c64();
                c.powu(j as u32) * c.conj().powu(k as u32)
            }
            PFunctionDescriptor::DeltaDerivativeSeries { center, weights, .. } => {
                let poly = BivariatePoly::monomial(j, k);
                weights
                    .iter()
                    .map(|w| poly.derivative_at(w.dx, w.dy, center.re, center.im) * w.weight)
                    .sum()
            }
            PFunctionDescriptor::GaussianPolynomial { center, width, terms } => {
                let c = center.to_c64();
                let mut total = Complex64::new(0.0, 0.0);
                // (c + z)^j (c̄ + z̄)^k expanded; only z^a z̄^b · z^p z̄^q with a+p = b+q survive
                for a in 0..=j {
                    for b in 0..=k {
                        let pre = c.powu((j - a) as u32)
                            * c.conj().powu((k - b) as u32)
                            * (binomial(j, a) * binomial(k, b));
                        for t in terms {
                            if a + t.j == b + t.k {
                                let m = a + t.j;
                                total += pre * t.coeff * (PI * factorial(m) * width.powi(m as i32 + 1));
                            }
                        }
                    }
                }
                total
            }
            PFunctionDescriptor::HypergeometricSeries { center, width, cx, cy, .. } => {
                // The resummed series is a Gaussian with per-axis variances
                // w(1+cx)/2 and w(1+cy)/2; polynomial moments follow from it.
                let vx = width * (1.0 + cx) / 2.0;
                let vy = width * (1.0 + cy) / 2.0;
                gaussian_axis_moment(*center, vx, vy, j, k)
            }
            PFunctionDescriptor::SampledGrid(grid) => grid.integrate_complex(|a| {
                a.powu(j as u32) * a.conj().powu(k as u32)
            }),
        }
    }

    /// P(α e^{Γt}; 0) e^{2Γt} expressed as a descriptor, with `d` = e^{−Γt}.
    pub fn rescale(&self, d: f64) -> PFunctionDescriptor {
        let scale_center = |c: &ComplexAmplitude| ComplexAmplitude { re: c.re * d, im: c.im * d };
        match self {
            PFunctionDescriptor::Delta { center } => {
                PFunctionDescriptor::Delta { center: scale_center(center) }
            }
            PFunctionDescriptor::DeltaDerivativeSeries { center, order, weights } => {
                PFunctionDescriptor::DeltaDerivativeSeries {
                    center: scale_center(center),
                    order: *order,
                    weights: weights
                        .iter()
                        .map(|w| DerivativeWeight {
                            weight: w.weight * d.powi((w.dx + w.dy) as i32),
                            ..*w
                        })
                        .collect(),
                }
            }
            PFunctionDescriptor::GaussianPolynomial { center, width, terms } => {
                PFunctionDescriptor::GaussianPolynomial {
                    center: scale_center(center),
                    width: width * d * d,
                    terms: terms
                        .iter()
                        .map(|t| PolyTerm {
                            coeff: t.coeff / d.powi((t.j + t.k + 2) as i32),
                            ..*t
                        })
                        .collect(),
                }
            }
            PFunctionDescriptor::HypergeometricSeries { center, width, cx, cy, order } => {
                PFunctionDescriptor::HypergeometricSeries {
                    center: scale_center(center),
                    width: width * d * d,
                    cx: *cx,
                    cy: *cy,
                    order: *order,
                }
            }
            PFunctionDescriptor::SampledGrid(grid) => {
                let mut g = grid.clone();
                g.x_axis.iter_mut().for_each(|x| *x *= d);
                g.y_axis.iter_mut().for_each(|y| *y *= d);
                g.values.iter_mut().for_each(|v| *v /= d * d);
                PFunctionDescriptor::SampledGrid(g)
            }
        }
    }

    /// Center and radius outside of which the descriptor is negligible
    /// (below e^{−64} of its peak for Gaussian kinds).
    pub fn support(&self) -> (Complex64, f64) {
        match self {
            PFunctionDescriptor::Delta { center }
            | PFunctionDescriptor::DeltaDerivativeSeries { center, .. } => (center.to_c64(), 0.0),
            PFunctionDescriptor::GaussianPolynomial { center, width, terms } => {
                let degree = terms.iter().map(|t| t.j + t.k).max().unwrap_or(0);
                (center.to_c64(), width.sqrt() * (8.0 + degree as f64))
            }
            PFunctionDescriptor::HypergeometricSeries { center, width, cx, cy, .. } => {
                let spread = 1.0 + cx.max(*cy).max(0.0);
                (center.to_c64(), (width * spread).sqrt() * 8.0)
            }
            PFunctionDescriptor::SampledGrid(grid) => {
                let cx = 0.5 * (grid.x_axis[0] + grid.x_axis[grid.x_axis.len() - 1]);
                let cy = 0.5 * (grid.y_axis[0] + grid.y_axis[grid.y_axis.len() - 1]);
                let rx = 0.5 * (grid.x_axis[grid.x_axis.len() - 1] - grid.x_axis[0]);
                let ry = 0.5 * (grid.y_axis[grid.y_axis.len() - 1] - grid.y_axis[0]);
                (Complex64::new(cx, cy), rx.max(ry))
            }
        }
    }

    /// Fock population ⟨k|ρ|k⟩ = ∫ P(α) e^{−|α|²} |α|^{2k}/k! d²α.
    ///
    /// Available for deltas and for Gaussian polynomials centered at the origin.
    pub fn fock_population(&self, k: usize) -> Result<f64> {
        match self {
            PFunctionDescriptor::Delta { center } => {
                let x = center.norm_sqr();
                Ok((-x).exp() * x.powi(k as i32) / factorial(k))
            }
            PFunctionDescriptor::GaussianPolynomial { center, width, terms }
                if center.norm_sqr() == 0.0 =>
            {
                let lambda = 1.0 + 1.0 / width;
                let pop = terms
                    .iter()
                    .filter(|t| t.j == t.k)
                    .map(|t| {
                        let m = t.j + k;
                        // ∫|z|^{2m} e^{−λ|z|²} d²z = π m! λ^{−(m+1)}
                        t.coeff.re * PI * (factorial(m) / factorial(k)) * lambda.powi(-(m as i32 + 1))
                    })
                    .sum();
                Ok(pop)
            }
            _ => Err(Error::Domain(format!(
                "Fock populations not available for a {} descriptor",
                self.kind_name()
            ))),
        }
    }

    /// Applies a delta-derivative functional to a separable test function
    /// given its derivative tables fx[dx] = ∂ₓ^dx f(center), fy[dy].
    pub(crate) fn apply_separable(weights: &[DerivativeWeight], fx: &[f64], fy: &[f64]) -> f64 {
        weights.iter().map(|w| w.weight * fx[w.dx] * fy[w.dy]).sum()
    }

    pub(crate) fn max_derivative(weights: &[DerivativeWeight]) -> usize {
        weights.iter().map(|w| w.dx.max(w.dy)).max().unwrap_or(0)
    }
}

/// Σₙ cⁿ/n! U(−n, ½, x) truncated at `order`.
pub(crate) fn u_series(c: f64, x: f64, order: usize) -> f64 {
    // cⁿ/n! U(−n,½,x) = (−c)ⁿ Lₙ^{(−1/2)}(x); summing the Laguerre recurrence
    // directly avoids the n! of each term.
    let a = -0.5;
    let mut prev = 1.0;
    let mut sum = 1.0;
    if order == 0 {
        return sum;
    }
    let mut cur = 1.0 + a - x;
    let mut pow = -c;
    sum += pow * cur;
    for k in 1..order {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
        pow *= -c;
        sum += pow * cur;
    }
    sum
}

/// Derivatives ∂ᵤʲ exp(−u²/w) for j ≤ max, via
/// ∂ᵤʲ e^{−v²} = (−1)ʲ w^{−j/2} Hⱼ(v) e^{−v²}, v = u/√w.
pub(crate) fn gaussian_derivatives(u: f64, width: f64, max: usize) -> Vec<f64> {
    let s = width.sqrt();
    let v = u / s;
    let e = (-v * v).exp();
    let h = hermite_table(max, v);
    let mut out = Vec::with_capacity(max + 1);
    let mut scale = 1.0;
    for (j, hj) in h.iter().enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign * scale * hj * e);
        scale /= s;
    }
    out
}

/// E[αʲ ᾱᵏ] for α = center + X + iY with independent zero-mean X, Y of
/// (possibly formal, negative) variances vx, vy.
pub(crate) fn gaussian_axis_moment(
    center: ComplexAmplitude,
    vx: f64,
    vy: f64,
    j: usize,
    k: usize,
) -> Complex64 {
    let poly = BivariatePoly::monomial(j, k);
    let mut total = Complex64::new(0.0, 0.0);
    // shift to the center, then integrate even powers: E[X^{2p}] = (2p−1)!! vx^p
    let shifted = poly.shift(center.re, center.im);
    for (a, row) in shifted.coeffs.iter().enumerate() {
        for (b, c) in row.iter().enumerate() {
            if a % 2 == 1 || b % 2 == 1 {
                continue;
            }
            total += c * double_factorial_odd(a) * vx.powi(a as i32 / 2) * double_factorial_odd(b) * vy.powi(b as i32 / 2);
        }
    }
    total
}

/// (n−1)!! for even n, 1 for n = 0.
fn double_factorial_odd(n: usize) -> f64 {
    (1..n).step_by(2).fold(1.0, |acc, k| acc * k as f64)
}

/// Complex-coefficient polynomial Σ c_{ab} xᵃ yᵇ.
#[derive(Debug, Clone)]
pub(crate) struct BivariatePoly {
    pub coeffs: Vec<Vec<Complex64>>,
}

impl BivariatePoly {
    /// (x + iy)ʲ (x − iy)ᵏ
    pub fn monomial(j: usize, k: usize) -> Self {
        let deg = j + k;
        let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); deg + 1]; deg + 1];
        let i = Complex64::new(0.0, 1.0);
        for p in 0..=j {
            for q in 0..=k {
                // x^{j−p}(iy)^p · x^{k−q}(−iy)^q
                let c = i.powu(p as u32) * (-i).powu(q as u32) * (binomial(j, p) * binomial(k, q));
                coeffs[j - p + k - q][p + q] += c;
            }
        }
        BivariatePoly { coeffs }
    }

    /// ∂ₓ^u ∂ᵧ^v evaluated at (x0, y0).
    pub fn derivative_at(&self, u: usize, v: usize, x0: f64, y0: f64) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (a, row) in self.coeffs.iter().enumerate() {
            if a < u {
                continue;
            }
            let fa = factorial(a) / factorial(a - u);
            for (b, c) in row.iter().enumerate() {
                if b < v || c.norm_sqr() == 0.0 {
                    continue;
                }
                let fb = factorial(b) / factorial(b - v);
                total += c * (fa * fb * x0.powi((a - u) as i32) * y0.powi((b - v) as i32));
            }
        }
        total
    }

    /// p(x + x0, y + y0) as a polynomial in (x, y).
    pub fn shift(&self, x0: f64, y0: f64) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (a, row) in self.coeffs.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                for p in 0..=a {
                    for q in 0..=b {
                        out[p][q] += c
                            * (binomial(a, p) * binomial(b, q) * x0.powi((a - p) as i32) * y0.powi((b - q) as i32));
                    }
                }
            }
        }
        BivariatePoly { coeffs: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amp(re: f64, im: f64) -> ComplexAmplitude {
        ComplexAmplitude::new(re, im).unwrap()
    }

    #[test]
    fn gaussian_is_normalized() {
        let g = PFunctionDescriptor::gaussian(amp(0.3, -1.0), 1.7);
        g.validate().unwrap();
        assert!((g.normalization() - 1.0).abs() < 1e-15);
        let m = g.normal_moment(1, 0);
        assert!((m - Complex64::new(0.3, -1.0)).norm() < 1e-14);
        // ⟨|α|²⟩ = |c|² + width
        let n = g.normal_moment(1, 1).re;
        assert!((n - (1.09 + 1.7)).abs() < 1e-13);
    }

    #[test]
    fn unnormalized_polynomial_fails_validation() {
        let d = PFunctionDescriptor::GaussianPolynomial {
            center: ComplexAmplitude::ZERO,
            width: 1.0,
            terms: vec![PolyTerm { j: 0, k: 0, coeff: Complex64::new(1.0, 0.0) }],
        };
        assert!(d.validate().is_err());
    }

    #[test]
    fn singular_kinds_do_not_evaluate() {
        let d = PFunctionDescriptor::Delta { center: ComplexAmplitude::ZERO };
        assert!(matches!(d.evaluate(Complex64::new(0.0, 0.0)), Err(Error::Singular(_))));
    }

    #[test]
    fn gaussian_derivatives_match_finite_differences() {
        let w = 0.8;
        let f = |u: f64| (-u * u / w).exp();
        let u = 0.37;
        let d = gaussian_derivatives(u, w, 3);
        let h = 1e-4;
        let fd1 = (f(u + h) - f(u - h)) / (2.0 * h);
        let fd2 = (f(u + h) - 2.0 * f(u) + f(u - h)) / (h * h);
        assert!((d[0] - f(u)).abs() < 1e-15);
        assert!((d[1] - fd1).abs() < 1e-7);
        assert!((d[2] - fd2).abs() < 1e-5);
    }

    #[test]
    fn bivariate_monomial_and_derivative() {
        // |α|² = x² + y²: ∂ₓ² = 2
        let p = BivariatePoly::monomial(1, 1);
        assert!((p.derivative_at(2, 0, 0.4, 0.2) - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        assert!((p.derivative_at(0, 0, 0.4, 0.2) - Complex64::new(0.2, 0.0)).norm() < 1e-14);
        // α² = x² − y² + 2ixy: ∂ₓ∂ᵧ = 2i
        let q = BivariatePoly::monomial(2, 0);
        assert!((q.derivative_at(1, 1, 1.0, 1.0) - Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn u_series_resums_to_gaussian() {
        // Σ cⁿ/n! U(−n,½,v²) e^{−v²} = (1+c)^{−1/2} e^{−v²/(1+c)} for |c| < 1
        let (c, v) = (0.3, 0.9);
        let lhs = u_series(c, v * v, 60) * (-v * v).exp();
        let rhs = (1.0 + c).powf(-0.5) * (-v * v / (1.0 + c)).exp();
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn u_series_matches_tricomi_terms() {
        use crate::phase_core::special::{factorial, tricomi_u_half};
        for (c, x) in [(0.4f64, 0.3), (-0.7, 2.5), (0.9, 11.0)] {
            let direct: f64 = (0..=20).map(|n| c.powi(n as i32) / factorial(n) * tricomi_u_half(n, x)).sum();
            let fast = u_series(c, x, 20);
            assert!((direct - fast).abs() <= 1e-12 * direct.abs().max(1.0), "{c} {x}: {direct} vs {fast}");
        }
    }

    #[test]
    fn rescale_keeps_normalization() {
        let g = PFunctionDescriptor::GaussianPolynomial {
            center: amp(0.5, 0.5),
            width: 1.0,
            terms: vec![
                PolyTerm { j: 1, k: 1, coeff: Complex64::new(2.0 / PI, 0.0) },
                PolyTerm { j: 0, k: 0, coeff: Complex64::new(-1.0 / PI, 0.0) },
            ],
        };
        g.validate().unwrap();
        let r = g.rescale(0.6);
        assert!((r.normalization() - 1.0).abs() < 1e-13);
    }
}
