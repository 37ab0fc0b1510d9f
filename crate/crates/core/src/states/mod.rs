//! Initial field states in three synchronized representations: symbolic
//! P function, truncated Fock-basis density matrix, and closed-form moments.

pub mod descriptor;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::evolution::MomentSet;
use crate::phase_core::special::{coherent_amplitudes, displacement_matrix};
use crate::phase_core::ComplexAmplitude;

pub use descriptor::{DerivativeWeight, PFunctionDescriptor, PolyTerm};

/// Default truncation order of the squeezed-state derivative series.
pub const DEFAULT_SERIES_ORDER: usize = 30;

const MAX_TRACE_DEFICIT: f64 = 1e-3;
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum StateSpec {
    Coherent { beta: ComplexAmplitude },
    Thermal { mbar: f64 },
    PhotonAddedThermal { mbar: f64 },
    PhotonAddedCoherent { beta: ComplexAmplitude },
    /// D(β)S(r)|0⟩ with s = e^{2r}: quadrature variances 1/(4s) and s/4.
    SqueezedCoherent { beta: ComplexAmplitude, s: f64 },
    DisplacedThermal { beta: ComplexAmplitude, nbar_eff: f64 },
}

impl StateSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            StateSpec::Coherent { .. } => "coherent",
            StateSpec::Thermal { .. } => "thermal",
            StateSpec::PhotonAddedThermal { .. } => "photon-added-thermal",
            StateSpec::PhotonAddedCoherent { .. } => "photon-added-coherent",
            StateSpec::SqueezedCoherent { .. } => "squeezed-coherent",
            StateSpec::DisplacedThermal { .. } => "displaced-thermal",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and >= 0, got {v}")))
            }
        };
        let finite_pos = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        match *self {
            StateSpec::Coherent { beta } | StateSpec::PhotonAddedCoherent { beta } => {
                ComplexAmplitude::new(beta.re, beta.im).map(|_| ())
            }
            StateSpec::Thermal { mbar } => finite_nonneg("mbar", mbar),
            // the initial P function divides by m̄³
            StateSpec::PhotonAddedThermal { mbar } => finite_pos("mbar", mbar),
            StateSpec::SqueezedCoherent { beta, s } => {
                ComplexAmplitude::new(beta.re, beta.im)?;
                finite_pos("s", s)
            }
            StateSpec::DisplacedThermal { beta, nbar_eff } => {
                ComplexAmplitude::new(beta.re, beta.im)?;
                finite_nonneg("nbar_eff", nbar_eff)
            }
        }
    }

    /// Squeezing exponent r of S(r) = exp[(r/2)(a² − a†²)] for this `s`.
    pub fn squeeze_exponent(s: f64) -> f64 {
        0.5 * s.ln()
    }
}

/// Dense ⟨m|ρ|n⟩ on the truncated basis |0⟩..|N−1⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    elements: DMatrix<Complex64>,
    trace_deficit: f64,
}

impl FockDensityMatrix {
    /// Wraps a square Hermitian matrix; `trace_deficit` is 1 − Tr ρ of the
    /// truncation that produced it.
    pub fn new(elements: DMatrix<Complex64>, trace_deficit: f64) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch { expected: elements.nrows(), found: elements.ncols() });
        }
        if elements.nrows() < 2 {
            return Err(invalid("cutoff", "must be >= 2"));
        }
        let n = elements.nrows();
        for m in 0..n {
            for k in m..n {
                if (elements[(m, k)] - elements[(k, m)].conj()).norm() > HERMITIAN_TOL {
                    return Err(invalid("elements", format!("not Hermitian at ({m}, {k})")));
                }
            }
        }
        Ok(Self { elements, trace_deficit })
    }

    /// Builds from an already-Hermitian matrix without re-checking it.
    pub(crate) fn from_hermitian(elements: DMatrix<Complex64>, trace_deficit: f64) -> Self {
        Self { elements, trace_deficit }
    }

    /// |ψ⟩⟨ψ| for a pure state given by its truncated amplitudes.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let n = amplitudes.len();
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        let elements = DMatrix::from_fn(n, n, |m, k| amplitudes[m] * amplitudes[k].conj());
        Self::new(elements, 1.0 - norm)
    }

    pub fn from_diagonal(populations: &[f64]) -> Result<Self> {
        let n = populations.len();
        let total: f64 = populations.iter().sum();
        let elements = DMatrix::from_fn(n, n, |m, k| {
            if m == k {
                Complex64::new(populations[m], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(elements, 1.0 - total)
    }

    pub fn fock(k: usize, cutoff: usize) -> Result<Self> {
        if k >= cutoff {
            return Err(invalid("k", format!("Fock index {k} outside cutoff {cutoff}")));
        }
        let mut pops = vec![0.0; cutoff];
        pops[k] = 1.0;
        Self::from_diagonal(&pops)
    }

    pub fn cutoff(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn into_elements(self) -> DMatrix<Complex64> {
        self.elements
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn trace(&self) -> f64 {
        self.elements.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.elements[(k, k)].re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.elements.clone().symmetric_eigenvalues();
        eig.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity, positivity (λ_min ≥ −1e−10) and the trace window.
    pub fn validate(&self) -> Result<()> {
        let lmin = self.min_eigenvalue();
        if lmin < -1e-10 {
            return Err(invalid("elements", format!("not positive semidefinite (λ_min = {lmin:.3e})")));
        }
        let tr = self.trace();
        if tr > 1.0 + 1e-10 || tr < 1.0 - self.trace_deficit.max(0.0) - 1e-10 {
            return Err(invalid("elements", format!("trace {tr} outside [1 − deficit, 1]")));
        }
        Ok(())
    }

    /// Trace distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &FockDensityMatrix) -> Result<f64> {
        if self.cutoff() != other.cutoff() {
            return Err(Error::DimensionMismatch { expected: self.cutoff(), found: other.cutoff() });
        }
        let diff = &self.elements - &other.elements;
        let eig = diff.symmetric_eigenvalues();
        Ok(0.5 * eig.iter().map(|l| l.abs()).sum::<f64>())
    }

    /// ⟨ψ|ρ|ψ⟩ for a pure reference state.
    pub fn fidelity_with_pure(&self, amplitudes: &[Complex64]) -> f64 {
        let n = self.cutoff().min(amplitudes.len());
        let mut f = Complex64::new(0.0, 0.0);
        for m in 0..n {
            for k in 0..n {
                f += amplitudes[m].conj() * self.elements[(m, k)] * amplitudes[k];
            }
        }
        f.re
    }
}

pub fn initial_p_function(spec: &StateSpec) -> Result<PFunctionDescriptor> {
    initial_p_function_with_order(spec, DEFAULT_SERIES_ORDER)
}

/// Like [`initial_p_function`] with an explicit truncation order for the
/// squeezed-state derivative series.
pub fn initial_p_function_with_order(spec: &StateSpec, order: usize) -> Result<PFunctionDescriptor> {
    spec.validate()?;
    let desc = match *spec {
        StateSpec::Coherent { beta } => PFunctionDescriptor::Delta { center: beta },
        StateSpec::Thermal { mbar } | StateSpec::DisplacedThermal { nbar_eff: mbar, .. } => {
            let center = match *spec {
                StateSpec::DisplacedThermal { beta, .. } => beta,
                _ => ComplexAmplitude::ZERO,
            };
            if mbar == 0.0 {
                PFunctionDescriptor::Delta { center }
            } else {
                PFunctionDescriptor::gaussian(center, mbar)
            }
        }
        StateSpec::PhotonAddedThermal { mbar } => {
            let a = (mbar + 1.0) / (PI * mbar.powi(3));
            PFunctionDescriptor::GaussianPolynomial {
                center: ComplexAmplitude::ZERO,
                width: mbar,
                terms: vec![
                    PolyTerm { j: 1, k: 1, coeff: Complex64::new(a, 0.0) },
                    PolyTerm { j: 0, k: 0, coeff: Complex64::new(-a * mbar / (mbar + 1.0), 0.0) },
                ],
            }
        }
        StateSpec::PhotonAddedCoherent { beta } => {
            // P = e^{|α|²} ∂∂*[e^{−|α|²} δ²(α−β)] / (1+|β|²); against a test
            // function it yields [(1+|β|²)φ + β_r ∂ₓφ + β_i ∂ᵧφ + ¼∇²φ](β)/(1+|β|²).
            let norm = 1.0 + beta.norm_sqr();
            let w = |dx, dy, weight: f64| DerivativeWeight { dx, dy, weight: weight / norm };
            PFunctionDescriptor::DeltaDerivativeSeries {
                center: beta,
                order: 1,
                weights: vec![
                    w(0, 0, norm),
                    w(1, 0, beta.re),
                    w(0, 1, beta.im),
                    w(2, 0, 0.25),
                    w(0, 2, 0.25),
                ],
            }
        }
        StateSpec::SqueezedCoherent { beta, s } => {
            let (ax, ay) = squeeze_heat_coefficients(s);
            let mut weights = Vec::with_capacity((order + 1) * (order + 1));
            let mut cx = 1.0;
            for n in 0..=order {
                let mut cy = 1.0;
                for m in 0..=order {
                    weights.push(DerivativeWeight { dx: 2 * n, dy: 2 * m, weight: cx * cy });
                    cy *= ay / (m + 1) as f64;
                }
                cx *= ax / (n + 1) as f64;
            }
            PFunctionDescriptor::DeltaDerivativeSeries { center: beta, order, weights }
        }
    };
    desc.validate()?;
    Ok(desc)
}

/// Coefficients (A, B) of P = exp(A ∂ₓ² + B ∂ᵧ²) δ²(α − β) for the squeezed
/// coherent state: A = (1−s)/(8s), B = (s−1)/8.
pub fn squeeze_heat_coefficients(s: f64) -> (f64, f64) {
    ((1.0 - s) / (8.0 * s), (s - 1.0) / 8.0)
}

/// Default Fock cutoff: max(30, ⌈8(⟨n̂⟩ + 1)⌉).
pub fn default_cutoff(spec: &StateSpec) -> Result<usize> {
    let n = initial_moments(spec)?.mean_n;
    Ok(30usize.max((8.0 * (n + 1.0)).ceil() as usize))
}

pub fn fock_density(spec: &StateSpec, cutoff: usize) -> Result<FockDensityMatrix> {
    spec.validate()?;
    if cutoff < 2 {
        return Err(invalid("cutoff", format!("must be >= 2, got {cutoff}")));
    }
    let rho = match *spec {
        StateSpec::Coherent { beta } => {
            FockDensityMatrix::from_pure(&coherent_amplitudes(beta.to_c64(), cutoff))?
        }
        StateSpec::Thermal { mbar } => FockDensityMatrix::from_diagonal(&thermal_populations(mbar, cutoff))?,
        StateSpec::PhotonAddedThermal { mbar } => {
            // a†ρ_th a / (m̄+1): ρ_kk = k p_{k−1}/(m̄+1)
            let p = thermal_populations(mbar, cutoff);
            let pops: Vec<f64> = (0..cutoff)
                .map(|k| if k == 0 { 0.0 } else { k as f64 * p[k - 1] / (mbar + 1.0) })
                .collect();
            FockDensityMatrix::from_diagonal(&pops)?
        }
        StateSpec::PhotonAddedCoherent { beta } => {
            let c = coherent_amplitudes(beta.to_c64(), cutoff);
            let norm = (1.0 + beta.norm_sqr()).sqrt();
            let amps: Vec<Complex64> = (0..cutoff)
                .map(|k| if k == 0 { Complex64::new(0.0, 0.0) } else { c[k - 1] * ((k as f64).sqrt() / norm) })
                .collect();
            FockDensityMatrix::from_pure(&amps)?
        }
        StateSpec::SqueezedCoherent { beta, s } => {
            let inner = cutoff + 80;
            let sv = squeezed_vacuum_amplitudes(StateSpec::squeeze_exponent(s), inner);
            let d = displacement_matrix(beta.to_c64(), cutoff, inner);
            let psi = &d * nalgebra::DVector::from_iterator(inner, sv.into_iter().map(|v| Complex64::new(v, 0.0)));
            FockDensityMatrix::from_pure(psi.as_slice())?
        }
        StateSpec::DisplacedThermal { beta, nbar_eff } => {
            let inner = cutoff + thermal_tail_length(nbar_eff);
            let p = thermal_populations(nbar_eff, inner);
            let d = displacement_matrix(beta.to_c64(), cutoff, inner);
            let mut scaled = d.clone();
            for (k, mut col) in scaled.column_iter_mut().enumerate() {
                col *= Complex64::new(p[k], 0.0);
            }
            let mut elements = &scaled * d.adjoint();
            hermitize(&mut elements);
            let tr: f64 = elements.diagonal().iter().map(|z| z.re).sum();
            FockDensityMatrix::new(elements, 1.0 - tr)?
        }
    };
    if rho.trace_deficit() > MAX_TRACE_DEFICIT {
        return Err(Error::TruncationDeficit { cutoff, deficit: rho.trace_deficit(), limit: MAX_TRACE_DEFICIT });
    }
    Ok(rho)
}

/// Bose-Einstein populations pₖ = m̄ᵏ/(1+m̄)^{k+1}, k < dim.
pub fn thermal_populations(mbar: f64, dim: usize) -> Vec<f64> {
    let ratio = mbar / (1.0 + mbar);
    let mut p = Vec::with_capacity(dim);
    let mut cur = 1.0 / (1.0 + mbar);
    for _ in 0..dim {
        p.push(cur);
        cur *= ratio;
    }
    p
}

/// Extra Fock levels after which thermal weights fall below 1e−17.
fn thermal_tail_length(mbar: f64) -> usize {
    if mbar == 0.0 {
        return 0;
    }
    let ratio = mbar / (1.0 + mbar);
    ((1e-17f64.ln() / ratio.ln()).ceil() as usize).clamp(20, 4000)
}

/// S(r)|0⟩ = (cosh r)^{−1/2} Σₙ (−tanh r)ⁿ √((2n)!)/(2ⁿ n!) |2n⟩.
pub fn squeezed_vacuum_amplitudes(r: f64, dim: usize) -> Vec<f64> {
    let mut amps = vec![0.0; dim];
    let t = -r.tanh();
    let mut c = 1.0 / r.cosh().sqrt();
    let mut n = 0;
    while 2 * n < dim {
        amps[2 * n] = c;
        n += 1;
        let nf = n as f64;
        c *= t * ((2.0 * nf - 1.0) / (2.0 * nf)).sqrt();
    }
    amps
}

pub(crate) fn hermitize(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub fn initial_moments(spec: &StateSpec) -> Result<MomentSet> {
    spec.validate()?;
    let zero = Complex64::new(0.0, 0.0);
    let thermal_like = |beta: ComplexAmplitude, m: f64| {
        let b2 = beta.norm_sqr();
        MomentSet {
            mean_a: beta.to_c64(),
            mean_n: b2 + m,
            second_factorial: b2 * b2 + 4.0 * b2 * m + 2.0 * m * m,
            var_x: (2.0 * m + 1.0) / 4.0,
            var_y: (2.0 * m + 1.0) / 4.0,
        }
    };
    let m = match *spec {
        StateSpec::Coherent { beta } => thermal_like(beta, 0.0),
        StateSpec::Thermal { mbar } => thermal_like(ComplexAmplitude::ZERO, mbar),
        StateSpec::DisplacedThermal { beta, nbar_eff } => thermal_like(beta, nbar_eff),
        StateSpec::PhotonAddedThermal { mbar } => MomentSet {
            mean_a: zero,
            mean_n: 2.0 * mbar + 1.0,
            second_factorial: 6.0 * mbar * mbar + 4.0 * mbar,
            var_x: (4.0 * mbar + 3.0) / 4.0,
            var_y: (4.0 * mbar + 3.0) / 4.0,
        },
        StateSpec::PhotonAddedCoherent { beta } => {
            let b = beta.to_c64();
            let b2 = beta.norm_sqr();
            let mean_a = b * ((2.0 + b2) / (1.0 + b2));
            let mean_a2 = b * b * ((3.0 + b2) / (1.0 + b2));
            let mean_n = (b2 * b2 + 3.0 * b2 + 1.0) / (1.0 + b2);
            MomentSet {
                mean_a,
                mean_n,
                second_factorial: b2 * b2 + 4.0 * b2,
                var_x: (2.0 * mean_a2.re + 2.0 * mean_n + 1.0) / 4.0 - mean_a.re * mean_a.re,
                var_y: (-2.0 * mean_a2.re + 2.0 * mean_n + 1.0) / 4.0 - mean_a.im * mean_a.im,
            }
        }
        StateSpec::SqueezedCoherent { beta, s } => {
            // normally ordered per-axis variances of the P function
            let sx = (1.0 - s) / (4.0 * s);
            let sy = (s - 1.0) / 4.0;
            let (br, bi) = (beta.re, beta.im);
            let ex2 = br * br + sx;
            let ey2 = bi * bi + sy;
            let ex4 = br.powi(4) + 6.0 * br * br * sx + 3.0 * sx * sx;
            let ey4 = bi.powi(4) + 6.0 * bi * bi * sy + 3.0 * sy * sy;
            MomentSet {
                mean_a: beta.to_c64(),
                mean_n: ex2 + ey2,
                second_factorial: ex4 + 2.0 * ex2 * ey2 + ey4,
                var_x: 1.0 / (4.0 * s),
                var_y: s / 4.0,
            }
        }
    };
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::moments_from_rho;

    fn amp(re: f64, im: f64) -> ComplexAmplitude {
        ComplexAmplitude::new(re, im).unwrap()
    }

    fn all_families() -> Vec<StateSpec> {
        vec![
            StateSpec::Coherent { beta: amp(1.1, -0.6) },
            StateSpec::Thermal { mbar: 0.8 },
            StateSpec::PhotonAddedThermal { mbar: 1.0 },
            StateSpec::PhotonAddedCoherent { beta: amp(0.7, 0.9) },
            StateSpec::SqueezedCoherent { beta: amp(-0.5, 1.2), s: 1.6 },
            StateSpec::SqueezedCoherent { beta: amp(0.8, 0.3), s: 0.6 },
            StateSpec::DisplacedThermal { beta: amp(1.0, 1.0), nbar_eff: 0.4 },
        ]
    }

    #[test]
    fn coherent_descriptor_is_delta() {
        let beta = amp(0.3, 0.4);
        assert_eq!(
            initial_p_function(&StateSpec::Coherent { beta }).unwrap(),
            PFunctionDescriptor::Delta { center: beta }
        );
    }

    #[test]
    fn pats_descriptor_coefficients() {
        let d = initial_p_function(&StateSpec::PhotonAddedThermal { mbar: 1.0 }).unwrap();
        let PFunctionDescriptor::GaussianPolynomial { width, terms, .. } = d else { panic!() };
        assert_eq!(width, 1.0);
        assert!((terms[0].coeff.re - 2.0 / PI).abs() < 1e-15);
        assert!((terms[1].coeff.re + 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn vacuum_limit_of_thermal_is_delta() {
        let d = initial_p_function(&StateSpec::Thermal { mbar: 0.0 }).unwrap();
        assert_eq!(d, PFunctionDescriptor::Delta { center: ComplexAmplitude::ZERO });
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(initial_p_function(&StateSpec::PhotonAddedThermal { mbar: 0.0 }).is_err());
        assert!(initial_p_function(&StateSpec::SqueezedCoherent { beta: amp(0.0, 0.0), s: -1.0 }).is_err());
        assert!(fock_density(&StateSpec::Thermal { mbar: 1.0 }, 1).is_err());
        // a bright thermal state in a tiny basis leaves too much trace outside
        assert!(matches!(
            fock_density(&StateSpec::Thermal { mbar: 5.0 }, 10),
            Err(Error::TruncationDeficit { .. })
        ));
    }

    #[test]
    fn vacuum_density() {
        let rho = fock_density(&StateSpec::Coherent { beta: ComplexAmplitude::ZERO }, 10).unwrap();
        assert_eq!(rho.population(0), 1.0);
        assert_eq!(rho.trace(), 1.0);
    }

    #[test]
    fn thermal_density_weights() {
        let rho = fock_density(&StateSpec::Thermal { mbar: 1.0 }, 80).unwrap();
        for k in 0..10 {
            assert!((rho.population(k) - 0.5f64.powi(k as i32 + 1)).abs() < 1e-16);
        }
        assert!(rho.trace_deficit() < 1e-20);
    }

    #[test]
    fn pats_mean_number_by_brute_force() {
        // â†ρ_th â / Tr(â†ρ_th â) built with explicit ladder matrices
        let n = 60;
        let th = fock_density(&StateSpec::Thermal { mbar: 1.0 }, n).unwrap();
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        for k in 1..n {
            a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
        }
        let raised = a.adjoint() * th.elements() * &a;
        let tr: f64 = raised.diagonal().iter().map(|z| z.re).sum();
        let num: f64 = (0..n).map(|k| k as f64 * raised[(k, k)].re).sum::<f64>() / tr;
        assert!((num - 3.0).abs() < 1e-8);
        let rho = fock_density(&StateSpec::PhotonAddedThermal { mbar: 1.0 }, n).unwrap();
        let m = moments_from_rho(&rho);
        assert!((m.mean_n - 3.0).abs() < 1e-8);
    }

    #[test]
    fn densities_are_physical() {
        for spec in all_families() {
            let cutoff = default_cutoff(&spec).unwrap();
            let rho = fock_density(&spec, cutoff).unwrap();
            rho.validate().unwrap_or_else(|e| panic!("{spec:?}: {e}"));
            assert!(rho.trace_deficit() < 1e-8, "{spec:?}: {}", rho.trace_deficit());
        }
    }

    #[test]
    fn initial_moments_match_fock_traces() {
        for spec in all_families() {
            let rho = fock_density(&spec, 80).unwrap();
            let tol = 1e-8f64.max(10.0 * rho.trace_deficit());
            let exact = initial_moments(&spec).unwrap();
            let traced = moments_from_rho(&rho);
            let diffs = [
                (exact.mean_a - traced.mean_a).norm(),
                (exact.mean_n - traced.mean_n).abs(),
                (exact.second_factorial - traced.second_factorial).abs(),
                (exact.var_x - traced.var_x).abs(),
                (exact.var_y - traced.var_y).abs(),
            ];
            for d in diffs {
                assert!(d < tol, "{spec:?}: {exact:?} vs {traced:?}");
            }
        }
    }

    #[test]
    fn descriptor_moments_match_closed_forms() {
        for spec in all_families() {
            let d = initial_p_function(&spec).unwrap();
            let m = initial_moments(&spec).unwrap();
            assert!((d.normalization() - 1.0).abs() < 1e-12, "{spec:?}");
            assert!((d.normal_moment(1, 0) - m.mean_a).norm() < 1e-12, "{spec:?}");
            assert!((d.normal_moment(1, 1).re - m.mean_n).abs() < 1e-12, "{spec:?}");
            assert!((d.normal_moment(2, 2).re - m.second_factorial).abs() < 1e-11, "{spec:?}");
        }
    }

    #[test]
    fn squeeze_convention_fixed_by_fock_oracle() {
        // var_x = 1/(4s) for D(β)S(r)|0⟩ with r = ln(s)/2
        for s in [0.5, 0.8, 1.3, 2.0] {
            let spec = StateSpec::SqueezedCoherent { beta: amp(0.4, -0.2), s };
            let m = moments_from_rho(&fock_density(&spec, 80).unwrap());
            assert!((m.var_x - 0.25 / s).abs() < 1e-10, "s={s}: {}", m.var_x);
            assert!((m.var_y - 0.25 * s).abs() < 1e-10, "s={s}: {}", m.var_y);
        }
    }

    #[test]
    fn pats_p_function_sign_boundary() {
        let mbar: f64 = 1.5;
        let d = initial_p_function(&StateSpec::PhotonAddedThermal { mbar }).unwrap();
        let r0 = (mbar / (mbar + 1.0)).sqrt();
        for theta in [0.0, 1.0, 2.5] {
            let dir = Complex64::from_polar(1.0, theta);
            assert!(d.evaluate(dir * (0.99 * r0)).unwrap() < 0.0);
            assert!(d.evaluate(dir * (1.01 * r0)).unwrap() > 0.0);
        }
    }

    #[test]
    fn default_cutoff_policy() {
        assert_eq!(default_cutoff(&StateSpec::Thermal { mbar: 0.5 }).unwrap(), 30);
        assert_eq!(default_cutoff(&StateSpec::PhotonAddedThermal { mbar: 2.0 }).unwrap(), 48);
    }
}
