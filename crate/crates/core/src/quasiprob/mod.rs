//! Quasiprobability transforms: characteristic functions in the three
//! orderings, Gaussian smoothing from P to Q, and Fourier inversion of
//! characteristic functions onto phase-space grids.

mod grid;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::evolution::{convolve_point, smooth_closed_form};
use crate::lindblad::{truncation_guard, Guarded};
use crate::phase_core::special::{displacement_matrix, ln_factorial};
use crate::phase_core::{ComplexAmplitude, ScaledBathParams};
use crate::quadrature::QuadratureOptions;
use crate::states::{FockDensityMatrix, PFunctionDescriptor};

pub use grid::{GridMeta, GridQuantity, GridSpec, PhaseSpaceGrid};

/// Tolerated |∫ grid − 1| before a transform is declared aliased.
const NORM_TOL: f64 = 1e-5;
const IMAG_TOL: f64 = 1e-8;
/// Populations below this are treated as absent when sizing the ξ grid.
const POPULATION_FLOOR: f64 = 1e-14;

/// Operator ordering of the characteristic function χ^{(l)}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    /// l = 1: Tr[ρ e^{ξa†} e^{−ξ*a}]
    Normal,
    /// l = 0: Tr[ρ e^{ξa† − ξ*a}]
    Symmetric,
    /// l = −1: Tr[ρ e^{−ξ*a} e^{ξa†}]
    Antinormal,
}

impl Ordering {
    pub fn index(self) -> i32 {
        match self {
            Ordering::Normal => 1,
            Ordering::Symmetric => 0,
            Ordering::Antinormal => -1,
        }
    }

    /// The quasiprobability obtained by Fourier inversion.
    pub fn quantity(self) -> GridQuantity {
        match self {
            Ordering::Normal => GridQuantity::P,
            Ordering::Symmetric => GridQuantity::W,
            Ordering::Antinormal => GridQuantity::Q,
        }
    }
}

/// ln of |⟨m|e^{ξa†}|k⟩| / |ξ|^{m−k} = ½ln(m!/k!) − ln((m−k)!), m ≥ k.
fn ln_raise(m: usize, k: usize) -> f64 {
    0.5 * (ln_factorial(m) - ln_factorial(k)) - ln_factorial(m - k)
}

fn trace_product(rho: &DMatrix<Complex64>, op: &DMatrix<Complex64>) -> Complex64 {
    // Tr[ρ·op] = Σ ρ_{nm} op_{mn}
    let n = rho.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..n {
        for k in 0..n {
            acc += rho[(k, m)] * op[(m, k)];
        }
    }
    acc
}

/// Tr[ρ e^{ξa†} e^{−ξ*a}]. Both factors are triangular, so the product
/// restricted to the support of ρ is exact.
fn normal_ordered(rho: &FockDensityMatrix, xi: Complex64) -> Complex64 {
    let n = rho.cutoff();
    let mut raise = DMatrix::<Complex64>::zeros(n, n);
    let mut lower = DMatrix::<Complex64>::zeros(n, n);
    for m in 0..n {
        for k in 0..=m {
            let c = ln_raise(m, k).exp();
            raise[(m, k)] = xi.powu((m - k) as u32) * c;
            lower[(k, m)] = (-xi.conj()).powu((m - k) as u32) * c;
        }
    }
    trace_product(rho.elements(), &(raise * lower))
}

/// Tr[ρ e^{−ξ*a} e^{ξa†}], summing the intermediate Fock index past the
/// cutoff until the terms are negligible.
fn antinormal_ordered(rho: &FockDensityMatrix, xi: Complex64) -> Complex64 {
    let n = rho.cutoff();
    let x = xi.norm_sqr();
    let m_elems = rho.elements();
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..n {
        for k in 0..n {
            let r = m_elems[(k, m)];
            if r.norm_sqr() == 0.0 {
                continue;
            }
            // ⟨m|e^{−ξ*a}|j⟩⟨j|e^{ξa†}|k⟩ over j ≥ max(m, k)
            let mut s = Complex64::new(0.0, 0.0);
            let mut peak = f64::NEG_INFINITY;
            let mut j = m.max(k);
            loop {
                let ln_mag = ln_raise(j, m) + ln_raise(j, k);
                let term = (-xi.conj()).powu((j - m) as u32) * xi.powu((j - k) as u32) * ln_mag.exp();
                s += term;
                let ln_term = ln_mag + if x > 0.0 { 0.5 * (2 * j - m - k) as f64 * x.ln() } else { 0.0 };
                peak = peak.max(ln_term);
                if (x == 0.0 || (j as f64 > x + 2.0 && ln_term < peak - 40.0)) || j > 100_000 {
                    break;
                }
                j += 1;
            }
            acc += r * s;
        }
    }
    acc
}

/// χ^{(l)}(ξ) evaluated directly in the truncated Fock basis.
///
/// A warning is attached when |ξ|² ≥ cutoff/4, where the displaced basis
/// states leak past the cutoff. The antinormal sum alternates in sign and
/// loses about 2|ξ|²/ln 10 digits.
pub fn characteristic_function(
    rho: &FockDensityMatrix,
    xi: ComplexAmplitude,
    ordering: Ordering,
) -> Guarded<Complex64> {
    let z = xi.to_c64();
    let value = match ordering {
        Ordering::Normal => normal_ordered(rho, z),
        Ordering::Symmetric => {
            let n = rho.cutoff();
            trace_product(rho.elements(), &displacement_matrix(z, n, n))
        }
        Ordering::Antinormal => antinormal_ordered(rho, z),
    };
    Guarded { value, warning: truncation_guard(xi.norm_sqr(), rho.cutoff()) }
}

const UNIT: ScaledBathParams = ScaledBathParams { decay_factor: 1.0, nbar_t: 1.0, t: 0.0 };

/// Q(α) = (1/π) ∫ P(β) e^{−|α−β|²} d²β.
///
/// Closed form for delta, Gaussian-polynomial and hypergeometric kinds; the
/// derivative series is applied to the differentiated kernel; sampled grids
/// use the trapezoid rule.
pub fn p_to_q_smoothing(p: &PFunctionDescriptor, alpha: ComplexAmplitude) -> Result<f64> {
    match p {
        PFunctionDescriptor::Delta { .. }
        | PFunctionDescriptor::GaussianPolynomial { .. }
        | PFunctionDescriptor::HypergeometricSeries { .. } => smooth_closed_form(p, 1.0, 1.0)?.evaluate(alpha.to_c64()),
        _ => Ok(convolve_point(p, &UNIT, alpha.to_c64(), &QuadratureOptions::default())?.value),
    }
}

/// [`p_to_q_smoothing`] at every point of `grid`.
pub fn p_to_q_grid(p: &PFunctionDescriptor, grid: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    let smoothed = match p {
        PFunctionDescriptor::Delta { .. }
        | PFunctionDescriptor::GaussianPolynomial { .. }
        | PFunctionDescriptor::HypergeometricSeries { .. } => Some(smooth_closed_form(p, 1.0, 1.0)?),
        _ => None,
    };
    let opts = QuadratureOptions::default();
    let values: Vec<Result<f64>> = grid
        .points()
        .par_iter()
        .map(|&a| match &smoothed {
            Some(q) => q.evaluate(a),
            None => convolve_point(p, &UNIT, a, &opts).map(|i| i.value),
        })
        .collect();
    let mut out = grid.with_values(values.into_iter().collect::<Result<_>>()?)?;
    out.meta.quantity = GridQuantity::Q;
    Ok(out)
}

/// Highest Fock level carrying population above the floor.
fn occupied_levels(rho: &FockDensityMatrix) -> usize {
    (0..rho.cutoff()).rev().find(|&k| rho.population(k).abs() > POPULATION_FLOOR).unwrap_or(0)
}

/// F(α) = (1/π²) ∫ χ^{(l)}(ξ) e^{αξ* − α*ξ} d²ξ on every point of `grid`.
///
/// χ^{(0)} = Tr[ρD(ξ)] is sampled on a square ξ lattice and the other
/// orderings follow from χ^{(l)} = χ^{(0)} e^{l|ξ|²/2}. Sampling with spacing
/// h makes the result periodic in α with period π/h; the lattice uses
/// h = π/(4L), L the largest |coordinate| on the α grid, which is twice the
/// Nyquist requirement for a field supported on [−L, L]². The lattice extends
/// to |ξ| ≤ 2√(n+1) + 8 with n the highest occupied level, past which
/// χ^{(0)} is below e^{−32}. The sum is a separable direct DFT evaluated
/// exactly at the requested α points.
pub fn transform_characteristic(
    rho: &FockDensityMatrix,
    grid: &PhaseSpaceGrid,
    ordering: Ordering,
) -> Result<PhaseSpaceGrid> {
    let dim = rho.cutoff();
    let n_occ = occupied_levels(rho);
    let half = [grid.x_axis[0], grid.x_axis[grid.nx() - 1], grid.y_axis[0], grid.y_axis[grid.ny() - 1]]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let h = PI / (4.0 * half);
    let extent = 2.0 * ((n_occ + 1) as f64).sqrt() + 8.0;
    let k = (extent / h).ceil() as i64;
    let xi_axis: Vec<f64> = (-k..=k).map(|i| i as f64 * h).collect();
    let m = xi_axis.len();
    let l = ordering.index() as f64;

    // chi[iu * m + iv] at ξ = u + iv
    let chi: Vec<Complex64> = (0..m * m)
        .into_par_iter()
        .map(|idx| {
            let xi = Complex64::new(xi_axis[idx / m], xi_axis[idx % m]);
            let r2 = xi.norm_sqr();
            if r2 > extent * extent {
                return Complex64::new(0.0, 0.0);
            }
            let c0 = trace_product(rho.elements(), &displacement_matrix(xi, dim, dim));
            c0 * (0.5 * l * r2).exp()
        })
        .collect();

    // αξ* − α*ξ = 2i(yu − xv)
    let (nx, ny) = (grid.nx(), grid.ny());
    let phase_x: Vec<Complex64> = grid
        .x_axis
        .iter()
        .flat_map(|&x| xi_axis.iter().map(move |&v| Complex64::from_polar(1.0, -2.0 * x * v)))
        .collect();
    let phase_y: Vec<Complex64> = grid
        .y_axis
        .iter()
        .flat_map(|&y| xi_axis.iter().map(move |&u| Complex64::from_polar(1.0, 2.0 * y * u)))
        .collect();
    // partial[ix * m + iu] = Σ_v e^{−2ixv} χ(u, v)
    let partial: Vec<Complex64> = (0..nx * m)
        .into_par_iter()
        .map(|idx| {
            let (ix, iu) = (idx / m, idx % m);
            let row = &chi[iu * m..(iu + 1) * m];
            let ph = &phase_x[ix * m..(ix + 1) * m];
            row.iter().zip(ph).map(|(c, p)| c * p).sum()
        })
        .collect();
    let scale = h * h / (PI * PI);
    let full: Vec<Complex64> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (ix, iy) = (idx / ny, idx % ny);
            let s = &partial[ix * m..(ix + 1) * m];
            let ph = &phase_y[iy * m..(iy + 1) * m];
            s.iter().zip(ph).map(|(a, p)| a * p).sum::<Complex64>() * scale
        })
        .collect();

    let imag = full.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > IMAG_TOL {
        return Err(Error::Domain(format!("transform has imaginary residue {imag:.3e}")));
    }
    let mut out = grid.with_values(full.iter().map(|z| z.re).collect())?;
    out.meta.quantity = ordering.quantity();
    let norm = out.integrate();
    if (norm - 1.0).abs() > NORM_TOL {
        let suggested = (1.5 * half).max(((n_occ + 1) as f64).sqrt() + 5.0);
        return Err(Error::Aliasing { norm, suggested_extent: suggested });
    }
    Ok(out)
}

/// W(α) as the Fourier transform of χ^{(0)}.
pub fn wigner_from_characteristic(rho: &FockDensityMatrix, grid: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    transform_characteristic(rho, grid, Ordering::Symmetric)
}

/// W(α) = (2/π) Tr[ρ D(α) Π D(α)†] with Π the photon-number parity.
pub fn displaced_parity(rho: &FockDensityMatrix, alpha: ComplexAmplitude) -> f64 {
    let n = rho.cutoff();
    // ⟨m|D(α)ΠD(α)†|k⟩ = Σ_j (−1)^j ⟨m|D(α)|j⟩⟨k|D(α)|j⟩*; the displaced
    // basis needs room beyond the cutoff
    let inner = n + (4.0 * alpha.norm_sqr()).ceil() as usize + 40;
    let d = displacement_matrix(alpha.to_c64(), n, inner);
    let mut parity = DMatrix::<Complex64>::zeros(inner, inner);
    for j in 0..inner {
        parity[(j, j)] = Complex64::new(if j % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    let op = &d * parity * d.adjoint();
    2.0 / PI * trace_product(rho.elements(), &op).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{husimi_grid, husimi_q};
    use crate::states::{fock_density, initial_p_function, StateSpec};
    use proptest::prelude::*;

    fn amp(re: f64, im: f64) -> ComplexAmplitude {
        ComplexAmplitude::new(re, im).unwrap()
    }

    fn grid(half: f64, n: usize) -> PhaseSpaceGrid {
        GridSpec::square(half, n).build(GridMeta::default()).unwrap()
    }

    #[test]
    fn chi_at_origin_is_trace() {
        let rho = fock_density(&StateSpec::PhotonAddedCoherent { beta: amp(0.5, 0.5) }, 30).unwrap();
        for o in [Ordering::Normal, Ordering::Symmetric, Ordering::Antinormal] {
            let c = characteristic_function(&rho, ComplexAmplitude::ZERO, o).value;
            assert!((c - Complex64::new(rho.trace(), 0.0)).norm() < 1e-14, "{o:?}");
        }
    }

    #[test]
    fn coherent_normal_chi_is_a_phase() {
        let beta = Complex64::new(0.9, -0.4);
        let rho = fock_density(&StateSpec::Coherent { beta: amp(beta.re, beta.im) }, 50).unwrap();
        for xi in [Complex64::new(0.3, 0.2), Complex64::new(-1.1, 0.5), Complex64::new(0.0, 1.4)] {
            let c = characteristic_function(&rho, amp(xi.re, xi.im), Ordering::Normal).value;
            let expected = (xi * beta.conj() - xi.conj() * beta).exp();
            assert!((c - expected).norm() < 1e-10, "{xi}: {c} vs {expected}");
        }
    }

    #[test]
    fn vacuum_orderings() {
        let vac = FockDensityMatrix::fock(0, 4).unwrap();
        let xi = amp(0.7, 0.3);
        let r2 = xi.norm_sqr();
        let n = characteristic_function(&vac, xi, Ordering::Normal).value;
        let s = characteristic_function(&vac, xi, Ordering::Symmetric).value;
        let a = characteristic_function(&vac, xi, Ordering::Antinormal).value;
        assert!((n - 1.0).norm() < 1e-15);
        assert!((s.re - (-0.5 * r2).exp()).abs() < 1e-15);
        assert!((a.re - (-r2).exp()).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn ordering_ladder(
            br in -1.0f64..1.0, bi in -1.0f64..1.0, mbar in 0.0f64..1.0,
            xr in -1.2f64..1.2, xi_ in -1.2f64..1.2,
        ) {
            let spec = StateSpec::DisplacedThermal { beta: amp(br, bi), nbar_eff: mbar };
            let rho = fock_density(&spec, 40).unwrap();
            let xi = amp(xr, xi_);
            let r2 = xi.norm_sqr();
            let n = characteristic_function(&rho, xi, Ordering::Normal).value;
            let s = characteristic_function(&rho, xi, Ordering::Symmetric).value;
            let a = characteristic_function(&rho, xi, Ordering::Antinormal).value;
            prop_assert!((n - s * (0.5 * r2).exp()).norm() < 1e-9);
            prop_assert!((n * (-r2).exp() - a).norm() < 1e-9);
        }
    }

    #[test]
    fn smoothing_examples() {
        let beta = amp(0.4, -1.0);
        let alpha = amp(1.0, 0.3);
        let q = p_to_q_smoothing(&PFunctionDescriptor::Delta { center: beta }, alpha).unwrap();
        let expected = (-(alpha.to_c64() - beta.to_c64()).norm_sqr()).exp() / PI;
        assert!((q - expected).abs() < 1e-15);

        let mbar = 1.7;
        let p = initial_p_function(&StateSpec::Thermal { mbar }).unwrap();
        let q = p_to_q_smoothing(&p, alpha).unwrap();
        let expected = (-alpha.norm_sqr() / (mbar + 1.0)).exp() / (PI * (mbar + 1.0));
        assert!((q - expected).abs() < 1e-15);
    }

    #[test]
    fn smoothing_singular_initial_states_matches_husimi() {
        // photon-added coherent (derivative series) and squeezed coherent
        let specs = [
            StateSpec::PhotonAddedCoherent { beta: amp(0.6, 0.2) },
            StateSpec::SqueezedCoherent { beta: amp(-0.5, 0.3), s: 0.7 },
            StateSpec::PhotonAddedThermal { mbar: 0.5 },
        ];
        for spec in specs {
            let p = initial_p_function(&spec).unwrap();
            let rho = fock_density(&spec, 60).unwrap();
            for a in [amp(0.0, 0.0), amp(1.0, -0.5), amp(-1.5, 0.8)] {
                let q = p_to_q_smoothing(&p, a).unwrap();
                let h = husimi_q(&rho, a).value;
                assert!((q - h).abs() < 1e-10, "{spec:?} at {a:?}: {q} vs {h}");
            }
        }
    }

    #[test]
    fn smoothed_pats_is_bounded_where_p_is_negative() {
        let spec = StateSpec::PhotonAddedThermal { mbar: 1.0 };
        let bath = crate::phase_core::BathParams::new(0.5, 0.2).unwrap();
        let ev = crate::evolution::evolve_p_closed_form(&spec, bath, 0.3).unwrap();
        let p = ev.descriptor().unwrap();
        assert!(p.evaluate(Complex64::new(0.0, 0.0)).unwrap() < 0.0);
        let q = p_to_q_grid(p, &grid(5.0, 41)).unwrap();
        assert!(q.values.iter().all(|&v| (0.0..=1.0 / PI).contains(&v)));
    }

    #[test]
    fn vacuum_wigner() {
        let vac = FockDensityMatrix::fock(0, 6).unwrap();
        let w = wigner_from_characteristic(&vac, &grid(4.0, 33)).unwrap();
        for (a, v) in w.points().iter().zip(&w.values) {
            let expected = 2.0 / PI * (-2.0 * a.norm_sqr()).exp();
            assert!((v - expected).abs() < 1e-10, "{a}: {v} vs {expected}");
        }
        assert!((w.integrate() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fock_one_wigner_negative_at_origin() {
        let one = FockDensityMatrix::fock(1, 8).unwrap();
        let w = wigner_from_characteristic(&one, &grid(5.0, 41)).unwrap();
        let origin = w.value(20, 20);
        assert!((origin + 2.0 / PI).abs() < 1e-9, "{origin}");
        assert!((displaced_parity(&one, ComplexAmplitude::ZERO) + 2.0 / PI).abs() < 1e-14);
        assert!((w.integrate() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn wigner_matches_displaced_parity() {
        let spec = StateSpec::PhotonAddedCoherent { beta: amp(0.7, -0.3) };
        let rho = fock_density(&spec, 40).unwrap();
        let w = wigner_from_characteristic(&rho, &grid(5.0, 21)).unwrap();
        for (i, a) in w.points().iter().enumerate().step_by(37) {
            let expected = displaced_parity(&rho, amp(a.re, a.im));
            assert!((w.values[i] - expected).abs() < 1e-9, "{a}");
        }
    }

    #[test]
    fn antinormal_transform_reproduces_husimi() {
        let spec = StateSpec::SqueezedCoherent { beta: amp(0.5, 0.5), s: 1.6 };
        let rho = fock_density(&spec, 50).unwrap();
        let g = grid(6.0, 31);
        let q = transform_characteristic(&rho, &g, Ordering::Antinormal).unwrap();
        let direct = husimi_grid(&rho, &g).unwrap();
        assert!(q.max_abs_diff(&direct).unwrap() < 1e-6);
    }

    #[test]
    fn small_grid_reports_aliasing() {
        let spec = StateSpec::Coherent { beta: amp(2.5, 0.0) };
        let rho = fock_density(&spec, 50).unwrap();
        match wigner_from_characteristic(&rho, &grid(1.5, 21)) {
            Err(Error::Aliasing { suggested_extent, .. }) => assert!(suggested_extent > 1.5),
            other => panic!("expected aliasing, got {other:?}"),
        }
    }
}
