//! Truncated Fock-basis integrator for the thermal-bath master equation
//!
//! dρ/dt = Γ(1+n̄)(2aρa† − a†aρ − ρa†a) + Γn̄(2a†ρa − aa†ρ − ρaa†)
//!
//! used as an independent ground truth for the closed forms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::evolution::MomentSet;
use crate::phase_core::special::coherent_amplitudes;
use crate::phase_core::{check_time, BathParams, ComplexAmplitude};
use crate::quasiprob::{GridQuantity, PhaseSpaceGrid};
use crate::states::{hermitize, FockDensityMatrix};

const MAX_TRACE_DRIFT: f64 = 1e-6;

/// Explicit RK4 is stable while step·Γ·(1+2n̄)·cutoff stays below this; the
/// largest Liouvillian decay rate grows like 2Γ(1+2n̄)·cutoff and RK4's real
/// stability interval is about 2.8, so 0.5 keeps a wide margin.
pub const STABILITY_BOUND: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladSettings {
    pub cutoff: usize,
    pub step: f64,
    pub bath: BathParams,
}

impl LindbladSettings {
    pub fn new(cutoff: usize, step: f64, bath: BathParams) -> Result<Self> {
        if cutoff < 2 {
            return Err(invalid("cutoff", format!("must be >= 2, got {cutoff}")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(invalid("step", format!("must be > 0, got {step}")));
        }
        let bound = step * bath.gamma * (1.0 + 2.0 * bath.nbar) * cutoff as f64;
        if bound >= STABILITY_BOUND {
            return Err(Error::Unstable { step, bound });
        }
        Ok(Self { cutoff, step, bath })
    }
}

/// Precomputed ladder factors for a given cutoff and bath.
struct Liouvillian {
    dim: usize,
    down: f64,
    up: f64,
    /// √k
    sqrt: Vec<f64>,
    /// diagonal of the truncated a a†: k+1, and 0 on the last level
    aad: Vec<f64>,
}

impl Liouvillian {
    fn new(dim: usize, bath: BathParams) -> Self {
        Self {
            dim,
            down: bath.gamma * (1.0 + bath.nbar),
            up: bath.gamma * bath.nbar,
            sqrt: (0..=dim).map(|k| (k as f64).sqrt()).collect(),
            aad: (0..dim).map(|k| if k + 1 < dim { (k + 1) as f64 } else { 0.0 }).collect(),
        }
    }

    fn apply(&self, rho: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let n = self.dim;
        for col in 0..n {
            for row in 0..n {
                let r = rho[(row, col)];
                let mut v = r * (-self.down * (row + col) as f64 - self.up * (self.aad[row] + self.aad[col]));
                if row + 1 < n && col + 1 < n {
                    v += rho[(row + 1, col + 1)] * (2.0 * self.down * self.sqrt[row + 1] * self.sqrt[col + 1]);
                }
                if row > 0 && col > 0 && self.up != 0.0 {
                    v += rho[(row - 1, col - 1)] * (2.0 * self.up * self.sqrt[row] * self.sqrt[col]);
                }
                out[(row, col)] = v;
            }
        }
    }
}

/// L̂ρ with the ladder operators truncated at the matrix dimension.
pub fn apply_liouvillian(rho: &DMatrix<Complex64>, bath: BathParams) -> Result<DMatrix<Complex64>> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), found: rho.ncols() });
    }
    let l = Liouvillian::new(rho.nrows(), bath);
    let mut out = DMatrix::zeros(rho.nrows(), rho.ncols());
    l.apply(rho, &mut out);
    Ok(out)
}

/// y += a·x
fn axpy(y: &mut DMatrix<Complex64>, a: f64, x: &DMatrix<Complex64>) {
    y.iter_mut().zip(x.iter()).for_each(|(yi, xi)| *yi += xi * a);
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FockDensityMatrix>,
    /// |Tr ρ(t) − Tr ρ(0)| at each sample.
    pub trace_drift: Vec<f64>,
    /// Smallest eigenvalue of each sample (positivity is checked, not enforced).
    pub min_eigenvalues: Vec<f64>,
}

impl Trajectory {
    pub fn max_trace_drift(&self) -> f64 {
        self.trace_drift.iter().cloned().fold(0.0, f64::max)
    }
}

/// Classic RK4 from 0 to `t_final`, re-Hermitizing after each step and
/// landing exactly on every sample time.
pub fn integrate(
    rho0: &FockDensityMatrix,
    settings: &LindbladSettings,
    t_final: f64,
    sample_times: &[f64],
) -> Result<Trajectory> {
    check_time(t_final)?;
    if rho0.cutoff() != settings.cutoff {
        return Err(Error::DimensionMismatch { expected: settings.cutoff, found: rho0.cutoff() });
    }
    if sample_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("sample_times", "must be sorted"));
    }
    if sample_times.iter().any(|&t| !(0.0..=t_final).contains(&t)) {
        return Err(invalid("sample_times", format!("must lie within [0, {t_final}]")));
    }

    let dim = settings.cutoff;
    let liou = Liouvillian::new(dim, settings.bath);
    let mut rho = rho0.elements().clone();
    let trace0 = rho0.trace();
    let zeros = || DMatrix::<Complex64>::zeros(dim, dim);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (zeros(), zeros(), zeros(), zeros(), zeros());

    let mut traj = Trajectory {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        trace_drift: Vec::with_capacity(sample_times.len()),
        min_eigenvalues: Vec::with_capacity(sample_times.len()),
    };
    let mut t = 0.0;
    for &target in sample_times {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / settings.step).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                liou.apply(&rho, &mut k1);
                tmp.copy_from(&rho);
                axpy(&mut tmp, 0.5 * h, &k1);
                liou.apply(&tmp, &mut k2);
                tmp.copy_from(&rho);
                axpy(&mut tmp, 0.5 * h, &k2);
                liou.apply(&tmp, &mut k3);
                tmp.copy_from(&rho);
                axpy(&mut tmp, h, &k3);
                liou.apply(&tmp, &mut k4);
                axpy(&mut rho, h / 6.0, &k1);
                axpy(&mut rho, h / 3.0, &k2);
                axpy(&mut rho, h / 3.0, &k3);
                axpy(&mut rho, h / 6.0, &k4);
                hermitize(&mut rho);
            }
            t = target;
        }
        let state = FockDensityMatrix::from_hermitian(rho.clone(), rho0.trace_deficit());
        let drift = (state.trace() - trace0).abs();
        if drift > MAX_TRACE_DRIFT {
            return Err(Error::TraceDrift { drift, time: target });
        }
        traj.min_eigenvalues.push(state.min_eigenvalue());
        traj.trace_drift.push(drift);
        traj.times.push(target);
        traj.states.push(state);
    }
    Ok(traj)
}

/// Emitted when a coherent state |α⟩ extends past the Fock cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWarning {
    pub amplitude_sq: f64,
    pub cutoff: usize,
    /// Weight of |α⟩ outside the truncated basis, 1 − Σ_{n<N} |⟨n|α⟩|².
    pub tail_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guarded<T> {
    pub value: T,
    pub warning: Option<TruncationWarning>,
}

/// Flags |ξ|² ≥ cutoff/4.
pub(crate) fn truncation_guard(amp_sq: f64, cutoff: usize) -> Option<TruncationWarning> {
    if amp_sq < cutoff as f64 / 4.0 {
        return None;
    }
    let amps = coherent_amplitudes(Complex64::new(amp_sq.sqrt(), 0.0), cutoff);
    let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    Some(TruncationWarning { amplitude_sq: amp_sq, cutoff, tail_weight: (1.0 - kept).max(0.0) })
}

/// Q(α) = ⟨α|ρ|α⟩/π.
pub fn husimi_q(rho: &FockDensityMatrix, alpha: ComplexAmplitude) -> Guarded<f64> {
    let n = rho.cutoff();
    let c = coherent_amplitudes(alpha.to_c64(), n);
    let m = rho.elements();
    let mut acc = Complex64::new(0.0, 0.0);
    for col in 0..n {
        let mut inner = Complex64::new(0.0, 0.0);
        for row in 0..n {
            inner += c[row].conj() * m[(row, col)];
        }
        acc += inner * c[col];
    }
    Guarded { value: acc.re / PI, warning: truncation_guard(alpha.norm_sqr(), n) }
}

/// Husimi function sampled on every point of `grid`.
pub fn husimi_grid(rho: &FockDensityMatrix, grid: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    let values: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|a| husimi_q(rho, ComplexAmplitude { re: a.re, im: a.im }).value)
        .collect();
    let mut out = grid.with_values(values)?;
    out.meta.quantity = GridQuantity::Q;
    Ok(out)
}

/// Moments by traces against the truncated operator matrices.
pub fn moments_from_rho(rho: &FockDensityMatrix) -> MomentSet {
    let m = rho.elements();
    let n = rho.cutoff();
    let mut mean_a = Complex64::new(0.0, 0.0);
    let mut mean_a2 = Complex64::new(0.0, 0.0);
    let mut mean_n = 0.0;
    let mut second = 0.0;
    for k in 0..n {
        let kf = k as f64;
        let p = m[(k, k)].re;
        mean_n += kf * p;
        second += kf * (kf - 1.0) * p;
        if k + 1 < n {
            mean_a += m[(k + 1, k)] * (kf + 1.0).sqrt();
        }
        if k + 2 < n {
            mean_a2 += m[(k + 2, k)] * ((kf + 1.0) * (kf + 2.0)).sqrt();
        }
    }
    // X² = (a² + a†² + 2a†a + 1)/4 and Y² = (−a² − a†² + 2a†a + 1)/4
    let tr = rho.trace();
    MomentSet {
        mean_a,
        mean_n,
        second_factorial: second,
        var_x: (2.0 * mean_a2.re + 2.0 * mean_n + tr) / 4.0 - mean_a.re * mean_a.re,
        var_y: (-2.0 * mean_a2.re + 2.0 * mean_n + tr) / 4.0 - mean_a.im * mean_a.im,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{fock_density, StateSpec};

    fn amp(re: f64, im: f64) -> ComplexAmplitude {
        ComplexAmplitude::new(re, im).unwrap()
    }

    #[test]
    fn thermal_is_stationary() {
        for nbar in [0.3, 1.0, 2.0] {
            let bath = BathParams::new(0.7, nbar).unwrap();
            let rho = fock_density(&StateSpec::Thermal { mbar: nbar }, 60).unwrap();
            let d = apply_liouvillian(rho.elements(), bath).unwrap();
            let worst = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(worst < 1e-10, "nbar={nbar}: {worst}");
        }
    }

    #[test]
    fn vacuum_is_dark_at_zero_temperature() {
        let bath = BathParams::new(1.0, 0.0).unwrap();
        let rho = FockDensityMatrix::fock(0, 8).unwrap();
        let d = apply_liouvillian(rho.elements(), bath).unwrap();
        assert!(d.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn liouvillian_is_traceless_and_hermitian() {
        let bath = BathParams::new(0.4, 1.3).unwrap();
        let rho = fock_density(&StateSpec::PhotonAddedCoherent { beta: amp(0.8, -0.5) }, 30).unwrap();
        let d = apply_liouvillian(rho.elements(), bath).unwrap();
        let tr: Complex64 = d.diagonal().iter().sum();
        assert!(tr.norm() < 1e-13);
        assert!((&d - d.adjoint()).iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn non_square_rejected() {
        let m = DMatrix::<Complex64>::zeros(3, 4);
        assert!(matches!(
            apply_liouvillian(&m, BathParams::new(1.0, 0.0).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coherent_amplitude_decay_rate() {
        // d⟨a⟩/dt = −Γ⟨a⟩, checked against the derivative and the first step
        let gamma = 0.8;
        let bath = BathParams::new(gamma, 0.0).unwrap();
        let rho = fock_density(&StateSpec::Coherent { beta: amp(1.0, 0.0) }, 40).unwrap();
        let d = apply_liouvillian(rho.elements(), bath).unwrap();
        let deriv = FockDensityMatrix::from_hermitian(d, 0.0);
        let da = moments_from_rho(&deriv).mean_a;
        assert!((da - Complex64::new(-gamma, 0.0)).norm() < 1e-12);

        let h = 1e-4;
        let s = LindbladSettings::new(40, h, bath).unwrap();
        let tr = integrate(&rho, &s, h, &[h]).unwrap();
        let a1 = moments_from_rho(&tr.states[0]).mean_a;
        let fd = (a1 - Complex64::new(1.0, 0.0)) / h;
        assert!((fd - Complex64::new(-gamma, 0.0)).norm() < 1e-4);
    }

    #[test]
    fn zero_time_is_identity() {
        let bath = BathParams::new(0.5, 1.0).unwrap();
        let rho = fock_density(&StateSpec::Thermal { mbar: 0.4 }, 20).unwrap();
        let s = LindbladSettings::new(20, 1e-3, bath).unwrap();
        let tr = integrate(&rho, &s, 0.0, &[0.0]).unwrap();
        assert_eq!(tr.states[0].elements(), rho.elements());
    }

    #[test]
    fn coherent_stays_coherent_at_zero_temperature() {
        let (gamma, t) = (0.5, 1.3);
        let beta = amp(1.2, -0.7);
        let bath = BathParams::new(gamma, 0.0).unwrap();
        let rho = fock_density(&StateSpec::Coherent { beta }, 40).unwrap();
        let s = LindbladSettings::new(40, 1e-3, bath).unwrap();
        let tr = integrate(&rho, &s, t, &[t]).unwrap();
        let d = (-gamma * t).exp();
        let target = coherent_amplitudes(beta.to_c64() * d, 40);
        assert!(tr.states[0].fidelity_with_pure(&target) > 1.0 - 1e-8);
    }

    #[test]
    fn coherent_becomes_displaced_thermal() {
        let (gamma, nbar, t) = (0.5, 0.8, 0.9);
        let beta = amp(0.9, 0.6);
        let bath = BathParams::new(gamma, nbar).unwrap();
        let rho = fock_density(&StateSpec::Coherent { beta }, 50).unwrap();
        let s = LindbladSettings::new(50, 1e-3, bath).unwrap();
        let tr = integrate(&rho, &s, t, &[t]).unwrap();
        let scaled = crate::phase_core::scale_bath(bath, t).unwrap();
        let expected = fock_density(
            &StateSpec::DisplacedThermal {
                beta: crate::phase_core::displace_amplitude(beta, &scaled),
                nbar_eff: scaled.nbar_t,
            },
            50,
        )
        .unwrap();
        let dist = tr.states[0].trace_distance(&expected).unwrap();
        assert!(dist < 1e-6, "{dist}");
    }

    #[test]
    fn unstable_step_rejected() {
        let bath = BathParams::new(1.0, 2.0).unwrap();
        assert!(matches!(LindbladSettings::new(60, 0.01, bath), Err(Error::Unstable { .. })));
    }

    #[test]
    fn unsorted_samples_rejected() {
        let bath = BathParams::new(1.0, 0.0).unwrap();
        let rho = FockDensityMatrix::fock(1, 5).unwrap();
        let s = LindbladSettings::new(5, 1e-3, bath).unwrap();
        assert!(integrate(&rho, &s, 1.0, &[0.5, 0.2]).is_err());
        assert!(integrate(&rho, &s, 1.0, &[2.0]).is_err());
    }

    #[test]
    fn husimi_examples() {
        let vac = FockDensityMatrix::fock(0, 10).unwrap();
        let q = husimi_q(&vac, ComplexAmplitude::ZERO);
        assert!((q.value - 1.0 / PI).abs() < 1e-15);
        assert!(q.warning.is_none());

        let beta = amp(0.7, -0.4);
        let rho = fock_density(&StateSpec::Coherent { beta }, 40).unwrap();
        let a = amp(-0.2, 0.5);
        let expected = (-(a.to_c64() - beta.to_c64()).norm_sqr()).exp() / PI;
        assert!((husimi_q(&rho, a).value - expected).abs() < 1e-14);

        let far = husimi_q(&vac, amp(2.0, 0.0));
        let w = far.warning.expect("|α|² = 4 >= 10/4");
        assert!(w.tail_weight > 0.0 && w.tail_weight < 1e-2);
    }

    #[test]
    fn moments_of_simple_states() {
        let vac = FockDensityMatrix::fock(0, 6).unwrap();
        let m = moments_from_rho(&vac);
        assert_eq!(m.mean_n, 0.0);
        assert!((m.var_x - 0.25).abs() < 1e-15 && (m.var_y - 0.25).abs() < 1e-15);

        let th = fock_density(&StateSpec::Thermal { mbar: 1.5 }, 120).unwrap();
        assert!((moments_from_rho(&th).var_x - 1.0).abs() < 1e-12);

        let one = FockDensityMatrix::fock(1, 6).unwrap();
        let m1 = moments_from_rho(&one);
        assert_eq!(m1.mean_n, 1.0);
        assert_eq!(m1.mandel_q().unwrap(), -1.0);
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let bath = BathParams::new(1.0, 0.5).unwrap();
        let rho = fock_density(&StateSpec::Coherent { beta: amp(1.5, 0.0) }, 30).unwrap();
        let t = 1.0;
        let exact = {
            let s = LindbladSettings::new(30, 1e-4, bath).unwrap();
            moments_from_rho(&integrate(&rho, &s, t, &[t]).unwrap().states[0]).second_factorial
        };
        let err = |h: f64| {
            let s = LindbladSettings::new(30, h, bath).unwrap();
            let m = moments_from_rho(&integrate(&rho, &s, t, &[t]).unwrap().states[0]);
            (m.second_factorial - exact).abs()
        };
        let (e1, e2) = (err(0.008), err(0.004));
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio} ({e1:e}, {e2:e})");
    }
}
