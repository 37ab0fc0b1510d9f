//! Closed-form propagation of P functions and observables through a thermal
//! bath, without integrating the master equation.
//!
//! Every coherent component |β⟩⟨β| of the initial state relaxes into a
//! displaced thermal state centered at βe^{−Γt} with n̄_t thermal quanta, whose
//! P function is the Gaussian kernel exp(−|α − βe^{−Γt}|²/n̄_t)/(πn̄_t). The
//! evolved P function is therefore the initial one, shrunk by e^{−Γt} and
//! convolved with that kernel.

mod moments;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::phase_core::special::{binomial, ln_factorial};
use crate::phase_core::special::factorial;
use crate::phase_core::{check_time, scale_bath, BathParams, ComplexAmplitude, ScaledBathParams};
use crate::quadrature::{integrate_2d, QuadratureOptions, Rect};
use crate::quasiprob::{GridQuantity, PhaseSpaceGrid};
use crate::states::descriptor::gaussian_derivatives;
use crate::states::{
    initial_p_function_with_order, squeeze_heat_coefficients, PFunctionDescriptor, PolyTerm, StateSpec,
    DEFAULT_SERIES_ORDER,
};

pub use moments::{evolved_moments, mandel_q, MomentSet};

/// Upper bound on the first omitted term of a truncated hypergeometric series.
const SERIES_TAIL_TOL: f64 = 1e-10;

/// Kernel truncation radius in units of √(width): e^{−64} relative.
const KERNEL_RADII: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EvolvedForm {
    Descriptor(PFunctionDescriptor),
    /// Evaluated pointwise by quadrature of the initial descriptor against
    /// the kernel.
    Quadrature { initial: PFunctionDescriptor },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolvedPFunction {
    pub spec: Option<StateSpec>,
    pub bath: BathParams,
    pub scaled: ScaledBathParams,
    pub form: EvolvedForm,
}

impl EvolvedPFunction {
    /// Generic path: any initial descriptor, evaluated lazily by quadrature.
    pub fn by_quadrature(initial: PFunctionDescriptor, bath: BathParams, t: f64) -> Result<Self> {
        let scaled = scale_bath(bath, t)?;
        Ok(Self { spec: None, bath, scaled, form: EvolvedForm::Quadrature { initial } })
    }

    pub fn descriptor(&self) -> Option<&PFunctionDescriptor> {
        match &self.form {
            EvolvedForm::Descriptor(d) => Some(d),
            EvolvedForm::Quadrature { .. } => None,
        }
    }

    pub fn evaluate(&self, alpha: Complex64) -> Result<f64> {
        match &self.form {
            EvolvedForm::Descriptor(d) => d.evaluate(alpha),
            EvolvedForm::Quadrature { initial } => {
                if self.scaled.t == 0.0 {
                    return initial.evaluate(alpha);
                }
                if self.bath.is_zero_temperature() {
                    return initial.rescale(self.scaled.decay_factor).evaluate(alpha);
                }
                let v = convolve_point(initial, &self.scaled, alpha, &QuadratureOptions::default())?;
                Ok(v.value)
            }
        }
    }
}

///
/// The squeezed-state series starts at [`DEFAULT_SERIES_ORDER`] terms and is
/// lengthened, up to [`MAX_SERIES_ORDER`], until its tail bound is met.
pub fn evolve_p_closed_form(spec: &StateSpec, bath: BathParams, t: f64) -> Result<EvolvedPFunction> {
    let mut order = DEFAULT_SERIES_ORDER;
    if let StateSpec::SqueezedCoherent { s, .. } = *spec {
        let scaled = scale_bath(bath, t)?;
        if scaled.nbar_t > 0.0 {
            let (cx, cy) = squeeze_series_coefficients(s, &scaled);
            order = required_series_order(cx.abs().max(cy.abs())).unwrap_or(DEFAULT_SERIES_ORDER);
        }
    }
    evolve_p_closed_form_with_order(spec, bath, t, order)
}

/// Longest squeezed-state series [`evolve_p_closed_form`] will use.
pub const MAX_SERIES_ORDER: usize = 400;

/// Series coefficients (cx, cy) = 4(A, B) e^{−2Γt}/n̄_t; needs n̄_t > 0.
fn squeeze_series_coefficients(s: f64, scaled: &ScaledBathParams) -> (f64, f64) {
    let (ax, ay) = squeeze_heat_coefficients(s);
    let k = 4.0 * scaled.decay_factor_sq() / scaled.nbar_t;
    (ax * k, ay * k)
}

fn series_tail(c: f64, order: usize) -> f64 {
    let m = order + 1;
    let ln_central = ln_factorial(2 * m) - 2.0 * ln_factorial(m) - m as f64 * 4f64.ln();
    (m as f64 * c.ln() + ln_central).exp()
}

/// Smallest order ≥ the default whose tail bound is met, if any up to the cap.
fn required_series_order(c: f64) -> Option<usize> {
    if c == 0.0 {
        return Some(DEFAULT_SERIES_ORDER);
    }
    (DEFAULT_SERIES_ORDER..=MAX_SERIES_ORDER).find(|&n| series_tail(c, n) < SERIES_TAIL_TOL)
}

/// [`evolve_p_closed_form`] with an explicit squeezed-state series order.
pub fn evolve_p_closed_form_with_order(
    spec: &StateSpec,
    bath: BathParams,
    t: f64,
    order: usize,
) -> Result<EvolvedPFunction> {
    let scaled = scale_bath(bath, t)?;
    spec.validate()?;
    let wrap = |d: PFunctionDescriptor| EvolvedPFunction {
        spec: Some(*spec),
        bath,
        scaled,
        form: EvolvedForm::Descriptor(d),
    };
    if t == 0.0 {
        return Ok(wrap(initial_p_function_with_order(spec, order)?));
    }
    if bath.is_zero_temperature() {
        // the kernel degenerates to a delta; pure rescaling remains
        let initial = initial_p_function_with_order(spec, order)?;
        return Ok(wrap(evolve_p_zero_temperature(&initial, bath.gamma, t)?));
    }

    let d = scaled.decay_factor;
    let dd = scaled.decay_factor_sq();
    let n = scaled.nbar_t;
    let shrink = |b: ComplexAmplitude| ComplexAmplitude { re: b.re * d, im: b.im * d };
    let desc = match *spec {
        StateSpec::Coherent { beta } => PFunctionDescriptor::gaussian(shrink(beta), n),
        StateSpec::Thermal { mbar } => PFunctionDescriptor::gaussian(ComplexAmplitude::ZERO, mbar * dd + n),
        StateSpec::DisplacedThermal { beta, nbar_eff } => {
            PFunctionDescriptor::gaussian(shrink(beta), nbar_eff * dd + n)
        }
        StateSpec::PhotonAddedThermal { mbar } => {
            let w = mbar * dd + n;
            PFunctionDescriptor::GaussianPolynomial {
                center: ComplexAmplitude::ZERO,
                width: w,
                terms: vec![
                    PolyTerm { j: 1, k: 1, coeff: Complex64::new((mbar + 1.0) * dd / (PI * w.powi(3)), 0.0) },
                    PolyTerm { j: 0, k: 0, coeff: Complex64::new((n - dd) / (PI * w * w), 0.0) },
                ],
            }
        }
        StateSpec::PhotonAddedCoherent { beta } => {
            // |(d/n)α + (1 − d²/n)β|² + (1 − d²/n) with α = dβ + z becomes
            // |β + (d/n)z|² + 1 − d²/n
            let b = beta.to_c64();
            let g = d / n;
            let pre = 1.0 / (PI * n * (1.0 + beta.norm_sqr()));
            let c = |z: Complex64| z * pre;
            PFunctionDescriptor::GaussianPolynomial {
                center: shrink(beta),
                width: n,
                terms: vec![
                    PolyTerm { j: 0, k: 0, coeff: c(Complex64::new(beta.norm_sqr() + 1.0 - dd / n, 0.0)) },
                    PolyTerm { j: 1, k: 0, coeff: c(b.conj() * g) },
                    PolyTerm { j: 0, k: 1, coeff: c(b * g) },
                    PolyTerm { j: 1, k: 1, coeff: c(Complex64::new(g * g, 0.0)) },
                ],
            }
        }
        StateSpec::SqueezedCoherent { beta, s } => {
            let (cx, cy) = squeeze_series_coefficients(s, &scaled);
            check_series_tail(cx.abs().max(cy.abs()), order)?;
            PFunctionDescriptor::HypergeometricSeries { center: shrink(beta), width: n, cx, cy, order }
        }
    };
    Ok(wrap(desc))
}

/// Bounds the first omitted term cᴺ⁺¹ C(2N+2, N+1)/4ᴺ⁺¹ of the series at
/// its center, where each term is largest relative to the Gaussian envelope.
fn check_series_tail(c: f64, order: usize) -> Result<()> {
    let tail = if c == 0.0 { 0.0 } else { series_tail(c, order) };
    if !(tail < SERIES_TAIL_TOL) {
        return Err(Error::SeriesNotConverged { tail, coefficient: c, order });
    }
    Ok(())
}

/// P(α;t) = P(αe^{Γt}; 0) e^{2Γt}, valid for a zero-temperature bath.
pub fn evolve_p_zero_temperature(p0: &PFunctionDescriptor, gamma: f64, t: f64) -> Result<PFunctionDescriptor> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(p0.clone());
    }
    Ok(p0.rescale((-gamma * t).exp()))
}

/// Closed-form ∫ P(β) exp(−|α − dβ|²/w)/(πw) d²β for delta,
/// Gaussian-polynomial and hypergeometric-series descriptors.
///
/// With w = n̄_t and d = e^{−Γt} this propagates any such descriptor through
/// the bath; with w = 1 and d = 1 it is the P-to-Q smoothing.
pub fn smooth_closed_form(p: &PFunctionDescriptor, d: f64, w: f64) -> Result<PFunctionDescriptor> {
    if w == 0.0 {
        return Ok(p.rescale(d));
    }
    match p {
        PFunctionDescriptor::Delta { center } => Ok(PFunctionDescriptor::gaussian(
            ComplexAmplitude { re: center.re * d, im: center.im * d },
            w,
        )),
        PFunctionDescriptor::GaussianPolynomial { center, width, terms } => {
            let v = *width;
            let big_w = w + d * d * v;
            let lambda_inv = v * w / big_w;
            let kappa = d * v / big_w;
            let max_j = terms.iter().map(|t| t.j).max().unwrap_or(0);
            let max_k = terms.iter().map(|t| t.k).max().unwrap_or(0);
            let mut out = Vec::new();
            for p_ in 0..=max_j {
                for q in 0..=max_k {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for t in terms {
                        if t.j < p_ || t.k < q || t.j - p_ != t.k - q {
                            continue;
                        }
                        let i = t.j - p_;
                        acc += t.coeff
                            * (binomial(t.j, i) * binomial(t.k, i) * factorial(i) * lambda_inv.powi(i as i32));
                    }
                    if acc.norm_sqr() > 0.0 {
                        out.push(PolyTerm {
                            j: p_,
                            k: q,
                            coeff: acc * (v / big_w) * kappa.powi((p_ + q) as i32),
                        });
                    }
                }
            }
            Ok(PFunctionDescriptor::GaussianPolynomial {
                center: ComplexAmplitude { re: center.re * d, im: center.im * d },
                width: big_w,
                terms: out,
            })
        }
        // exp(a∂ₓ² + b∂ᵧ²) acting on a Gaussian commutes with the smoothing;
        // only the width and the normalized coefficients 4a/width change
        PFunctionDescriptor::HypergeometricSeries { center, width, cx, cy, order } => {
            let big_w = w + d * d * width;
            let r = d * d * width / big_w;
            Ok(PFunctionDescriptor::HypergeometricSeries {
                center: ComplexAmplitude { re: center.re * d, im: center.im * d },
                width: big_w,
                cx: cx * r,
                cy: cy * r,
                order: *order,
            })
        }
        other => Err(Error::Domain(format!(
            "no closed-form Gaussian smoothing for a {} descriptor",
            other.kind_name()
        ))),
    }
}

/// Propagates a delta or Gaussian-polynomial descriptor through the bath in
/// closed form.
pub fn evolve_descriptor(p0: &PFunctionDescriptor, bath: BathParams, t: f64) -> Result<PFunctionDescriptor> {
    let s = scale_bath(bath, t)?;
    if t == 0.0 {
        return Ok(p0.clone());
    }
    smooth_closed_form(p0, s.decay_factor, s.nbar_t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convolution {
    pub grid: PhaseSpaceGrid,
    /// Largest per-point quadrature error estimate (0 for exact paths).
    pub error_estimate: f64,
}

pub fn convolve_p_numeric(
    p0: &PFunctionDescriptor,
    bath: BathParams,
    t: f64,
    grid: &PhaseSpaceGrid,
) -> Result<Convolution> {
    convolve_p_numeric_with(p0, bath, t, grid, &QuadratureOptions::default())
}

/// Evaluates P(α;t) = (πn̄_t)^{−1} ∫ P(β;0) exp(−|α − βe^{−Γt}|²/n̄_t) d²β at
/// every grid point. Deltas are sifted exactly and derivative series act on
/// the analytically differentiated kernel; regular kinds use adaptive cubature.
pub fn convolve_p_numeric_with(
    p0: &PFunctionDescriptor,
    bath: BathParams,
    t: f64,
    grid: &PhaseSpaceGrid,
    opts: &QuadratureOptions,
) -> Result<Convolution> {
    let scaled = scale_bath(bath, t)?;
    if !(scaled.nbar_t > 0.0) {
        return Err(Error::Domain(format!(
            "numeric convolution needs nbar_t > 0 (nbar = {}, t = {t})",
            bath.nbar
        )));
    }
    let points = grid.points();
    let results: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .map(|&alpha| convolve_point(p0, &scaled, alpha, opts).map(|i| (i.value, i.error_estimate)))
        .collect();
    let mut values = Vec::with_capacity(results.len());
    let mut worst = 0.0f64;
    for r in results {
        let (v, e) = r?;
        values.push(v);
        worst = worst.max(e);
    }
    if worst > opts.tolerance {
        return Err(Error::QuadratureNonConvergence { estimate: worst, tolerance: opts.tolerance });
    }
    let mut out = grid.with_values(values)?;
    out.meta.quantity = GridQuantity::P;
    out.meta.time = t;
    Ok(Convolution { grid: out, error_estimate: worst })
}

pub(crate) fn convolve_point(
    p0: &PFunctionDescriptor,
    scaled: &ScaledBathParams,
    alpha: Complex64,
    opts: &QuadratureOptions,
) -> Result<crate::quadrature::Integral> {
    let d = scaled.decay_factor;
    let n = scaled.nbar_t;
    let kernel = |bx: f64, by: f64| {
        let ux = alpha.re - d * bx;
        let uy = alpha.im - d * by;
        (-(ux * ux + uy * uy) / n).exp() / (PI * n)
    };
    let exact = |value| crate::quadrature::Integral { value, error_estimate: 0.0 };
    match p0 {
        PFunctionDescriptor::Delta { center } => Ok(exact(kernel(center.re, center.im))),
        PFunctionDescriptor::DeltaDerivativeSeries { center, weights, .. } => {
            let max = PFunctionDescriptor::max_derivative(weights);
            // ∂_β^j K = (−d)^j ∂_u^j K with u = α − dβ
            let table = |u: f64| {
                let mut g = gaussian_derivatives(u, n, max);
                let mut f = 1.0;
                for v in g.iter_mut() {
                    *v *= f;
                    f *= -d;
                }
                g
            };
            let fx = table(alpha.re - d * center.re);
            let fy = table(alpha.im - d * center.im);
            Ok(exact(PFunctionDescriptor::apply_separable(weights, &fx, &fy) / (PI * n)))
        }
        PFunctionDescriptor::SampledGrid(g) => Ok(exact(g.integrate_fn(|bx, by| kernel(bx, by)))),
        regular => {
            let (c, r) = regular.support();
            let p_box = Rect { x0: c.re - r, x1: c.re + r, y0: c.im - r, y1: c.im + r };
            let rk = KERNEL_RADII * n.sqrt() / d;
            let (kx, ky) = (alpha.re / d, alpha.im / d);
            let k_box = Rect { x0: kx - rk, x1: kx + rk, y0: ky - rk, y1: ky + rk };
            let Some(domain) = p_box.intersect(&k_box) else {
                return Ok(exact(0.0));
            };
            let f = |bx: f64, by: f64| {
                regular.evaluate(Complex64::new(bx, by)).unwrap_or(0.0) * kernel(bx, by)
            };
            Ok(integrate_2d(f, domain, opts))
        }
    }
}

/// Samples an evolved closed form on `grid`.
pub fn sample_on_grid(evolved: &EvolvedPFunction, grid: &PhaseSpaceGrid) -> Result<PhaseSpaceGrid> {
    let values: Vec<Result<f64>> = grid.points().par_iter().map(|&a| evolved.evaluate(a)).collect();
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let mut out = grid.with_values(values)?;
    out.meta.quantity = GridQuantity::P;
    out.meta.time = evolved.scaled.t;
    if let Some(spec) = evolved.spec {
        out.meta.state = spec.family_name().to_string();
    }
    Ok(out)
}
