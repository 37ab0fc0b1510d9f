//! Phase-space amplitudes, bath parameters and their time scaling.
//!
//! A bath is described by its decay rate Γ and mean thermal occupation n̄.
//! After an elapsed time t every coherent amplitude shrinks by e^{−Γt} and the
//! bath has injected n̄_t = n̄(1 − e^{−2Γt}) thermal quanta; all closed forms in
//! this crate are written in terms of those two scaled quantities.

pub mod special;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use special::tricomi_u_half;

/// A point α = re + i·im of the single-mode phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexAmplitude {
    pub re: f64,
    pub im: f64,
}

impl ComplexAmplitude {
    pub const ZERO: ComplexAmplitude = ComplexAmplitude { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(invalid("amplitude", format!("non-finite component ({re}, {im})")));
        }
        Ok(Self { re, im })
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn try_from_c64(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

impl From<ComplexAmplitude> for Complex64 {
    fn from(a: ComplexAmplitude) -> Self {
        a.to_c64()
    }
}

/// Decay rate Γ (> 0) and bath occupation n̄ (≥ 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub gamma: f64,
    pub nbar: f64,
}

impl BathParams {
    pub fn new(gamma: f64, nbar: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid("gamma", format!("must be finite and > 0, got {gamma}")));
        }
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(invalid("nbar", format!("must be finite and >= 0, got {nbar}")));
        }
        Ok(Self { gamma, nbar })
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.nbar == 0.0
    }
}

/// The bath seen through an elapsed time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledBathParams {
    /// e^{−Γt}
    pub decay_factor: f64,
    /// n̄(1 − e^{−2Γt})
    pub nbar_t: f64,
    pub t: f64,
}

impl ScaledBathParams {
    /// e^{−2Γt}, the factor multiplying every second-order moment.
    pub fn decay_factor_sq(&self) -> f64 {
        self.decay_factor * self.decay_factor
    }
}

pub fn scale_bath(params: BathParams, t: f64) -> Result<ScaledBathParams> {
    check_time(t)?;
    let decay_factor = (-params.gamma * t).exp();
    // 1 − e^{−2Γt} through expm1 keeps n̄_t accurate for small Γt.
    let nbar_t = params.nbar * -(-2.0 * params.gamma * t).exp_m1();
    Ok(ScaledBathParams { decay_factor, nbar_t, t })
}

pub fn displace_amplitude(beta: ComplexAmplitude, scaled: &ScaledBathParams) -> ComplexAmplitude {
    ComplexAmplitude {
        re: beta.re * scaled.decay_factor,
        im: beta.im * scaled.decay_factor,
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_at_zero_time() {
        let s = scale_bath(BathParams::new(1.0, 2.0).unwrap(), 0.0).unwrap();
        assert_eq!(s.decay_factor, 1.0);
        assert_eq!(s.nbar_t, 0.0);
    }

    #[test]
    fn ln2_gives_exact_halves() {
        let s = scale_bath(BathParams::new(1.0, 2.0).unwrap(), std::f64::consts::LN_2).unwrap();
        assert!((s.decay_factor - 0.5).abs() < 1e-15);
        assert!((s.nbar_t - 1.5).abs() < 1e-15);
    }

    #[test]
    fn long_time_limit() {
        let s = scale_bath(BathParams::new(0.3, 1.7).unwrap(), 100.0).unwrap();
        assert!(s.decay_factor < 1e-12);
        assert!((s.nbar_t - 1.7).abs() < 1e-12);
    }

    #[test]
    fn negative_time_rejected() {
        let b = BathParams::new(1.0, 0.0).unwrap();
        assert!(matches!(scale_bath(b, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_bath_rejected() {
        assert!(BathParams::new(0.0, 1.0).is_err());
        assert!(BathParams::new(1.0, -0.5).is_err());
        assert!(BathParams::new(f64::NAN, 0.5).is_err());
        assert!(ComplexAmplitude::new(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn displacement_examples() {
        let beta = ComplexAmplitude::new(2.0, 1.0).unwrap();
        let unit = ScaledBathParams { decay_factor: 1.0, nbar_t: 0.0, t: 0.0 };
        assert_eq!(displace_amplitude(beta, &unit), beta);
        let half = ScaledBathParams { decay_factor: 0.5, nbar_t: 0.3, t: 1.0 };
        assert_eq!(displace_amplitude(beta, &half), ComplexAmplitude::new(1.0, 0.5).unwrap());
        assert_eq!(displace_amplitude(ComplexAmplitude::ZERO, &half), ComplexAmplitude::ZERO);
    }

    proptest! {
        #[test]
        fn decay_factor_composes(gamma in 0.01f64..5.0, nbar in 0.0f64..5.0, t1 in 0.0f64..4.0, t2 in 0.0f64..4.0) {
            let b = BathParams::new(gamma, nbar).unwrap();
            let s1 = scale_bath(b, t1).unwrap();
            let s2 = scale_bath(b, t2).unwrap();
            let s12 = scale_bath(b, t1 + t2).unwrap();
            prop_assert!((s12.decay_factor - s1.decay_factor * s2.decay_factor).abs() <= 1e-14);
            // n̄_{t1+t2} = n̄_{t2} + n̄_{t1}·e^{−2Γt2}
            let composed = s2.nbar_t + s1.nbar_t * s2.decay_factor_sq();
            prop_assert!((s12.nbar_t - composed).abs() <= 1e-13 * (1.0 + nbar));
        }

        #[test]
        fn scaled_invariants(gamma in 0.01f64..5.0, nbar in 0.0f64..5.0, t in 0.0f64..10.0) {
            let s = scale_bath(BathParams::new(gamma, nbar).unwrap(), t).unwrap();
            prop_assert!(s.decay_factor > 0.0 && s.decay_factor <= 1.0);
            prop_assert!(s.nbar_t >= 0.0 && s.nbar_t <= nbar);
            prop_assert!((s.nbar_t - nbar * (1.0 - s.decay_factor_sq())).abs() <= 1e-14 * (1.0 + nbar));
        }
    }
}
