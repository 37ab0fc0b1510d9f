use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_core::{scale_bath, BathParams};

/// First and second moments of the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    /// ⟨a⟩
    pub mean_a: Complex64,
    /// ⟨a†a⟩
    pub mean_n: f64,
    /// ⟨a†²a²⟩
    pub second_factorial: f64,
    /// ⟨(ΔX)²⟩ with X = (a + a†)/2
    pub var_x: f64,
    /// ⟨(ΔY)²⟩ with Y = (a − a†)/2i
    pub var_y: f64,
}

impl MomentSet {
    /// (⟨(Δn)²⟩ − ⟨n⟩)/⟨n⟩ = (⟨a†²a²⟩ − ⟨n⟩²)/⟨n⟩.
    pub fn mandel_q(&self) -> Result<f64> {
        if !(self.mean_n > 0.0) {
            return Err(Error::Domain("Mandel Q is undefined for the vacuum (mean_n = 0)".into()));
        }
        Ok((self.second_factorial - self.mean_n * self.mean_n) / self.mean_n)
    }

    pub fn uncertainty_product(&self) -> f64 {
        self.var_x * self.var_y
    }

    /// Checks the physicality constraints up to `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let bad = |what: &str| Err(Error::Domain(format!("unphysical moments ({what}): {self:?}")));
        if self.mean_n < -tol || self.second_factorial < -tol {
            return bad("negative occupation");
        }
        if self.var_x <= 0.0 || self.var_y <= 0.0 {
            return bad("non-positive variance");
        }
        if self.uncertainty_product() < 1.0 / 16.0 - tol {
            return bad("uncertainty relation");
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &MomentSet) -> f64 {
        [
            (self.mean_a - other.mean_a).norm(),
            (self.mean_n - other.mean_n).abs(),
            (self.second_factorial - other.second_factorial).abs(),
            (self.var_x - other.var_x).abs(),
            (self.var_y - other.var_y).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Moments after time `t`:
/// ⟨a⟩ e^{−Γt}, ⟨n⟩ e^{−2Γt} + n̄_t, (2n̄_t+1)/4 + [var(0) − ¼] e^{−2Γt},
/// and ⟨a†²a²⟩ e^{−4Γt} + 4n̄_t⟨n⟩ e^{−2Γt} + 2n̄_t².
pub fn evolved_moments(m0: &MomentSet, bath: BathParams, t: f64) -> Result<MomentSet> {
    let s = scale_bath(bath, t)?;
    if t == 0.0 {
        return Ok(*m0);
    }
    let dd = s.decay_factor_sq();
    let n = s.nbar_t;
    let var = |v0: f64| (2.0 * n + 1.0) / 4.0 + (v0 - 0.25) * dd;
    Ok(MomentSet {
        mean_a: m0.mean_a * s.decay_factor,
        mean_n: m0.mean_n * dd + n,
        second_factorial: m0.second_factorial * dd * dd + 4.0 * n * m0.mean_n * dd + 2.0 * n * n,
        var_x: var(m0.var_x),
        var_y: var(m0.var_y),
    })
}

/// Mandel's Q at time `t` from the initial moments.
pub fn mandel_q(m0: &MomentSet, bath: BathParams, t: f64) -> Result<f64> {
    let s = scale_bath(bath, t)?;
    let dd = s.decay_factor_sq();
    let n = s.nbar_t;
    let denom = m0.mean_n * dd + n;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!("Mandel Q undefined: mean photon number {denom} at t = {t}")));
    }
    let numer = (m0.second_factorial - m0.mean_n * m0.mean_n) * dd * dd + 2.0 * n * m0.mean_n * dd + n * n;
    Ok(numer / denom)
}
