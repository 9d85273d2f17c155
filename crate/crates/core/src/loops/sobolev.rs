use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Loop;
use crate::error::{Error, Result};

/// Comparison of `max |eta|` with the embedding bound
/// `sqrt((1 + tau) / tau) * ||eta||_{W^{1,2}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevCheck {
    pub sup_norm: f64,
    pub w12_norm: f64,
    pub constant: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `||eta||^2 = tau |a_0|^2 + (tau / 2) sum (|a_k|^2 + |b_k|^2)(1 + w_k^2)`.
pub fn w12_norm(eta: &Loop) -> f64 {
    let tau = eta.tau();
    let mut s = tau * eta.cos_coeffs()[0].norm_squared();
    for k in 1..=eta.n_modes() {
        let w = 2.0 * PI * k as f64 / tau;
        s += 0.5
            * tau
            * (eta.cos_coeffs()[k].norm_squared() + eta.sin_coeffs()[k].norm_squared())
            * (1.0 + w * w);
    }
    s.sqrt()
}

/// Check the `C^0` bound on a contractible variation, sampling `n_t` points.
pub fn sobolev_c0_check(eta: &Loop, n_t: usize) -> Result<SobolevCheck> {
    if eta.winding().iter().any(|&w| w != 0) {
        return Err(Error::Precondition("variations have zero winding".into()));
    }
    let s = eta.samples(n_t.max(2 * eta.n_modes() + 1))?;
    let sup_norm = s.q.iter().map(|q| q.norm()).fold(0.0, f64::max);
    let w12 = w12_norm(eta);
    let constant = ((1.0 + eta.tau()) / eta.tau()).sqrt();
    let bound = constant * w12;
    Ok(SobolevCheck {
        sup_norm,
        w12_norm: w12,
        constant,
        bound,
        holds: sup_norm <= bound * (1.0 + 1e-12),
    })
}
