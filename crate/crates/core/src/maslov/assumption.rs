//! Reflection symmetry of a coefficient path about `t = 0` and `t = tau / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symplectic::{block_decompose, Coefficient};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// `max |B - B^T|`.
    pub symmetry: f64,
    /// `max |B(t + tau) - B(t)|`.
    pub periodicity: f64,
    /// Worst violation of evenness of the diagonal blocks about `0` and `tau / 2`.
    pub even_blocks: f64,
    /// Worst violation of oddness of the off-diagonal blocks about `0` and `tau / 2`.
    pub odd_blocks: f64,
    pub scale: f64,
    pub holds: bool,
}

/// Samples `B` on `samples` points of `[0, tau / 2]` and compares reflected values.
pub fn check_reflection_symmetry(
    coef: &Coefficient<f64>,
    n: usize,
    tau: f64,
    samples: usize,
    tol: f64,
) -> Result<SymmetryReport> {
    if samples < 2 || !(tau > 0.0) {
        return Err(Error::Input("need tau > 0 and at least two samples".into()));
    }
    let mut rep = SymmetryReport {
        symmetry: 0.0,
        periodicity: 0.0,
        even_blocks: 0.0,
        odd_blocks: 0.0,
        scale: 0.0,
        holds: false,
    };
    for k in 0..samples {
        let t = 0.5 * tau * k as f64 / (samples - 1) as f64;
        let b = coef(t);
        if b.shape() != (2 * n, 2 * n) {
            return Err(Error::Dimension(format!(
                "coefficient has shape {:?}",
                b.shape()
            )));
        }
        rep.scale = rep.scale.max(b.norm());
        rep.symmetry = rep.symmetry.max((&b - b.transpose()).norm());
        rep.periodicity = rep.periodicity.max((coef(t + tau) - &b).norm());
        for centre in [0.0, 0.5 * tau] {
            let lo = block_decompose(&coef(centre - t))?;
            let hi = block_decompose(&coef(centre + t))?;
            rep.even_blocks = rep
                .even_blocks
                .max((&lo.a - &hi.a).norm())
                .max((&lo.d - &hi.d).norm());
            rep.odd_blocks = rep
                .odd_blocks
                .max((&lo.b + &hi.b).norm())
                .max((&lo.c + &hi.c).norm());
        }
    }
    let bound = tol * rep.scale.max(1.0);
    rep.holds = rep.symmetry <= bound
        && rep.periodicity <= bound
        && rep.even_blocks <= bound
        && rep.odd_blocks <= bound;
    Ok(rep)
}
