use std::f64::consts::PI;

use nalgebra::DVector;
use rayon::prelude::*;

use super::Loop;
use crate::error::{Error, Result};
use crate::models::{Domain, LagJet, Lagrangian};
use crate::spectral::{analyze, differentiate};

pub(crate) fn check_compatible(model: &dyn Lagrangian, gamma: &Loop) -> Result<()> {
    if model.n() != gamma.n() {
        return Err(Error::Dimension(format!(
            "model has n = {} but loop has n = {}",
            model.n(),
            gamma.n()
        )));
    }
    if model.domain() == Domain::Chart && gamma.winding().iter().any(|&w| w != 0) {
        return Err(Error::Precondition(
            "a chart model only admits contractible loops".into(),
        ));
    }
    if let Some(tp) = model.time_period() {
        let ratio = gamma.tau() / tp;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::Precondition(format!(
                "loop period {} is not a multiple of the model period {tp}",
                gamma.tau()
            )));
        }
    }
    Ok(())
}

pub(crate) fn jets(
    model: &dyn Lagrangian,
    gamma: &Loop,
    n_t: usize,
) -> Result<(Vec<f64>, Vec<LagJet>)> {
    check_compatible(model, gamma)?;
    let s = gamma.samples(n_t)?;
    let jets: Vec<LagJet> = (0..n_t)
        .into_par_iter()
        .map(|j| model.jet(s.times[j], &s.q[j], &s.v[j]))
        .collect();
    if jets.iter().any(|j| !j.value.is_finite()) {
        return Err(Error::Numerical(
            "Lagrangian is not finite along the loop".into(),
        ));
    }
    Ok((s.times, jets))
}

/// Trapezoidal action `(tau / N_t) sum L(t_j, q_j, v_j)`.
pub fn action(model: &dyn Lagrangian, gamma: &Loop, n_t: usize) -> Result<f64> {
    let (_, js) = jets(model, gamma, n_t)?;
    Ok(gamma.tau() / n_t as f64 * js.iter().map(|j| j.value).sum::<f64>())
}

/// Gradient of the discretised action with respect to the raw coefficient vector.
pub fn action_gradient(model: &dyn Lagrangian, gamma: &Loop, n_t: usize) -> Result<DVector<f64>> {
    let (_, js) = jets(model, gamma, n_t)?;
    Ok(gradient_from_jets(gamma, &js))
}

pub(crate) fn gradient_from_jets(gamma: &Loop, js: &[LagJet]) -> DVector<f64> {
    let n = gamma.n();
    let nm = gamma.n_modes();
    let tau = gamma.tau();
    let mut g = DVector::zeros(n * (2 * nm + 1));
    for i in 0..n {
        let lq: Vec<f64> = js.iter().map(|j| j.dq[i]).collect();
        let lv: Vec<f64> = js.iter().map(|j| j.dv[i]).collect();
        let (qc, qs) = analyze(&lq);
        let (vc, vs) = analyze(&lv);
        g[i] = tau * qc[0];
        for k in 1..=nm {
            let w = 2.0 * PI * k as f64 / tau;
            g[n * (2 * k - 1) + i] = tau * (qc[k] - w * vs[k]);
            g[n * (2 * k) + i] = tau * (qs[k] + w * vc[k]);
        }
    }
    g
}

/// Pointwise `d/dt L_v - L_q` on the sampling grid and its norms.
#[derive(Clone, Debug)]
pub struct ElResidual {
    pub times: Vec<f64>,
    pub profile: Vec<DVector<f64>>,
    /// Root mean square over the grid, `(1/N) sum |r_j|^2` under the root.
    pub rms: f64,
    pub max: f64,
}

pub fn el_residual_profile(model: &dyn Lagrangian, gamma: &Loop, n_t: usize) -> Result<ElResidual> {
    let (times, js) = jets(model, gamma, n_t)?;
    let n = gamma.n();
    let mut profile = vec![DVector::zeros(n); n_t];
    for i in 0..n {
        let lv: Vec<f64> = js.iter().map(|j| j.dv[i]).collect();
        let d = differentiate(&lv, gamma.tau());
        for j in 0..n_t {
            profile[j][i] = d[j] - js[j].dq[i];
        }
    }
    let rms = (profile.iter().map(|r| r.norm_squared()).sum::<f64>() / n_t as f64).sqrt();
    let max = profile.iter().map(|r| r.norm()).fold(0.0, f64::max);
    Ok(ElResidual {
        times,
        profile,
        rms,
        max,
    })
}

/// Root-mean-square Euler-Lagrange residual.
pub fn euler_lagrange_residual(model: &dyn Lagrangian, gamma: &Loop, n_t: usize) -> Result<f64> {
    Ok(el_residual_profile(model, gamma, n_t)?.rms)
}
