use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Lagrangian;
use crate::error::{Error, Result};
use crate::loops::Loop;
use crate::symplectic::Coefficient;

/// Coefficients `P = L_vv`, `Q = L_vq`, `R = L_qq` along a loop, sampled on
/// `t_j = j tau / N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SturmData {
    pub n: usize,
    pub tau: f64,
    pub times: Vec<f64>,
    pub p: Vec<DMatrix<f64>>,
    pub q: Vec<DMatrix<f64>>,
    pub r: Vec<DMatrix<f64>>,
}

/// Second variation coefficients of `model` along `gamma`, sampled on `n_t` points.
pub fn linearize(model: &dyn Lagrangian, gamma: &Loop, n_t: usize) -> Result<SturmData> {
    if model.n() != gamma.n() {
        return Err(Error::Dimension(format!(
            "model has n = {} but loop has n = {}",
            model.n(),
            gamma.n()
        )));
    }
    let s = gamma.samples(n_t)?;
    let mut out = SturmData {
        n: model.n(),
        tau: gamma.tau(),
        times: s.times.clone(),
        p: vec![],
        q: vec![],
        r: vec![],
    };
    for ((t, q), v) in s.times.iter().zip(&s.q).zip(&s.v) {
        let j = model.jet(*t, q, v);
        out.p.push(j.dvv);
        out.q.push(j.dvq);
        out.r.push(j.dqq);
    }
    Ok(out)
}

/// `S = [[P^-1, -P^-1 Q], [-Q^T P^-1, Q^T P^-1 Q - R]]`.
pub fn sturm_to_hamiltonian(
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = p.nrows();
    if p.shape() != (n, n) || q.shape() != (n, n) || r.shape() != (n, n) {
        return Err(Error::Dimension("P, Q, R must be n x n".into()));
    }
    let pinv = p
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Precondition("P is not positive definite".into()))?
        .inverse();
    let a = &pinv;
    let b = -(&pinv * q);
    let d = q.transpose() * &pinv * q - r;
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(a);
    s.view_mut((0, n), (n, n)).copy_from(&b);
    s.view_mut((n, 0), (n, n)).copy_from(&b.transpose());
    s.view_mut((n, n), (n, n)).copy_from(&d);
    Ok(crate::linalg::symmetrize(&s))
}

/// `B(t) = S(P(t), Q(t), R(t))` evaluated along `gamma` at arbitrary `t`.
pub fn sturm_coefficient(model: Arc<dyn Lagrangian>, gamma: &Loop) -> Coefficient<f64> {
    let gamma = gamma.clone();
    Arc::new(move |t: f64| {
        let (q, v) = (gamma.eval(t), gamma.velocity(t));
        let j = model.jet(t, &q, &v);
        sturm_to_hamiltonian(&j.dvv, &j.dvq, &j.dqq)
            .expect("convex Lagrangian has positive definite L_vv")
    })
}

/// Residuals of `P, R` even and `Q` odd in `t` on the sampling grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSymmetry {
    pub symmetry: f64,
    pub even_p: f64,
    pub even_r: f64,
    pub odd_q: f64,
    pub holds: bool,
}

pub fn check_symmetric_coefficients(data: &SturmData, tol: f64) -> CoefficientSymmetry {
    let n_t = data.times.len();
    let mut rep = CoefficientSymmetry {
        symmetry: 0.0,
        even_p: 0.0,
        even_r: 0.0,
        odd_q: 0.0,
        holds: false,
    };
    let mut scale: f64 = 1.0;
    for j in 0..n_t {
        let k = (n_t - j) % n_t;
        scale = scale
            .max(data.p[j].amax())
            .max(data.q[j].amax())
            .max(data.r[j].amax());
        rep.symmetry = rep
            .symmetry
            .max((&data.p[j] - data.p[j].transpose()).amax())
            .max((&data.r[j] - data.r[j].transpose()).amax());
        rep.even_p = rep.even_p.max((&data.p[j] - &data.p[k]).amax());
        rep.even_r = rep.even_r.max((&data.r[j] - &data.r[k]).amax());
        rep.odd_q = rep.odd_q.max((&data.q[j] + &data.q[k]).amax());
    }
    let b = tol * scale;
    rep.holds = rep.symmetry <= b && rep.even_p <= b && rep.even_r <= b && rep.odd_q <= b;
    rep
}
