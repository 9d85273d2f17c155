//! Fiberwise convex Lagrangians `L(t, q, v)` with exact derivatives.

mod mechanical;
mod quadratic;
mod spline;
mod sturm;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use mechanical::{Mechanical, Metric};
pub use quadratic::{MatrixSeries, QuadraticSturm, SplineMatrix};
pub use spline::PeriodicSpline;
pub use sturm::{
    check_symmetric_coefficients, linearize, sturm_coefficient, sturm_to_hamiltonian,
    CoefficientSymmetry, SturmData,
};

use crate::error::{Error, Result};

/// Where positions live: the flat torus, or a chart of `R^n` for local models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Torus,
    Chart,
}

/// Value and first and second derivatives at one point.
#[derive(Clone, Debug)]
pub struct LagJet {
    pub value: f64,
    pub dt: f64,
    pub dq: DVector<f64>,
    pub dv: DVector<f64>,
    pub dqq: DMatrix<f64>,
    /// `[d^2 L / dv_i dq_j]`.
    pub dvq: DMatrix<f64>,
    pub dvv: DMatrix<f64>,
}

pub trait Lagrangian: Send + Sync {
    fn n(&self) -> usize;
    fn domain(&self) -> Domain;
    /// Period of the time dependence, `None` if autonomous.
    fn time_period(&self) -> Option<f64>;
    fn jet(&self, t: f64, q: &DVector<f64>, v: &DVector<f64>) -> LagJet;

    fn value(&self, t: f64, q: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.jet(t, q, v).value
    }
    fn name(&self) -> String {
        "lagrangian".into()
    }
    /// Whether the model claims `L(-t, q, -v) = L(t, q, v)`.
    fn reversible(&self) -> bool {
        false
    }
}

impl<L: Lagrangian + ?Sized> Lagrangian for Box<L> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn time_period(&self) -> Option<f64> {
        (**self).time_period()
    }
    fn jet(&self, t: f64, q: &DVector<f64>, v: &DVector<f64>) -> LagJet {
        (**self).jet(t, q, v)
    }
    fn name(&self) -> String {
        (**self).name()
    }
    fn reversible(&self) -> bool {
        (**self).reversible()
    }
}

impl<L: Lagrangian + ?Sized> Lagrangian for std::sync::Arc<L> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn time_period(&self) -> Option<f64> {
        (**self).time_period()
    }
    fn jet(&self, t: f64, q: &DVector<f64>, v: &DVector<f64>) -> LagJet {
        (**self).jet(t, q, v)
    }
    fn name(&self) -> String {
        (**self).name()
    }
    fn reversible(&self) -> bool {
        (**self).reversible()
    }
}

/// Largest relative mismatch between analytic derivatives and central
/// differences with step `h` over the given sample points.
pub fn finite_difference_defect(
    model: &dyn Lagrangian,
    pts: &[(f64, DVector<f64>, DVector<f64>)],
    h: f64,
) -> f64 {
    let n = model.n();
    let mut worst: f64 = 0.0;
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
    for (t, q, v) in pts {
        let j = model.jet(*t, q, v);
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = h;
            let (qp, qm) = (q + &e, q - &e);
            let (vp, vm) = (v + &e, v - &e);
            let fq = (model.value(*t, &qp, v) - model.value(*t, &qm, v)) / (2.0 * h);
            let fv = (model.value(*t, q, &vp) - model.value(*t, q, &vm)) / (2.0 * h);
            worst = worst.max(rel(fq, j.dq[i])).max(rel(fv, j.dv[i]));
            let (jqp, jqm) = (model.jet(*t, &qp, v), model.jet(*t, &qm, v));
            let (jvp, jvm) = (model.jet(*t, q, &vp), model.jet(*t, q, &vm));
            for k in 0..n {
                worst = worst
                    .max(rel((jqp.dq[k] - jqm.dq[k]) / (2.0 * h), j.dqq[(k, i)]))
                    .max(rel((jvp.dv[k] - jvm.dv[k]) / (2.0 * h), j.dvv[(k, i)]))
                    .max(rel((jqp.dv[k] - jqm.dv[k]) / (2.0 * h), j.dvq[(k, i)]));
            }
        }
        let ft = (model.value(t + h, q, v) - model.value(t - h, q, v)) / (2.0 * h);
        worst = worst.max(rel(ft, j.dt));
    }
    worst
}

/// Smallest eigenvalue of `L_vv` over the sample points.
pub fn convexity_margin(model: &dyn Lagrangian, pts: &[(f64, DVector<f64>, DVector<f64>)]) -> f64 {
    pts.iter()
        .map(|(t, q, v)| crate::linalg::sym_eigenvalues(&model.jet(*t, q, v).dvv)[0])
        .fold(f64::INFINITY, f64::min)
}

/// Largest `|L(-t, q, -v) - L(t, q, v)|` over the sample points.
pub fn reversibility_defect(
    model: &dyn Lagrangian,
    pts: &[(f64, DVector<f64>, DVector<f64>)],
) -> f64 {
    pts.iter()
        .map(|(t, q, v)| (model.value(-*t, q, &(-v)) - model.value(*t, q, v)).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn check_positive_definite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Input(format!("{what} must be square")));
    }
    if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
        return Err(Error::Input(format!("{what} must be symmetric")));
    }
    if crate::linalg::sym_eigenvalues(m)
        .first()
        .map_or(true, |&l| l <= 0.0)
    {
        return Err(Error::Input(format!("{what} must be positive definite")));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
