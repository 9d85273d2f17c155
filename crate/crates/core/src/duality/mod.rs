//! Legendre transforms between fiberwise convex Lagrangians and Hamiltonians,
//! and numerical checks of the derivative identities linking the two sides.

mod checks;
mod mechanical;

use nalgebra::{DMatrix, DVector};

pub use checks::{
    check_growth_conditions, fiber_minimum, legendre_round_trip, Direction, RoundTripReport, fiber_minimum_bound, hamiltonian_fd_defect,
    inverse_bound_equivalence, reversibility_transport, sample_points, verify_duality_identities,
    DualityReport, GrowthReport, IdentityResiduals, InverseBoundReport, ReversibilityReport,
    SampleBox, SamplePoint,
};
pub use mechanical::MechanicalHamiltonian;

use crate::error::{Error, Result};
use crate::models::{Domain, Lagrangian};

/// Value and first and second derivatives of `H(t, q, p)` at one point.
#[derive(Clone, Debug)]
pub struct HamJet {
    pub value: f64,
    pub dt: f64,
    pub dq: DVector<f64>,
    pub dp: DVector<f64>,
    pub dqq: DMatrix<f64>,
    /// `[d^2 H / dp_i dq_j]`.
    pub dpq: DMatrix<f64>,
    pub dpp: DMatrix<f64>,
}

pub trait Hamiltonian: Send + Sync {
    fn n(&self) -> usize;
    fn domain(&self) -> Domain;
    fn time_period(&self) -> Option<f64>;
    fn jet(&self, t: f64, q: &DVector<f64>, p: &DVector<f64>) -> HamJet;

    fn value(&self, t: f64, q: &DVector<f64>, p: &DVector<f64>) -> f64 {
        self.jet(t, q, p).value
    }
    fn name(&self) -> String {
        "hamiltonian".into()
    }
    /// Whether the model claims `H(-t, q, -p) = H(t, q, p)`.
    fn reversible(&self) -> bool {
        false
    }
}

impl<H: Hamiltonian + ?Sized> Hamiltonian for Box<H> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn time_period(&self) -> Option<f64> {
        (**self).time_period()
    }
    fn jet(&self, t: f64, q: &DVector<f64>, p: &DVector<f64>) -> HamJet {
        (**self).jet(t, q, p)
    }
    fn name(&self) -> String {
        (**self).name()
    }
    fn reversible(&self) -> bool {
        (**self).reversible()
    }
}

/// Damped-Newton fiber solve settings.
#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    /// Residual target relative to `max(1, |target|)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

/// Minimise `F(x) - <target, x>` for a strictly convex `F` given through
/// `eval(x) = (F, DF, D^2 F)`. Returns the minimiser.
fn fiber_newton(
    eval: impl Fn(&DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>),
    target: &DVector<f64>,
    opts: &NewtonOptions,
) -> Result<DVector<f64>> {
    let n = target.len();
    let zero = DVector::zeros(n);
    let (_, g0, h0) = eval(&zero);
    let chol = h0
        .cholesky()
        .ok_or_else(|| Error::Precondition("fiber Hessian is not positive definite at 0".into()))?;
    let mut x = chol.solve(&(target - g0));
    let goal = opts.tol * target.norm().max(1.0);
    for _ in 0..=opts.max_iter {
        let (f, g, h) = eval(&x);
        let r = &g - target;
        if !f.is_finite() || r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "non-finite value in the fiber solve".into(),
            ));
        }
        if r.norm() <= goal {
            return Ok(x);
        }
        let step = h
            .cholesky()
            .ok_or_else(|| {
                Error::Precondition(
                    "convexity violated: fiber Hessian is not positive definite".into(),
                )
            })?
            .solve(&(-&r));
        let merit = f - target.dot(&x);
        let slope = r.dot(&step);
        let mut s = 1.0;
        let mut next = &x + &step;
        for _ in 0..40 {
            let (fn_, gn, _) = eval(&next);
            let m = fn_ - target.dot(&next);
            // Near the solution the merit is flat to rounding; accept residual decrease too.
            if m <= merit + 1e-4 * s * slope || (&gn - target).norm() < r.norm() {
                break;
            }
            s *= 0.5;
            next = &x + &step * s;
        }
        x = next;
    }
    Err(Error::Convergence(format!(
        "fiber Newton did not reach {goal:.1e} in {} iterations; check convexity",
        opts.max_iter
    )))
}

/// `H(t, q, p) = <p, v> - L(t, q, v)` with `p = D_v L(t, q, v)`. Returns `(H, v)`.
pub fn legendre_l_to_h(
    model: &dyn Lagrangian,
    t: f64,
    q: &DVector<f64>,
    p: &DVector<f64>,
    opts: &NewtonOptions,
) -> Result<(f64, DVector<f64>)> {
    check_dims(model.n(), q, p)?;
    let v = fiber_newton(
        |v| {
            let j = model.jet(t, q, v);
            (j.value, j.dv, j.dvv)
        },
        p,
        opts,
    )?;
    Ok((p.dot(&v) - model.value(t, q, &v), v))
}

/// `L(t, q, v) = <p, v> - H(t, q, p)` with `v = D_p H(t, q, p)`. Returns `(L, p)`.
pub fn legendre_h_to_l(
    model: &dyn Hamiltonian,
    t: f64,
    q: &DVector<f64>,
    v: &DVector<f64>,
    opts: &NewtonOptions,
) -> Result<(f64, DVector<f64>)> {
    check_dims(model.n(), q, v)?;
    let p = fiber_newton(
        |p| {
            let j = model.jet(t, q, p);
            (j.value, j.dp, j.dpp)
        },
        v,
        opts,
    )?;
    Ok((p.dot(v) - model.value(t, q, &p), p))
}

fn check_dims(n: usize, q: &DVector<f64>, x: &DVector<f64>) -> Result<()> {
    if q.len() != n || x.len() != n {
        return Err(Error::Dimension(format!(
            "model has n = {n} but point has lengths {} and {}",
            q.len(),
            x.len()
        )));
    }
    Ok(())
}

/// Hamiltonian of a Lagrangian obtained by numerical fiber solves. First and
/// second derivatives come from the Lagrangian ones at the matched velocity.
/// Points where the solve fails evaluate to NaN.
pub struct TransformedHamiltonian<L> {
    pub lagrangian: L,
    pub newton: NewtonOptions,
}

impl<L: Lagrangian> TransformedHamiltonian<L> {
    pub fn new(lagrangian: L) -> Self {
        TransformedHamiltonian {
            lagrangian,
            newton: NewtonOptions::default(),
        }
    }
}

impl<L: Lagrangian> Hamiltonian for TransformedHamiltonian<L> {
    fn n(&self) -> usize {
        self.lagrangian.n()
    }
    fn domain(&self) -> Domain {
        self.lagrangian.domain()
    }
    fn time_period(&self) -> Option<f64> {
        self.lagrangian.time_period()
    }
    fn name(&self) -> String {
        format!("legendre({})", self.lagrangian.name())
    }
    fn reversible(&self) -> bool {
        self.lagrangian.reversible()
    }

    fn jet(&self, t: f64, q: &DVector<f64>, p: &DVector<f64>) -> HamJet {
        let n = self.n();
        let nan = || HamJet {
            value: f64::NAN,
            dt: f64::NAN,
            dq: DVector::from_element(n, f64::NAN),
            dp: DVector::from_element(n, f64::NAN),
            dqq: DMatrix::from_element(n, n, f64::NAN),
            dpq: DMatrix::from_element(n, n, f64::NAN),
            dpp: DMatrix::from_element(n, n, f64::NAN),
        };
        let Ok((value, v)) = legendre_l_to_h(&self.lagrangian, t, q, p, &self.newton) else {
            return nan();
        };
        let lj = self.lagrangian.jet(t, q, &v);
        let Some(hpp) = lj.dvv.clone().try_inverse() else {
            return nan();
        };
        let hpq = -(&hpp * &lj.dvq);
        let dqq = lj.dvq.transpose() * &hpp * &lj.dvq - &lj.dqq;
        HamJet {
            value,
            dt: -lj.dt,
            dq: -lj.dq,
            dp: v,
            dqq: crate::linalg::symmetrize(&dqq),
            dpq: hpq,
            dpp: hpp,
        }
    }
}

#[cfg(test)]
mod tests;
