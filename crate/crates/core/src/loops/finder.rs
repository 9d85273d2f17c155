use std::f64::consts::PI;

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::action::{gradient_from_jets, jets};
use super::hessian::{newton_system, Parity};
use super::{el_residual_profile, Loop};
use crate::error::{Error, Result};
use crate::models::Lagrangian;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subspace {
    Full,
    /// Cosine modes only; requires a contractible initial loop.
    Even,
}

#[derive(Clone, Debug)]
pub struct FindOptions {
    pub n_modes: usize,
    pub oversample: usize,
    /// Target root-mean-square Euler-Lagrange residual.
    pub tol: f64,
    /// Run preconditioned gradient descent before Newton. Needed to reach minimisers
    /// from far away; switch off to converge to saddles from a close guess.
    pub descent: bool,
    pub max_descent: usize,
    pub max_newton: usize,
    pub subspace: Subspace,
}

impl Default for FindOptions {
    fn default() -> Self {
        FindOptions {
            n_modes: 64,
            oversample: 8,
            tol: 1e-9,
            descent: true,
            max_descent: 20_000,
            max_newton: 60,
            subspace: Subspace::Full,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OrbitReport {
    /// The orbit, or the best iterate when `converged` is false.
    pub orbit: Loop,
    pub residual: f64,
    pub action: f64,
    pub descent_steps: usize,
    pub newton_steps: usize,
    /// Samples per period used for the action and the residual.
    pub n_samples: usize,
    pub converged: bool,
    /// Why the search stopped early.
    pub failure: Option<String>,
}

struct Problem<'a> {
    model: &'a dyn Lagrangian,
    template: Loop,
    n_t: usize,
    mask: Vec<bool>,
    /// Inverse of the diagonal `W^{1,2}` Gram matrix in raw coordinates.
    precond: DVector<f64>,
}

impl Problem<'_> {
    fn loop_at(&self, x: &DVector<f64>) -> Loop {
        let mut l = self.template.clone();
        l.set_from_vector(x);
        l
    }

    fn eval(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let l = self.loop_at(x);
        let (_, js) = jets(self.model, &l, self.n_t)?;
        let a = l.tau() / self.n_t as f64 * js.iter().map(|j| j.value).sum::<f64>();
        let mut g = gradient_from_jets(&l, &js);
        for (gi, &m) in g.iter_mut().zip(&self.mask) {
            if !m {
                *gi = 0.0;
            }
        }
        Ok((a, g))
    }

    fn residual(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(el_residual_profile(self.model, &self.loop_at(x), self.n_t)?.rms)
    }
}

/// Critical point of the action in the winding class of `init`, found by
/// `W^{1,2}`-preconditioned descent with Armijo steps followed by Newton.
pub fn find_orbit(model: &dyn Lagrangian, init: &Loop, opts: &FindOptions) -> Result<OrbitReport> {
    let rep = search_orbit(model, init, opts)?;
    match &rep.failure {
        None => Ok(rep),
        Some(why) => Err(Error::Convergence(why.clone())),
    }
}

/// Like [`find_orbit`] but a failed search returns its best iterate with `converged = false`.
pub fn search_orbit(model: &dyn Lagrangian, init: &Loop, opts: &FindOptions) -> Result<OrbitReport> {
    if opts.n_modes == 0 || opts.oversample < 4 {
        return Err(Error::Input(
            "need at least one mode and four samples per mode".into(),
        ));
    }
    let template = init.with_modes(opts.n_modes);
    if opts.subspace == Subspace::Even && !template.winding().iter().all(|&w| w == 0) {
        return Err(Error::Precondition("even loops have zero winding".into()));
    }
    let n = template.n();
    let tau = template.tau();
    let dim = n * (2 * opts.n_modes + 1);
    let mut mask = vec![true; dim];
    let mut precond = DVector::zeros(dim);
    for k in 0..=opts.n_modes {
        let w = 2.0 * PI * k as f64 / tau;
        let l2 = if k == 0 { tau } else { 0.5 * tau };
        let pre = 1.0 / (l2 * (1.0 + w * w));
        for i in 0..n {
            if k == 0 {
                precond[i] = pre;
            } else {
                precond[n * (2 * k - 1) + i] = pre;
                precond[n * (2 * k) + i] = pre;
                if opts.subspace == Subspace::Even {
                    mask[n * (2 * k) + i] = false;
                }
            }
        }
    }
    let prob = Problem {
        model,
        template: template.clone(),
        n_t: opts.oversample * opts.n_modes.max(8),
        mask,
        precond,
    };
    let mut x = template.to_vector();
    if opts.subspace == Subspace::Even {
        for (xi, &m) in x.iter_mut().zip(&prob.mask) {
            if !m {
                *xi = 0.0;
            }
        }
    }

    let mut descent_steps = 0;
    if opts.descent {
        let (mut a, mut g) = prob.eval(&x)?;
        let mut step: f64 = 1.0;
        while descent_steps < opts.max_descent {
            let d = -g.component_mul(&prob.precond);
            let slope = g.dot(&d);
            if -slope < 1e-16 * (1.0 + a.abs()) {
                break;
            }
            if descent_steps % 50 == 0 && prob.residual(&x)? < 1e-4 {
                break;
            }
            let mut s = (2.0 * step).min(1e3);
            let mut accepted = false;
            for _ in 0..60 {
                let xn = &x + &d * s;
                if let Ok((an, gn)) = prob.eval(&xn) {
                    if an <= a + 1e-4 * s * slope {
                        x = xn;
                        a = an;
                        g = gn;
                        accepted = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            descent_steps += 1;
            if !accepted {
                break;
            }
            step = s;
        }
    }

    let parity = match opts.subspace {
        Subspace::Full => Parity::Full,
        Subspace::Even => Parity::Even,
    };
    let mut newton_steps = 0;
    let finish = |x: &DVector<f64>, res: f64, newton_steps: usize, failure: Option<String>| {
        let (action, _) = prob.eval(x)?;
        Ok(OrbitReport {
            orbit: prob.loop_at(x),
            residual: res,
            action,
            descent_steps,
            newton_steps,
            n_samples: prob.n_t,
            converged: failure.is_none(),
            failure,
        })
    };
    loop {
        let res = prob.residual(&x)?;
        if res <= opts.tol {
            return finish(&x, res, newton_steps, None);
        }
        if newton_steps >= opts.max_newton {
            let why = format!(
                "residual {res:.3e} after {descent_steps} descent and {newton_steps} Newton steps"
            );
            return finish(&x, res, newton_steps, Some(why));
        }
        let (_, g) = prob.eval(&x)?;
        let (h, scale, idx) = newton_system(model, &prob.loop_at(&x), parity)?;
        let rhs =
            DVector::from_iterator(idx.len(), idx.iter().zip(&scale).map(|(&i, &d)| -g[i] * d));
        let eig = SymmetricEigen::new(h);
        let lmax = eig.eigenvalues.amax();
        let mut y = DVector::zeros(idx.len());
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if l.abs() > 1e-11 * lmax {
                let v = eig.eigenvectors.column(k);
                y += v * (v.dot(&rhs) / l);
            }
        }
        let mut delta = DVector::zeros(x.len());
        for ((&i, &d), yi) in idx.iter().zip(&scale).zip(y.iter()) {
            delta[i] = d * yi;
        }
        let merit = |g: &DVector<f64>| g.component_mul(&prob.precond).dot(g);
        let m0 = merit(&g);
        let mut s = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let xn = &x + &delta * s;
            if let Ok((_, gn)) = prob.eval(&xn) {
                if merit(&gn) < m0 || prob.residual(&xn)? < res {
                    x = xn;
                    moved = true;
                    break;
                }
            }
            s *= 0.5;
        }
        newton_steps += 1;
        if !moved {
            let why = format!("Newton step stalled at residual {res:.3e}");
            return finish(&x, res, newton_steps, Some(why));
        }
    }
}
