//! Loops on the torus, the action functional and its critical points.
//!
//! A loop of period `tau` is stored through its lift
//! `q(t) = a_0 + w t / tau + sum_{k=1}^{N_f} a_k cos(2 pi k t / tau) + b_k sin(2 pi k t / tau)`
//! with integer winding vector `w`.

mod action;
mod finder;
pub mod hessian;
mod sobolev;

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use action::{
    action, action_gradient, el_residual_profile, euler_lagrange_residual, ElResidual,
};
pub use finder::{find_orbit, search_orbit, FindOptions, OrbitReport, Subspace};
pub use hessian::{hessian_inertia, HessianOptions, HessianReport, Parity, Route};
pub use hessian::{kernel_variations, scaled_hessian};
pub use sobolev::{sobolev_c0_check, w12_norm, SobolevCheck};

use crate::error::{Error, Result};
use crate::spectral::synthesize;

#[derive(Clone, Debug, PartialEq)]
pub struct Loop {
    n: usize,
    tau: f64,
    winding: Vec<i64>,
    /// `cos[k]` holds `a_k`, `k = 0..=N_f`.
    cos: Vec<DVector<f64>>,
    /// `sin[k]` holds `b_k`; `sin[0]` is always zero.
    sin: Vec<DVector<f64>>,
}

/// Samples of a loop on a uniform grid of one period.
#[derive(Clone, Debug)]
pub struct LoopSamples {
    pub times: Vec<f64>,
    pub q: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
}

impl Loop {
    pub fn new(n: usize, tau: f64, winding: Vec<i64>, n_modes: usize) -> Result<Self> {
        if n == 0 || !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Input(
                "need n >= 1 and a finite period tau > 0".into(),
            ));
        }
        if winding.len() != n {
            return Err(Error::Input(format!(
                "winding has length {} but n = {n}",
                winding.len()
            )));
        }
        Ok(Loop {
            n,
            tau,
            winding,
            cos: vec![DVector::zeros(n); n_modes + 1],
            sin: vec![DVector::zeros(n); n_modes + 1],
        })
    }

    pub fn constant(q0: DVector<f64>, tau: f64, n_modes: usize) -> Result<Self> {
        let mut l = Loop::new(q0.len(), tau, vec![0; q0.len()], n_modes)?;
        l.cos[0] = q0;
        Ok(l)
    }

    /// Straight line `q0 + w t / tau`.
    pub fn straight(q0: DVector<f64>, winding: Vec<i64>, tau: f64, n_modes: usize) -> Result<Self> {
        let mut l = Loop::new(q0.len(), tau, winding, n_modes)?;
        l.cos[0] = q0;
        Ok(l)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn winding(&self) -> &[i64] {
        &self.winding
    }
    pub fn n_modes(&self) -> usize {
        self.cos.len() - 1
    }
    pub fn cos_coeffs(&self) -> &[DVector<f64>] {
        &self.cos
    }
    pub fn sin_coeffs(&self) -> &[DVector<f64>] {
        &self.sin
    }
    pub fn set_cos(&mut self, k: usize, a: DVector<f64>) {
        self.cos[k] = a;
    }
    pub fn set_sin(&mut self, k: usize, b: DVector<f64>) {
        if k > 0 {
            self.sin[k] = b;
        }
    }

    fn omega(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.tau
    }

    fn drift(&self) -> DVector<f64> {
        DVector::from_iterator(self.n, self.winding.iter().map(|&w| w as f64 / self.tau))
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let mut q = &self.cos[0] + self.drift() * t;
        for k in 1..self.cos.len() {
            let (s, c) = (self.omega(k) * t).sin_cos();
            q += &self.cos[k] * c + &self.sin[k] * s;
        }
        q
    }

    pub fn velocity(&self, t: f64) -> DVector<f64> {
        let mut v = self.drift();
        for k in 1..self.cos.len() {
            let w = self.omega(k);
            let (s, c) = (w * t).sin_cos();
            v += (&self.sin[k] * c - &self.cos[k] * s) * w;
        }
        v
    }

    /// Position and velocity on `n_t` uniform points of `[0, tau)`.
    pub fn samples(&self, n_t: usize) -> Result<LoopSamples> {
        if n_t < 2 * self.n_modes() + 1 {
            return Err(Error::Input(format!(
                "{n_t} samples cannot resolve {} modes",
                self.n_modes()
            )));
        }
        let times: Vec<f64> = (0..n_t).map(|j| self.tau * j as f64 / n_t as f64).collect();
        let mut q = vec![DVector::zeros(self.n); n_t];
        let mut v = vec![DVector::zeros(self.n); n_t];
        let nm = self.n_modes();
        for i in 0..self.n {
            let a: Vec<f64> = self.cos.iter().map(|c| c[i]).collect();
            let b: Vec<f64> = self.sin.iter().map(|s| s[i]).collect();
            let da: Vec<f64> = (0..=nm).map(|k| self.omega(k) * b[k]).collect();
            let db: Vec<f64> = (0..=nm).map(|k| -self.omega(k) * a[k]).collect();
            let xs = synthesize(&a, &b, n_t);
            let vs = synthesize(&da, &db, n_t);
            let drift = self.winding[i] as f64 / self.tau;
            for j in 0..n_t {
                q[j][i] = xs[j] + drift * times[j];
                v[j][i] = vs[j] + drift;
            }
        }
        Ok(LoopSamples { times, q, v })
    }

    /// Raw coefficient vector ordered `[a_0, a_1, b_1, a_2, b_2, ...]`, each block of length `n`.
    pub fn to_vector(&self) -> DVector<f64> {
        let nm = self.n_modes();
        let mut x = DVector::zeros(self.n * (2 * nm + 1));
        x.rows_mut(0, self.n).copy_from(&self.cos[0]);
        for k in 1..=nm {
            x.rows_mut(self.n * (2 * k - 1), self.n)
                .copy_from(&self.cos[k]);
            x.rows_mut(self.n * (2 * k), self.n).copy_from(&self.sin[k]);
        }
        x
    }

    pub fn set_from_vector(&mut self, x: &DVector<f64>) {
        let nm = self.n_modes();
        self.cos[0] = x.rows(0, self.n).into_owned();
        for k in 1..=nm {
            self.cos[k] = x.rows(self.n * (2 * k - 1), self.n).into_owned();
            self.sin[k] = x.rows(self.n * (2 * k), self.n).into_owned();
        }
    }

    /// Same loop with `n_modes` modes, truncating or zero-padding.
    pub fn with_modes(&self, n_modes: usize) -> Loop {
        let mut l = Loop::new(self.n, self.tau, self.winding.clone(), n_modes).unwrap();
        for k in 0..=n_modes.min(self.n_modes()) {
            l.cos[k] = self.cos[k].clone();
            l.sin[k] = self.sin[k].clone();
        }
        l
    }

    /// The `k`-fold iterate, a loop of period `k tau` and winding `k w`.
    pub fn iterate(&self, k: usize) -> Result<Loop> {
        if k == 0 {
            return Err(Error::Input("iteration count must be positive".into()));
        }
        let nm = self.n_modes();
        let w = self.winding.iter().map(|&x| x * k as i64).collect();
        let mut l = Loop::new(self.n, self.tau * k as f64, w, nm * k)?;
        for j in 0..=nm {
            l.cos[j * k] = self.cos[j].clone();
            l.sin[j * k] = self.sin[j].clone();
        }
        Ok(l)
    }

    /// `gamma(-t) = gamma(t)`: contractible and free of sine modes.
    pub fn is_even(&self, tol: f64) -> bool {
        self.winding.iter().all(|&w| w == 0) && self.sin.iter().all(|b| b.amax() <= tol)
    }

    /// Projection onto even loops (sine modes dropped). Requires zero winding.
    pub fn restrict_even(&self) -> Result<Loop> {
        if self.winding.iter().any(|&w| w != 0) {
            return Err(Error::Precondition("even loops have zero winding".into()));
        }
        let mut l = self.clone();
        l.sin.iter_mut().for_each(|b| b.fill(0.0));
        Ok(l)
    }

    /// Loop of the same shape shifted in time, `t -> t + s`.
    pub fn time_shift(&self, s: f64) -> Loop {
        let mut l = self.clone();
        l.cos[0] += self.drift() * s;
        for k in 1..self.cos.len() {
            let (sn, cs) = (self.omega(k) * s).sin_cos();
            let (a, b) = (&self.cos[k], &self.sin[k]);
            l.cos[k] = a * cs + b * sn;
            l.sin[k] = b * cs - a * sn;
        }
        l
    }

    pub fn to_doc(&self) -> LoopDoc {
        LoopDoc {
            schema: crate::SCHEMA.to_string(),
            n: self.n,
            tau: self.tau,
            winding: self.winding.clone(),
            fourier: FourierDoc {
                cos: self
                    .cos
                    .iter()
                    .map(|c| c.iter().copied().collect())
                    .collect(),
                sin: self
                    .sin
                    .iter()
                    .skip(1)
                    .map(|c| c.iter().copied().collect())
                    .collect(),
            },
        }
    }

    pub fn from_doc(doc: &LoopDoc) -> Result<Loop> {
        let nm = doc
            .fourier
            .cos
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::Input("empty cosine table".into()))?;
        if doc.fourier.sin.len() != nm {
            return Err(Error::Input(
                "the sine table needs one row per mode k >= 1".into(),
            ));
        }
        let mut l = Loop::new(doc.n, doc.tau, doc.winding.clone(), nm)?;
        for (k, row) in doc.fourier.cos.iter().enumerate() {
            if row.len() != doc.n {
                return Err(Error::Input("coefficient rows must have length n".into()));
            }
            l.cos[k] = DVector::from_row_slice(row);
        }
        for (k, row) in doc.fourier.sin.iter().enumerate() {
            if row.len() != doc.n {
                return Err(Error::Input("coefficient rows must have length n".into()));
            }
            l.sin[k + 1] = DVector::from_row_slice(row);
        }
        if l.to_vector().iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("non-finite loop coefficient".into()));
        }
        Ok(l)
    }

    pub fn read_json(path: &Path) -> Result<Loop> {
        let doc: LoopDoc = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Loop::from_doc(&doc)
    }

    /// CSV with header `t,q1,...,qn` on `n_t` uniform samples.
    pub fn write_csv<W: Write>(&self, mut w: W, n_t: usize) -> Result<()> {
        let s = self.samples(n_t)?;
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.n).map(|i| format!("q{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (t, q) in s.times.iter().zip(&s.q) {
            let row: Vec<String> = std::iter::once(format!("{t:.17e}"))
                .chain(q.iter().map(|x| format!("{x:.17e}")))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierDoc {
    /// Rows `a_0, ..., a_{N_f}`.
    pub cos: Vec<Vec<f64>>,
    /// Rows `b_1, ..., b_{N_f}`.
    pub sin: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopDoc {
    #[serde(default = "crate::schema::schema_tag")]
    pub schema: String,
    pub n: usize,
    pub tau: f64,
    pub winding: Vec<i64>,
    pub fourier: FourierDoc,
}

#[cfg(test)]
mod tests;
