use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::spline::PeriodicSpline;
use super::{check_positive_definite, Domain, LagJet, Lagrangian};
use crate::error::{Error, Result};

/// `M(t) = C_0 + sum_k C_k cos(2 pi k t / T) + S_k sin(2 pi k t / T)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSeries {
    pub constant: DMatrix<f64>,
    #[serde(default)]
    pub cos: Vec<DMatrix<f64>>,
    #[serde(default)]
    pub sin: Vec<DMatrix<f64>>,
}

impl MatrixSeries {
    pub fn constant(m: DMatrix<f64>) -> Self {
        MatrixSeries {
            constant: m,
            cos: vec![],
            sin: vec![],
        }
    }

    pub fn eval(&self, t: f64, period: f64) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (k, c) in self.cos.iter().enumerate() {
            m += c * (2.0 * PI * (k + 1) as f64 * t / period).cos();
        }
        for (k, s) in self.sin.iter().enumerate() {
            m += s * (2.0 * PI * (k + 1) as f64 * t / period).sin();
        }
        m
    }

    pub fn derivative(&self, t: f64, period: f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.constant.nrows(), self.constant.ncols());
        for (k, c) in self.cos.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64 / period;
            m -= c * (w * (w * t).sin());
        }
        for (k, s) in self.sin.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64 / period;
            m += s * (w * (w * t).cos());
        }
        m
    }

    fn shapes_ok(&self, n: usize) -> bool {
        self.constant.shape() == (n, n)
            && self
                .cos
                .iter()
                .chain(&self.sin)
                .all(|m| m.shape() == (n, n))
    }

    fn symmetric(&self) -> bool {
        std::iter::once(&self.constant)
            .chain(&self.cos)
            .chain(&self.sin)
            .all(|m| (m - m.transpose()).amax() <= 1e-13)
    }
}

/// Matrix entries sampled on a uniform grid of one period, splined in `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineMatrix {
    n: usize,
    entries: Vec<PeriodicSpline>,
}

impl SplineMatrix {
    pub fn new(samples: &[DMatrix<f64>], period: f64) -> Result<Self> {
        let n = samples
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| Error::Input("empty coefficient table".into()))?;
        if samples.iter().any(|m| m.shape() != (n, n)) {
            return Err(Error::Input(
                "coefficient table entries must all be n x n".into(),
            ));
        }
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(PeriodicSpline::new(
                    samples.iter().map(|m| m[(i, j)]).collect(),
                    period,
                )?);
            }
        }
        Ok(SplineMatrix { n, entries })
    }

    pub fn eval(&self, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut m = DMatrix::zeros(self.n, self.n);
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let (v, dv) = self.entries[i * self.n + j].eval_with_derivative(t);
                m[(i, j)] = v;
                d[(i, j)] = dv;
            }
        }
        (m, d)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Coef {
    Series(MatrixSeries),
    Spline(SplineMatrix),
}

impl Coef {
    fn eval(&self, t: f64, period: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        match self {
            Coef::Series(s) => (s.eval(t, period), s.derivative(t, period)),
            Coef::Spline(s) => s.eval(t),
        }
    }
}

/// `L = P(t) v.v / 2 + Q(t) q.v + R(t) q.q / 2` on a chart, `tau`-periodic in `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticSturm {
    n: usize,
    period: f64,
    p: Coef,
    q: Coef,
    r: Coef,
    reversible: bool,
}

impl QuadraticSturm {
    pub fn from_series(
        p: MatrixSeries,
        q: MatrixSeries,
        r: MatrixSeries,
        period: f64,
    ) -> Result<Self> {
        let n = p.constant.nrows();
        if !(p.shapes_ok(n) && q.shapes_ok(n) && r.shapes_ok(n)) {
            return Err(Error::Input("P, Q, R must all be n x n".into()));
        }
        if !p.symmetric() || !r.symmetric() {
            return Err(Error::Input("P and R must be symmetric".into()));
        }
        if !(period > 0.0) {
            return Err(Error::Input("period must be positive".into()));
        }
        let reversible = p.sin.iter().chain(&r.sin).all(|m| m.amax() == 0.0)
            && q.constant.amax() == 0.0
            && q.cos.iter().all(|m| m.amax() == 0.0);
        let model = QuadraticSturm {
            n,
            period,
            p: Coef::Series(p),
            q: Coef::Series(q),
            r: Coef::Series(r),
            reversible,
        };
        model.check_convex()?;
        Ok(model)
    }

    /// Coefficient tables sampled at `t_j = j T / N`.
    pub fn from_tables(
        p: &[DMatrix<f64>],
        q: &[DMatrix<f64>],
        r: &[DMatrix<f64>],
        period: f64,
    ) -> Result<Self> {
        if p.len() != q.len() || q.len() != r.len() {
            return Err(Error::Input("P, Q, R tables must have equal length".into()));
        }
        let n = p.first().map(|m| m.nrows()).unwrap_or(0);
        let model = QuadraticSturm {
            n,
            period,
            p: Coef::Spline(SplineMatrix::new(p, period)?),
            q: Coef::Spline(SplineMatrix::new(q, period)?),
            r: Coef::Spline(SplineMatrix::new(r, period)?),
            reversible: false,
        };
        model.check_convex()?;
        Ok(model)
    }

    fn check_convex(&self) -> Result<()> {
        for k in 0..64 {
            let t = self.period * k as f64 / 64.0;
            check_positive_definite(&self.coefficients(t).0, "P(t)")?;
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// `(P, Q, R)` at time `t`.
    pub fn coefficients(&self, t: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (
            self.p.eval(t, self.period).0,
            self.q.eval(t, self.period).0,
            self.r.eval(t, self.period).0,
        )
    }
}

impl Lagrangian for QuadraticSturm {
    fn n(&self) -> usize {
        self.n
    }
    fn domain(&self) -> Domain {
        Domain::Chart
    }
    fn time_period(&self) -> Option<f64> {
        Some(self.period)
    }
    fn name(&self) -> String {
        "quadratic-sturm".into()
    }
    fn reversible(&self) -> bool {
        self.reversible
    }
    fn jet(&self, t: f64, q: &DVector<f64>, v: &DVector<f64>) -> LagJet {
        let (p, dp) = self.p.eval(t, self.period);
        let (qm, dq) = self.q.eval(t, self.period);
        let (r, dr) = self.r.eval(t, self.period);
        let pv = &p * v;
        let qq = &qm * q;
        let rq = &r * q;
        LagJet {
            value: 0.5 * v.dot(&pv) + v.dot(&qq) + 0.5 * q.dot(&rq),
            dt: 0.5 * v.dot(&(&dp * v)) + v.dot(&(&dq * q)) + 0.5 * q.dot(&(&dr * q)),
            dq: qm.transpose() * v + rq,
            dv: pv + qq,
            dqq: r,
            dvq: qm,
            dvv: p,
        }
    }
}
