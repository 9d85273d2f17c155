use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_positive_definite, Domain, LagJet, Lagrangian};
use crate::error::{Error, Result};
use crate::fields::{Phase, ScalarField};

/// Kinetic metric `g(t, q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Constant(Vec<Vec<f64>>),
    /// Symmetric table of fields `g_ij(t, q)`.
    Field(Vec<Vec<ScalarField>>),
}

/// Metric value with first and second `q`-derivatives and `t`-derivative.
pub(crate) struct MetricJet {
    pub g: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub ddg: Vec<Vec<DMatrix<f64>>>,
    pub dt: DMatrix<f64>,
}

impl Metric {
    pub fn identity(n: usize) -> Self {
        Metric::Constant(
            (0..n)
                .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
                .collect(),
        )
    }

    pub fn from_matrix(g: &DMatrix<f64>) -> Self {
        Metric::Constant(
            (0..g.nrows())
                .map(|i| g.row(i).iter().copied().collect())
                .collect(),
        )
    }

    pub(crate) fn jet(&self, n: usize, t: f64, q: &DVector<f64>, period: f64) -> MetricJet {
        match self {
            Metric::Constant(rows) => MetricJet {
                g: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
                dg: vec![DMatrix::zeros(n, n); n],
                ddg: vec![vec![DMatrix::zeros(n, n); n]; n],
                dt: DMatrix::zeros(n, n),
            },
            Metric::Field(f) => {
                let mut out = MetricJet {
                    g: DMatrix::zeros(n, n),
                    dg: vec![DMatrix::zeros(n, n); n],
                    ddg: vec![vec![DMatrix::zeros(n, n); n]; n],
                    dt: DMatrix::zeros(n, n),
                };
                for i in 0..n {
                    for j in 0..n {
                        let jet = f[i][j].jet(t, q, period);
                        out.g[(i, j)] = jet.value;
                        out.dt[(i, j)] = jet.dt;
                        for k in 0..n {
                            out.dg[k][(i, j)] = jet.grad[k];
                            for l in 0..n {
                                out.ddg[k][l][(i, j)] = jet.hess[(k, l)];
                            }
                        }
                    }
                }
                out
            }
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            Metric::Constant(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Input("metric must be n x n".into()));
                }
                check_positive_definite(&DMatrix::from_fn(n, n, |i, j| rows[i][j]), "metric")
            }
            Metric::Field(f) => {
                if f.len() != n || f.iter().any(|r| r.len() != n) {
                    return Err(Error::Input("metric must be n x n".into()));
                }
                for i in 0..n {
                    for j in 0..n {
                        f[i][j].validate(n)?;
                        if f[i][j] != f[j][i] {
                            return Err(Error::Input("metric field must be symmetric".into()));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    fn fields(&self) -> Vec<&ScalarField> {
        match self {
            Metric::Constant(_) => vec![],
            Metric::Field(f) => f.iter().flatten().collect(),
        }
    }
}

/// `L = g(v, v) / 2 + <A(t, q), v> + U(t, q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mechanical {
    pub n: usize,
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector_potential: Option<Vec<ScalarField>>,
    #[serde(default)]
    pub potential: ScalarField,
    /// Period of the `t`-dependence of the fields.
    #[serde(default = "one")]
    pub time_period: f64,
    #[serde(default = "default_name")]
    pub name: String,
}

fn one() -> f64 {
    1.0
}
fn default_name() -> String {
    "mechanical".into()
}

impl Mechanical {
    pub fn new(
        n: usize,
        metric: Metric,
        vector_potential: Option<Vec<ScalarField>>,
        potential: ScalarField,
    ) -> Result<Self> {
        let m = Mechanical {
            n,
            metric,
            vector_potential,
            potential,
            time_period: 1.0,
            name: default_name(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Input("n must be positive".into()));
        }
        if !(self.time_period > 0.0) {
            return Err(Error::Input("time period must be positive".into()));
        }
        self.metric.validate(self.n)?;
        self.potential.validate(self.n)?;
        if let Some(a) = &self.vector_potential {
            if a.len() != self.n {
                return Err(Error::Input("vector potential needs n components".into()));
            }
            for f in a {
                f.validate(self.n)?;
            }
        }
        Ok(())
    }

    fn all_fields(&self) -> Vec<&ScalarField> {
        let mut v = self.metric.fields();
        v.push(&self.potential);
        if let Some(a) = &self.vector_potential {
            v.extend(a.iter());
        }
        v
    }

    pub fn free_particle(n: usize) -> Self {
        Mechanical::new(n, Metric::identity(n), None, ScalarField::zero())
            .unwrap()
            .named("free-particle")
    }

    /// `|v|^2 / 2 - sum w_i^2 q_i^2 / 2` on a chart.
    pub fn harmonic(omegas: &[f64]) -> Self {
        let n = omegas.len();
        let k = DMatrix::from_diagonal(&DVector::from_iterator(n, omegas.iter().map(|w| -w * w)));
        Mechanical::new(n, Metric::identity(n), None, ScalarField::quadratic(k))
            .unwrap()
            .named("harmonic")
    }

    /// `v^2 / 2 + a cos(2 pi q)`.
    pub fn pendulum(a: f64) -> Self {
        Mechanical::new(
            1,
            Metric::identity(1),
            None,
            ScalarField::term(a, vec![1], 0, Phase::Cos),
        )
        .unwrap()
        .named("pendulum")
    }

    /// Two pendula with a `cos(2 pi (q1 - q2))` coupling.
    pub fn coupled_pendula(a1: f64, a2: f64, c: f64) -> Self {
        let u = ScalarField::term(a1, vec![1, 0], 0, Phase::Cos)
            .plus(ScalarField::term(a2, vec![0, 1], 0, Phase::Cos))
            .plus(ScalarField::term(c, vec![1, -1], 0, Phase::Cos));
        Mechanical::new(2, Metric::identity(2), None, u)
            .unwrap()
            .named("coupled-pendula")
    }

    /// `|v|^2 / 2 + <A, v> - V`.
    pub fn physical(a: Vec<ScalarField>, v: ScalarField) -> Result<Self> {
        let n = a.len();
        Ok(Mechanical::new(n, Metric::identity(n), Some(a), v.scaled(-1.0))?.named("physical"))
    }

    /// `g(v, v) / 2 + U` with a metric on the torus.
    pub fn torus_metric(g: Metric, u: ScalarField, n: usize) -> Result<Self> {
        Ok(Mechanical::new(n, g, None, u)?.named("torus-metric"))
    }

    pub(crate) fn metric_jet(&self, t: f64, q: &DVector<f64>) -> MetricJet {
        self.metric.jet(self.n, t, q, self.time_period)
    }
}

impl Lagrangian for Mechanical {
    fn n(&self) -> usize {
        self.n
    }

    fn domain(&self) -> Domain {
        if self.all_fields().iter().all(|f| f.is_torus_periodic()) {
            Domain::Torus
        } else {
            Domain::Chart
        }
    }

    fn time_period(&self) -> Option<f64> {
        if self.all_fields().iter().all(|f| f.is_time_independent()) {
            None
        } else {
            Some(self.time_period)
        }
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn reversible(&self) -> bool {
        self.vector_potential.is_none() && self.all_fields().iter().all(|f| f.is_time_even())
    }

    fn jet(&self, t: f64, q: &DVector<f64>, v: &DVector<f64>) -> LagJet {
        let n = self.n;
        let mj = self.metric_jet(t, q);
        let gv = &mj.g * v;
        let u = self.potential.jet(t, q, self.time_period);
        let mut out = LagJet {
            value: 0.5 * v.dot(&gv) + u.value,
            dt: 0.5 * v.dot(&(&mj.dt * v)) + u.dt,
            dq: u.grad.clone(),
            dv: gv,
            dqq: u.hess.clone(),
            dvq: DMatrix::zeros(n, n),
            dvv: mj.g.clone(),
        };
        for k in 0..n {
            let dgk_v = &mj.dg[k] * v;
            out.dq[k] += 0.5 * v.dot(&dgk_v);
            for i in 0..n {
                out.dvq[(i, k)] += dgk_v[i];
            }
            for l in 0..n {
                out.dqq[(k, l)] += 0.5 * v.dot(&(&mj.ddg[k][l] * v));
            }
        }
        if let Some(a) = &self.vector_potential {
            for (i, ai) in a.iter().enumerate() {
                let j = ai.jet(t, q, self.time_period);
                out.value += j.value * v[i];
                out.dt += j.dt * v[i];
                out.dv[i] += j.value;
                out.dq += &j.grad * v[i];
                out.dqq += &j.hess * v[i];
                for k in 0..n {
                    out.dvq[(i, k)] += j.grad[k];
                }
            }
        }
        out
    }
}
