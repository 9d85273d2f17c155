use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{HamJet, Hamiltonian};
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::models::{Domain, Mechanical, Metric};

/// `H = (p - A)^T G (p - A) / 2 + V` with a constant positive definite `G`.
/// With `G = I` this is the physical Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanicalHamiltonian {
    pub n: usize,
    pub inverse_metric: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector_potential: Option<Vec<ScalarField>>,
    #[serde(default)]
    pub potential: ScalarField,
    #[serde(default = "one")]
    pub time_period: f64,
}

fn one() -> f64 {
    1.0
}

impl MechanicalHamiltonian {
    pub fn physical(a: Option<Vec<ScalarField>>, v: ScalarField, n: usize) -> Result<Self> {
        let h = MechanicalHamiltonian {
            n,
            inverse_metric: (0..n)
                .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
                .collect(),
            vector_potential: a,
            potential: v,
            time_period: 1.0,
        };
        h.validate()?;
        Ok(h)
    }

    /// Closed-form Fenchel dual of a mechanical Lagrangian with constant metric.
    pub fn dual_of(l: &Mechanical) -> Result<Self> {
        let g = match &l.metric {
            Metric::Constant(rows) => DMatrix::from_fn(l.n, l.n, |i, j| rows[i][j]),
            Metric::Field(_) => {
                return Err(Error::Precondition(
                    "closed-form dual needs a constant metric".into(),
                ));
            }
        };
        let gi = g
            .try_inverse()
            .ok_or_else(|| Error::Input("metric is singular".into()))?;
        let h = MechanicalHamiltonian {
            n: l.n,
            inverse_metric: (0..l.n)
                .map(|i| gi.row(i).iter().copied().collect())
                .collect(),
            vector_potential: l.vector_potential.clone(),
            potential: l.potential.clone().scaled(-1.0),
            time_period: l.time_period,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0
            || self.inverse_metric.len() != self.n
            || self.inverse_metric.iter().any(|r| r.len() != self.n)
        {
            return Err(Error::Input(
                "inverse metric must be n x n with n >= 1".into(),
            ));
        }
        crate::models::check_positive_definite(&self.g(), "inverse metric")?;
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

    fn g(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.inverse_metric[i][j])
    }

    fn fields(&self) -> Vec<&ScalarField> {
        let mut v = vec![&self.potential];
        if let Some(a) = &self.vector_potential {
            v.extend(a.iter());
        }
        v
    }
}

impl Hamiltonian for MechanicalHamiltonian {
    fn n(&self) -> usize {
        self.n
    }
    fn domain(&self) -> Domain {
        if self.fields().iter().all(|f| f.is_torus_periodic()) {
            Domain::Torus
        } else {
            Domain::Chart
        }
    }
    fn time_period(&self) -> Option<f64> {
        if self.fields().iter().all(|f| f.is_time_independent()) {
            None
        } else {
            Some(self.time_period)
        }
    }
    fn name(&self) -> String {
        "mechanical-hamiltonian".into()
    }
    fn reversible(&self) -> bool {
        self.vector_potential.is_none() && self.potential.is_time_even()
    }

    fn jet(&self, t: f64, q: &DVector<f64>, p: &DVector<f64>) -> HamJet {
        let n = self.n;
        let g = self.g();
        let vj = self.potential.jet(t, q, self.time_period);
        let mut w = p.clone();
        let mut da = DMatrix::zeros(n, n);
        let mut dta = DVector::zeros(n);
        let mut ajets = Vec::new();
        if let Some(a) = &self.vector_potential {
            for (i, f) in a.iter().enumerate() {
                let j = f.jet(t, q, self.time_period);
                w[i] -= j.value;
                dta[i] = j.dt;
                for k in 0..n {
                    da[(i, k)] = j.grad[k];
                }
                ajets.push(j);
            }
        }
        let gw = &g * &w;
        let mut dqq = da.transpose() * &g * &da + &vj.hess;
        for (i, j) in ajets.iter().enumerate() {
            dqq -= &j.hess * gw[i];
        }
        HamJet {
            value: 0.5 * w.dot(&gw) + vj.value,
            dt: -dta.dot(&gw) + vj.dt,
            dq: -(da.transpose() * &gw) + &vj.grad,
            dp: gw,
            dqq,
            dpq: -(&g * &da),
            dpp: g,
        }
    }
}
