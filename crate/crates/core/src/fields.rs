//! Closed-form scalar functions of `(t, q)` with exact derivatives.
//!
//! A [`ScalarField`] is a finite trigonometric series in `q` (integer wave
//! vectors, so it lives on the torus) and `t` (period `T`), plus an optional
//! quadratic polynomial in `q` for chart models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

/// `coef * trig(2 pi (k . q) + 2 pi j t / T)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub coef: f64,
    pub k: Vec<i64>,
    #[serde(default)]
    pub j: i64,
    pub phase: Phase,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    #[serde(default)]
    pub terms: Vec<TrigTerm>,
    /// Symmetric `K` of the term `q^T K q / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<f64>>,
    #[serde(default)]
    pub constant: f64,
}

/// Value and derivatives at one point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: f64,
    pub dt: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl ScalarField {
    pub fn zero() -> Self {
        ScalarField::default()
    }

    pub fn constant(c: f64) -> Self {
        ScalarField {
            constant: c,
            ..Default::default()
        }
    }

    pub fn term(coef: f64, k: Vec<i64>, j: i64, phase: Phase) -> Self {
        ScalarField {
            terms: vec![TrigTerm { coef, k, j, phase }],
            ..Default::default()
        }
    }

    pub fn quadratic(k: DMatrix<f64>) -> Self {
        let rows = (0..k.nrows())
            .map(|i| k.row(i).iter().copied().collect())
            .collect();
        ScalarField {
            quadratic: Some(rows),
            ..Default::default()
        }
    }

    pub fn plus(mut self, other: ScalarField) -> Self {
        self.terms.extend(other.terms);
        self.constant += other.constant;
        if let Some(q) = other.quadratic {
            self.quadratic = Some(match self.quadratic.take() {
                None => q,
                Some(mut a) => {
                    for (ra, rb) in a.iter_mut().zip(&q) {
                        for (x, y) in ra.iter_mut().zip(rb) {
                            *x += y;
                        }
                    }
                    a
                }
            });
        }
        if let Some(l) = other.linear {
            self.linear = Some(match self.linear.take() {
                None => l,
                Some(mut a) => {
                    a.iter_mut().zip(&l).for_each(|(x, y)| *x += y);
                    a
                }
            });
        }
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.coef *= s);
        self.constant *= s;
        if let Some(q) = self.quadratic.as_mut() {
            q.iter_mut().flatten().for_each(|x| *x *= s);
        }
        if let Some(l) = self.linear.as_mut() {
            l.iter_mut().for_each(|x| *x *= s);
        }
        self
    }

    /// Checks dimensions against `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        for t in &self.terms {
            if t.k.len() != n {
                return Err(Error::Input(format!(
                    "wave vector of length {} in a dimension-{n} model",
                    t.k.len()
                )));
            }
            if !t.coef.is_finite() {
                return Err(Error::Input("non-finite coefficient".into()));
            }
        }
        if let Some(q) = &self.quadratic {
            if q.len() != n || q.iter().any(|r| r.len() != n) {
                return Err(Error::Input("quadratic part must be n x n".into()));
            }
            for i in 0..n {
                for j in 0..n {
                    if (q[i][j] - q[j][i]).abs() > 1e-12 * (1.0 + q[i][j].abs()) {
                        return Err(Error::Input("quadratic part must be symmetric".into()));
                    }
                }
            }
        }
        if let Some(l) = &self.linear {
            if l.len() != n {
                return Err(Error::Input("linear part must have length n".into()));
            }
        }
        Ok(())
    }

    /// True when every term is 1-periodic in each `q_i`.
    pub fn is_torus_periodic(&self) -> bool {
        self.quadratic
            .as_ref()
            .map_or(true, |q| q.iter().flatten().all(|&x| x == 0.0))
            && self
                .linear
                .as_ref()
                .map_or(true, |l| l.iter().all(|&x| x == 0.0))
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|t| t.j == 0 || t.coef == 0.0)
    }

    /// True when the field is unchanged by `t -> -t`.
    pub fn is_time_even(&self) -> bool {
        self.terms.iter().all(|t| {
            t.j == 0 || t.coef == 0.0 || t.phase == Phase::Cos && t.k.iter().all(|&k| k == 0)
        })
    }

    pub fn value(&self, t: f64, q: &DVector<f64>, period: f64) -> f64 {
        let mut v = self.constant;
        for term in &self.terms {
            let arg = self.arg(term, t, q, period);
            v += term.coef
                * match term.phase {
                    Phase::Cos => arg.cos(),
                    Phase::Sin => arg.sin(),
                };
        }
        if let Some(k) = &self.quadratic {
            for (i, row) in k.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    v += 0.5 * x * q[i] * q[j];
                }
            }
        }
        if let Some(l) = &self.linear {
            v += l.iter().zip(q.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        v
    }

    fn arg(&self, term: &TrigTerm, t: f64, q: &DVector<f64>, period: f64) -> f64 {
        let kq: f64 = term
            .k
            .iter()
            .zip(q.iter())
            .map(|(&k, &x)| k as f64 * x)
            .sum();
        2.0 * PI * (kq + term.j as f64 * t / period)
    }

    pub fn jet(&self, t: f64, q: &DVector<f64>, period: f64) -> Jet {
        let n = q.len();
        let mut jet = Jet {
            value: self.constant,
            dt: 0.0,
            grad: DVector::zeros(n),
            hess: DMatrix::zeros(n, n),
        };
        for term in &self.terms {
            let arg = self.arg(term, t, q, period);
            let (s, c) = arg.sin_cos();
            // f = coef trig(arg); f' = coef d trig; f'' = -f
            let (f, df) = match term.phase {
                Phase::Cos => (term.coef * c, -term.coef * s),
                Phase::Sin => (term.coef * s, term.coef * c),
            };
            jet.value += f;
            jet.dt += df * 2.0 * PI * term.j as f64 / period;
            for a in 0..n {
                let ka = 2.0 * PI * term.k[a] as f64;
                if ka == 0.0 {
                    continue;
                }
                jet.grad[a] += df * ka;
                for b in 0..n {
                    let kb = 2.0 * PI * term.k[b] as f64;
                    jet.hess[(a, b)] -= f * ka * kb;
                }
            }
        }
        if let Some(k) = &self.quadratic {
            for i in 0..n {
                for j in 0..n {
                    jet.value += 0.5 * k[i][j] * q[i] * q[j];
                    jet.grad[i] += k[i][j] * q[j];
                    jet.hess[(i, j)] += k[i][j];
                }
            }
        }
        if let Some(l) = &self.linear {
            for i in 0..n {
                jet.value += l[i] * q[i];
                jet.grad[i] += l[i];
            }
        }
        jet
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_matches_finite_differences() {
        let f = ScalarField::term(0.7, vec![1, -2], 1, Phase::Cos)
            .plus(ScalarField::term(-0.3, vec![0, 1], 0, Phase::Sin))
            .plus(ScalarField::quadratic(DMatrix::from_row_slice(
                2,
                2,
                &[1.0, 0.2, 0.2, -0.5],
            )));
        let q = DVector::from_row_slice(&[0.13, -0.41]);
        let (t, per) = (0.37, 1.7);
        let jet = f.jet(t, &q, per);
        let h = 1e-5;
        for a in 0..2 {
            let mut qp = q.clone();
            qp[a] += h;
            let mut qm = q.clone();
            qm[a] -= h;
            let g = (f.value(t, &qp, per) - f.value(t, &qm, per)) / (2.0 * h);
            assert!((g - jet.grad[a]).abs() < 1e-7);
            let hp = f.jet(t, &qp, per).grad;
            let hm = f.jet(t, &qm, per).grad;
            for b in 0..2 {
                assert!(((hp[b] - hm[b]) / (2.0 * h) - jet.hess[(a, b)]).abs() < 1e-6);
            }
        }
        let dt = (f.value(t + h, &q, per) - f.value(t - h, &q, per)) / (2.0 * h);
        assert!((dt - jet.dt).abs() < 1e-7);
        assert!((f.value(t, &q, per) - jet.value).abs() < 1e-14);
    }

    #[test]
    fn json_roundtrip() {
        let f = ScalarField::term(1.0, vec![1], 0, Phase::Cos);
        let s = serde_json::to_string(&f).unwrap();
        let back: ScalarField = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(back.validate(1).is_ok());
        assert!(back.validate(2).is_err());
    }
}
