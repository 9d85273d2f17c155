//! JSON documents: model descriptions, run configurations and result documents.
//! Every document carries `"schema": "sil/1"`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::duality::{Direction, Hamiltonian, MechanicalHamiltonian, TransformedHamiltonian};
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::loops::{Loop, Subspace};
use crate::models::{Lagrangian, MatrixSeries, Mechanical, Metric, QuadraticSturm};

pub fn schema_tag() -> String {
    crate::SCHEMA.into()
}

/// Parse a document, reporting the path of the offending field on failure.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Input(format!("at `{path}`: {}", e.into_inner()))
    })
}

fn check_schema(tag: &Option<String>) -> Result<()> {
    match tag.as_deref() {
        None | Some(crate::SCHEMA) => Ok(()),
        Some(other) => Err(Error::Input(format!(
            "at `schema`: unsupported version {other:?}, expected {:?}",
            crate::SCHEMA
        ))),
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::Input(format!(
            "at `{what}`: expected a nonempty rectangular matrix"
        )));
    }
    Ok(DMatrix::from_fn(n, rows[0].len(), |i, j| rows[i][j]))
}

/// Trigonometric matrix series given by rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub constant: Vec<Vec<f64>>,
    #[serde(default)]
    pub cos: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub sin: Vec<Vec<Vec<f64>>>,
}

impl SeriesSpec {
    fn build(&self, what: &str) -> Result<MatrixSeries> {
        Ok(MatrixSeries {
            constant: matrix(&self.constant, &format!("{what}.constant"))?,
            cos: self
                .cos
                .iter()
                .map(|m| matrix(m, &format!("{what}.cos")))
                .collect::<Result<_>>()?,
            sin: self
                .sin
                .iter()
                .map(|m| matrix(m, &format!("{what}.sin")))
                .collect::<Result<_>>()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelKind {
    FreeParticle {
        n: usize,
    },
    /// `|v|^2 / 2 - sum w_i^2 q_i^2 / 2` on a chart.
    Harmonic {
        omegas: Vec<f64>,
    },
    /// `v^2 / 2 + a cos(2 pi q)`.
    Pendulum {
        a: f64,
    },
    CoupledPendula {
        a1: f64,
        a2: f64,
        c: f64,
    },
    /// `|v|^2 / 2 + <A, v> - V`.
    Physical {
        n: usize,
        #[serde(default)]
        a: Option<Vec<ScalarField>>,
        v: ScalarField,
        #[serde(default = "one")]
        time_period: f64,
    },
    /// `g(v, v) / 2 + U` with a constant (`g`) or field (`g_field`) metric.
    TorusMetric {
        n: usize,
        #[serde(default)]
        g: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        g_field: Option<Vec<Vec<ScalarField>>>,
        u: ScalarField,
        #[serde(default = "one")]
        time_period: f64,
    },
    /// `P v.v / 2 + Q q.v + R q.q / 2` with trigonometric coefficients.
    Quadratic {
        p: SeriesSpec,
        q: SeriesSpec,
        r: SeriesSpec,
        period: f64,
    },
    /// Same quadratic form with coefficients sampled at `t_j = j period / N`.
    CoefficientTable {
        p: Vec<Vec<Vec<f64>>>,
        q: Vec<Vec<Vec<f64>>>,
        r: Vec<Vec<Vec<f64>>>,
        period: f64,
    },
}

fn one() -> f64 {
    1.0
}

// Unknown keys are rejected by the flattened kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default)]
    pub schema: Option<String>,
    #[serde(flatten)]
    pub kind: ModelKind,
    /// Optional claims, checked against the built model.
    #[serde(default)]
    pub reversible: Option<bool>,
    #[serde(default)]
    pub autonomous: Option<bool>,
}

/// A Lagrangian built from a spec, together with its closed-form dual when there is one.
pub struct BuiltModel {
    pub lagrangian: Arc<dyn Lagrangian>,
    pub mechanical: Option<Mechanical>,
}

impl BuiltModel {
    /// Closed-form dual for constant-metric mechanical models, fiber solves otherwise.
    pub fn hamiltonian(&self) -> Arc<dyn Hamiltonian> {
        if let Some(Ok(h)) = self.mechanical.as_ref().map(MechanicalHamiltonian::dual_of) {
            return Arc::new(h);
        }
        Arc::new(TransformedHamiltonian::new(self.lagrangian.clone()))
    }
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: ModelSpec = parse(text)?;
        check_schema(&s.schema)?;
        Ok(s)
    }

    pub fn build(&self) -> Result<BuiltModel> {
        let mech = |m: Mechanical| BuiltModel {
            lagrangian: Arc::new(m.clone()),
            mechanical: Some(m),
        };
        let built = match &self.kind {
            ModelKind::FreeParticle { n } => {
                if *n == 0 {
                    return Err(Error::Input("at `n`: must be positive".into()));
                }
                mech(Mechanical::free_particle(*n))
            }
            ModelKind::Harmonic { omegas } => {
                if omegas.is_empty() {
                    return Err(Error::Input("at `omegas`: must be nonempty".into()));
                }
                mech(Mechanical::harmonic(omegas))
            }
            ModelKind::Pendulum { a } => mech(Mechanical::pendulum(*a)),
            ModelKind::CoupledPendula { a1, a2, c } => {
                mech(Mechanical::coupled_pendula(*a1, *a2, *c))
            }
            ModelKind::Physical {
                n,
                a,
                v,
                time_period,
            } => {
                let a = a.clone().unwrap_or_else(|| vec![ScalarField::zero(); *n]);
                if a.len() != *n {
                    return Err(Error::Input("at `a`: needs n components".into()));
                }
                let mut m = Mechanical::physical(a, v.clone())?;
                m.time_period = *time_period;
                m.validate()?;
                mech(m)
            }
            ModelKind::TorusMetric {
                n,
                g,
                g_field,
                u,
                time_period,
            } => {
                let metric = match (g, g_field) {
                    (Some(g), None) => Metric::Constant(g.clone()),
                    (None, Some(f)) => Metric::Field(f.clone()),
                    (None, None) => Metric::identity(*n),
                    (Some(_), Some(_)) => {
                        return Err(Error::Input("at `g`: give either g or g_field".into()))
                    }
                };
                let mut m = Mechanical::torus_metric(metric, u.clone(), *n)?;
                m.time_period = *time_period;
                m.validate()?;
                mech(m)
            }
            ModelKind::Quadratic { p, q, r, period } => BuiltModel {
                lagrangian: Arc::new(QuadraticSturm::from_series(
                    p.build("p")?,
                    q.build("q")?,
                    r.build("r")?,
                    *period,
                )?),
                mechanical: None,
            },
            ModelKind::CoefficientTable { p, q, r, period } => {
                let conv = |t: &Vec<Vec<Vec<f64>>>, w: &str| {
                    t.iter().map(|m| matrix(m, w)).collect::<Result<Vec<_>>>()
                };
                BuiltModel {
                    lagrangian: Arc::new(QuadraticSturm::from_tables(
                        &conv(p, "p")?,
                        &conv(q, "q")?,
                        &conv(r, "r")?,
                        *period,
                    )?),
                    mechanical: None,
                }
            }
        };
        let l = &built.lagrangian;
        if let Some(claim) = self.reversible {
            if claim != l.reversible() {
                return Err(Error::Input(format!(
                    "at `reversible`: the model is {}reversible",
                    if claim { "not " } else { "" }
                )));
            }
        }
        if let Some(claim) = self.autonomous {
            if claim != l.time_period().is_none() {
                return Err(Error::Input(format!(
                    "at `autonomous`: the model is {}autonomous",
                    if claim { "not " } else { "" }
                )));
            }
        }
        Ok(built)
    }
}

/// Parameters of a CLI run. Command-line flags override the matching fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schema: Option<String>,
    pub tau: Option<f64>,
    pub winding: Option<Vec<i64>>,
    /// Constant part of the initial loop.
    pub q0: Option<Vec<f64>>,
    /// Rows `a_1, a_2, ...` and `b_1, b_2, ...` of the initial loop.
    pub init_cos: Option<Vec<Vec<f64>>>,
    pub init_sin: Option<Vec<Vec<f64>>>,
    pub subspace: Option<Subspace>,
    pub descent: Option<bool>,
    /// Fourier modes per period.
    pub nf: Option<usize>,
    pub oversample: Option<usize>,
    pub tol: Option<f64>,
    pub tol_eig: Option<f64>,
    pub kmax: Option<usize>,
    pub k_set: Option<Vec<usize>>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// Fiber radius of the duality sample box.
    pub cap: Option<f64>,
    pub direction: Option<Direction>,
    /// Added to the Maslov index before the route comparison; a fault-injection hook.
    pub inject_route_offset: Option<i64>,
}


impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = parse(text)?;
        check_schema(&c.schema)?;
        for (name, v) in [
            ("tau", c.tau),
            ("tol", c.tol),
            ("tol_eig", c.tol_eig),
            ("cap", c.cap),
        ] {
            if let Some(x) = v {
                if !(x > 0.0) || !x.is_finite() {
                    return Err(Error::Input(format!(
                        "at `{name}`: must be positive and finite"
                    )));
                }
            }
        }
        Ok(c)
    }

    /// Initial loop for an orbit search with `n_modes` modes: the straight
    /// loop through `q0` with the requested winding plus the given modes.
    pub fn initial_loop(&self, n: usize, n_modes: usize) -> Result<Loop> {
        let tau = self
            .tau
            .ok_or_else(|| Error::Input("at `tau`: required for orbit search".into()))?;
        let w = self.winding.clone().unwrap_or_else(|| vec![0; n]);
        let q0 = self.q0.clone().unwrap_or_else(|| vec![0.0; n]);
        if w.len() != n || q0.len() != n {
            return Err(Error::Input(format!(
                "at `winding`/`q0`: expected length {n}"
            )));
        }
        let mut l = Loop::straight(DVector::from_vec(q0), w, tau, n_modes)?;
        for (rows, is_cos) in [(&self.init_cos, true), (&self.init_sin, false)] {
            for (k, row) in rows.iter().flatten().enumerate().take(n_modes) {
                if row.len() != n {
                    return Err(Error::Input(
                        "at `init_cos`/`init_sin`: rows need length n".into(),
                    ));
                }
                let v = DVector::from_row_slice(row);
                if is_cos {
                    l.set_cos(k + 1, v);
                } else {
                    l.set_sin(k + 1, v);
                }
            }
        }
        Ok(l)
    }
}

/// Indices of one orbit through both routes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexDoc {
    pub schema: String,
    pub model: String,
    pub n: usize,
    pub tau: f64,
    pub winding: Vec<i64>,
    pub residual: f64,
    pub hessian: HessianDoc,
    pub maslov: MaslovDoc,
    pub agree: bool,
    /// Autonomous model at a non-constant orbit: one null direction is the time shift.
    pub shift_mode: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianDoc {
    pub morse_index: usize,
    pub nullity: usize,
    pub n_modes: usize,
    pub gate_n_modes: Option<usize>,
    pub gate_stable: Option<bool>,
    pub tol: f64,
    pub ambiguous: bool,
    pub route: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaslovDoc {
    pub index: i64,
    pub nullity: usize,
    pub steps: usize,
    pub realisation: String,
}

/// Result of an orbit search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitDoc {
    pub schema: String,
    pub model: String,
    pub converged: bool,
    pub residual: f64,
    pub action: f64,
    pub tol: f64,
    pub n_samples: usize,
    pub descent_steps: usize,
    pub newton_steps: usize,
    pub orbit: crate::loops::LoopDoc,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_field_is_located() {
        let e = ModelSpec::from_json(r#"{"kind": "free-particle"}"#).unwrap_err();
        assert!(e.to_string().contains('n'), "{e}");
        let e = ModelSpec::from_json(r#"{"kind": "pendulum", "a": 1, "b": 2}"#).unwrap_err();
        assert!(matches!(e, Error::Input(_)));
    }

    #[test]
    fn builds_catalog_models() {
        let docs = [
            r#"{"schema": "sil/1", "kind": "pendulum", "a": 1.0, "reversible": true, "autonomous": true}"#,
            r#"{"kind": "physical", "n": 2, "a": [{"terms": [{"coef": 1, "k": [1, 0], "phase": "sin"}]}, {}], "v": {"terms": [{"coef": 1, "k": [1, 0], "phase": "cos"}]}}"#,
            r#"{"kind": "torus-metric", "n": 2, "g": [[2, 0], [0, 1]], "u": {"terms": [{"coef": 1, "k": [1, 0], "phase": "cos"}]}}"#,
            r#"{"kind": "quadratic", "period": 1, "p": {"constant": [[1]]}, "q": {"constant": [[0]], "sin": [[[0.2]]]}, "r": {"constant": [[-1]]}}"#,
            r#"{"kind": "coefficient-table", "period": 1, "p": [[[1]], [[1.1]], [[1]], [[0.9]]], "q": [[[0]], [[0]], [[0]], [[0]]], "r": [[[1]], [[1]], [[1]], [[1]]]}"#,
        ];
        for d in docs {
            let m = ModelSpec::from_json(d).unwrap().build().unwrap();
            let _ = m.hamiltonian();
        }
        let wrong = r#"{"kind": "physical", "n": 1, "a": [{"terms": [{"coef": 1, "k": [1], "phase": "sin"}]}], "v": {}, "reversible": true}"#;
        assert!(ModelSpec::from_json(wrong).unwrap().build().is_err());
    }

    #[test]
    fn run_config_validation() {
        assert!(RunConfig::from_json(r#"{"tau": -1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"tua": 1}"#).is_err());
        let c = RunConfig::from_json(r#"{"tau": 2, "winding": [1], "init_cos": [[0.1]]}"#).unwrap();
        let l = c.initial_loop(1, 4).unwrap();
        assert_eq!(l.cos_coeffs()[1][0], 0.1);
        assert_eq!(l.winding(), &[1]);
    }
}
