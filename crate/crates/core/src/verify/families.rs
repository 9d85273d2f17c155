//! Test systems: the catalog orbits used for route agreement and seeded
//! random quadratic families.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fields::{Phase, ScalarField};
use crate::loops::{find_orbit, FindOptions, Loop};
use crate::models::{Lagrangian, MatrixSeries, Mechanical, Metric, QuadraticSturm};

/// A model with an orbit, or an initial guess for one.
pub struct System {
    pub name: String,
    pub model: Arc<dyn Lagrangian>,
    pub init: Loop,
    /// Refine `init` with the orbit finder before use.
    pub search: bool,
}

impl System {
    pub fn orbit(&self, n_modes: usize) -> Result<Loop> {
        if !self.search {
            return Ok(self.init.with_modes(n_modes));
        }
        let opts = FindOptions {
            n_modes,
            ..Default::default()
        };
        Ok(find_orbit(self.model.as_ref(), &self.init, &opts)?.orbit)
    }
}

fn cos_term(c: f64, k: Vec<i64>) -> ScalarField {
    ScalarField::term(c, k, 0, Phase::Cos)
}

/// `g_11 = 1 + 0.2 cos(2 pi q_2)`, `g_22 = 1`, `U = 0.5 cos(2 pi q_1)`.
pub fn torus_field_model() -> Mechanical {
    let g = Metric::Field(vec![
        vec![
            ScalarField::constant(1.0).plus(cos_term(0.2, vec![0, 1])),
            ScalarField::zero(),
        ],
        vec![ScalarField::zero(), ScalarField::constant(1.0)],
    ]);
    Mechanical::torus_metric(g, cos_term(0.5, vec![1, 0]), 2).unwrap()
}

/// `A = (0.3 sin(2 pi q_2), 0)`, `V = 0.5 cos(2 pi q_1)`.
pub fn magnetic_model() -> Mechanical {
    let a = vec![
        ScalarField::term(0.3, vec![0, 1], 0, Phase::Sin),
        ScalarField::zero(),
    ];
    Mechanical::physical(a, cos_term(0.5, vec![1, 0])).unwrap()
}

/// The six systems of the route-agreement check.
pub fn route_systems(n_modes: usize) -> Vec<System> {
    let v = |x: &[f64]| DVector::from_row_slice(x);
    let pendulum: Arc<dyn Lagrangian> = Arc::new(Mechanical::pendulum(1.0));
    vec![
        System {
            name: "free particle n=1, winding 1".into(),
            model: Arc::new(Mechanical::free_particle(1)),
            init: Loop::straight(v(&[0.0]), vec![1], 1.0, n_modes).unwrap(),
            search: false,
        },
        System {
            name: "free particle n=2, winding (1,0)".into(),
            model: Arc::new(Mechanical::free_particle(2)),
            init: Loop::straight(v(&[0.0, 0.0]), vec![1, 0], 1.0, n_modes).unwrap(),
            search: false,
        },
        System {
            name: "pendulum at the potential minimum, tau 1.3".into(),
            model: pendulum.clone(),
            init: Loop::constant(v(&[0.0]), 1.3, n_modes).unwrap(),
            search: false,
        },
        System {
            name: "pendulum at the potential maximum, tau 1.3".into(),
            model: pendulum,
            init: Loop::constant(v(&[0.5]), 1.3, n_modes).unwrap(),
            search: false,
        },
        System {
            name: "torus metric with U = cos, winding (1,0)".into(),
            model: Arc::new(torus_field_model()),
            init: Loop::straight(v(&[0.0, 0.0]), vec![1, 0], 1.0, n_modes).unwrap(),
            search: true,
        },
        System {
            name: "magnetic model, winding (1,0)".into(),
            model: Arc::new(magnetic_model()),
            init: Loop::straight(v(&[0.0, 0.25]), vec![1, 0], 1.0, n_modes).unwrap(),
            search: true,
        },
    ]
}

fn sym(rng: &mut ChaCha8Rng, n: usize, s: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-s..s));
    (&a + a.transpose()) * 0.5
}

fn full(rng: &mut ChaCha8Rng, n: usize, s: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(-s..s))
}

/// Positive definite `P` whose harmonics keep it above `I / 2`.
fn metric_series(rng: &mut ChaCha8Rng, n: usize, harmonics: usize, even: bool) -> MatrixSeries {
    let amp = 0.4 / (n * harmonics.max(1)) as f64;
    let base = sym(rng, n, 0.3) + DMatrix::identity(n, n) * rng.gen_range(1.0..2.0);
    let lift = crate::linalg::sym_eigenvalues(&base)[0];
    let constant = &base + DMatrix::identity(n, n) * (1.0 - lift).max(0.0);
    MatrixSeries {
        constant,
        cos: (0..harmonics).map(|_| sym(rng, n, amp)).collect(),
        sin: (0..harmonics)
            .map(|_| {
                if even {
                    DMatrix::zeros(n, n)
                } else {
                    sym(rng, n, amp)
                }
            })
            .collect(),
    }
}

/// Random `tau`-periodic quadratic Lagrangian on `R^n`, `n <= 3`, studied at the zero loop.
pub fn random_sturm(rng: &mut ChaCha8Rng) -> (QuadraticSturm, Loop) {
    let n = rng.gen_range(1..=3);
    let tau = rng.gen_range(0.5..2.0);
    let h = rng.gen_range(1..=2);
    let p = metric_series(rng, n, h, false);
    let q = MatrixSeries {
        constant: full(rng, n, 1.0),
        cos: (0..h).map(|_| full(rng, n, 1.0)).collect(),
        sin: (0..h).map(|_| full(rng, n, 1.0)).collect(),
    };
    let r = MatrixSeries {
        constant: sym(rng, n, 20.0) - DMatrix::identity(n, n) * rng.gen_range(0.0..30.0),
        cos: (0..h).map(|_| sym(rng, n, 10.0)).collect(),
        sin: (0..h).map(|_| sym(rng, n, 10.0)).collect(),
    };
    let model = QuadraticSturm::from_series(p, q, r, tau).expect("random family is convex");
    (model, Loop::constant(DVector::zeros(n), tau, 1).unwrap())
}

/// Random reversible family: `P`, `R` cosine series and `Q` a sine series.
/// With `hyperbolic`, `R >= I` dominates `Q` so every iterate is nondegenerate and minimising.
pub fn random_reversible(rng: &mut ChaCha8Rng, hyperbolic: bool) -> (QuadraticSturm, Loop) {
    let n = rng.gen_range(1..=3);
    let tau = rng.gen_range(0.5..2.0);
    let h = rng.gen_range(1..=2);
    let p = metric_series(rng, n, h, true);
    let (qs, r) = if hyperbolic {
        let amp = 0.1 / (n * h) as f64;
        let r_amp = 0.5 / (n * h) as f64;
        let base = sym(rng, n, 0.5) + DMatrix::identity(n, n) * rng.gen_range(1.0..20.0);
        let lift = crate::linalg::sym_eigenvalues(&base)[0];
        (
            (0..h).map(|_| full(rng, n, amp)).collect::<Vec<_>>(),
            MatrixSeries {
                constant: &base + DMatrix::identity(n, n) * (2.0 - lift).max(0.0),
                cos: (0..h).map(|_| sym(rng, n, r_amp)).collect(),
                sin: vec![DMatrix::zeros(n, n); h],
            },
        )
    } else {
        (
            (0..h).map(|_| full(rng, n, 1.5)).collect(),
            MatrixSeries {
                constant: sym(rng, n, 20.0) - DMatrix::identity(n, n) * rng.gen_range(0.0..30.0),
                cos: (0..h).map(|_| sym(rng, n, 10.0)).collect(),
                sin: vec![DMatrix::zeros(n, n); h],
            },
        )
    };
    let q = MatrixSeries {
        constant: DMatrix::zeros(n, n),
        cos: vec![DMatrix::zeros(n, n); h],
        sin: qs,
    };
    let model = QuadraticSturm::from_series(p, q, r, tau).expect("random family is convex");
    debug_assert!(model.reversible());
    (model, Loop::constant(DVector::zeros(n), tau, 1).unwrap())
}
