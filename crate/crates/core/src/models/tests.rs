use approx::assert_relative_eq;
use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use super::*;
use crate::fields::{Phase, ScalarField};

fn sample_points(n: usize) -> Vec<(f64, DVector<f64>, DVector<f64>)> {
    (0..5)
        .map(|s| {
            let x = s as f64;
            (
                0.13 * x,
                DVector::from_fn(n, |i, _| 0.17 * x + 0.31 * i as f64),
                DVector::from_fn(n, |i, _| 0.4 - 0.23 * x + 0.11 * i as f64),
            )
        })
        .collect()
}

fn builtins() -> Vec<Box<dyn Lagrangian>> {
    let metric = Metric::Field(vec![
        vec![
            ScalarField::constant(2.0).plus(ScalarField::term(0.3, vec![1, 0], 0, Phase::Cos)),
            ScalarField::term(0.1, vec![0, 1], 1, Phase::Sin),
        ],
        vec![
            ScalarField::term(0.1, vec![0, 1], 1, Phase::Sin),
            ScalarField::constant(1.5),
        ],
    ]);
    vec![
        Box::new(Mechanical::free_particle(2)),
        Box::new(Mechanical::harmonic(&[1.0, 2.5])),
        Box::new(Mechanical::pendulum(0.7)),
        Box::new(Mechanical::coupled_pendula(0.3, 0.2, 0.1)),
        Box::new(
            Mechanical::physical(
                vec![
                    ScalarField::term(0.2, vec![0, 1], 0, Phase::Sin),
                    ScalarField::term(0.1, vec![1, 0], 1, Phase::Cos),
                ],
                ScalarField::term(0.5, vec![1, 1], 0, Phase::Cos),
            )
            .unwrap(),
        ),
        Box::new(
            Mechanical::torus_metric(metric, ScalarField::term(0.4, vec![1, 0], 0, Phase::Cos), 2)
                .unwrap(),
        ),
        Box::new(
            QuadraticSturm::from_series(
                MatrixSeries {
                    constant: dmatrix![2.0, 0.1; 0.1, 1.0],
                    cos: vec![dmatrix![0.2, 0.0; 0.0, 0.1]],
                    sin: vec![],
                },
                MatrixSeries {
                    constant: DMatrix::zeros(2, 2),
                    cos: vec![],
                    sin: vec![dmatrix![0.0, 0.3; -0.1, 0.2]],
                },
                MatrixSeries {
                    constant: dmatrix![-1.0, 0.2; 0.2, 0.5],
                    cos: vec![],
                    sin: vec![],
                },
                1.0,
            )
            .unwrap(),
        ),
    ]
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    for m in builtins() {
        let d = finite_difference_defect(&*m, &sample_points(m.n()), 1e-5);
        assert!(d < 1e-6, "{}: defect {d}", m.name());
        assert!(convexity_margin(&*m, &sample_points(m.n())) > 0.0);
    }
}

#[test]
fn reversibility_claims_are_honest() {
    for m in builtins() {
        let d = reversibility_defect(&*m, &sample_points(m.n()));
        if m.reversible() {
            assert!(
                d < 1e-12,
                "{} claims reversibility with defect {d}",
                m.name()
            );
        }
    }
    assert!(!builtins()[4].reversible());
}

#[test]
fn domains() {
    assert_eq!(Mechanical::pendulum(1.0).domain(), Domain::Torus);
    assert_eq!(Mechanical::harmonic(&[1.0]).domain(), Domain::Chart);
    assert_eq!(Mechanical::pendulum(1.0).time_period(), None);
}

#[test]
fn invalid_metric_is_rejected() {
    let bad = Metric::Constant(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
    assert!(Mechanical::torus_metric(bad, ScalarField::zero(), 2).is_err());
}

#[test]
fn hamiltonian_coefficient_is_symmetric_and_inverts_p() {
    let p = dmatrix![2.0, 0.5; 0.5, 1.0];
    let q = dmatrix![0.1, 0.2; -0.3, 0.4];
    let r = dmatrix![1.0, 0.0; 0.0, -2.0];
    let s = sturm_to_hamiltonian(&p, &q, &r).unwrap();
    assert!((&s - s.transpose()).amax() < 1e-14);
    let top = s.view((0, 0), (2, 2)) * &p;
    assert!((top - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
}

#[test]
fn linearized_pendulum_is_time_symmetric_at_rest() {
    let m = Mechanical::pendulum(0.7);
    let l = crate::loops::Loop::constant(dvector![0.0], 1.0, 4).unwrap();
    let data = linearize(&m, &l, 32).unwrap();
    assert!(check_symmetric_coefficients(&data, 1e-12).holds);
    assert_relative_eq!(
        data.r[0][(0, 0)],
        -0.7 * 4.0 * std::f64::consts::PI.powi(2),
        epsilon = 1e-12
    );
}

#[test]
fn periodic_spline_reproduces_trigonometric_data() {
    let n = 64;
    let y: Vec<f64> = (0..n)
        .map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).sin())
        .collect();
    let s = PeriodicSpline::new(y, 1.0).unwrap();
    for &t in &[0.03, 0.41, 0.77] {
        let (v, d) = s.eval_with_derivative(t);
        assert_relative_eq!(v, (2.0 * std::f64::consts::PI * t).sin(), epsilon = 1e-5);
        assert_relative_eq!(
            d,
            2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * t).cos(),
            epsilon = 1e-3
        );
    }
}

#[test]
fn quadratic_model_json_round_trip() {
    let m = &builtins()[6];
    let pts = sample_points(2);
    let _ = m.jet(pts[0].0, &pts[0].1, &pts[0].2);
    let mech = Mechanical::pendulum(0.3);
    let s = serde_json::to_string(&mech).unwrap();
    assert_eq!(serde_json::from_str::<Mechanical>(&s).unwrap(), mech);
}
