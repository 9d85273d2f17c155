use approx::assert_relative_eq;
use nalgebra::{dvector, DMatrix, DVector};

use super::*;
use crate::fields::{Phase, ScalarField};
use crate::models::{Mechanical, Metric};

fn physical_pair() -> (Mechanical, MechanicalHamiltonian) {
    let a = vec![
        ScalarField::term(1.0, vec![1, 0], 0, Phase::Sin),
        ScalarField::zero(),
    ];
    let v = ScalarField::term(1.0, vec![1, 0], 0, Phase::Cos);
    let h = MechanicalHamiltonian::physical(Some(a.clone()), v.clone(), 2).unwrap();
    let l = Mechanical::physical(a, v).unwrap();
    (l, h)
}

fn points(n: usize, cap: f64, count: usize) -> Vec<SamplePoint> {
    sample_points(&SampleBox::unit_cell(n, cap, count, 7))
}

#[test]
fn free_particle_is_self_dual() {
    let l = Mechanical::free_particle(3);
    let p = dvector![0.3, -1.2, 2.0];
    let (h, v) = legendre_l_to_h(
        &l,
        0.2,
        &dvector![0.1, 0.2, 0.3],
        &p,
        &NewtonOptions::default(),
    )
    .unwrap();
    assert_relative_eq!(h, 0.5 * p.norm_squared(), epsilon = 1e-14);
    assert_relative_eq!((v - &p).norm(), 0.0, epsilon = 1e-14);
}

#[test]
fn physical_lagrangian_transforms_to_physical_hamiltonian() {
    let (l, h) = physical_pair();
    for s in points(2, 3.0, 50) {
        let (hv, _) = legendre_l_to_h(&l, s.t, &s.q, &s.x, &NewtonOptions::default()).unwrap();
        assert_relative_eq!(hv, h.value(s.t, &s.q, &s.x), epsilon = 1e-11);
        let (lv, _) = legendre_h_to_l(&h, s.t, &s.q, &s.x, &NewtonOptions::default()).unwrap();
        assert_relative_eq!(lv, l.value(s.t, &s.q, &s.x), epsilon = 1e-11);
    }
}

#[test]
fn round_trip_through_a_nonquadratic_fiber() {
    // Non-constant metric makes the fiber solve genuinely iterative through q.
    let metric = Metric::Field(vec![
        vec![
            ScalarField::constant(2.0).plus(ScalarField::term(0.5, vec![1, 0], 0, Phase::Cos)),
            ScalarField::term(0.2, vec![0, 1], 0, Phase::Sin),
        ],
        vec![
            ScalarField::term(0.2, vec![0, 1], 0, Phase::Sin),
            ScalarField::constant(1.0),
        ],
    ]);
    let l = Mechanical::torus_metric(metric, ScalarField::term(0.3, vec![1, 1], 0, Phase::Cos), 2)
        .unwrap();
    let h = TransformedHamiltonian::new(l.clone());
    let opts = NewtonOptions::default();
    for s in points(2, 4.0, 200) {
        let (hv, v) = legendre_l_to_h(&l, s.t, &s.q, &s.x, &opts).unwrap();
        let (lv, p) = legendre_h_to_l(&h, s.t, &s.q, &v, &opts).unwrap();
        assert!((p - &s.x).norm() <= 1e-8 * (1.0 + s.x.norm()));
        assert_relative_eq!(lv + hv, s.x.dot(&v), epsilon = 1e-8);
    }
}

#[test]
fn identities_hold_for_the_physical_pair() {
    let (l, h) = physical_pair();
    let rep = verify_duality_identities(&l, &h, &points(2, 3.0, 100), 1e-7).unwrap();
    assert!(rep.gate_passed, "{rep:?}");
    assert!(rep.holds, "{rep:?}");
}

#[test]
fn identities_exact_for_quadratic_pair() {
    let l = Mechanical::harmonic(&[1.0, 2.0]);
    let h = MechanicalHamiltonian::dual_of(&l).unwrap();
    let rep = verify_duality_identities(&l, &h, &points(2, 2.0, 50), 1e-12).unwrap();
    assert!(rep.holds, "{rep:?}");
}

#[test]
fn mismatched_pair_is_flagged() {
    let (l, mut h) = physical_pair();
    h.potential = h
        .potential
        .clone()
        .plus(ScalarField::term(0.05, vec![1, 0], 0, Phase::Cos));
    let rep = verify_duality_identities(&l, &h, &points(2, 3.0, 100), 1e-7).unwrap();
    assert!(rep.residuals.position_gradient >= 1e-2);
    assert!(!rep.holds && rep.failing.contains(&"position-gradient".to_string()));
}

#[test]
fn growth_constants_of_free_particle() {
    let l = Mechanical::free_particle(2);
    let h = MechanicalHamiltonian::dual_of(&l).unwrap();
    let g = check_growth_conditions(&l, &h, &points(2, 5.0, 50), None).unwrap();
    assert_relative_eq!(g.c, 1.0, epsilon = 1e-12);
    assert_relative_eq!(g.big_c, 2f64.sqrt(), epsilon = 1e-12);
    assert!(g.convexity_holds && g.growth_holds && g.band_holds && g.lemma_holds);
    assert_relative_eq!(g.h_pp_band.0, 1.0, epsilon = 1e-12);
}

#[test]
fn lemma_bounds_on_torus_model() {
    let (l, h) = physical_pair();
    let g = check_growth_conditions(&l, &h, &points(2, 5.0, 300), None).unwrap();
    assert!(g.lemma_hypotheses <= 1.0 + 1e-9);
    assert!(
        g.forward_ratio <= 1.0 && g.converse_ratio <= 1.0 && g.lemma_holds,
        "{g:?}"
    );
    // too small a constant breaks the quadratic growth bound
    let bad = check_growth_conditions(&l, &h, &points(2, 5.0, 300), Some((0.5, 0.6))).unwrap();
    assert!(!bad.growth_holds);
}

#[test]
fn inverse_bound_equivalence_on_samples() {
    let (_, h) = physical_pair();
    let r = inverse_bound_equivalence(&h, &points(2, 3.0, 30), &[0.5, 1.0, 2.0]);
    assert!(r.holds);
    let l = Mechanical::torus_metric(
        Metric::from_matrix(&DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])),
        ScalarField::zero(),
        2,
    )
    .unwrap();
    let hh = MechanicalHamiltonian::dual_of(&l).unwrap();
    assert!(inverse_bound_equivalence(&hh, &points(2, 3.0, 10), &[0.6, 1.5, 2.1, 3.0]).holds);
}

#[test]
fn fiber_minimum_of_physical_hamiltonian_is_the_potential() {
    let (_, h) = physical_pair();
    for s in points(2, 1.0, 20) {
        let p = fiber_minimum(&h, s.t, &s.q).unwrap();
        let a = DVector::from_vec(vec![(2.0 * std::f64::consts::PI * s.q[0]).sin(), 0.0]);
        assert!((p - a).norm() < 1e-12);
    }
    let c3 = fiber_minimum_bound(&h, &points(2, 1.0, 100)).unwrap();
    assert!(c3 <= 1.0 && c3 > 0.9);
}

#[test]
fn reversibility_transports() {
    let l = Mechanical::pendulum(0.5);
    let h = MechanicalHamiltonian::dual_of(&l).unwrap();
    let r = reversibility_transport(&l, &h, &points(1, 2.0, 30), 1e-12).unwrap();
    assert!(r.lagrangian_reversible && r.hamiltonian_reversible && r.consistent);
    let (l, h) = physical_pair();
    let r = reversibility_transport(&l, &h, &points(2, 2.0, 30), 1e-12).unwrap();
    assert!(!r.lagrangian_reversible && !r.hamiltonian_reversible && r.consistent);
}

#[test]
fn transformed_hamiltonian_passes_gate() {
    let l = Mechanical::coupled_pendula(0.3, 0.2, 0.1);
    let h = TransformedHamiltonian::new(l.clone());
    let pts = points(2, 2.0, 20);
    assert!(hamiltonian_fd_defect(&h, &pts, 1e-5) < 1e-5);
    assert!(verify_duality_identities(&l, &h, &pts, 1e-9).unwrap().holds);
}

#[test]
fn round_trips_in_both_directions() {
    let (l, h) = physical_pair();
    let pts = points(2, 3.0, 200);
    for dir in [Direction::LToH, Direction::HToL] {
        let r = legendre_round_trip(&l, &h, &pts, dir, 1e-8, &NewtonOptions::default()).unwrap();
        assert!(r.holds, "{r:?}");
    }
    // a shifted potential breaks the value match but not the fiber maps
    let mut wrong = h.clone();
    wrong.potential = wrong.potential.plus(ScalarField::constant(0.1));
    let r = legendre_round_trip(&l, &wrong, &pts, Direction::HToL, 1e-8, &NewtonOptions::default())
        .unwrap();
    assert!(!r.holds && r.value_defect > 1e-3 && r.round_trip_error < 1e-8);
}
