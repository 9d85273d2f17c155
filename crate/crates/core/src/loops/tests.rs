use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::{dvector, DVector};
use proptest::prelude::*;

use super::hessian::{kernel_variations, scaled_hessian, Route};
use super::*;
use crate::models::{Lagrangian, Mechanical};

fn pendulum_orbit_guess() -> Loop {
    Loop::straight(dvector![0.0], vec![1], 1.0, 16).unwrap()
}

#[test]
fn coefficient_vector_round_trip() {
    let mut l = Loop::new(2, 1.7, vec![1, -2], 3).unwrap();
    l.set_cos(2, dvector![0.3, -0.1]);
    l.set_sin(1, dvector![0.2, 0.05]);
    let mut m = Loop::new(2, 1.7, vec![1, -2], 3).unwrap();
    m.set_from_vector(&l.to_vector());
    assert_eq!(l, m);
    let doc = serde_json::to_string(&l.to_doc()).unwrap();
    let back = Loop::from_doc(&serde_json::from_str(&doc).unwrap()).unwrap();
    assert_eq!(l, back);
}

#[test]
fn samples_match_pointwise_evaluation() {
    let mut l = Loop::new(1, 2.0, vec![1], 4).unwrap();
    l.set_cos(3, dvector![0.1]);
    l.set_sin(4, dvector![-0.2]);
    let s = l.samples(32).unwrap();
    for j in 0..32 {
        assert_relative_eq!(s.q[j][0], l.eval(s.times[j])[0], epsilon = 1e-12);
        assert_relative_eq!(s.v[j][0], l.velocity(s.times[j])[0], epsilon = 1e-12);
    }
}

#[test]
fn iterate_and_time_shift() {
    let mut l = Loop::new(1, 1.0, vec![1], 3).unwrap();
    l.set_cos(1, dvector![0.2]);
    l.set_sin(2, dvector![0.1]);
    let l3 = l.iterate(3).unwrap();
    for &t in &[0.1f64, 1.4, 2.9] {
        let lifted = l.eval(t - t.floor())[0] + t.floor();
        assert_relative_eq!(l3.eval(t)[0], lifted, epsilon = 1e-12);
    }
    let sh = l.time_shift(0.3);
    assert_relative_eq!(sh.eval(0.2)[0], l.eval(0.5)[0], epsilon = 1e-12);
}

#[test]
fn gradient_matches_finite_differences() {
    let model = Mechanical::pendulum(0.4);
    let mut l = Loop::new(1, 1.0, vec![1], 4).unwrap();
    l.set_cos(1, dvector![0.05]);
    l.set_sin(2, dvector![-0.03]);
    let g = action_gradient(&model, &l, 64).unwrap();
    let x = l.to_vector();
    let h = 1e-6;
    for i in 0..x.len() {
        let mut e = DVector::zeros(x.len());
        e[i] = h;
        let (mut lp, mut lm) = (l.clone(), l.clone());
        lp.set_from_vector(&(&x + &e));
        lm.set_from_vector(&(&x - &e));
        let fd = (action(&model, &lp, 64).unwrap() - action(&model, &lm, 64).unwrap()) / (2.0 * h);
        assert_relative_eq!(g[i], fd, epsilon = 1e-7);
    }
}

#[test]
fn free_particle_hessian_spectrum() {
    let tau = 1.3;
    let l = Loop::straight(dvector![0.1, 0.2], vec![1, 0], tau, 6).unwrap();
    let model = Mechanical::free_particle(2);
    let (h, labels) = scaled_hessian(&model, &l, 6, Parity::Full).unwrap();
    for (a, &(k, _, _)) in labels.iter().enumerate() {
        let w = 2.0 * PI * k as f64 / tau;
        assert_relative_eq!(h[(a, a)], w * w / (1.0 + w * w), epsilon = 1e-12);
    }
    let rep = hessian_inertia(&model, &l, &HessianOptions::default()).unwrap();
    assert_eq!((rep.morse_index, rep.nullity), (0, 2));
    assert!(rep.gate.unwrap().stable);
}

#[test]
fn oscillator_morse_index_counts_slow_modes() {
    // v^2/2 + a cos(2 pi q) at q = 0 has second variation int xi'^2 - 4 pi^2 a xi^2.
    let model = Mechanical::pendulum(1.0);
    let l = Loop::constant(dvector![0.0], 1.3, 8).unwrap();
    let rep = hessian_inertia(&model, &l, &HessianOptions::default()).unwrap();
    assert_eq!((rep.morse_index, rep.nullity), (3, 0));
    let hyper = Loop::constant(dvector![0.5], 1.3, 8).unwrap();
    let rep = hessian_inertia(&model, &hyper, &HessianOptions::default()).unwrap();
    assert_eq!((rep.morse_index, rep.nullity), (0, 0));
    // resonant period: mode k = 1 sits in the kernel
    let res = Loop::constant(dvector![0.0], 1.0, 8).unwrap();
    let rep = hessian_inertia(&model, &res, &HessianOptions::default()).unwrap();
    assert_eq!((rep.morse_index, rep.nullity), (1, 2));
}

#[test]
fn reduced_route_agrees_with_dense() {
    let model = Mechanical::coupled_pendula(0.3, 0.2, 0.1);
    let mut l = Loop::straight(dvector![0.1, 0.3], vec![1, 1], 2.0, 40).unwrap();
    l.set_cos(1, dvector![0.05, -0.02]);
    l.set_sin(3, dvector![0.01, 0.02]);
    let base = HessianOptions {
        gate: false,
        ..Default::default()
    };
    let d = hessian_inertia(
        &model,
        &l,
        &HessianOptions {
            route: Some(Route::Dense),
            ..base.clone()
        },
    )
    .unwrap();
    let r = hessian_inertia(
        &model,
        &l,
        &HessianOptions {
            route: Some(Route::Reduced),
            ..base
        },
    )
    .unwrap();
    assert_eq!(r.route, Route::Reduced);
    assert_eq!((d.morse_index, d.nullity), (r.morse_index, r.nullity));
}

#[test]
fn pendulum_rotation_orbit_is_a_minimiser() {
    let model = Mechanical::pendulum(0.2);
    let opts = FindOptions {
        n_modes: 16,
        ..Default::default()
    };
    let rep = find_orbit(&model, &pendulum_orbit_guess(), &opts).unwrap();
    assert!(rep.residual <= 1e-9, "residual {}", rep.residual);
    let h = hessian_inertia(&model, &rep.orbit, &HessianOptions::default()).unwrap();
    assert_eq!((h.morse_index, h.nullity), (0, 1));
    // the kernel is spanned by the time-translation mode
    let ker = kernel_variations(&model, &rep.orbit, 16, 1e-7).unwrap();
    assert_eq!(ker.len(), 1);
    let s = rep.orbit.samples(128).unwrap();
    let k = ker[0].samples(128).unwrap();
    let (dot, nv, nk) =
        s.v.iter()
            .zip(&k.q)
            .fold((0.0, 0.0, 0.0), |(d, a, b), (v, q)| {
                (d + v[0] * q[0], a + v[0] * v[0], b + q[0] * q[0])
            });
    assert_relative_eq!(dot.abs() / (nv * nk).sqrt(), 1.0, epsilon = 1e-6);
}

#[test]
fn even_oscillating_orbit_from_newton() {
    let model = Mechanical::pendulum(1.0);
    let mut init = Loop::constant(dvector![0.0], 1.5, 24).unwrap();
    init.set_cos(1, dvector![0.35]);
    let opts = FindOptions {
        n_modes: 24,
        descent: false,
        subspace: Subspace::Even,
        ..Default::default()
    };
    let rep = find_orbit(&model, &init, &opts).unwrap();
    assert!(rep.residual <= 1e-9);
    assert!(rep.orbit.is_even(0.0));
    assert!(rep.orbit.cos_coeffs()[1][0].abs() > 0.1);
}

#[test]
fn finder_rejects_even_search_with_winding() {
    let model = Mechanical::pendulum(0.2);
    let opts = FindOptions {
        subspace: Subspace::Even,
        ..Default::default()
    };
    assert!(find_orbit(&model, &pendulum_orbit_guess(), &opts).is_err());
}

#[test]
fn residual_of_straight_line_vanishes_for_free_particle() {
    let l = Loop::straight(dvector![0.0, 0.5], vec![2, -1], 0.7, 4).unwrap();
    let r = euler_lagrange_residual(&Mechanical::free_particle(2), &l, 64).unwrap();
    assert!(r < 1e-12);
    assert!(Mechanical::free_particle(2).n() == 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn sobolev_bound_holds(tau in 0.2f64..5.0, coefs in proptest::collection::vec(-1.0f64..1.0, 9)) {
        let mut l = Loop::new(1, tau, vec![0], 4).unwrap();
        l.set_from_vector(&DVector::from_vec(coefs));
        let c = sobolev_c0_check(&l, 256).unwrap();
        prop_assert!(c.holds, "{:?}", c);
    }
}
