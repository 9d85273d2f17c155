use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;

use super::*;
use crate::symplectic::{
    constant_coefficient, integrate_fundamental, Coefficient, IntegrateOptions,
};

fn path(coef: Coefficient<f64>, n: usize, tau: f64) -> SymplecticPath<f64> {
    integrate_fundamental(
        coef,
        n,
        0.0,
        tau,
        &IntegrateOptions {
            steps: Some(512),
            ..Default::default()
        },
    )
    .unwrap()
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
}

/// `(i, nu)` of the planar oscillator `S = diag(1, w^2)` over `[0, tau]`.
fn oscillator_oracle(w: f64, tau: f64) -> (i64, usize) {
    let turns = w * tau / (2.0 * PI);
    let r = turns.round();
    if (turns - r).abs() < 1e-12 {
        (2 * r as i64 - 1, 2)
    } else {
        (2 * turns.floor() as i64 + 1, 0)
    }
}

#[test]
fn rotation_family() {
    for &tau in &[0.5, 3.0, 2.0 * PI, 7.0, 4.0 * PI, 13.5] {
        let p = path(constant_coefficient(DMatrix::identity(2, 2)), 1, tau);
        let want = oscillator_oracle(1.0, tau);
        let got = cz_index(&p).unwrap();
        assert_eq!((got.index, got.nullity), want, "tau = {tau}");
        assert_eq!(clm_graph_index(&p).unwrap(), want.0, "tau = {tau}");
    }
}

#[test]
fn identity_path_and_small_negative_definite() {
    for n in 1..=3 {
        let p = path(constant_coefficient(DMatrix::zeros(2 * n, 2 * n)), n, 1.0);
        let got = cz_index(&p).unwrap();
        assert_eq!((got.index, got.nullity), (-(n as i64), 2 * n));
        assert_eq!(clm_graph_index(&p).unwrap(), -(n as i64));
        let q = path(
            constant_coefficient(DMatrix::identity(2 * n, 2 * n) * -0.01),
            n,
            1.0,
        );
        assert_eq!(
            cz_index(&q).unwrap(),
            IndexPair {
                index: -(n as i64),
                nullity: 0
            }
        );
        assert_eq!(clm_graph_index(&q).unwrap(), -(n as i64));
    }
}

#[test]
fn free_particle_has_index_zero_and_nullity_n() {
    for n in 1..=3 {
        let mut s = vec![1.0; n];
        s.extend(vec![0.0; n]);
        let p = path(constant_coefficient(diag(&s)), n, 1.0);
        assert_eq!(
            cz_index(&p).unwrap(),
            IndexPair {
                index: 0,
                nullity: n
            }
        );
        assert_eq!(clm_graph_index(&p).unwrap(), 0);
        let mean = mean_index(&p, 8).unwrap();
        assert_eq!(mean.estimate, 0.0);
    }
}

#[test]
fn oscillator_iterates_and_half_period_indices() {
    let (w, tau) = (2.0 * PI, 1.3);
    let p = path(constant_coefficient(diag(&[1.0, w * w])), 1, tau);
    let (it, _) = iterated_indices(&p, 8, &CrossingOptions::default()).unwrap();
    let wind = clm_iterated_indices(&p, 8).unwrap();
    for m in 1..=8 {
        let want = oscillator_oracle(w, m as f64 * tau);
        assert_eq!((it[m - 1].index, it[m - 1].nullity), want, "m = {m}");
        assert_eq!(wind[m - 1], want.0);
    }
    let mu = mu_indices(&p, 6).unwrap();
    let mu_w = mu_indices_winding(&p, 6).unwrap();
    for row in &mu {
        let f = (w * row.m as f64 * tau / (2.0 * PI)).floor() as i64;
        assert_eq!((row.mu1, row.mu2), (1 + f, 1 + f), "m = {}", row.m);
        assert_eq!(mu_w[row.m - 1], (row.mu1, row.mu2));
        assert_eq!(row.mu1 + row.mu2, it[row.m - 1].index + 1);
    }
}

#[test]
fn degenerate_oscillator_iterates() {
    let w = 2.0 * PI;
    let p = path(constant_coefficient(diag(&[1.0, w * w])), 1, 1.0);
    let (it, _) = iterated_indices(&p, 4, &CrossingOptions::default()).unwrap();
    for (k, pair) in it.iter().enumerate() {
        assert_eq!((pair.index, pair.nullity), (2 * (k as i64 + 1) - 1, 2));
    }
    assert_eq!(clm_iterated_indices(&p, 4).unwrap(), vec![1, 3, 5, 7]);
    let mu = mu_indices(&p, 2).unwrap();
    // half period pi: Psi(1/2) = -I, so both reference subspaces are met again
    assert_eq!((mu[0].mu1, mu[0].nu1, mu[0].mu2, mu[0].nu2), (1, 1, 1, 1));
}

#[test]
fn hyperbolic_has_zero_index() {
    let p = path(constant_coefficient(diag(&[1.0, -4.0])), 1, 3.0);
    let (it, _) = iterated_indices(&p, 32, &CrossingOptions::default()).unwrap();
    assert!(it.iter().all(|x| *x
        == IndexPair {
            index: 0,
            nullity: 0
        }));
    assert!(clm_iterated_indices(&p, 32)
        .unwrap()
        .iter()
        .all(|&x| x == 0));
}

#[test]
fn nullity_of_rotation() {
    let p = path(constant_coefficient(DMatrix::identity(2, 2)), 1, 2.0 * PI);
    assert_eq!(nullity(&p, 2.0 * PI).unwrap(), 2);
    assert_eq!(nullity(&p, 1.0).unwrap(), 0);
}

#[test]
fn reflection_symmetry_detects_both_cases() {
    let tau = 1.0;
    let good: Coefficient<f64> = Arc::new(move |t: f64| {
        let s = (2.0 * PI * t / tau).sin();
        DMatrix::from_row_slice(2, 2, &[1.0 + 0.1 * (2.0 * PI * t).cos(), s, s, 2.0])
    });
    assert!(
        check_reflection_symmetry(&good, 1, tau, 33, 1e-10)
            .unwrap()
            .holds
    );
    let bad: Coefficient<f64> = Arc::new(move |t: f64| {
        let c = (2.0 * PI * t / tau).cos();
        DMatrix::from_row_slice(2, 2, &[1.0, c, c, 2.0])
    });
    assert!(
        !check_reflection_symmetry(&bad, 1, tau, 33, 1e-10)
            .unwrap()
            .holds
    );
}

fn trig_coefficient(n: usize, seed: &[f64]) -> Coefficient<f64> {
    let dim = 2 * n;
    let m = dim * dim;
    let a0 = DMatrix::from_fn(dim, dim, |i, j| seed[(i * dim + j) % seed.len()]);
    let a1 = DMatrix::from_fn(dim, dim, |i, j| seed[(i * dim + j + m) % seed.len()]);
    let s0 = (&a0 + a0.transpose()) * 2.0;
    let s1 = &a1 + a1.transpose();
    Arc::new(move |t: f64| &s0 + &s1 * (2.0 * PI * t).sin())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn crossing_and_winding_routes_agree(
        n in 1usize..=2,
        seed in proptest::collection::vec(-1.5f64..1.5, 32),
        m in 1usize..=4,
    ) {
        let p = path(trig_coefficient(n, &seed), n, 1.0);
        let (it, _) = iterated_indices(&p, m, &CrossingOptions::default()).unwrap();
        let w = clm_iterated_indices(&p, m).unwrap();
        for k in 0..m {
            prop_assert_eq!(it[k].index, w[k]);
        }
    }

    #[test]
    fn iterate_bounds_hold(
        seed in proptest::collection::vec(-1.5f64..1.5, 32),
    ) {
        let n = 1usize;
        let p = path(trig_coefficient(n, &seed), n, 1.0);
        let mean = mean_index(&p, 16).unwrap();
        prop_assert!(mean.converged_lower <= mean.converged_upper + 1e-12);
        prop_assert!(mean.indices.iter().all(|p| p.nullity <= 2 * n));
    }
}
