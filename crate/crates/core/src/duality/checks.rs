use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fiber_newton, legendre_h_to_l, legendre_l_to_h, Hamiltonian, NewtonOptions};
use crate::error::{Error, Result};
use crate::linalg::{norm2, sym_eigenvalues};
use crate::models::{finite_difference_defect, Lagrangian};

/// Region sampled by the checks: `t` in `[t_min, t_max]`, every `q_i` in
/// `[q_min, q_max]`, fiber vectors uniform in the ball of radius `cap`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub n: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub cap: f64,
    pub count: usize,
    pub seed: u64,
}

impl SampleBox {
    /// Unit cell of the torus, one time period, fiber radius `cap`.
    pub fn unit_cell(n: usize, cap: f64, count: usize, seed: u64) -> Self {
        SampleBox {
            n,
            t_min: 0.0,
            t_max: 1.0,
            q_min: 0.0,
            q_max: 1.0,
            cap,
            count,
            seed,
        }
    }
}

/// `(t, q, x)` with `x` a velocity or a momentum depending on the side.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint {
    pub t: f64,
    pub q: DVector<f64>,
    pub x: DVector<f64>,
}

pub fn sample_points(b: &SampleBox) -> Vec<SamplePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    (0..b.count)
        .map(|_| {
            let t = rng.gen_range(b.t_min..=b.t_max);
            let q = DVector::from_fn(b.n, |_, _| rng.gen_range(b.q_min..=b.q_max));
            let dir = DVector::from_fn(b.n, |_, _| rng.gen_range(-1.0..1.0));
            let r = b.cap * rng.gen::<f64>().powf(1.0 / b.n as f64);
            let x = if dir.norm() > 0.0 {
                dir.normalize() * r
            } else {
                dir
            };
            SamplePoint { t, q, x }
        })
        .collect()
}

fn triples(pts: &[SamplePoint]) -> Vec<(f64, DVector<f64>, DVector<f64>)> {
    pts.iter()
        .map(|s| (s.t, s.q.clone(), s.x.clone()))
        .collect()
}

/// Largest relative mismatch between the analytic derivatives of `H` and
/// central differences with step `h`.
pub fn hamiltonian_fd_defect(model: &dyn Hamiltonian, pts: &[SamplePoint], h: f64) -> f64 {
    let n = model.n();
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
    pts.par_iter()
        .map(|s| {
            let (t, q, p) = (s.t, &s.q, &s.x);
            let j = model.jet(t, q, p);
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let mut e = DVector::zeros(n);
                e[i] = h;
                let (qp, qm) = (q + &e, q - &e);
                let (pp, pm) = (p + &e, p - &e);
                let fq = (model.value(t, &qp, p) - model.value(t, &qm, p)) / (2.0 * h);
                let fp = (model.value(t, q, &pp) - model.value(t, q, &pm)) / (2.0 * h);
                worst = worst.max(rel(fq, j.dq[i])).max(rel(fp, j.dp[i]));
                let (jqp, jqm) = (model.jet(t, &qp, p), model.jet(t, &qm, p));
                let (jpp, jpm) = (model.jet(t, q, &pp), model.jet(t, q, &pm));
                for k in 0..n {
                    worst = worst
                        .max(rel((jqp.dq[k] - jqm.dq[k]) / (2.0 * h), j.dqq[(k, i)]))
                        .max(rel((jpp.dp[k] - jpm.dp[k]) / (2.0 * h), j.dpp[(k, i)]))
                        .max(rel((jqp.dp[k] - jqm.dp[k]) / (2.0 * h), j.dpq[(k, i)]));
                }
            }
            let ft = (model.value(t + h, q, p) - model.value(t - h, q, p)) / (2.0 * h);
            worst.max(rel(ft, j.dt))
        })
        .reduce(|| 0.0, f64::max)
}

/// Largest Frobenius residual of each identity over the sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `H_p(q, L_v) - v`.
    pub momentum_velocity: f64,
    /// `H_q(q, L_v) + L_q`.
    pub position_gradient: f64,
    /// `H_pp L_vv - I`.
    pub fiber_hessian: f64,
    /// `L_qq - (H_pq^T H_pp^{-1} H_pq - H_qq)`.
    pub position_hessian: f64,
    /// `L_qv + H_qp L_vv`.
    pub mixed_hessian: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub points: usize,
    pub fd_step: f64,
    pub fd_defect_lagrangian: f64,
    pub fd_defect_hamiltonian: f64,
    /// Both models passed the finite-difference gate.
    pub gate_passed: bool,
    pub residuals: IdentityResiduals,
    pub tol: f64,
    /// Identities whose residual exceeds `tol`.
    pub failing: Vec<String>,
    pub holds: bool,
}

/// Evaluate the derivative identities at `p = L_v(t, q, v)` for every sampled `(t, q, v)`.
pub fn verify_duality_identities(
    l: &dyn Lagrangian,
    h: &dyn Hamiltonian,
    pts: &[SamplePoint],
    tol: f64,
) -> Result<DualityReport> {
    if l.n() != h.n() {
        return Err(Error::Dimension(format!(
            "Lagrangian has n = {} but Hamiltonian has n = {}",
            l.n(),
            h.n()
        )));
    }
    if pts.iter().any(|s| s.q.len() != l.n() || s.x.len() != l.n()) {
        return Err(Error::Dimension(
            "sample point of the wrong dimension".into(),
        ));
    }
    let fd_step = 1e-5;
    let fd_l = finite_difference_defect(l, &triples(pts), fd_step);
    let matched: Vec<SamplePoint> = pts
        .iter()
        .map(|s| SamplePoint {
            t: s.t,
            q: s.q.clone(),
            x: l.jet(s.t, &s.q, &s.x).dv,
        })
        .collect();
    let fd_h = hamiltonian_fd_defect(h, &matched, fd_step);
    let n = l.n();
    let eye = DMatrix::<f64>::identity(n, n);
    let per_point: Vec<IdentityResiduals> = pts
        .par_iter()
        .zip(&matched)
        .map(|(s, m)| {
            let lj = l.jet(s.t, &s.q, &s.x);
            let hj = h.jet(s.t, &s.q, &m.x);
            let position_hessian = match hj.dpp.clone().try_inverse() {
                Some(inv) => (&lj.dqq - (hj.dpq.transpose() * inv * &hj.dpq - &hj.dqq)).norm(),
                None => f64::INFINITY,
            };
            IdentityResiduals {
                momentum_velocity: (&hj.dp - &s.x).norm(),
                position_gradient: (&hj.dq + &lj.dq).norm(),
                fiber_hessian: (&hj.dpp * &lj.dvv - &eye).norm(),
                position_hessian,
                mixed_hessian: (lj.dvq.transpose() + hj.dpq.transpose() * &lj.dvv).norm(),
            }
        })
        .collect();
    let mut r = IdentityResiduals::default();
    for p in &per_point {
        r.momentum_velocity = r.momentum_velocity.max(p.momentum_velocity);
        r.position_gradient = r.position_gradient.max(p.position_gradient);
        r.fiber_hessian = r.fiber_hessian.max(p.fiber_hessian);
        r.position_hessian = r.position_hessian.max(p.position_hessian);
        r.mixed_hessian = r.mixed_hessian.max(p.mixed_hessian);
    }
    let failing: Vec<String> = [
        ("momentum-velocity", r.momentum_velocity),
        ("position-gradient", r.position_gradient),
        ("fiber-hessian", r.fiber_hessian),
        ("position-hessian", r.position_hessian),
        ("mixed-hessian", r.mixed_hessian),
    ]
    .iter()
    .filter(|(_, v)| !(*v <= tol))
    .map(|(k, _)| k.to_string())
    .collect();
    let gate_passed = fd_l <= 1e-5 && fd_h <= 1e-5;
    Ok(DualityReport {
        points: pts.len(),
        fd_step,
        fd_defect_lagrangian: fd_l,
        fd_defect_hamiltonian: fd_h,
        gate_passed,
        holds: gate_passed && failing.is_empty(),
        residuals: r,
        tol,
        failing,
    })
}

/// Empirical growth constants of both sides and the transfer-lemma bound checks.
///
/// The transfer lemma (bounds on `(A, B, E)` pass to the dual blocks) is applied with `A = H_pp`, `B = H_pq` (rows `p`, columns `q`),
/// `E = H_qq` and `alpha = |H_p|`; hypothesis (ii) is evaluated as
/// `|B^T A^{-1}|`, the product that equals `-L_qv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub points: usize,
    /// Constants `(c, C)`: fitted on the sample unless supplied.
    pub c: f64,
    pub big_c: f64,
    pub fitted: bool,
    /// `L_vv >= c I` with `c > 0`.
    pub convexity_holds: bool,
    /// The three matrix-norm bounds with constant `C`.
    pub growth_holds: bool,
    /// Band `[C_1, C_2]` of `H_pp` eigenvalues and the growth constant `C_2`.
    pub h_pp_band: (f64, f64),
    pub c1: f64,
    pub c2: f64,
    pub band_holds: bool,
    /// Constants of the same bounds phrased with `|p|` in place of `|H_p|`.
    pub p_form: (f64, f64),
    /// Worst ratio of left side to right side for hypotheses (i)-(iii).
    pub lemma_hypotheses: f64,
    /// Worst ratio for the two forward bounds.
    pub forward_ratio: f64,
    /// Worst ratio for the two converse bounds.
    pub converse_ratio: f64,
    pub lemma_holds: bool,
}

/// Fit or check the growth constants on `(t, q, v)` samples. `given` fixes `(c, C)`.
pub fn check_growth_conditions(
    l: &dyn Lagrangian,
    h: &dyn Hamiltonian,
    pts: &[SamplePoint],
    given: Option<(f64, f64)>,
) -> Result<GrowthReport> {
    if l.n() != h.n() {
        return Err(Error::Dimension(
            "Lagrangian and Hamiltonian dimensions differ".into(),
        ));
    }
    if pts.is_empty() {
        return Err(Error::Input("no sample points".into()));
    }
    struct Pt {
        lmin: f64,
        lq: f64,
        lv: f64,
        lvv: f64,
        v: f64,
        p: f64,
        hpp: (f64, f64),
        hqp: f64,
        hqq: f64,
        hp: f64,
        bt_ainv: f64,
        schur: f64,
    }
    let data: Vec<Pt> = pts
        .par_iter()
        .map(|s| {
            let lj = l.jet(s.t, &s.q, &s.x);
            let hj = h.jet(s.t, &s.q, &lj.dv);
            let le = sym_eigenvalues(&lj.dvv);
            let he = sym_eigenvalues(&hj.dpp);
            let ainv = hj
                .dpp
                .clone()
                .try_inverse()
                .unwrap_or_else(|| DMatrix::from_element(l.n(), l.n(), f64::NAN));
            let bt_ainv = hj.dpq.transpose() * &ainv;
            Pt {
                lmin: le[0],
                lq: lj.dqq.norm(),
                lv: lj.dvq.norm(),
                lvv: lj.dvv.norm(),
                v: s.x.norm(),
                p: lj.dv.norm(),
                hpp: (he[0], *he.last().unwrap()),
                hqp: hj.dpq.norm(),
                hqq: hj.dqq.norm(),
                hp: hj.dp.norm(),
                bt_ainv: bt_ainv.norm(),
                schur: (&bt_ainv * &hj.dpq - &hj.dqq).norm(),
            }
        })
        .collect();
    let fmax = |f: &dyn Fn(&Pt) -> f64| data.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let fmin = |f: &dyn Fn(&Pt) -> f64| data.iter().map(f).fold(f64::INFINITY, f64::min);
    let (c, big_c) = match given {
        Some(cc) => cc,
        None => {
            let c = fmin(&|d| d.lmin);
            let big_c = fmax(&|d| {
                (d.lq / (1.0 + d.v * d.v))
                    .max(d.lv / (1.0 + d.v))
                    .max(d.lvv)
            });
            (c, big_c)
        }
    };
    let slack = 1.0 + 1e-9;
    let convexity_holds = c > 0.0 && fmin(&|d| d.lmin) >= c / slack;
    let growth_holds = fmax(&|d| {
        (d.lq / (1.0 + d.v * d.v))
            .max(d.lv / (1.0 + d.v))
            .max(d.lvv)
    }) <= big_c * slack;
    let band = (fmin(&|d| d.hpp.0), fmax(&|d| d.hpp.1));
    let c1 = band.0;
    let c2 = fmax(&|d| {
        d.hpp
            .1
            .max(d.hqp / (1.0 + d.hp))
            .max(d.hqq / (1.0 + d.hp * d.hp))
    });
    let p_form = (
        band.0,
        fmax(&|d| {
            d.hpp
                .1
                .max(d.hqp / (1.0 + d.p))
                .max(d.hqq / (1.0 + d.p * d.p))
        }),
    );

    let lemma_hypotheses = fmax(&|d| {
        let a = 1.0 + d.hp;
        let a_sq = 1.0 + d.hp * d.hp;
        (1.0 / big_c / d.hpp.0)
            .max(d.hpp.1 * c)
            .max(d.bt_ainv / (big_c * a))
            .max(d.schur / (big_c * a_sq))
    });
    let k8 = 2.0 * big_c.powi(3) / (c * c) + big_c;
    let forward_ratio =
        fmax(&|d| (d.hqp / (big_c / c * (1.0 + d.hp))).max(d.hqq / (k8 * (1.0 + d.hp * d.hp))));
    let k9 = 4.0 * big_c.powi(3) / (c * c) + big_c;
    let converse_ratio = fmax(&|d| {
        (d.bt_ainv / (big_c * big_c / c * (1.0 + d.hp))).max(d.schur / (k9 * (1.0 + d.hp * d.hp)))
    });
    // Forward direction: hypotheses imply the forward bounds; converse: (i) and the forward bounds imply the converse bounds.
    let hyp = lemma_hypotheses <= slack;
    let lemma_holds = (!hyp || forward_ratio <= slack)
        && (!(hyp && forward_ratio <= slack) || converse_ratio <= slack);
    Ok(GrowthReport {
        points: pts.len(),
        c,
        big_c,
        fitted: given.is_none(),
        convexity_holds,
        growth_holds,
        h_pp_band: band,
        c1,
        c2,
        band_holds: c1 > 0.0,
        p_form,
        lemma_hypotheses,
        forward_ratio,
        converse_ratio,
        lemma_holds,
    })
}

/// `|H_pp^{-1}| <= C` (spectral norm) against `H_pp >= I / C`, for every point and constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseBoundReport {
    pub checks: usize,
    pub agreements: usize,
    pub holds: bool,
}

pub fn inverse_bound_equivalence(
    h: &dyn Hamiltonian,
    pts: &[SamplePoint],
    constants: &[f64],
) -> InverseBoundReport {
    let mut checks = 0;
    let mut agreements = 0;
    for s in pts {
        let a = h.jet(s.t, &s.q, &s.x).dpp;
        let inv_norm = a.clone().try_inverse().map_or(f64::INFINITY, |m| norm2(&m));
        let lmin = sym_eigenvalues(&a)[0];
        for &c in constants {
            checks += 1;
            let lhs = inv_norm <= c;
            let rhs = lmin >= 1.0 / c;
            let borderline = (inv_norm - c).abs() <= 1e-9 * c;
            if lhs == rhs || borderline {
                agreements += 1;
            }
        }
    }
    InverseBoundReport {
        checks,
        agreements,
        holds: checks == agreements,
    }
}

/// Unique minimiser of `p -> H(t, q, p)`.
pub fn fiber_minimum(h: &dyn Hamiltonian, t: f64, q: &DVector<f64>) -> Result<DVector<f64>> {
    if q.len() != h.n() {
        return Err(Error::Dimension("point has the wrong dimension".into()));
    }
    fiber_newton(
        |p| {
            let j = h.jet(t, q, p);
            (j.value, j.dp, j.dpp)
        },
        &DVector::zeros(h.n()),
        &NewtonOptions::default(),
    )
}

/// `C_3 = max |p_bar(t, q)|` over the sampled `(t, q)`.
pub fn fiber_minimum_bound(h: &dyn Hamiltonian, pts: &[SamplePoint]) -> Result<f64> {
    pts.par_iter()
        .map(|s| fiber_minimum(h, s.t, &s.q).map(|p| p.norm()))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversibilityReport {
    /// `max |L(-t, q, -v) - L(t, q, v)|`.
    pub lagrangian_defect: f64,
    /// `max |H(-t, q, -p) - H(t, q, p)|` at `p = L_v(t, q, v)`.
    pub hamiltonian_defect: f64,
    /// `max |v(-t, q, -p) + v(t, q, p)|` with `v(-t, q, -p)` from a fiber solve.
    pub velocity_defect: f64,
    pub lagrangian_reversible: bool,
    pub hamiltonian_reversible: bool,
    /// Both sides agree, and the velocity relation holds when they are reversible.
    pub consistent: bool,
}

pub fn reversibility_transport(
    l: &dyn Lagrangian,
    h: &dyn Hamiltonian,
    pts: &[SamplePoint],
    tol: f64,
) -> Result<ReversibilityReport> {
    let mut r = ReversibilityReport {
        lagrangian_defect: 0.0,
        hamiltonian_defect: 0.0,
        velocity_defect: 0.0,
        lagrangian_reversible: false,
        hamiltonian_reversible: false,
        consistent: false,
    };
    for s in pts {
        let (t, q, v) = (s.t, &s.q, &s.x);
        let p = l.jet(t, q, v).dv;
        r.lagrangian_defect = r
            .lagrangian_defect
            .max((l.value(-t, q, &(-v)) - l.value(t, q, v)).abs());
        r.hamiltonian_defect = r
            .hamiltonian_defect
            .max((h.value(-t, q, &(-&p)) - h.value(t, q, &p)).abs());
        let (_, w) = legendre_l_to_h(l, -t, q, &(-&p), &NewtonOptions::default())?;
        r.velocity_defect = r.velocity_defect.max((w + v).norm());
    }
    r.lagrangian_reversible = r.lagrangian_defect <= tol;
    r.hamiltonian_reversible = r.hamiltonian_defect <= tol;
    r.consistent = r.lagrangian_reversible == r.hamiltonian_reversible
        && (!r.lagrangian_reversible || r.velocity_defect <= tol.max(1e-8));
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Start from `(q, v)`, transform to `H`, come back.
    LToH,
    /// Start from `(q, p)`, transform to `L`, come back.
    HToL,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub direction: Direction,
    pub points: usize,
    /// Largest `|F* - G| / (1 + |G|)` between the numerical transform and the supplied dual.
    pub value_defect: f64,
    /// Largest fiber-coordinate error after going there and back.
    pub round_trip_error: f64,
    pub tol: f64,
    pub holds: bool,
}

/// Numerical Legendre transforms in both directions, checked against the supplied pair.
pub fn legendre_round_trip(
    l: &dyn Lagrangian,
    h: &dyn Hamiltonian,
    pts: &[SamplePoint],
    direction: Direction,
    tol: f64,
    opts: &NewtonOptions,
) -> Result<RoundTripReport> {
    if l.n() != h.n() {
        return Err(Error::Dimension("Lagrangian and Hamiltonian dimensions differ".into()));
    }
    let per: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|s| -> Result<(f64, f64)> {
            let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + b.abs());
            Ok(match direction {
                Direction::LToH => {
                    let p = l.jet(s.t, &s.q, &s.x).dv;
                    let (hv, v) = legendre_l_to_h(l, s.t, &s.q, &p, opts)?;
                    let (lv, p2) = legendre_h_to_l(h, s.t, &s.q, &v, opts)?;
                    (
                        rel(hv, h.value(s.t, &s.q, &p)).max(rel(lv, l.value(s.t, &s.q, &s.x))),
                        (v - &s.x).norm().max((p2 - p).norm()),
                    )
                }
                Direction::HToL => {
                    let v = h.jet(s.t, &s.q, &s.x).dp;
                    let (lv, p) = legendre_h_to_l(h, s.t, &s.q, &v, opts)?;
                    let (hv, v2) = legendre_l_to_h(l, s.t, &s.q, &s.x, opts)?;
                    (
                        rel(lv, l.value(s.t, &s.q, &v)).max(rel(hv, h.value(s.t, &s.q, &s.x))),
                        (p - &s.x).norm().max((v2 - v).norm()),
                    )
                }
            })
        })
        .collect::<Result<_>>()?;
    let value_defect = per.iter().map(|x| x.0).fold(0.0, f64::max);
    let round_trip_error = per.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(RoundTripReport {
        direction,
        points: pts.len(),
        value_defect,
        round_trip_error,
        tol,
        holds: value_defect <= tol && round_trip_error <= tol,
    })
}
