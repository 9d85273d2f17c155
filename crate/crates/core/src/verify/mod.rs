//! Property suites over the catalog systems and seeded random families.
//! Every check reports the statement it tests, the number of cases and
//! each failing case; reports contain no timings so reruns are byte-identical.

mod families;

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use families::{
    magnetic_model, random_reversible, random_sturm, route_systems, torus_field_model, System,
};

use crate::duality::{
    check_growth_conditions, legendre_round_trip, reversibility_transport, Direction,
    sample_points, verify_duality_identities, Hamiltonian, MechanicalHamiltonian, NewtonOptions,
    SampleBox, TransformedHamiltonian,
};
use crate::error::{Error, Result};
use crate::fields::{Phase, ScalarField};
use crate::iteration::{
    index_sequence, linearized_path, symmetric_split_sequence, verify_iteration_inequalities,
    IndexSequence, SequenceOptions, SplitOptions,
};
use crate::loops::{
    euler_lagrange_residual, find_orbit, hessian_inertia, kernel_variations, sobolev_c0_check,
    FindOptions, HessianOptions, Loop, Parity, Subspace,
};
use crate::maslov::{iterated_indices, mean_from_indices, mu_indices_with, CrossingOptions};
use crate::models::{Lagrangian, Mechanical, Metric};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Duality,
    Indices,
    Iteration,
    Symmetric,
    Sobolev,
    Orbits,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "duality" => Suite::Duality,
            "indices" => Suite::Indices,
            "iteration" => Suite::Iteration,
            "symmetric" => Suite::Symmetric,
            "sobolev" => Suite::Sobolev,
            "orbits" => Suite::Orbits,
            "all" => Suite::All,
            _ => {
                return Err(Error::Input(format!(
                    "unknown suite {s:?}; expected duality, indices, iteration, symmetric, sobolev, orbits or all"
                )))
            }
        })
    }
}

/// Sizes of every suite. The defaults are the acceptance settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Fourier modes per period for Hessians; the gate reruns at twice this.
    pub n_modes: usize,
    pub k_set: Vec<usize>,
    /// Integration steps per period; `None` picks them from the coefficient size.
    pub steps: Option<usize>,
    pub random_paths: usize,
    pub m_max: usize,
    pub symmetric_families: usize,
    pub symmetric_k_max: usize,
    pub even_families: usize,
    pub even_k_max: usize,
    pub duality_samples: usize,
    pub duality_tol: f64,
    pub round_trip_tol: f64,
    pub sobolev_loops: usize,
    pub orbit_tol: f64,
    pub zero_mode_angle: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 20240917,
            n_modes: 64,
            k_set: vec![1, 2, 4, 8],
            steps: None,
            random_paths: 50,
            m_max: 32,
            symmetric_families: 20,
            symmetric_k_max: 8,
            even_families: 20,
            even_k_max: 32,
            duality_samples: 1000,
            duality_tol: 1e-7,
            round_trip_tol: 1e-8,
            sobolev_loops: 1000,
            orbit_tol: 1e-9,
            zero_mode_angle: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub id: String,
    /// The identity or inequality under test, in words.
    pub statement: String,
    pub cases: usize,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub passed: bool,
}

impl CheckLine {
    fn new(id: &str, statement: &str) -> Self {
        CheckLine {
            id: id.into(),
            statement: statement.into(),
            cases: 0,
            failures: vec![],
            notes: vec![],
            passed: false,
        }
    }

    fn case(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn error(&mut self, what: &str, e: Error) {
        self.cases += 1;
        self.failures.push(format!("{what}: {e}"));
    }

    fn finish(mut self) -> Self {
        self.passed = self.cases > 0 && self.failures.is_empty();
        self
    }

    /// One line: `PASS id (cases) statement` or `FAIL ...` with the first failure.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} {} ({} cases): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.cases,
            self.statement
        );
        if let Some(f) = self.failures.first() {
            s.push_str(&format!(" | first failure: {f}"));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub suite: Suite,
    pub options: VerifyOptions,
    pub checks: Vec<CheckLine>,
    pub passed: bool,
}

pub fn run(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    if opts.n_modes == 0 || opts.k_set.is_empty() || opts.m_max == 0 {
        return Err(Error::Input("suite sizes must be positive".into()));
    }
    let mut checks = Vec::new();
    let want = |s: Suite| suite == s || suite == Suite::All;
    let mut sequences = None;
    if want(Suite::Indices) || want(Suite::Iteration) {
        let (line, seqs) = morse_maslov(opts);
        if want(Suite::Indices) {
            checks.push(line);
        }
        sequences = Some(seqs);
    }
    if want(Suite::Iteration) {
        checks.push(iteration_inequality(opts));
        checks.push(mean_index_relations(opts, sequences.as_deref().unwrap_or(&[])));
    }
    if want(Suite::Symmetric) {
        checks.push(symmetric_identities(opts));
        checks.push(even_orbit_bound(opts));
    }
    if want(Suite::Duality) {
        checks.push(duality_identities(opts));
    }
    if want(Suite::Sobolev) {
        checks.push(sobolev_inequality(opts));
    }
    if want(Suite::Orbits) {
        checks.push(orbit_finder(opts));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        schema: crate::SCHEMA.into(),
        suite,
        options: opts.clone(),
        checks,
        passed,
    })
}

fn rng(opts: &VerifyOptions, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(opts.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Morse index and nullity of the action equal the Maslov-type index and
/// nullity of the linearised flow, for the catalog systems and every `k`.
pub fn morse_maslov(opts: &VerifyOptions) -> (CheckLine, Vec<IndexSequence>) {
    let mut line = CheckLine::new(
        "morse-maslov",
        "(m^-, m^0) of the truncated action Hessian equal (i, nu) of the fundamental solution, gate at 2 N_f",
    );
    let seq_opts = SequenceOptions {
        k_set: opts.k_set.clone(),
        n_modes: opts.n_modes,
        steps: opts.steps,
        ..Default::default()
    };
    let mut seqs = Vec::new();
    for sys in route_systems(opts.n_modes) {
        let orbit = match sys.orbit(opts.n_modes) {
            Ok(o) => o,
            Err(e) => {
                line.error(&sys.name, e);
                continue;
            }
        };
        let seq = match index_sequence(sys.model.clone(), &orbit, &seq_opts) {
            Ok(s) => s,
            Err(e) => {
                line.error(&sys.name, e);
                continue;
            }
        };
        for r in &seq.rows {
            let ok = r.gate_stable == Some(true)
                && r.ambiguous == Some(false)
                && r.routes_agree == Some(true);
            line.case(ok, || {
                format!(
                    "{} k={}: Hessian ({:?}, {:?}) gate {:?} ambiguous {:?}, Maslov ({:?}, {:?})",
                    sys.name, r.k, r.m_minus, r.m_zero, r.gate_stable, r.ambiguous, r.i, r.nu
                )
            });
        }
        let counts: Vec<String> = seq
            .rows
            .iter()
            .map(|r| format!("k={}:({:?},{:?})", r.k, r.i.unwrap_or(-999), r.nu.unwrap_or(999)))
            .collect();
        line.notes.push(format!("{}: {}", sys.name, counts.join(" ")));
        seqs.push(seq);
    }
    (line.finish(), seqs)
}

/// `max{0, m lo - n} <= i_m <= m hi + n - nu_m` on random coefficient paths.
pub fn iteration_inequality(opts: &VerifyOptions) -> CheckLine {
    let mut line = CheckLine::new(
        "iteration-inequality",
        "max{0, m*lo - n} <= i_m <= m*hi + n - nu_m for all m <= m_max with the converged mean-index bracket",
    );
    let mut r = rng(opts, 2);
    let families: Vec<_> = (0..opts.random_paths).map(|_| random_sturm(&mut r)).collect();
    let seq_opts = SequenceOptions {
        k_set: (1..=opts.m_max).collect(),
        hessian: false,
        maslov: true,
        steps: opts.steps,
        ..Default::default()
    };
    let results: Vec<Result<IndexSequence>> = families
        .par_iter()
        .map(|(m, l)| index_sequence(Arc::new(m.clone()), l, &seq_opts))
        .collect();
    let mut corners = 0;
    for (j, res) in results.into_iter().enumerate() {
        let name = format!("path {j} (n={})", families[j].0.n());
        match res {
            Err(e) => line.error(&name, e),
            Ok(seq) => {
                let rep = verify_iteration_inequalities(&seq);
                corners += rep.rows.iter().filter(|x| x.corner).count();
                for row in &rep.rows {
                    line.case(row.lower && row.upper, || {
                        format!(
                            "{name} m={}: {} <= {} <= {} fails",
                            row.k, row.lower_bound, row.m_minus, row.upper_bound
                        )
                    });
                }
            }
        }
    }
    line.notes.push(format!("{corners} rows sit at the zero-mean, maximal-nullity corner"));
    line.finish()
}

/// Mean indices of the half-period problems are half the full mean index,
/// and the Morse-route and Maslov-route brackets overlap.
pub fn mean_index_relations(opts: &VerifyOptions, sequences: &[IndexSequence]) -> CheckLine {
    let mut line = CheckLine::new(
        "mean-index",
        "mu_1(m)/m and (mu_2(m) - n)/m lie within 2n/m of i_hat/2 at m = m_max; Morse and Maslov mean brackets overlap",
    );
    let mut r = rng(opts, 4);
    let families: Vec<_> = (0..opts.symmetric_families).map(|_| random_reversible(&mut r, false)).collect();
    let m = opts.m_max;
    let crossing = CrossingOptions::default();
    let results: Vec<Result<_>> = families
        .par_iter()
        .map(|(model, l)| {
            let path = linearized_path(Arc::new(model.clone()), l, opts.steps)?;
            let (full, _) = iterated_indices(&path, m, &crossing)?;
            let mus = mu_indices_with(&path, m, &crossing)?;
            Ok((mean_from_indices(full, model.n()), mus[m - 1]))
        })
        .collect();
    for (j, res) in results.into_iter().enumerate() {
        let n = families[j].0.n();
        let name = format!("reversible family {j} (n={n})");
        match res {
            Err(e) => line.error(&name, e),
            Ok((mean, mu)) => {
                let (lo, hi) = (mean.converged_lower / 2.0, mean.converged_upper / 2.0);
                let w = 2.0 * n as f64 / m as f64;
                let dist = |x: f64| (lo - x).max(x - hi).max(0.0);
                let a = mu.mu1 as f64 / m as f64;
                let b = (mu.mu2 - n as i64) as f64 / m as f64;
                line.case(dist(a) <= w && dist(b) <= w, || {
                    format!("{name}: mu_1/m = {a}, (mu_2 - n)/m = {b}, i_hat/2 in [{lo}, {hi}], width {w}")
                });
            }
        }
    }
    for seq in sequences {
        match (seq.morse_bracket, seq.maslov_bracket) {
            (Some(a), Some(b)) => line.case(a.overlaps(&b), || {
                format!("{}: Morse bracket {a:?} and Maslov bracket {b:?} are disjoint", seq.model)
            }),
            _ => line.case(false, || format!("{}: a route did not run", seq.model)),
        }
    }
    line.finish()
}

/// Even/odd splittings of reversible families against the half-period indices.
pub fn symmetric_identities(opts: &VerifyOptions) -> CheckLine {
    let mut line = CheckLine::new(
        "symmetric-identities",
        "mu_1 + mu_2 = i + n, nu_1 + nu_2 = nu, m^-_E = mu_1, m^0_E = nu_1, m^-_odd = mu_2 - n, m^0_odd = nu_2 and additivity of the splitting",
    );
    let mut r = rng(opts, 3);
    let families: Vec<_> = (0..opts.symmetric_families).map(|_| random_reversible(&mut r, false)).collect();
    let split = SplitOptions {
        k_max: opts.symmetric_k_max,
        hessian_k_max: opts.symmetric_k_max,
        n_modes: opts.n_modes,
        steps: opts.steps,
        ..Default::default()
    };
    let results: Vec<Result<_>> = families
        .par_iter()
        .map(|(m, l)| symmetric_split_sequence(Arc::new(m.clone()), l, &split))
        .collect();
    for (j, res) in results.into_iter().enumerate() {
        let name = format!("reversible family {j} (n={})", families[j].0.n());
        match res {
            Err(e) => line.error(&name, e),
            Ok(rows) => {
                for row in rows {
                    line.case(row.checks.holds, || format!("{name} k={}: {:?}", row.k, row.checks));
                }
            }
        }
    }
    line.finish()
}

/// `mu_1 + nu_1 <= n` for every iterate of families with vanishing even mean index.
pub fn even_orbit_bound(opts: &VerifyOptions) -> CheckLine {
    let mut line = CheckLine::new(
        "even-orbit-bound",
        "m^-_E + m^0_E <= n for all iterates k <= k_max when the even mean index vanishes",
    );
    let mut r = rng(opts, 5);
    let families: Vec<_> = (0..opts.even_families).map(|_| random_reversible(&mut r, true)).collect();
    let crossing = CrossingOptions::default();
    let hk: Vec<usize> = opts.k_set.iter().copied().filter(|&k| k <= opts.even_k_max).collect();
    let results: Vec<Result<_>> = families
        .par_iter()
        .map(|(model, l)| {
            let path = linearized_path(Arc::new(model.clone()), l, opts.steps)?;
            let mus = mu_indices_with(&path, opts.even_k_max, &crossing)?;
            let hess = hk
                .iter()
                .map(|&k| {
                    let h = HessianOptions {
                        n_modes: Some(k * opts.n_modes),
                        parity: Parity::Even,
                        ..Default::default()
                    };
                    hessian_inertia(model, &l.iterate(k)?, &h).map(|r| (k, r))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((mus, hess))
        })
        .collect();
    for (j, res) in results.into_iter().enumerate() {
        let n = families[j].0.n();
        let name = format!("hyperbolic family {j} (n={n})");
        match res {
            Err(e) => line.error(&name, e),
            Ok((mus, hess)) => {
                for mu in &mus {
                    line.case(mu.mu1 + mu.nu1 as i64 <= n as i64, || {
                        format!("{name} k={}: mu_1 = {}, nu_1 = {}", mu.m, mu.mu1, mu.nu1)
                    });
                }
                for (k, h) in hess {
                    let mu = mus[k - 1];
                    let ok = h.morse_index as i64 == mu.mu1
                        && h.nullity == mu.nu1
                        && h.morse_index + h.nullity <= n
                        && !h.ambiguous
                        && h.gate.map_or(true, |g| g.stable);
                    line.case(ok, || {
                        format!(
                            "{name} k={k}: even Hessian ({}, {}) against (mu_1, nu_1) = ({}, {})",
                            h.morse_index, h.nullity, mu.mu1, mu.nu1
                        )
                    });
                }
            }
        }
    }
    line.finish()
}

struct DualityCase {
    name: &'static str,
    lagrangian: Arc<dyn Lagrangian>,
    hamiltonian: Arc<dyn Hamiltonian>,
}

fn duality_cases() -> Vec<DualityCase> {
    let phys = Mechanical::physical(
        vec![
            ScalarField::term(0.3, vec![0, 1], 0, Phase::Sin),
            ScalarField::term(0.2, vec![1, 0], 0, Phase::Cos),
        ],
        ScalarField::term(1.0, vec![1, 0], 0, Phase::Cos)
            .plus(ScalarField::term(0.5, vec![1, 1], 0, Phase::Cos)),
    )
    .unwrap();
    let torus = Mechanical::torus_metric(
        Metric::Constant(vec![vec![2.0, 0.3], vec![0.3, 1.0]]),
        ScalarField::term(1.0, vec![1, 0], 0, Phase::Cos),
        2,
    )
    .unwrap();
    let field: Arc<dyn Lagrangian> = Arc::new(torus_field_model());
    vec![
        DualityCase {
            name: "magnetic model",
            hamiltonian: Arc::new(MechanicalHamiltonian::dual_of(&phys).unwrap()),
            lagrangian: Arc::new(phys),
        },
        DualityCase {
            name: "torus metric, constant g",
            hamiltonian: Arc::new(MechanicalHamiltonian::dual_of(&torus).unwrap()),
            lagrangian: Arc::new(torus),
        },
        DualityCase {
            name: "torus metric, field g",
            hamiltonian: Arc::new(TransformedHamiltonian::new(field.clone())),
            lagrangian: field,
        },
    ]
}

/// Derivative identities of the Legendre transform, round trips, growth bands and negative controls.
pub fn duality_identities(opts: &VerifyOptions) -> CheckLine {
    let mut line = CheckLine::new(
        "duality",
        "H_p = v, H_q = -L_q, H_pp L_vv = I, L_qq = H_pq^T H_pp^-1 H_pq - H_qq, L_qv = -H_qp L_vv; L <-> H round trip; growth bounds transfer",
    );
    let newton = NewtonOptions::default();
    for (j, case) in duality_cases().into_iter().enumerate() {
        let (l, h) = (case.lagrangian.as_ref(), case.hamiltonian.as_ref());
        let pts = sample_points(&SampleBox::unit_cell(l.n(), 3.0, opts.duality_samples, opts.seed + j as u64));
        match verify_duality_identities(l, h, &pts, opts.duality_tol) {
            Err(e) => line.error(case.name, e),
            Ok(rep) => {
                line.case(rep.holds, || format!("{}: {:?}, failing {:?}", case.name, rep.residuals, rep.failing));
                line.notes.push(format!("{}: residuals {:?}", case.name, rep.residuals));
            }
        }
        for dir in [Direction::LToH, Direction::HToL] {
            match legendre_round_trip(l, h, &pts, dir, opts.round_trip_tol, &newton) {
                Ok(rt) => line.case(rt.holds, || format!("{}: round trip {rt:?}", case.name)),
                Err(e) => line.error(case.name, e),
            }
        }
        match check_growth_conditions(l, h, &pts, None) {
            Err(e) => line.error(case.name, e),
            Ok(g) => {
                line.case(g.convexity_holds && g.growth_holds && g.band_holds && g.lemma_holds, || {
                    format!("{}: growth report {g:?}", case.name)
                });
                line.notes.push(format!(
                    "{}: c = {:.4}, C = {:.4}, H_pp band [{:.4}, {:.4}], forward ratio {:.3}, converse ratio {:.3}",
                    case.name, g.c, g.big_c, g.h_pp_band.0, g.h_pp_band.1, g.forward_ratio, g.converse_ratio
                ));
                // too small a growth constant must be rejected
                match check_growth_conditions(l, h, &pts, Some((g.c, 0.5 * g.big_c))) {
                    Ok(bad) => line.case(!bad.growth_holds, || format!("{}: halved C accepted", case.name)),
                    Err(e) => line.error(case.name, e),
                }
            }
        }
        if l.reversible() {
            match reversibility_transport(l, h, &pts, opts.duality_tol) {
                Ok(rt) => line.case(rt.consistent, || format!("{}: reversibility {rt:?}", case.name)),
                Err(e) => line.error(case.name, e),
            }
        }
    }
    // a Hamiltonian that is not the dual must be flagged
    let base = Mechanical::pendulum(1.0);
    let mut wrong = MechanicalHamiltonian::dual_of(&base).unwrap();
    wrong.potential = wrong.potential.plus(ScalarField::term(0.05, vec![1], 0, Phase::Cos));
    let pts = sample_points(&SampleBox::unit_cell(1, 3.0, opts.duality_samples.min(200), opts.seed));
    match verify_duality_identities(&base, &wrong, &pts, opts.duality_tol) {
        Ok(rep) => line.case(!rep.holds && rep.failing.iter().any(|f| f == "position-gradient"), || {
            format!("mismatched pair not flagged: {:?}", rep.failing)
        }),
        Err(e) => line.error("mismatched pair", e),
    }
    line.finish()
}

fn random_loop(r: &mut ChaCha8Rng, tau: f64) -> Loop {
    let n = r.gen_range(1..=3);
    let nm = r.gen_range(1..=16);
    let decay = r.gen_range(0.0..2.0);
    let mut l = Loop::constant(DVector::from_fn(n, |_, _| r.gen_range(-1.0..1.0)), tau, nm).unwrap();
    for k in 1..=nm {
        let a = (k as f64).powf(-decay);
        l.set_cos(k, DVector::from_fn(n, |_, _| a * r.gen_range(-1.0..1.0)));
        l.set_sin(k, DVector::from_fn(n, |_, _| a * r.gen_range(-1.0..1.0)));
    }
    l
}

pub fn sobolev_inequality(opts: &VerifyOptions) -> CheckLine {
    let mut line = CheckLine::new(
        "sobolev",
        "sup |eta| <= sqrt((1 + tau)/tau) ||eta||_{W^{1,2}} on random truncated loops, tau in {0.5, 1, 3}",
    );
    let mut r = rng(opts, 7);
    let taus = [0.5, 1.0, 3.0];
    let mut worst: f64 = 0.0;
    for j in 0..opts.sobolev_loops {
        let tau = taus[j % 3];
        let l = random_loop(&mut r, tau);
        match sobolev_c0_check(&l, 1024) {
            Ok(c) => {
                worst = worst.max(c.sup_norm / c.bound);
                line.case(c.holds, || format!("loop {j}, tau {tau}: {c:?}"));
            }
            Err(e) => line.error(&format!("loop {j}"), e),
        }
    }
    line.notes.push(format!("largest ratio sup / bound: {worst:.4}"));
    line.finish()
}

fn zero_mode_angle(model: &dyn Lagrangian, orbit: &Loop, n_modes: usize) -> Result<(usize, f64)> {
    let ker = kernel_variations(model, orbit, n_modes, 1e-7)?;
    let Some(k) = ker.first() else {
        return Ok((0, PI / 2.0));
    };
    let n_t = 8 * n_modes;
    let s = orbit.samples(n_t)?;
    let e = k.samples(n_t)?;
    let (mut dot, mut a, mut b) = (0.0f64, 0.0f64, 0.0f64);
    for (v, q) in s.v.iter().zip(&e.q) {
        dot += v.dot(q);
        a += v.norm_squared();
        b += q.norm_squared();
    }
    let c = (dot.abs() / (a * b).sqrt()).min(1.0);
    // acos loses accuracy near 1; use the sine instead
    Ok((ker.len(), (1.0 - c * c).max(0.0).sqrt().asin()))
}

pub fn orbit_finder(opts: &VerifyOptions) -> CheckLine {
    let mut line = CheckLine::new(
        "orbit-finder",
        "rotating pendulum orbit (w = 1, tau = 3) and an even contractible orbit reach EL residual <= tol; the autonomous zero mode aligns with the velocity",
    );
    let pendulum = Mechanical::pendulum(1.0);
    let check_res = 16 * opts.n_modes;
    let rot_init = Loop::straight(DVector::from_vec(vec![0.0]), vec![1], 3.0, opts.n_modes).unwrap();
    let find = FindOptions {
        n_modes: opts.n_modes,
        tol: opts.orbit_tol,
        ..Default::default()
    };
    match find_orbit(&pendulum, &rot_init, &find) {
        Err(e) => line.error("rotating orbit", e),
        Ok(rep) => {
            let res = euler_lagrange_residual(&pendulum, &rep.orbit, check_res);
            line.case(matches!(res, Ok(x) if x <= opts.orbit_tol), || format!("rotating orbit residual {res:?}"));
            match zero_mode_angle(&pendulum, &rep.orbit, opts.n_modes) {
                Ok((dim, angle)) => {
                    line.case(dim == 1 && angle <= opts.zero_mode_angle, || {
                        format!("kernel dimension {dim}, angle to the velocity {angle:e}")
                    });
                    line.notes.push(format!(
                        "rotating orbit: residual {:.2e}, action {:.6}, zero-mode angle {angle:.2e}",
                        rep.residual, rep.action
                    ));
                }
                Err(e) => line.error("zero mode", e),
            }
        }
    }
    let mut even_init = Loop::constant(DVector::from_vec(vec![0.0]), 1.5, opts.n_modes).unwrap();
    even_init.set_cos(1, DVector::from_vec(vec![0.35]));
    let even = FindOptions {
        descent: false,
        subspace: Subspace::Even,
        ..find.clone()
    };
    match find_orbit(&pendulum, &even_init, &even) {
        Err(e) => line.error("even orbit", e),
        Ok(rep) => {
            let res = euler_lagrange_residual(&pendulum, &rep.orbit, check_res);
            let amp = rep.orbit.cos_coeffs()[1][0].abs();
            line.case(
                matches!(res, Ok(x) if x <= opts.orbit_tol) && rep.orbit.is_even(0.0) && amp > 0.1,
                || format!("even orbit residual {res:?}, first cosine amplitude {amp}"),
            );
            line.notes.push(format!("even orbit: residual {:.2e}, first cosine amplitude {amp:.6}", rep.residual));
        }
    }
    let free = Mechanical::free_particle(2);
    let straight = Loop::straight(DVector::from_vec(vec![0.1, 0.2]), vec![1, 0], 2.0, opts.n_modes).unwrap();
    match find_orbit(&free, &straight, &find) {
        Ok(rep) => line.case((rep.action - 0.25).abs() <= 1e-12 && rep.newton_steps <= 2, || {
            format!("free particle: action {} after {} Newton steps", rep.action, rep.newton_steps)
        }),
        Err(e) => line.error("free particle", e),
    }
    line.finish()
}
