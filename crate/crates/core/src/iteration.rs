//! Index sequences of iterated orbits through the Hessian and Maslov routes,
//! the iteration inequalities, symmetric splittings and index-stable subsequences.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loops::{
    action, euler_lagrange_residual, hessian_inertia, HessianOptions, HessianReport, Loop, Parity,
};
use crate::maslov::{
    bracket, check_reflection_symmetry, iterated_indices, mu_indices_with, CrossingOptions,
    IndexPair, Realisation,
};
use crate::models::{sturm_coefficient, Lagrangian};
use crate::symplectic::{integrate_fundamental, standard_j, IntegrateOptions, SymplecticPath};

/// `gamma^k` with its residual and action recomputed on `oversample * modes` points.
#[derive(Clone, Debug)]
pub struct IteratedOrbit {
    pub k: usize,
    pub orbit: Loop,
    pub residual: f64,
    pub action: f64,
}

pub fn iterate_orbit(model: &dyn Lagrangian, gamma: &Loop, k: usize) -> Result<IteratedOrbit> {
    let orbit = gamma.iterate(k)?;
    let n_t = 8 * orbit.n_modes().max(8);
    Ok(IteratedOrbit {
        k,
        residual: euler_lagrange_residual(model, &orbit, n_t)?,
        action: action(model, &orbit, n_t)?,
        orbit,
    })
}

/// Fundamental solution of the linearised flow along `gamma` on `[0, tau]`.
/// The default grid has `max(512, 32 tau rho)` steps rounded up to an even
/// count, `rho` being the largest sampled `|J0 B(t)|`.
pub fn linearized_path(
    model: Arc<dyn Lagrangian>,
    gamma: &Loop,
    steps: Option<usize>,
) -> Result<SymplecticPath<f64>> {
    let n = gamma.n();
    let tau = gamma.tau();
    let coef = sturm_coefficient(model, gamma);
    let steps = match steps {
        Some(s) => s,
        None => {
            let j = standard_j::<f64>(n);
            let rho = (0..=64)
                .map(|i| (&j * coef(tau * i as f64 / 64.0)).norm())
                .fold(0.0, f64::max);
            ((32.0 * tau * rho).ceil() as usize).max(512)
        }
    };
    let steps = steps + steps % 2;
    integrate_fundamental(
        coef,
        n,
        0.0,
        tau,
        &IntegrateOptions {
            steps: Some(steps),
            ..Default::default()
        },
    )
}

#[derive(Clone, Debug)]
pub struct SequenceOptions {
    /// Iterates to report; the Maslov route always sweeps `1..=max(k_set)`.
    pub k_set: Vec<usize>,
    pub hessian: bool,
    pub maslov: bool,
    /// Fourier modes per period for the Hessian route; `gamma^k` uses `k` times this.
    pub n_modes: usize,
    pub gate: bool,
    /// Relative zero threshold for Hessian eigenvalues.
    pub tol_eig: f64,
    pub steps: Option<usize>,
    pub crossing: CrossingOptions,
}

impl Default for SequenceOptions {
    fn default() -> Self {
        SequenceOptions {
            k_set: vec![1, 2, 4, 8, 16, 32],
            hessian: true,
            maslov: true,
            n_modes: 64,
            gate: true,
            tol_eig: HessianOptions::default().tol_eig,
            steps: None,
            crossing: CrossingOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceRow {
    pub k: usize,
    pub m_minus: Option<usize>,
    pub m_zero: Option<usize>,
    pub i: Option<i64>,
    pub nu: Option<usize>,
    /// Hessian counts unchanged under doubled truncation.
    pub gate_stable: Option<bool>,
    /// Hessian eigenvalue close to the zero threshold.
    pub ambiguous: Option<bool>,
    /// Both routes computed and equal.
    pub routes_agree: Option<bool>,
    /// Mean-index bracket accumulated over iterates up to `k`.
    pub mean_lo: f64,
    pub mean_hi: f64,
    pub verdict_lower: Option<bool>,
    pub verdict_upper: Option<bool>,
}

impl SequenceRow {
    /// `(m^-, m^0)` from the Hessian route when present, else `(i, nu)`.
    pub fn counts(&self) -> Option<(i64, usize)> {
        match (self.m_minus, self.m_zero, self.i, self.nu) {
            (Some(a), Some(b), _, _) => Some((a as i64, b)),
            (_, _, Some(a), Some(b)) => Some((a, b)),
            _ => None,
        }
    }
}

/// Closed interval containing the mean index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn overlaps(&self, o: &Bracket) -> bool {
        self.lo <= o.hi + 1e-12 && o.lo <= self.hi + 1e-12
    }
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn accumulate(pairs: &[(usize, i64, usize)], n: usize) -> Vec<Bracket> {
    let mut out = Vec::with_capacity(pairs.len());
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for &(k, i, nu) in pairs {
        let (l, h) = bracket(
            IndexPair {
                index: i,
                nullity: nu,
            },
            k,
            n,
        );
        lo = lo.max(l);
        hi = hi.min(h);
        out.push(Bracket { lo, hi });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSequence {
    #[serde(default = "crate::schema::schema_tag")]
    pub schema: String,
    pub model: String,
    pub n: usize,
    pub tau: f64,
    pub winding: Vec<i64>,
    pub n_modes_per_period: usize,
    pub steps: Option<usize>,
    pub tol_eig: f64,
    pub realisation: Option<String>,
    /// The model is autonomous and the orbit is not constant, so `m^0 >= 1`
    /// counts the time-shift direction.
    pub shift_mode: bool,
    pub rows: Vec<SequenceRow>,
    pub maslov_bracket: Option<Bracket>,
    pub morse_bracket: Option<Bracket>,
}

impl IndexSequence {
    pub fn route_failures(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.routes_agree == Some(false))
            .map(|r| r.k)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "k,m_minus,m_zero,i,nu,mean_lo,mean_hi,verdict_lower,verdict_upper"
        )?;
        fn opt<T: ToString>(x: &Option<T>) -> String {
            x.as_ref().map(|v| v.to_string()).unwrap_or_default()
        }
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{:.17e},{:.17e},{},{}",
                r.k,
                opt(&r.m_minus),
                opt(&r.m_zero),
                opt(&r.i),
                opt(&r.nu),
                r.mean_lo,
                r.mean_hi,
                opt(&r.verdict_lower),
                opt(&r.verdict_upper)
            )?;
        }
        Ok(())
    }
}

fn hessian_row(
    model: &dyn Lagrangian,
    gamma: &Loop,
    k: usize,
    opts: &SequenceOptions,
    parity: Parity,
) -> Result<HessianReport> {
    let it = gamma.iterate(k)?;
    let h = HessianOptions {
        n_modes: Some(k * opts.n_modes),
        gate: opts.gate,
        tol_eig: opts.tol_eig,
        parity,
        ..Default::default()
    };
    hessian_inertia(model, &it, &h)
}

/// Morse and Maslov index sequences of the iterates `gamma^k`, `k` in `opts.k_set`.
pub fn index_sequence(
    model: Arc<dyn Lagrangian>,
    gamma: &Loop,
    opts: &SequenceOptions,
) -> Result<IndexSequence> {
    let mut ks = opts.k_set.clone();
    ks.sort_unstable();
    ks.dedup();
    if ks.first().map_or(true, |&k| k == 0) {
        return Err(Error::Input(
            "k_set must be nonempty with positive entries".into(),
        ));
    }
    if !opts.hessian && !opts.maslov {
        return Err(Error::Input("select at least one route".into()));
    }
    let n = gamma.n();
    let k_max = *ks.last().unwrap();
    let mut steps = opts.steps;
    let (maslov, realisation) = if opts.maslov {
        let path = linearized_path(model.clone(), gamma, opts.steps)?;
        steps = Some(path.times().len() - 1);
        let (v, how) = iterated_indices(&path, k_max, &opts.crossing)?;
        let how = match how {
            Realisation::Regular => "regular".to_string(),
            Realisation::Perturbed { eps } => format!("perturbed eps={eps:e}"),
        };
        (Some(v), Some(how))
    } else {
        (None, None)
    };
    let hess: Option<Vec<HessianReport>> = if opts.hessian {
        Some(
            ks.par_iter()
                .map(|&k| hessian_row(model.as_ref(), gamma, k, opts, Parity::Full))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };

    let maslov_brackets = maslov.as_ref().map(|v| {
        let pairs: Vec<(usize, i64, usize)> = v
            .iter()
            .enumerate()
            .map(|(m, p)| (m + 1, p.index, p.nullity))
            .collect();
        accumulate(&pairs, n)
    });
    let morse_brackets = hess.as_ref().map(|h| {
        let pairs: Vec<(usize, i64, usize)> = ks
            .iter()
            .zip(h)
            .map(|(&k, r)| (k, r.morse_index as i64, r.nullity))
            .collect();
        accumulate(&pairs, n)
    });

    let mut rows = Vec::with_capacity(ks.len());
    for (idx, &k) in ks.iter().enumerate() {
        let mp = maslov.as_ref().map(|v| v[k - 1]);
        let hr = hess.as_ref().map(|h| &h[idx]);
        let b = match (&maslov_brackets, &morse_brackets) {
            (Some(mb), _) => mb[k - 1],
            (None, Some(hb)) => hb[idx],
            _ => unreachable!(),
        };
        let routes_agree = match (mp, hr) {
            (Some(p), Some(h)) => Some(p.index == h.morse_index as i64 && p.nullity == h.nullity),
            _ => None,
        };
        rows.push(SequenceRow {
            k,
            m_minus: hr.map(|h| h.morse_index),
            m_zero: hr.map(|h| h.nullity),
            i: mp.map(|p| p.index),
            nu: mp.map(|p| p.nullity),
            gate_stable: hr.and_then(|h| h.gate.as_ref().map(|g| g.stable)),
            ambiguous: hr.map(|h| h.ambiguous),
            routes_agree,
            mean_lo: b.lo,
            mean_hi: b.hi,
            verdict_lower: None,
            verdict_upper: None,
        });
    }
    let nonconstant = gamma.winding().iter().any(|&w| w != 0)
        || (1..=gamma.n_modes())
            .any(|k| gamma.cos_coeffs()[k].amax() > 0.0 || gamma.sin_coeffs()[k].amax() > 0.0);
    let mut seq = IndexSequence {
        schema: crate::SCHEMA.to_string(),
        model: model.name(),
        n,
        tau: gamma.tau(),
        winding: gamma.winding().to_vec(),
        n_modes_per_period: opts.n_modes,
        steps,
        tol_eig: opts.tol_eig,
        realisation,
        shift_mode: nonconstant && model.time_period().is_none(),
        maslov_bracket: maslov_brackets.as_ref().map(|b| *b.last().unwrap()),
        morse_bracket: morse_brackets.as_ref().map(|b| *b.last().unwrap()),
        rows,
    };
    let rep = verify_iteration_inequalities(&seq);
    for (row, v) in seq.rows.iter_mut().zip(&rep.rows) {
        row.verdict_lower = Some(v.lower);
        row.verdict_upper = Some(v.upper);
    }
    Ok(seq)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    pub k: usize,
    pub m_minus: i64,
    pub m_zero: usize,
    /// `max{0, k lo - n}`.
    pub lower_bound: f64,
    /// `k hi + n - m^0_k`.
    pub upper_bound: f64,
    pub lower: bool,
    pub upper: bool,
    /// Mean bracket at zero with `m^0_k = 2n`: the upper bound is negative.
    pub corner: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub bracket: Bracket,
    pub rows: Vec<InequalityRow>,
    pub violations: usize,
    pub passes: bool,
}

/// Two-sided iteration bounds against the converged bracket of the final row.
/// Rows are read through [`SequenceRow::counts`].
pub fn verify_iteration_inequalities(seq: &IndexSequence) -> InequalityReport {
    let n = seq.n as f64;
    let last = seq.rows.last();
    let b = Bracket {
        lo: last.map_or(f64::NEG_INFINITY, |r| r.mean_lo),
        hi: last.map_or(f64::INFINITY, |r| r.mean_hi),
    };
    let slack = 1e-9;
    let rows: Vec<InequalityRow> = seq
        .rows
        .iter()
        .filter_map(|r| {
            let (m, z) = r.counts()?;
            let k = r.k as f64;
            let lower_bound = (k * b.lo - n).max(0.0);
            let upper_bound = k * b.hi + n - z as f64;
            Some(InequalityRow {
                k: r.k,
                m_minus: m,
                m_zero: z,
                lower_bound,
                upper_bound,
                lower: lower_bound <= m as f64 + slack,
                upper: m as f64 <= upper_bound + slack,
                corner: b.lo.abs() <= slack && b.hi.abs() <= slack && z == 2 * seq.n,
            })
        })
        .collect();
    let violations = rows.iter().filter(|r| !(r.lower && r.upper)).count();
    InequalityReport {
        bracket: b,
        passes: violations == 0,
        rows,
        violations,
    }
}

/// Iterates `k` in `k_set` whose counts equal those of `k = 1`.
pub fn detect_stable_subsequence(seq: &IndexSequence, k_set: &[usize]) -> Vec<usize> {
    let Some(base) = seq.rows.iter().find(|r| r.k == 1).and_then(|r| r.counts()) else {
        return vec![];
    };
    seq.rows
        .iter()
        .filter(|r| k_set.contains(&r.k) && r.counts() == Some(base))
        .map(|r| r.k)
        .collect()
}

/// Even/odd Hessian counts and half-period indices of `gamma^k`, with the
/// identities linking them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub k: usize,
    pub m_minus_even: Option<usize>,
    pub m_zero_even: Option<usize>,
    pub m_minus_odd: Option<usize>,
    pub m_zero_odd: Option<usize>,
    pub m_minus: Option<usize>,
    pub m_zero: Option<usize>,
    pub mu1: i64,
    pub nu1: usize,
    pub mu2: i64,
    pub nu2: usize,
    pub i: i64,
    pub nu: usize,
    pub checks: SplitChecks,
}

/// Identity verdicts; `None` when the Hessian route was not run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitChecks {
    /// `mu_1 + mu_2 = i + n`.
    pub mu_sum: bool,
    /// `nu_1 + nu_2 = nu`.
    pub nu_sum: bool,
    /// `m^-_E = mu_1`.
    pub even_index: Option<bool>,
    /// `m^0_E = nu_1`.
    pub even_nullity: Option<bool>,
    /// `m^-_odd = mu_2 - n`.
    pub odd_index: Option<bool>,
    /// `m^0_odd = nu_2`.
    pub odd_nullity: Option<bool>,
    /// `m^- = m^-_E + m^-_odd` and `m^0 = m^0_E + m^0_odd` on the Hessian side.
    pub additivity: Option<bool>,
    /// `|n + m^-_odd - m^-_E| <= n`, evaluated with `mu_2 - n` and `mu_1`.
    pub odd_even_gap: bool,
    /// `mu_1 + nu_1 <= n`, the even-orbit bound; meaningful when the even mean index vanishes.
    pub even_bound: bool,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct SplitOptions {
    pub k_max: usize,
    /// Run the Hessian route for `k <= hessian_k_max`.
    pub hessian_k_max: usize,
    pub n_modes: usize,
    pub gate: bool,
    pub steps: Option<usize>,
    pub symmetry_tol: f64,
    pub crossing: CrossingOptions,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            k_max: 8,
            hessian_k_max: 8,
            n_modes: 64,
            gate: true,
            steps: None,
            symmetry_tol: 1e-9,
            crossing: CrossingOptions::default(),
        }
    }
}

pub fn symmetric_split_sequence(
    model: Arc<dyn Lagrangian>,
    gamma: &Loop,
    opts: &SplitOptions,
) -> Result<Vec<SplitRow>> {
    if opts.k_max == 0 {
        return Err(Error::Input("k_max must be positive".into()));
    }
    if !model.reversible() {
        return Err(Error::Precondition("the model is not reversible".into()));
    }
    if !gamma.is_even(1e-12) {
        return Err(Error::Precondition("the orbit is not even".into()));
    }
    let n = gamma.n();
    let coef = sturm_coefficient(model.clone(), gamma);
    let sym = check_reflection_symmetry(&coef, n, gamma.tau(), 64, opts.symmetry_tol)?;
    if !sym.holds {
        return Err(Error::Precondition(format!(
            "the coefficient path fails the reflection symmetry: {sym:?}"
        )));
    }
    let path = linearized_path(model.clone(), gamma, opts.steps)?;
    let (full, _) = iterated_indices(&path, opts.k_max, &opts.crossing)?;
    let mus = mu_indices_with(&path, opts.k_max, &opts.crossing)?;
    let hk: Vec<usize> = (1..=opts.k_max.min(opts.hessian_k_max)).collect();
    let seq = SequenceOptions {
        n_modes: opts.n_modes,
        gate: opts.gate,
        ..Default::default()
    };
    let hess: Vec<(HessianReport, HessianReport, HessianReport)> = hk
        .par_iter()
        .map(|&k| {
            Ok((
                hessian_row(model.as_ref(), gamma, k, &seq, Parity::Even)?,
                hessian_row(model.as_ref(), gamma, k, &seq, Parity::Odd)?,
                hessian_row(model.as_ref(), gamma, k, &seq, Parity::Full)?,
            ))
        })
        .collect::<Result<_>>()?;
    let ni = n as i64;
    Ok((1..=opts.k_max)
        .map(|k| {
            let mu = mus[k - 1];
            let f = full[k - 1];
            let h = hess.get(k - 1);
            let checks = {
                let mu_sum = mu.mu1 + mu.mu2 == f.index + ni;
                let nu_sum = mu.nu1 + mu.nu2 == f.nullity;
                let even_index = h.map(|(e, _, _)| e.morse_index as i64 == mu.mu1);
                let even_nullity = h.map(|(e, _, _)| e.nullity == mu.nu1);
                let odd_index = h.map(|(_, o, _)| o.morse_index as i64 == mu.mu2 - ni);
                let odd_nullity = h.map(|(_, o, _)| o.nullity == mu.nu2);
                let additivity = h.map(|(e, o, a)| {
                    a.morse_index == e.morse_index + o.morse_index
                        && a.nullity == e.nullity + o.nullity
                });
                let odd_even_gap = (ni + (mu.mu2 - ni) - mu.mu1).abs() <= ni;
                let even_bound = mu.mu1 + mu.nu1 as i64 <= ni;
                let holds = mu_sum
                    && nu_sum
                    && [even_index, even_nullity, odd_index, odd_nullity, additivity]
                        .iter()
                        .all(|c| c.unwrap_or(true))
                    && odd_even_gap;
                SplitChecks {
                    mu_sum,
                    nu_sum,
                    even_index,
                    even_nullity,
                    odd_index,
                    odd_nullity,
                    additivity,
                    odd_even_gap,
                    even_bound,
                    holds,
                }
            };
            SplitRow {
                k,
                m_minus_even: h.map(|x| x.0.morse_index),
                m_zero_even: h.map(|x| x.0.nullity),
                m_minus_odd: h.map(|x| x.1.morse_index),
                m_zero_odd: h.map(|x| x.1.nullity),
                m_minus: h.map(|x| x.2.morse_index),
                m_zero: h.map(|x| x.2.nullity),
                mu1: mu.mu1,
                nu1: mu.nu1,
                mu2: mu.mu2,
                nu2: mu.nu2,
                i: f.index,
                nu: f.nullity,
                checks,
            }
        })
        .collect())
}

/// `B(t)` of a linearisation sampled on `[0, tau]`, for reports.
pub fn coefficient_samples(
    model: Arc<dyn Lagrangian>,
    gamma: &Loop,
    count: usize,
) -> Vec<DMatrix<f64>> {
    let coef = sturm_coefficient(model, gamma);
    (0..count)
        .map(|j| coef(gamma.tau() * j as f64 / count as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use nalgebra::dvector;

    use super::*;
    use crate::models::Mechanical;

    fn quick() -> SequenceOptions {
        SequenceOptions {
            k_set: vec![1, 2, 3, 4],
            n_modes: 16,
            ..Default::default()
        }
    }

    #[test]
    fn iterate_scales_action() {
        let m = Mechanical::pendulum(0.3);
        let mut l = Loop::straight(dvector![0.1], vec![1], 1.0, 4).unwrap();
        l.set_cos(1, dvector![0.05]);
        let a1 = iterate_orbit(&m, &l, 1).unwrap();
        let a3 = iterate_orbit(&m, &l, 3).unwrap();
        assert!((a3.action - 3.0 * a1.action).abs() < 1e-10);
        assert_eq!(a3.orbit.winding(), &[3]);
    }

    #[test]
    fn elliptic_constant_orbit_routes_agree() {
        let m: Arc<dyn Lagrangian> = Arc::new(Mechanical::pendulum(1.0));
        let l = Loop::constant(dvector![0.0], 1.3, 16).unwrap();
        let seq = index_sequence(m, &l, &quick()).unwrap();
        let expected = [3, 5, 7, 11];
        for (r, e) in seq.rows.iter().zip(expected) {
            assert_eq!(r.i, Some(e));
            assert_eq!(r.routes_agree, Some(true), "{r:?}");
            assert_eq!(r.gate_stable, Some(true));
        }
        assert!(verify_iteration_inequalities(&seq).passes);
        assert_eq!(detect_stable_subsequence(&seq, &[1, 2, 4]), vec![1]);
    }

    #[test]
    fn hyperbolic_orbit_is_index_stable() {
        let m: Arc<dyn Lagrangian> = Arc::new(Mechanical::pendulum(1.0));
        let l = Loop::constant(dvector![0.5], 1.0, 16).unwrap();
        let seq = index_sequence(m, &l, &quick()).unwrap();
        assert_eq!(
            detect_stable_subsequence(&seq, &[1, 2, 3, 4]),
            vec![1, 2, 3, 4]
        );
    }

    #[test]
    fn corrupted_row_is_flagged() {
        let m: Arc<dyn Lagrangian> = Arc::new(Mechanical::pendulum(1.0));
        let l = Loop::constant(dvector![0.0], 1.3, 16).unwrap();
        let mut seq = index_sequence(
            m,
            &l,
            &SequenceOptions {
                hessian: false,
                ..quick()
            },
        )
        .unwrap();
        seq.rows[3].i = Some(40);
        assert!(!verify_iteration_inequalities(&seq).passes);
        let mut csv = Vec::new();
        seq.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(
            "k,m_minus,m_zero,i,nu,mean_lo,mean_hi,verdict_lower,verdict_upper\n1,,,3,0,"
        ));
    }

    #[test]
    fn pendulum_even_split() {
        let m: Arc<dyn Lagrangian> = Arc::new(Mechanical::pendulum(1.0));
        let l = Loop::constant(dvector![0.0], 1.3, 8).unwrap();
        let opts = SplitOptions {
            k_max: 4,
            n_modes: 16,
            ..Default::default()
        };
        for r in symmetric_split_sequence(m, &l, &opts).unwrap() {
            assert!(r.checks.holds, "{r:?}");
        }
    }
}
