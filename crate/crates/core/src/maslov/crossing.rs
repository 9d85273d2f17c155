//! Crossing-form counting: start term, signatures of interior crossings and
//! the endpoint term, following the Cappell-Lee-Miller normalisation.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::lagrangian::{GridPos, MovingLagrangian, Setting};
use super::winding::{levels, WindingOptions};
use crate::error::{Error, Result};
use crate::linalg::sym_eigenvalues;
use crate::symplectic::{integrate_fundamental, Coefficient, IntegrateOptions, SymplecticPath};

#[derive(Clone, Debug)]
pub struct CrossingOptions {
    /// Singular-value threshold on the frame coordinates that defines an intersection.
    pub tol_rank: f64,
    /// Relative threshold under which a crossing-form eigenvalue counts as zero.
    pub tol_form: f64,
    /// Crossings closer than `snap * tau` to an end are identified with it.
    pub snap: f64,
    /// Perturbations `B - eps I` tried when some crossing is not regular.
    pub eps_schedule: Vec<f64>,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        CrossingOptions {
            tol_rank: 1e-7,
            tol_form: 1e-9,
            snap: 1e-6,
            eps_schedule: vec![1e-3, 1e-4, 1e-5, 1e-6],
        }
    }
}

/// CLM-normalised intersection count and nullity at one end of the path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EndCount {
    pub count: i64,
    pub nullity: usize,
}

pub(crate) enum Sweep {
    Done(Vec<EndCount>),
    NonRegular,
}

struct Record {
    t: f64,
    end: Option<usize>,
    negative: i64,
    positive: i64,
    signed: bool,
}

fn golden_min(
    f: &dyn Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

fn form_signs(eigs: &[f64], tol: f64) -> Option<(i64, i64)> {
    let mut neg = 0;
    let mut pos = 0;
    for &l in eigs {
        if l.abs() <= tol {
            return None;
        }
        if l < 0.0 {
            neg += 1;
        } else {
            pos += 1;
        }
    }
    Some((neg, pos))
}

/// Counts for every requested end in one sweep; `tol_rank` is the intersection threshold.
pub(crate) fn sweep(
    ml: &MovingLagrangian<'_>,
    ends: &[GridPos],
    tol_rank: f64,
    opts: &CrossingOptions,
) -> Result<Sweep> {
    let last = *ends.iter().max_by_key(|p| (p.period, p.step)).unwrap();
    let pts = ml.grid_until(last);
    let samples = ml.sample(&pts);
    let tau = ml.tau();
    let snap = opts.snap * tau;
    let pos_of = |p: &GridPos| pts.iter().position(|q| q == p).unwrap();
    let end_pos: Vec<usize> = ends.iter().map(pos_of).collect();

    let nullities: Vec<usize> = end_pos
        .iter()
        .map(|&k| samples[k].1.iter().filter(|&&s| s < opts.tol_rank).count())
        .collect();

    // start term
    let f0 = &samples[0].0;
    let ker0 = ml.kernel(f0, tol_rank);
    let g0 = ml.crossing_form(0.0, f0, &ker0)?;
    let (_, start_pos) = match form_signs(
        &sym_eigenvalues(&g0),
        opts.tol_form * ml.coefficient_scale(0.0),
    ) {
        Some(s) => s,
        None => return Ok(Sweep::NonRegular),
    };

    let mut records: Vec<Record> = Vec::new();
    let degenerate_end: Vec<bool> = end_pos
        .iter()
        .map(|&k| samples[k].1[0] < tol_rank)
        .collect();
    for (e, &k) in end_pos.iter().enumerate() {
        if degenerate_end[e] && !records.iter().any(|r| r.end.map(|x| end_pos[x]) == Some(k)) {
            records.push(Record {
                t: ml.time(pts[k]),
                end: Some(e),
                negative: 0,
                positive: 0,
                signed: false,
            });
        }
    }
    let near_degenerate_end = |t: f64| {
        end_pos
            .iter()
            .zip(&degenerate_end)
            .any(|(&k, &d)| d && (t - ml.time(pts[k])).abs() <= snap)
    };

    let sigma = |t: f64| -> Result<f64> {
        let f = ml.frame_at(t)?;
        let (_, y) = ml.coords(&f);
        Ok(y.singular_values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min))
    };
    // Local minima of sigma on `sub` subsamples of [a, b], refined by golden section.
    let search = |a: f64, b: f64, sub: usize, records: &mut Vec<Record>| -> Result<()> {
        let ts: Vec<f64> = (0..=sub)
            .map(|i| a + (b - a) * i as f64 / sub as f64)
            .collect();
        let vals: Vec<f64> = ts.iter().map(|&t| sigma(t)).collect::<Result<_>>()?;
        for i in 0..=sub {
            let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
            let right = if i < sub { vals[i + 1] } else { f64::INFINITY };
            if !(vals[i] <= left && vals[i] <= right) {
                continue;
            }
            let lo = ts[i.saturating_sub(1)];
            let hi = ts[(i + 1).min(sub)];
            let (t_star, s_star) = golden_min(&sigma, lo, hi, 1e-11 * tau)?;
            if s_star >= tol_rank || t_star <= snap || near_degenerate_end(t_star) {
                continue;
            }
            if records.iter().any(|r| (r.t - t_star).abs() <= snap) {
                continue;
            }
            records.push(Record {
                t: t_star,
                end: None,
                negative: 0,
                positive: 0,
                signed: false,
            });
        }
        Ok(())
    };
    // Crossing-form signatures of the records not yet signed; false when one is degenerate.
    let sign = |records: &mut Vec<Record>| -> Result<bool> {
        for r in records.iter_mut().filter(|r| !r.signed) {
            let f = match r.end {
                Some(e) => samples[end_pos[e]].0.clone(),
                None => ml.frame_at(r.t)?,
            };
            let ker = ml.kernel(&f, tol_rank);
            if ker.is_empty() {
                return Err(Error::Numerical(format!(
                    "empty kernel at crossing t = {}",
                    r.t
                )));
            }
            let g = ml.crossing_form(r.t, &f, &ker)?;
            match form_signs(
                &sym_eigenvalues(&g),
                opts.tol_form * ml.coefficient_scale(r.t),
            ) {
                Some((neg, pos)) => {
                    r.negative = neg;
                    r.positive = pos;
                    r.signed = true;
                }
                None => return Ok(false),
            }
        }
        Ok(true)
    };
    let net = |records: &[Record], a: f64, b: f64| -> i64 {
        records
            .iter()
            .filter(|r| r.end.is_none() && r.t > a && r.t <= b)
            .map(|r| r.positive - r.negative)
            .sum()
    };

    // Candidate windows: a dip of any singular value (branches of the sorted
    // values exchange order, so the smallest alone can hide a crossing), and
    // any step over which the unitary level G jumps.
    const SUB: usize = 16;
    // Relative depth a dip needs; a saturated hyperbolic frame wobbles at rounding level.
    const DIP: f64 = 1e-9;
    let dims = samples[0].1.len();
    let times: Vec<f64> = pts.iter().map(|&p| ml.time(p)).collect();
    let frames: Vec<&DMatrix<f64>> = samples.iter().map(|(f, _)| f).collect();
    let wopts = WindingOptions::default();
    let g = levels(ml, &times, &frames, &wopts)?;
    for p in 1..pts.len() {
        if (g[p] - g[p - 1]).abs() > 0.5 {
            search(times[p - 1], times[p], SUB, &mut records)?;
        }
        if p + 1 == pts.len() {
            continue;
        }
        let dip = (0..dims).any(|i| {
            let (a, b, c) = (samples[p - 1].1[i], samples[p].1[i], samples[p + 1].1[i]);
            b < 0.25 && b <= a * (1.0 - DIP) && b <= c * (1.0 - DIP)
        });
        if dip && !(near_degenerate_end(times[p]) && samples[p].1[0] < tol_rank) {
            search(times[p - 1], times[p + 1], SUB, &mut records)?;
        }
    }
    if !sign(&mut records)? {
        return Ok(Sweep::NonRegular);
    }

    // Over each step G jumps by the net signature of the crossings inside it.
    // A shortfall means crossings closer together than the subsamples, so the
    // step is refined until they separate.
    const REFINE: usize = 32;
    const MAX_DEPTH: usize = 4;
    let mut stack: Vec<(f64, f64, i64, usize)> = Vec::new();
    for p in 1..pts.len() {
        let (a, b) = (times[p - 1], times[p]);
        if a <= snap || near_degenerate_end(a) || near_degenerate_end(b) {
            continue;
        }
        let jump = (g[p] - g[p - 1]).round() as i64;
        if jump != net(&records, a, b) {
            stack.push((a, b, jump, 0));
        }
    }
    while let Some((a, b, jump, depth)) = stack.pop() {
        if depth >= MAX_DEPTH || jump == net(&records, a, b) {
            continue;
        }
        let ts: Vec<f64> = (0..=REFINE)
            .map(|i| a + (b - a) * i as f64 / REFINE as f64)
            .collect();
        let fs: Vec<DMatrix<f64>> = ts.iter().map(|&t| ml.frame_at(t)).collect::<Result<_>>()?;
        let refs: Vec<&DMatrix<f64>> = fs.iter().collect();
        let gs = levels(ml, &ts, &refs, &wopts)?;
        for i in 1..=REFINE {
            let (sa, sb) = (ts[i - 1], ts[i]);
            let sj = (gs[i] - gs[i - 1]).round() as i64;
            if sj == net(&records, sa, sb) {
                continue;
            }
            search(sa, sb, SUB, &mut records)?;
            if !sign(&mut records)? {
                return Ok(Sweep::NonRegular);
            }
            if sj != net(&records, sa, sb) {
                stack.push((sa, sb, sj, depth + 1));
            }
        }
    }

    let mut out = Vec::with_capacity(ends.len());
    for (e, &k) in end_pos.iter().enumerate() {
        let te = ml.time(pts[k]);
        let mut count = start_pos;
        for r in &records {
            let at_this_end = r.end.map(|x| end_pos[x] == k).unwrap_or(false);
            if at_this_end {
                count -= r.negative;
            } else if r.t < te {
                count += r.positive - r.negative;
            }
        }
        out.push(EndCount {
            count,
            nullity: nullities[e],
        });
    }
    Ok(Sweep::Done(out))
}

/// Base path re-integrated on the same grid with coefficient `B - eps I`.
pub(crate) fn perturbed_base(base: &SymplecticPath<f64>, eps: f64) -> Result<SymplecticPath<f64>> {
    let coef = base
        .coefficient()
        .ok_or_else(|| Error::Precondition("perturbation needs the path coefficient".into()))?
        .clone();
    let dim = 2 * base.n();
    let shifted: Coefficient<f64> =
        Arc::new(move |t: f64| coef(t) - DMatrix::<f64>::identity(dim, dim) * eps);
    let opts = IntegrateOptions {
        steps: Some(base.times().len() - 1),
        ..Default::default()
    };
    integrate_fundamental(shifted, base.n(), 0.0, base.end_time(), &opts)
}

/// Which route produced a count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Realisation {
    Regular,
    Perturbed { eps: f64 },
}

/// Counts at every end, falling back to the `B - eps I` limit when some
/// crossing form is degenerate. Nullities always come from the unperturbed path.
pub(crate) fn counts(
    base: &SymplecticPath<f64>,
    setting: Setting,
    periods: usize,
    ends: &[GridPos],
    opts: &CrossingOptions,
) -> Result<(Vec<EndCount>, Realisation)> {
    let ml = MovingLagrangian::new(base, setting, periods)?;
    let plain = match sweep(&ml, ends, opts.tol_rank, opts)? {
        Sweep::Done(v) => return Ok((v, Realisation::Regular)),
        Sweep::NonRegular => {
            // nullities only
            let pts: Vec<GridPos> = ends.to_vec();
            ml.sample(&pts)
                .iter()
                .map(|(_, sv)| sv.iter().filter(|&&s| s < opts.tol_rank).count())
                .collect::<Vec<_>>()
        }
    };
    let tmin = ends
        .iter()
        .map(|p| ml.time(*p))
        .fold(f64::INFINITY, f64::min);
    let mut prev: Option<Vec<i64>> = None;
    for &eps in &opts.eps_schedule {
        let pb = perturbed_base(base, eps)?;
        let pml = MovingLagrangian::new(&pb, setting, periods)?;
        let tol = (1e-3 * eps * tmin).min(opts.tol_rank);
        let got = match sweep(&pml, ends, tol, opts)? {
            Sweep::Done(v) => v.iter().map(|c| c.count).collect::<Vec<_>>(),
            Sweep::NonRegular => {
                prev = None;
                continue;
            }
        };
        if prev.as_ref() == Some(&got) {
            let out = got
                .iter()
                .zip(&plain)
                .map(|(&count, &nullity)| EndCount { count, nullity })
                .collect();
            return Ok((out, Realisation::Perturbed { eps }));
        }
        prev = Some(got);
    }
    Err(Error::Convergence(
        "perturbed crossing counts did not stabilise over the eps schedule".into(),
    ))
}
