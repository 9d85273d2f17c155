//! Second variation of the action on a truncated Fourier space and its inertia.
//!
//! The Hessian is assembled exactly from the discrete Fourier coefficients of
//! `P`, `Q`, `R` sampled along the loop, which is the same as trapezoidal
//! quadrature of the second variation. Basis functions are scaled to unit
//! `W^{1,2}` norm; this congruence leaves the counts unchanged.
//!
//! Large problems are reduced: the high-frequency block is positive definite,
//! so it is eliminated by a banded `LDL^T` sweep and the inertia is read off
//! the dense Schur complement on the low modes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::action::check_compatible;
use super::Loop;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, Inertia};
use crate::models::Lagrangian;
use crate::spectral::analyze;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Full,
    /// Constant and cosine modes.
    Even,
    /// Sine modes.
    Odd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Dense,
    Reduced,
}

#[derive(Clone, Debug)]
pub struct HessianOptions {
    /// Modes of the variation space; defaults to the loop's own truncation.
    pub n_modes: Option<usize>,
    /// Samples per mode along the loop.
    pub oversample: usize,
    /// Zero threshold relative to the largest diagonal entry.
    pub tol_eig: f64,
    /// Largest dimension handled by a full eigendecomposition.
    pub dense_limit: usize,
    /// Recompute with doubled truncation and require equal counts.
    pub gate: bool,
    pub parity: Parity,
    pub route: Option<Route>,
}

impl Default for HessianOptions {
    fn default() -> Self {
        HessianOptions {
            n_modes: None,
            oversample: 8,
            tol_eig: 1e-7,
            dense_limit: 480,
            gate: true,
            parity: Parity::Full,
            route: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub n_modes: usize,
    pub morse_index: usize,
    pub nullity: usize,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    pub morse_index: usize,
    pub nullity: usize,
    pub n_modes: usize,
    pub dimension: usize,
    pub route: Route,
    /// Highest coefficient frequency kept in the assembly.
    pub bandwidth: usize,
    /// Modes kept in the dense block (all of them on the dense route).
    pub low_modes: usize,
    pub tol: f64,
    /// Some eigenvalue lies within a decade of the zero threshold.
    pub ambiguous: bool,
    /// Full spectrum on the dense route, Schur-complement spectrum otherwise.
    pub eigenvalues: Vec<f64>,
    pub gate: Option<GateReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    C,
    S,
}

#[derive(Clone, Copy, Debug)]
struct Trig {
    coef: f64,
    kind: Kind,
    k: usize,
}

#[derive(Clone, Copy, Debug)]
struct BasisFn {
    k: usize,
    kind: Kind,
    comp: usize,
}

struct Spectrum {
    cc: Vec<f64>,
    cs: Vec<f64>,
}

struct Assembly {
    n: usize,
    tau: f64,
    p: Vec<Spectrum>,
    q: Vec<Spectrum>,
    r: Vec<Spectrum>,
    basis: Vec<BasisFn>,
    /// `1 / sqrt(W^{1,2} norm^2)` of each basis function.
    scale: Vec<f64>,
    bandwidth: usize,
    p_min: f64,
    q_max: f64,
    r_max: f64,
}

fn kinds(k: usize, parity: Parity) -> &'static [Kind] {
    match (parity, k) {
        (Parity::Full, 0) | (Parity::Even, _) => &[Kind::C],
        (Parity::Full, _) => &[Kind::C, Kind::S],
        (Parity::Odd, 0) => &[],
        (Parity::Odd, _) => &[Kind::S],
    }
}

/// Basis ordered by decreasing frequency.
fn basis(n: usize, n_modes: usize, parity: Parity) -> Vec<BasisFn> {
    let mut out = Vec::new();
    for k in (0..=n_modes).rev() {
        for &kind in kinds(k, parity) {
            for comp in 0..n {
                out.push(BasisFn { k, kind, comp });
            }
        }
    }
    out
}

impl Assembly {
    fn new(
        model: &dyn Lagrangian,
        gamma: &Loop,
        n_modes: usize,
        parity: Parity,
        oversample: usize,
    ) -> Result<Self> {
        check_compatible(model, gamma)?;
        let n = gamma.n();
        let n_t = (oversample.max(5) * n_modes.max(gamma.n_modes()).max(4)).max(64);
        let s = gamma.samples(n_t)?;
        let jets: Vec<_> = (0..n_t)
            .into_par_iter()
            .map(|j| model.jet(s.times[j], &s.q[j], &s.v[j]))
            .collect();
        let mut p_min = f64::INFINITY;
        let (mut q_max, mut r_max): (f64, f64) = (0.0, 0.0);
        for j in &jets {
            p_min = p_min.min(sym_eigenvalues(&j.dvv)[0]);
            q_max = q_max.max(j.dvq.norm());
            r_max = r_max.max(j.dqq.norm());
        }
        if !(p_min > 0.0) {
            return Err(Error::Precondition(
                "L_vv is not positive definite along the loop".into(),
            ));
        }
        let spec = |f: &dyn Fn(usize) -> f64| {
            let x: Vec<f64> = (0..n_t).map(f).collect();
            let (cc, cs) = analyze(&x);
            Spectrum { cc, cs }
        };
        let mut p = Vec::with_capacity(n * n);
        let mut q = Vec::with_capacity(n * n);
        let mut r = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                p.push(spec(&|t| jets[t].dvv[(i, j)]));
                q.push(spec(&|t| jets[t].dvq[(i, j)]));
                r.push(spec(&|t| jets[t].dqq[(i, j)]));
            }
        }
        let top = p
            .iter()
            .chain(&q)
            .chain(&r)
            .map(|s| s.cc[0].abs())
            .fold(0.0, f64::max)
            .max(p_min);
        // Harmonics at the FFT roundoff level are dropped; long grids put
        // their noise above 1e-15 of the mean.
        let mut bandwidth = 0;
        for m in 1..=(n_t / 2) {
            let big = p
                .iter()
                .chain(&q)
                .chain(&r)
                .any(|s| s.cc[m].abs().max(s.cs[m].abs()) > 1e-12 * top);
            if big {
                bandwidth = m;
            }
        }
        let tau = gamma.tau();
        let basis = basis(n, n_modes, parity);
        let scale = basis
            .iter()
            .map(|b| {
                let w = 2.0 * PI * b.k as f64 / tau;
                let l2 = if b.k == 0 { tau } else { 0.5 * tau };
                1.0 / (l2 * (1.0 + w * w)).sqrt()
            })
            .collect();
        Ok(Assembly {
            n,
            tau,
            p,
            q,
            r,
            basis,
            scale,
            bandwidth,
            p_min,
            q_max,
            r_max,
        })
    }

    fn ic(&self, s: &Spectrum, m: i64) -> f64 {
        self.tau * s.cc[m.unsigned_abs() as usize]
    }

    fn is(&self, s: &Spectrum, m: i64) -> f64 {
        if m >= 0 {
            self.tau * s.cs[m as usize]
        } else {
            -self.tau * s.cs[(-m) as usize]
        }
    }

    fn prod(&self, s: &Spectrum, x: Trig, y: Trig) -> f64 {
        if x.coef == 0.0 || y.coef == 0.0 {
            return 0.0;
        }
        let (a, b) = (x.k as i64, y.k as i64);
        let v = match (x.kind, y.kind) {
            (Kind::C, Kind::C) => 0.5 * (self.ic(s, a - b) + self.ic(s, a + b)),
            (Kind::S, Kind::S) => 0.5 * (self.ic(s, a - b) - self.ic(s, a + b)),
            (Kind::S, Kind::C) => 0.5 * (self.is(s, a + b) + self.is(s, a - b)),
            (Kind::C, Kind::S) => 0.5 * (self.is(s, a + b) - self.is(s, a - b)),
        };
        x.coef * y.coef * v
    }

    fn trig(&self, b: BasisFn) -> (Trig, Trig) {
        let w = 2.0 * PI * b.k as f64 / self.tau;
        let f = Trig {
            coef: 1.0,
            kind: b.kind,
            k: b.k,
        };
        let df = match b.kind {
            Kind::C => Trig {
                coef: -w,
                kind: Kind::S,
                k: b.k,
            },
            Kind::S => Trig {
                coef: w,
                kind: Kind::C,
                k: b.k,
            },
        };
        (f, df)
    }

    /// Unscaled second variation on basis functions `a`, `b`.
    fn raw(&self, a: usize, b: usize) -> f64 {
        let (ba, bb) = (self.basis[a], self.basis[b]);
        let (i, j) = (ba.comp, bb.comp);
        let n = self.n;
        let (fa, dfa) = self.trig(ba);
        let (fb, dfb) = self.trig(bb);
        self.prod(&self.p[j * n + i], dfa, dfb)
            + self.prod(&self.q[j * n + i], fa, dfb)
            + self.prod(&self.q[i * n + j], dfa, fb)
            + self.prod(&self.r[j * n + i], fa, fb)
    }

    fn entry(&self, a: usize, b: usize) -> f64 {
        self.raw(a, b) * self.scale[a] * self.scale[b]
    }

    fn dense(&self) -> DMatrix<f64> {
        let m = self.basis.len();
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|a| (0..=a).map(|b| self.entry(a, b)).collect())
            .collect();
        let mut h = DMatrix::zeros(m, m);
        for (a, row) in rows.iter().enumerate() {
            for (b, &x) in row.iter().enumerate() {
                h[(a, b)] = x;
                h[(b, a)] = x;
            }
        }
        h
    }

    /// Smallest mode index above which the high block is provably coercive.
    fn coercive_mode(&self) -> usize {
        let mut k = 0usize;
        loop {
            let w = 2.0 * PI * k as f64 / self.tau;
            if self.p_min * w * w - 2.0 * self.q_max * w - self.r_max > 0.0 {
                return k;
            }
            k += 1;
        }
    }
}

/// Lower band of half-width `w` plus a dense trailing block.
struct BandedTail {
    w: usize,
    m_h: usize,
    band: Vec<f64>,
    tail: DMatrix<f64>,
}

impl BandedTail {
    fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if j >= self.m_h {
            self.tail[(i - self.m_h, j - self.m_h)]
        } else if i - j <= self.w {
            self.band[i * (self.w + 1) + (i - j)]
        } else {
            0.0
        }
    }

    fn sub(&mut self, i: usize, j: usize, x: f64) {
        if j >= self.m_h {
            self.tail[(i - self.m_h, j - self.m_h)] -= x;
            if i != j {
                self.tail[(j - self.m_h, i - self.m_h)] -= x;
            }
        } else {
            self.band[i * (self.w + 1) + (i - j)] -= x;
        }
    }
}

fn reduced_inertia(
    asm: &Assembly,
    low_modes: usize,
    tol_rel: f64,
) -> Option<(Vec<f64>, usize, f64)> {
    let m = asm.basis.len();
    let m_h = asm.basis.iter().take_while(|b| b.k > low_modes).count();
    let per_mode = asm
        .basis
        .iter()
        .filter(|b| b.k == asm.basis[0].k)
        .count()
        .max(1);
    let w = per_mode * (asm.bandwidth + 1);
    let mut bt = BandedTail {
        w,
        m_h,
        band: vec![0.0; m * (w + 1)],
        tail: DMatrix::zeros(m - m_h, m - m_h),
    };
    let band_rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..=w)
                .map(|d| {
                    if d <= i && i - d < m_h {
                        asm.entry(i, i - d)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    for (i, row) in band_rows.into_iter().enumerate() {
        bt.band[i * (w + 1)..(i + 1) * (w + 1)].copy_from_slice(&row);
    }
    for i in m_h..m {
        for j in m_h..=i {
            let x = asm.entry(i, j);
            bt.tail[(i - m_h, j - m_h)] = x;
            bt.tail[(j - m_h, i - m_h)] = x;
        }
    }
    let diag_max = (0..m).map(|i| bt.get(i, i).abs()).fold(0.0, f64::max);
    for j in 0..m_h {
        let d = bt.get(j, j);
        if !(d > 1e-12 * diag_max) {
            return None;
        }
        let last = (j + w).min(m - 1);
        let l: Vec<f64> = (j + 1..=last).map(|i| bt.get(i, j) / d).collect();
        for (ii, i) in (j + 1..=last).enumerate() {
            if l[ii] == 0.0 {
                continue;
            }
            for (kk, k) in (j + 1..=i).enumerate() {
                let x = l[ii] * l[kk] * d;
                if x != 0.0 {
                    bt.sub(i, k, x);
                }
            }
        }
    }
    let ev = if bt.tail.nrows() > 0 {
        sym_eigenvalues(&bt.tail)
    } else {
        vec![]
    };
    Some((ev, m_h, tol_rel * diag_max))
}

fn counts(ev: &[f64], tol: f64) -> (Inertia, bool) {
    let inertia = Inertia::of_eigenvalues(ev.iter().copied(), tol);
    let ambiguous = ev
        .iter()
        .any(|l| l.abs() > 0.1 * tol && l.abs() < 10.0 * tol);
    (inertia, ambiguous)
}

fn inertia_once(
    model: &dyn Lagrangian,
    gamma: &Loop,
    n_modes: usize,
    opts: &HessianOptions,
) -> Result<HessianReport> {
    let asm = Assembly::new(model, gamma, n_modes, opts.parity, opts.oversample)?;
    let dim = asm.basis.len();
    let route = opts.route.unwrap_or(if dim <= opts.dense_limit {
        Route::Dense
    } else {
        Route::Reduced
    });
    if route == Route::Reduced {
        let mut low = asm.bandwidth.max(asm.coercive_mode()).min(n_modes);
        loop {
            if low >= n_modes {
                break;
            }
            if let Some((ev, m_h, tol)) = reduced_inertia(&asm, low, opts.tol_eig) {
                let (inertia, ambiguous) = counts(&ev, tol);
                debug_assert_eq!(
                    inertia.positive + inertia.negative + inertia.zero + m_h,
                    dim
                );
                return Ok(HessianReport {
                    morse_index: inertia.negative,
                    nullity: inertia.zero,
                    n_modes,
                    dimension: dim,
                    route,
                    bandwidth: asm.bandwidth,
                    low_modes: low,
                    tol,
                    ambiguous,
                    eigenvalues: ev,
                    gate: None,
                });
            }
            low = (2 * low.max(1)).min(n_modes);
        }
    }
    let h = asm.dense();
    let diag_max = h.diagonal().amax();
    let tol = opts.tol_eig * diag_max;
    let ev = sym_eigenvalues(&h);
    let (inertia, ambiguous) = counts(&ev, tol);
    Ok(HessianReport {
        morse_index: inertia.negative,
        nullity: inertia.zero,
        n_modes,
        dimension: dim,
        route: Route::Dense,
        bandwidth: asm.bandwidth,
        low_modes: n_modes,
        tol,
        ambiguous,
        eigenvalues: ev,
        gate: None,
    })
}

/// Morse index and nullity of the action at `gamma`.
pub fn hessian_inertia(
    model: &dyn Lagrangian,
    gamma: &Loop,
    opts: &HessianOptions,
) -> Result<HessianReport> {
    let n_modes = opts.n_modes.unwrap_or(gamma.n_modes());
    if n_modes == 0 {
        return Err(Error::Input(
            "the variation space needs at least one mode".into(),
        ));
    }
    let mut rep = inertia_once(model, gamma, n_modes, opts)?;
    if opts.gate {
        let g = inertia_once(model, gamma, 2 * n_modes, opts)?;
        rep.gate = Some(GateReport {
            n_modes: 2 * n_modes,
            morse_index: g.morse_index,
            nullity: g.nullity,
            stable: g.morse_index == rep.morse_index && g.nullity == rep.nullity,
        });
    }
    Ok(rep)
}

/// Dense `W^{1,2}`-scaled Hessian together with the frequency and kind of each
/// basis function (`true` for sine).
pub fn scaled_hessian(
    model: &dyn Lagrangian,
    gamma: &Loop,
    n_modes: usize,
    parity: Parity,
) -> Result<(DMatrix<f64>, Vec<(usize, bool, usize)>)> {
    let asm = Assembly::new(model, gamma, n_modes, parity, 8)?;
    let labels = asm
        .basis
        .iter()
        .map(|b| (b.k, b.kind == Kind::S, b.comp))
        .collect();
    Ok((asm.dense(), labels))
}

/// Eigenvectors of the kernel of the Hessian, expressed as loops of variations
/// (raw Fourier coefficients, zero winding).
pub fn kernel_variations(
    model: &dyn Lagrangian,
    gamma: &Loop,
    n_modes: usize,
    tol_eig: f64,
) -> Result<Vec<Loop>> {
    let asm = Assembly::new(model, gamma, n_modes, Parity::Full, 8)?;
    let h = asm.dense();
    let tol = tol_eig * h.diagonal().amax();
    let eig = SymmetricEigen::new(h);
    let mut out = Vec::new();
    for (idx, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > tol {
            continue;
        }
        let y = eig.eigenvectors.column(idx);
        let mut var = Loop::new(gamma.n(), gamma.tau(), vec![0; gamma.n()], n_modes)?;
        let mut cos = vec![DVector::zeros(gamma.n()); n_modes + 1];
        let mut sin = vec![DVector::zeros(gamma.n()); n_modes + 1];
        for (a, b) in asm.basis.iter().enumerate() {
            let c = y[a] * asm.scale[a];
            match b.kind {
                Kind::C => cos[b.k][b.comp] = c,
                Kind::S => sin[b.k][b.comp] = c,
            }
        }
        for k in 0..=n_modes {
            var.set_cos(k, cos[k].clone());
            var.set_sin(k, sin[k].clone());
        }
        out.push(var);
    }
    Ok(out)
}

/// Scaled Hessian and gradient scaling for Newton steps in raw coordinates:
/// returns `H~ = D H D`, `D`, and the raw-vector index of each basis function.
pub(crate) fn newton_system(
    model: &dyn Lagrangian,
    gamma: &Loop,
    parity: Parity,
) -> Result<(DMatrix<f64>, Vec<f64>, Vec<usize>)> {
    let n = gamma.n();
    let asm = Assembly::new(model, gamma, gamma.n_modes(), parity, 8)?;
    let idx = asm
        .basis
        .iter()
        .map(|b| match (b.k, b.kind) {
            (0, _) => b.comp,
            (k, Kind::C) => n * (2 * k - 1) + b.comp,
            (k, Kind::S) => n * (2 * k) + b.comp,
        })
        .collect();
    Ok((asm.dense(), asm.scale.clone(), idx))
}
