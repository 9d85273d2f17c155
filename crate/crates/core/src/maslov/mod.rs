//! Maslov-type indices of symplectic paths.
//!
//! `i` and `nu` of a path `Psi` on `[0, tau]` are read off the graph of `Psi`
//! against the diagonal; `mu_1`, `mu_2` off `Psi(t) U_k` against `U_k` on
//! `[0, tau / 2]`. Two independent routes are provided: crossing forms
//! ([`cz_index`]) and the winding of `det U` in the unitary model
//! ([`clm_graph_index`]).

mod assumption;
mod crossing;
pub mod lagrangian;
mod winding;

use serde::{Deserialize, Serialize};

pub use assumption::{check_reflection_symmetry, SymmetryReport};
pub use crossing::{CrossingOptions, Realisation};
pub use lagrangian::{Reference, Setting};
pub use winding::{eigen_angles, WindingOptions};

use crate::error::{Error, Result};
use crate::linalg::svd_ascending;
use crate::symplectic::SymplecticPath;
use lagrangian::{full_period_end, half_period_end, GridPos, MovingLagrangian};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexPair {
    pub index: i64,
    pub nullity: usize,
}

fn full_ends(path: &SymplecticPath<f64>, m_max: usize) -> Vec<GridPos> {
    let k = path.times().len() - 1;
    (1..=m_max).map(|m| full_period_end(m, k)).collect()
}

fn half_ends(path: &SymplecticPath<f64>, m_max: usize) -> Result<Vec<GridPos>> {
    let k = path.times().len() - 1;
    let tau = path.end_time();
    if k % 2 != 0 || (path.times()[k / 2] - 0.5 * tau).abs() > 1e-12 * tau.max(1.0) {
        return Err(Error::Precondition(
            "the path grid must contain tau / 2 (use an even step count)".into(),
        ));
    }
    Ok((1..=m_max).map(|m| half_period_end(m, k)).collect())
}

fn check_m(m_max: usize) -> Result<()> {
    if m_max == 0 {
        return Err(Error::Input("iteration count must be positive".into()));
    }
    Ok(())
}

/// `(i, nu)` of `Psi` on `[0, tau]` by crossing forms.
pub fn cz_index(path: &SymplecticPath<f64>) -> Result<IndexPair> {
    Ok(iterated_indices(path, 1, &CrossingOptions::default())?.0[0])
}

/// `(i_m, nu_m)` of the `m`-fold iterates for `m = 1..=m_max` in one sweep.
pub fn iterated_indices(
    path: &SymplecticPath<f64>,
    m_max: usize,
    opts: &CrossingOptions,
) -> Result<(Vec<IndexPair>, Realisation)> {
    check_m(m_max)?;
    let n = path.n() as i64;
    let (c, how) = crossing::counts(path, Setting::Graph, m_max, &full_ends(path, m_max), opts)?;
    Ok((
        c.iter()
            .map(|e| IndexPair {
                index: e.count - n,
                nullity: e.nullity,
            })
            .collect(),
        how,
    ))
}

/// `i` of `Psi` on `[0, tau]` through the unitary winding route.
pub fn clm_graph_index(path: &SymplecticPath<f64>) -> Result<i64> {
    Ok(clm_iterated_indices(path, 1)?[0])
}

/// `i_m` for `m = 1..=m_max` through the unitary winding route.
pub fn clm_iterated_indices(path: &SymplecticPath<f64>, m_max: usize) -> Result<Vec<i64>> {
    check_m(m_max)?;
    let ml = MovingLagrangian::new(path, Setting::Graph, m_max)?;
    let n = path.n() as i64;
    Ok(
        winding::counts(&ml, &full_ends(path, m_max), &WindingOptions::default())?
            .into_iter()
            .map(|c| c - n)
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanIndex {
    /// `i_M / M` for the largest iterate.
    pub estimate: f64,
    /// Bracket `[(i_M - n + nu_M) / M, (i_M + n) / M]` from the largest iterate.
    pub lower: f64,
    pub upper: f64,
    /// Intersection of the brackets over all `m <= M`.
    pub converged_lower: f64,
    pub converged_upper: f64,
    pub indices: Vec<IndexPair>,
}

pub fn bracket(pair: IndexPair, m: usize, n: usize) -> (f64, f64) {
    let (i, nu, n, m) = (pair.index as f64, pair.nullity as f64, n as f64, m as f64);
    ((i - n + nu) / m, (i + n) / m)
}

/// Mean index estimate with a rigorous bracket.
pub fn mean_index(path: &SymplecticPath<f64>, m_max: usize) -> Result<MeanIndex> {
    let (indices, _) = iterated_indices(path, m_max, &CrossingOptions::default())?;
    Ok(mean_from_indices(indices, path.n()))
}

pub fn mean_from_indices(indices: Vec<IndexPair>, n: usize) -> MeanIndex {
    let m_max = indices.len();
    let (lower, upper) = bracket(indices[m_max - 1], m_max, n);
    let (mut cl, mut cu) = (f64::NEG_INFINITY, f64::INFINITY);
    for (k, p) in indices.iter().enumerate() {
        let (l, u) = bracket(*p, k + 1, n);
        cl = cl.max(l);
        cu = cu.min(u);
    }
    MeanIndex {
        estimate: indices[m_max - 1].index as f64 / m_max as f64,
        lower,
        upper,
        converged_lower: cl,
        converged_upper: cu,
        indices,
    }
}

/// `mu_1`, `nu_1`, `mu_2`, `nu_2` of the `m`-fold iterate, computed on `[0, m tau / 2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuRow {
    pub m: usize,
    pub mu1: i64,
    pub nu1: usize,
    pub mu2: i64,
    pub nu2: usize,
}

pub fn mu_indices(path: &SymplecticPath<f64>, m_max: usize) -> Result<Vec<MuRow>> {
    mu_indices_with(path, m_max, &CrossingOptions::default())
}

pub fn mu_indices_with(
    path: &SymplecticPath<f64>,
    m_max: usize,
    opts: &CrossingOptions,
) -> Result<Vec<MuRow>> {
    check_m(m_max)?;
    let ends = half_ends(path, m_max)?;
    let periods = m_max.div_ceil(2);
    let (a, _) = crossing::counts(path, Setting::Image(Reference::U1), periods, &ends, opts)?;
    let (b, _) = crossing::counts(path, Setting::Image(Reference::U2), periods, &ends, opts)?;
    Ok((0..m_max)
        .map(|k| MuRow {
            m: k + 1,
            mu1: a[k].count,
            nu1: a[k].nullity,
            mu2: b[k].count,
            nu2: b[k].nullity,
        })
        .collect())
}

/// `(mu_1, mu_2)` for `m = 1..=m_max` through the unitary winding route.
pub fn mu_indices_winding(path: &SymplecticPath<f64>, m_max: usize) -> Result<Vec<(i64, i64)>> {
    check_m(m_max)?;
    let ends = half_ends(path, m_max)?;
    let periods = m_max.div_ceil(2);
    let opts = WindingOptions::default();
    let a = winding::counts(
        &MovingLagrangian::new(path, Setting::Image(Reference::U1), periods)?,
        &ends,
        &opts,
    )?;
    let b = winding::counts(
        &MovingLagrangian::new(path, Setting::Image(Reference::U2), periods)?,
        &ends,
        &opts,
    )?;
    Ok(a.into_iter().zip(b).collect())
}

/// `dim ker (Psi(t) - I)` with a singular-value threshold relative to `max(1, |Psi(t)|)`.
pub fn nullity(path: &SymplecticPath<f64>, t: f64) -> Result<usize> {
    let psi = path.eval(t)?;
    let dim = psi.nrows();
    let scale = psi.norm().max(1.0);
    let (sv, _) = svd_ascending(&(psi - nalgebra::DMatrix::<f64>::identity(dim, dim)));
    Ok(sv.iter().filter(|&&s| s < 1e-7 * scale).count())
}

#[cfg(test)]
mod tests;
