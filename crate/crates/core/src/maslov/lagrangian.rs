//! Paths of Lagrangian subspaces generated by a fundamental solution.
//!
//! Two ambient settings are used. In the graph setting the moving subspace is
//! `Gr(Psi(t)) = {(u, Psi u)}` inside `(R^{4n}, diag(-J0, J0))`, compared with
//! the diagonal. In the image setting it is `Psi(t) V` inside `(R^{2n}, J0)`,
//! compared with a fixed coordinate subspace `V`.
//!
//! Iterated paths are never formed as products `Psi(s) M^j`; instead the
//! subspace at each period start is carried forward as an orthonormal frame.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{orthonormal_columns, svd_ascending, symmetrize};
use crate::symplectic::{standard_j, SymplecticPath};

/// Coordinate Lagrangian subspaces of `R^n x R^n` with coordinates `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Reference {
    /// `{0} x R^n`, the subspace `x = 0`.
    U1,
    /// `R^n x {0}`, the subspace `y = 0`.
    U2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Setting {
    Graph,
    Image(Reference),
}

/// A sample location `t = j tau + s_i` on the global grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridPos {
    pub period: usize,
    pub step: usize,
}

pub struct MovingLagrangian<'a> {
    base: &'a SymplecticPath<f64>,
    setting: Setting,
    n: usize,
    omega: DMatrix<f64>,
    reference: DMatrix<f64>,
    omega_ref: DMatrix<f64>,
    period_frames: Vec<DMatrix<f64>>,
    tau: f64,
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (r1, c1) = a.shape();
    let (r2, c2) = b.shape();
    let mut m = DMatrix::zeros(r1 + r2, c1 + c2);
    m.view_mut((0, 0), (r1, c1)).copy_from(a);
    m.view_mut((r1, c1), (r2, c2)).copy_from(b);
    m
}

fn reference_frame(n: usize, r: Reference) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(2 * n, n);
    let off = match r {
        Reference::U1 => n,
        Reference::U2 => 0,
    };
    for i in 0..n {
        e[(off + i, i)] = 1.0;
    }
    e
}

impl<'a> MovingLagrangian<'a> {
    /// `base` must start at 0 with `Psi(0) = I`; its end time is the period.
    pub fn new(base: &'a SymplecticPath<f64>, setting: Setting, periods: usize) -> Result<Self> {
        let n = base.n();
        let id = DMatrix::<f64>::identity(2 * n, 2 * n);
        if base.start_time() != 0.0 || (&base.matrices()[0] - &id).norm() > 1e-12 {
            return Err(Error::Precondition(
                "path must start at t = 0 with Psi(0) = I".into(),
            ));
        }
        let j0 = standard_j::<f64>(n);
        let (omega, reference) = match setting {
            Setting::Graph => {
                let omega = block_diag(&(-&j0), &j0);
                let mut e = DMatrix::zeros(4 * n, 2 * n);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..2 * n {
                    e[(i, i)] = s;
                    e[(2 * n + i, i)] = s;
                }
                (omega, e)
            }
            Setting::Image(r) => (j0, reference_frame(n, r)),
        };
        let omega_ref = &omega * &reference;
        let mut ml = MovingLagrangian {
            base,
            setting,
            n,
            omega,
            reference: reference.clone(),
            omega_ref,
            period_frames: vec![reference],
            tau: base.end_time(),
        };
        let monodromy = base.endpoint().clone();
        for _ in 1..=periods {
            let next = orthonormal_columns(&ml.act(&monodromy, ml.period_frames.last().unwrap()));
            ml.period_frames.push(next);
        }
        Ok(ml)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn base(&self) -> &SymplecticPath<f64> {
        self.base
    }
    pub fn setting(&self) -> Setting {
        self.setting
    }
    pub fn periods(&self) -> usize {
        self.period_frames.len() - 1
    }
    /// Dimension of the Lagrangian subspaces.
    pub fn lag_dim(&self) -> usize {
        self.reference.ncols()
    }
    pub fn steps(&self) -> usize {
        self.base.times().len() - 1
    }

    fn act(&self, psi: &DMatrix<f64>, f: &DMatrix<f64>) -> DMatrix<f64> {
        match self.setting {
            Setting::Graph => {
                let m = 2 * self.n;
                let mut out = f.clone();
                let bottom = psi * f.view((m, 0), (m, f.ncols()));
                out.view_mut((m, 0), (m, f.ncols())).copy_from(&bottom);
                out
            }
            Setting::Image(_) => psi * f,
        }
    }

    pub fn time(&self, p: GridPos) -> f64 {
        p.period as f64 * self.tau + self.base.times()[p.step]
    }

    pub fn frame_at_grid(&self, p: GridPos) -> DMatrix<f64> {
        orthonormal_columns(&self.act(&self.base.matrices()[p.step], &self.period_frames[p.period]))
    }

    fn split(&self, t: f64) -> (usize, f64) {
        let mut j = (t / self.tau).floor().max(0.0) as usize;
        if j > self.periods() {
            j = self.periods();
        }
        let mut s = t - j as f64 * self.tau;
        if s > self.tau {
            s = self.tau;
        }
        (j, s.max(0.0))
    }

    pub fn frame_at(&self, t: f64) -> Result<DMatrix<f64>> {
        let (j, s) = self.split(t);
        let psi = self.base.eval(s)?;
        Ok(orthonormal_columns(&self.act(&psi, &self.period_frames[j])))
    }

    /// `(X, Y) = (E^T F, (Omega E)^T F)`; the intersection with the reference is `F ker Y`.
    pub fn coords(&self, f: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (
            self.reference.transpose() * f,
            self.omega_ref.transpose() * f,
        )
    }

    /// Ambient generator `K(t)` with `d/dt Lambda = K Lambda`.
    pub fn generator(&self, t: f64) -> Result<DMatrix<f64>> {
        let (_, s) = self.split(t);
        let coef = self.base.coefficient().ok_or_else(|| {
            Error::Precondition("crossing forms need the path coefficient".into())
        })?;
        let jb = standard_j::<f64>(self.n) * coef(s);
        Ok(match self.setting {
            Setting::Graph => block_diag(&DMatrix::zeros(2 * self.n, 2 * self.n), &jb),
            Setting::Image(_) => jb,
        })
    }

    /// Scale of the coefficient at `t`, used for relative tolerances.
    pub fn coefficient_scale(&self, t: f64) -> f64 {
        let (_, s) = self.split(t);
        self.base
            .coefficient()
            .map(|c| c(s).norm())
            .unwrap_or(1.0)
            .max(1.0)
    }

    /// Crossing form `v -> <Omega v, K v>` restricted to `F a` for the given coefficient vectors.
    pub fn crossing_form(
        &self,
        t: f64,
        f: &DMatrix<f64>,
        kernel: &[DVector<f64>],
    ) -> Result<DMatrix<f64>> {
        let k = self.generator(t)?;
        let vs: Vec<DVector<f64>> = kernel.iter().map(|a| f * a).collect();
        let d = vs.len();
        let mut g = DMatrix::zeros(d, d);
        for a in 0..d {
            let ova = &self.omega * &vs[a];
            for b in 0..d {
                g[(a, b)] = ova.dot(&(&k * &vs[b]));
            }
        }
        Ok(symmetrize(&g))
    }

    /// Right singular vectors of `Y` with singular value below `tol`.
    pub fn kernel(&self, f: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
        let (_, y) = self.coords(f);
        let (sv, vecs) = svd_ascending(&y);
        sv.iter()
            .zip(vecs)
            .filter(|(s, _)| **s < tol)
            .map(|(_, v)| v)
            .collect()
    }

    /// Global grid positions from `t = 0` up to and including `last`.
    pub fn grid_until(&self, last: GridPos) -> Vec<GridPos> {
        let k = self.steps();
        let mut out = Vec::new();
        for j in 0..=last.period {
            let first = usize::from(j > 0);
            let stop = if j == last.period { last.step } else { k };
            for i in first..=stop {
                out.push(GridPos { period: j, step: i });
            }
        }
        out
    }

    /// Frames and ascending singular values of `Y` on a list of grid positions.
    pub fn sample(&self, pts: &[GridPos]) -> Vec<(DMatrix<f64>, Vec<f64>)> {
        pts.par_iter()
            .map(|&p| {
                let f = self.frame_at_grid(p);
                let (_, y) = self.coords(&f);
                let mut sv: Vec<f64> = y.singular_values().iter().copied().collect();
                sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
                (f, sv)
            })
            .collect()
    }
}

/// Grid position of the end of the `m`-th full period.
pub fn full_period_end(m: usize, steps: usize) -> GridPos {
    GridPos {
        period: m - 1,
        step: steps,
    }
}

/// Grid position of `t = m tau / 2`; needs an even number of steps per period.
pub fn half_period_end(m: usize, steps: usize) -> GridPos {
    if m % 2 == 0 {
        GridPos {
            period: m / 2 - 1,
            step: steps,
        }
    } else {
        GridPos {
            period: (m - 1) / 2,
            step: steps / 2,
        }
    }
}
