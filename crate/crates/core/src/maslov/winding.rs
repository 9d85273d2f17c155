//! Intersection counts from the unitary model of the Lagrangian Grassmannian.
//!
//! A Lagrangian with orthonormal frame `F` and coordinates `(X, Y)` relative to
//! the reference is sent to `U = Z Z^T` with `Z = X + iY`. The reference itself
//! maps to the identity and `dim(Lambda cap V) = dim ker(U - I)`. The count on
//! `[a, b]` is `G(b) - G(a)` with
//! `G = (Theta - sum phi_j) / 2 pi + #{phi_j > 0}`, where `Theta` is a
//! continuous lift of `arg det U` and `phi_j in (-pi, pi]` are the eigen-angles.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::lagrangian::{GridPos, MovingLagrangian};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct WindingOptions {
    /// Eigen-angles with `|phi| <= snap_angle` count as `phi = 0`.
    pub snap_angle: f64,
    /// Largest accepted phase increment per step before subdividing.
    pub max_increment: f64,
    pub max_depth: usize,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions {
            snap_angle: 2e-7,
            max_increment: std::f64::consts::FRAC_PI_2,
            max_depth: 16,
        }
    }
}

fn unitary(ml: &MovingLagrangian<'_>, f: &DMatrix<f64>) -> DMatrix<Complex64> {
    let (x, y) = ml.coords(f);
    let z = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        Complex64::new(x[(i, j)], y[(i, j)])
    });
    &z * z.transpose()
}

fn det_phase(u: &DMatrix<Complex64>) -> Complex64 {
    let d = u.clone().lu().determinant();
    d / d.norm()
}

/// Eigen-angles of a symmetric unitary matrix. Its real and imaginary parts
/// are commuting real symmetric matrices, so one real eigenbasis serves both.
pub fn eigen_angles(u: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let n = u.nrows();
    let c = u.map(|z| z.re);
    let s = u.map(|z| z.im);
    for alpha in [
        0.754_877_666_2,
        -1.324_717_957_2,
        0.569_840_290_9,
        2.718_281_828,
    ] {
        let eig = (&c + &s * alpha).symmetric_eigen();
        let v = eig.eigenvectors;
        let mut angles = Vec::with_capacity(n);
        let mut ok = true;
        for k in 0..n {
            let col = v.column(k).into_owned();
            let ck = col.dot(&(&c * &col));
            let sk = col.dot(&(&s * &col));
            let r_c = (&c * &col - &col * ck).norm();
            let r_s = (&s * &col - &col * sk).norm();
            if r_c > 1e-8 || r_s > 1e-8 {
                ok = false;
                break;
            }
            angles.push(sk.atan2(ck));
        }
        if ok {
            return Ok(angles);
        }
    }
    Err(Error::Numerical(
        "could not diagonalise the unitary representative".into(),
    ))
}

struct Level {
    theta_minus_sum: f64,
    positive: i64,
}

fn level(u: &DMatrix<Complex64>, theta: f64, opts: &WindingOptions) -> Result<Level> {
    let angles = eigen_angles(u)?;
    let sum: f64 = angles.iter().sum();
    let positive = angles.iter().filter(|&&a| a > opts.snap_angle).count() as i64;
    Ok(Level {
        theta_minus_sum: theta - sum,
        positive,
    })
}

fn increment(
    ml: &MovingLagrangian<'_>,
    t0: f64,
    u0: &DMatrix<Complex64>,
    t1: f64,
    u1: &DMatrix<Complex64>,
    opts: &WindingOptions,
    depth: usize,
) -> Result<f64> {
    let d = (det_phase(u1) * det_phase(u0).conj()).arg();
    if d.abs() <= opts.max_increment {
        return Ok(d);
    }
    if depth >= opts.max_depth {
        return Err(Error::Numerical(format!(
            "phase of det U jumps by {d:.3} near t = {t0}"
        )));
    }
    let tm = 0.5 * (t0 + t1);
    let um = unitary(ml, &ml.frame_at(tm)?);
    Ok(increment(ml, t0, u0, tm, &um, opts, depth + 1)?
        + increment(ml, tm, &um, t1, u1, opts, depth + 1)?)
}

/// `G` at every sample; differences of `G` are intersection counts.
pub(crate) fn levels(
    ml: &MovingLagrangian<'_>,
    times: &[f64],
    frames: &[&DMatrix<f64>],
    opts: &WindingOptions,
) -> Result<Vec<f64>> {
    let us: Vec<DMatrix<Complex64>> = frames.iter().map(|f| unitary(ml, f)).collect();
    let mut theta: f64 = eigen_angles(&us[0])?.iter().sum();
    let mut out = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        if k > 0 {
            theta += increment(ml, times[k - 1], &us[k - 1], times[k], &us[k], opts, 0)?;
        }
        let lv = level(&us[k], theta, opts)?;
        out.push(lv.theta_minus_sum / (2.0 * std::f64::consts::PI) + lv.positive as f64);
    }
    Ok(out)
}

/// CLM-normalised counts at each end, relative to `t = 0`.
pub(crate) fn counts(
    ml: &MovingLagrangian<'_>,
    ends: &[GridPos],
    opts: &WindingOptions,
) -> Result<Vec<i64>> {
    let last = *ends.iter().max_by_key(|p| (p.period, p.step)).unwrap();
    let pts = ml.grid_until(last);
    let samples = ml.sample(&pts);
    let frames: Vec<&DMatrix<f64>> = samples.iter().map(|(f, _)| f).collect();
    let times: Vec<f64> = pts.iter().map(|&p| ml.time(p)).collect();
    let g = levels(ml, &times, &frames, opts)?;
    let mut out = Vec::with_capacity(ends.len());
    for e in ends {
        let k = pts.iter().position(|q| q == e).unwrap();
        let diff = g[k] - g[0];
        if (diff - diff.round()).abs() > 1e-3 {
            return Err(Error::Numerical(format!(
                "non-integral winding {diff} at t = {}",
                ml.time(*e)
            )));
        }
        out.push(diff.round() as i64);
    }
    Ok(out)
}
