//! Linear Hamiltonian systems and their fundamental solutions.
//!
//! Phase-space vectors are ordered `u = (x, y)` with `x` the momentum-like
//! and `y` the position-like half, so that `J0 = [[0, -I], [I, 0]]`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Time-dependent symmetric coefficient `t -> B(t)` of `u' = J0 B(t) u`.
pub type Coefficient<T> = Arc<dyn Fn(T) -> DMatrix<T> + Send + Sync>;

/// The standard complex structure on `R^{2n}`.
pub fn standard_j<T: Scalar>(n: usize) -> DMatrix<T> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -T::one();
        j[(n + i, i)] = T::one();
    }
    j
}

fn frob<T: Scalar>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

fn half_dim<T: Scalar>(m: &DMatrix<T>) -> Result<usize> {
    let (r, c) = m.shape();
    if r != c || r % 2 != 0 || r == 0 {
        return Err(Error::Dimension(format!(
            "expected a 2n x 2n matrix, got {r} x {c}"
        )));
    }
    Ok(r / 2)
}

/// Frobenius norm of `M^T J0 M - J0`.
pub fn symplectic_residual<T: Scalar>(m: &DMatrix<T>) -> Result<T> {
    let n = half_dim(m)?;
    let j = standard_j::<T>(n);
    Ok(frob(&(m.transpose() * &j * m - j)))
}

/// Tests `|M^T J0 M - J0| <= tol (1 + |M|^2)` (Frobenius norms).
pub fn is_symplectic<T: Scalar>(m: &DMatrix<T>, tol: T) -> Result<bool> {
    let r = symplectic_residual(m)?;
    let s = frob(m);
    Ok(r <= tol * (T::one() + s * s))
}

/// `n x n` blocks of a `2n x 2n` matrix `[[A, B], [C, D]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Blocks<T: Scalar> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    pub d: DMatrix<T>,
}

impl<T: Scalar> Blocks<T> {
    pub fn assemble(&self) -> DMatrix<T> {
        let n = self.a.nrows();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a);
        m.view_mut((0, n), (n, n)).copy_from(&self.b);
        m.view_mut((n, 0), (n, n)).copy_from(&self.c);
        m.view_mut((n, n), (n, n)).copy_from(&self.d);
        m
    }
}

pub fn block_decompose<T: Scalar>(m: &DMatrix<T>) -> Result<Blocks<T>> {
    let n = half_dim(m)?;
    Ok(Blocks {
        a: m.view((0, 0), (n, n)).into_owned(),
        b: m.view((0, n), (n, n)).into_owned(),
        c: m.view((n, 0), (n, n)).into_owned(),
        d: m.view((n, n), (n, n)).into_owned(),
    })
}

/// Pulls a nearly symplectic matrix back onto `Sp(2n)` with Newton steps
/// `M <- M (I + J0 E / 2)`, `E = M^T J0 M - J0`.
pub fn project_symplectic<T: Scalar>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = half_dim(m)?;
    let j = standard_j::<T>(n);
    let id = DMatrix::<T>::identity(2 * n, 2 * n);
    let mut cur = m.clone();
    let mut res = frob(&(cur.transpose() * &j * &cur - &j));
    for _ in 0..4 {
        if res == T::zero() {
            break;
        }
        let e = cur.transpose() * &j * &cur - &j;
        let next = &cur * (&id + &j * &e * T::lit(0.5));
        let next_res = frob(&(next.transpose() * &j * &next - &j));
        if next_res >= res {
            break;
        }
        cur = next;
        res = next_res;
    }
    Ok(cur)
}

/// `M^m` computed by repeated left multiplication, `M^{j+1} = M M^j`.
pub fn matrix_power<T: Scalar>(m: &DMatrix<T>, p: usize) -> DMatrix<T> {
    let mut acc = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..p {
        acc = m * acc;
    }
    acc
}

/// Options for [`integrate_fundamental`].
#[derive(Clone, Debug)]
pub struct IntegrateOptions<T: Scalar> {
    /// Uniform RK4 steps; `None` picks `max(256, ceil(32 (b - a) rho))`.
    pub steps: Option<usize>,
    /// Relative tolerance on `|B - B^T|`.
    pub symmetry_tol: T,
    /// Re-project every step onto `Sp(2n)`.
    pub project: bool,
}

impl<T: Scalar> Default for IntegrateOptions<T> {
    fn default() -> Self {
        IntegrateOptions {
            steps: None,
            symmetry_tol: T::lit(1e-10),
            project: true,
        }
    }
}

/// Sampled fundamental solution `Psi` on a strictly increasing grid,
/// optionally carrying its coefficient so it can be evaluated off-grid.
#[derive(Clone)]
pub struct SymplecticPath<T: Scalar> {
    n: usize,
    times: Vec<T>,
    mats: Vec<DMatrix<T>>,
    coefficient: Option<Coefficient<T>>,
}

impl<T: Scalar> fmt::Debug for SymplecticPath<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymplecticPath")
            .field("n", &self.n)
            .field("samples", &self.times.len())
            .field("start", &self.times.first())
            .field("end", &self.times.last())
            .field("has_coefficient", &self.coefficient.is_some())
            .finish()
    }
}

impl<T: Scalar> SymplecticPath<T> {
    /// Builds a path from samples. Times must be strictly increasing.
    pub fn from_samples(
        n: usize,
        times: Vec<T>,
        mats: Vec<DMatrix<T>>,
        coefficient: Option<Coefficient<T>>,
    ) -> Result<Self> {
        if times.len() < 2 || times.len() != mats.len() {
            return Err(Error::Input(
                "a path needs at least two matching samples".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input(
                "path times must be strictly increasing".into(),
            ));
        }
        if mats.iter().any(|m| m.shape() != (2 * n, 2 * n)) {
            return Err(Error::Dimension(format!(
                "every sample must be {0} x {0}",
                2 * n
            )));
        }
        Ok(SymplecticPath {
            n,
            times,
            mats,
            coefficient,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn times(&self) -> &[T] {
        &self.times
    }
    pub fn matrices(&self) -> &[DMatrix<T>] {
        &self.mats
    }
    pub fn start_time(&self) -> T {
        self.times[0]
    }
    pub fn end_time(&self) -> T {
        *self.times.last().unwrap()
    }
    pub fn endpoint(&self) -> &DMatrix<T> {
        self.mats.last().unwrap()
    }
    pub fn coefficient(&self) -> Option<&Coefficient<T>> {
        self.coefficient.as_ref()
    }

    /// Largest residual `|Psi^T J0 Psi - J0| / (1 + |Psi|^2)` over the samples.
    pub fn max_symplectic_defect(&self) -> T {
        self.mats
            .iter()
            .map(|m| {
                let s = frob(m);
                symplectic_residual(m).unwrap() / (T::one() + s * s)
            })
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// `Psi(t)` for any `t` in range: grid value or RK4 from the sample to the left.
    pub fn eval(&self, t: T) -> Result<DMatrix<T>> {
        let (a, b) = (self.start_time(), self.end_time());
        let slack = T::lit(1e-12) * (b - a);
        if t < a - slack || t > b + slack {
            return Err(Error::Input(format!(
                "t = {} outside [{}, {}]",
                t.as_f64(),
                a.as_f64(),
                b.as_f64()
            )));
        }
        let i = match self.times.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(i) => return Ok(self.mats[i].clone()),
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let coef = self.coefficient.as_ref().ok_or_else(|| {
            Error::Precondition("off-grid evaluation needs the coefficient".into())
        })?;
        let j = standard_j::<T>(self.n);
        let h_grid = if i + 1 < self.times.len() {
            self.times[i + 1] - self.times[i]
        } else {
            t - self.times[i]
        };
        let span = t - self.times[i];
        let k = (span / h_grid).ceil().to_usize().unwrap_or(1).max(1);
        let h = span / T::lit(k as f64);
        let mut psi = self.mats[i].clone();
        let mut s = self.times[i];
        for _ in 0..k {
            psi = rk4_step(coef, &j, s, h, &psi);
            s += h;
        }
        Ok(psi)
    }

    /// The `m`-fold iterate `Psi(t - j tau) Psi(tau)^j` on `[0, m tau]`,
    /// for a path starting at 0 with `Psi(0) = I` and `tau` its end time.
    pub fn iterate(&self, m: usize) -> Result<SymplecticPath<T>> {
        if m == 0 {
            return Err(Error::Input("iteration count must be positive".into()));
        }
        let tau = self.end_time();
        let monodromy = self.endpoint().clone();
        let mut times = Vec::with_capacity(m * (self.times.len() - 1) + 1);
        let mut mats = Vec::with_capacity(times.capacity());
        let mut power = DMatrix::identity(2 * self.n, 2 * self.n);
        for j in 0..m {
            let shift = T::lit(j as f64) * tau;
            let skip = usize::from(j > 0);
            for (s, psi) in self.times.iter().zip(&self.mats).skip(skip) {
                times.push(shift + *s);
                if j > 0 && *s == tau {
                    mats.push(&monodromy * &power);
                } else {
                    mats.push(psi * &power);
                }
            }
            power = &monodromy * power;
        }
        let coefficient = self.coefficient.clone().map(|c| {
            let f: Coefficient<T> = Arc::new(move |t: T| {
                let r = t - (t / tau).floor() * tau;
                c(r)
            });
            f
        });
        SymplecticPath::from_samples(self.n, times, mats, coefficient)
    }
}

fn rk4_step<T: Scalar>(
    coef: &Coefficient<T>,
    j: &DMatrix<T>,
    t: T,
    h: T,
    psi: &DMatrix<T>,
) -> DMatrix<T> {
    let half = T::lit(0.5);
    let f = |s: T, y: &DMatrix<T>| j * coef(s) * y;
    let k1 = f(t, psi);
    let k2 = f(t + half * h, &(psi + &k1 * (half * h)));
    let k3 = f(t + half * h, &(psi + &k2 * (half * h)));
    let k4 = f(t + h, &(psi + &k3 * h));
    psi + (k1 + k2 * T::lit(2.0) + k3 * T::lit(2.0) + k4) * (h / T::lit(6.0))
}

fn check_symmetric<T: Scalar>(b: &DMatrix<T>, t: T, n: usize, tol: T) -> Result<()> {
    if b.shape() != (2 * n, 2 * n) {
        return Err(Error::Dimension(format!(
            "coefficient at t = {} has shape {:?}",
            t.as_f64(),
            b.shape()
        )));
    }
    let asym = frob(&(b - b.transpose()));
    if asym > tol * (T::one() + frob(b)) {
        return Err(Error::NotSymmetric {
            t: t.as_f64(),
            residual: asym.as_f64(),
        });
    }
    Ok(())
}

/// Solves `Psi' = J0 B(t) Psi`, `Psi(a) = I` on `[a, b]` with classical RK4.
pub fn integrate_fundamental<T: Scalar>(
    coef: Coefficient<T>,
    n: usize,
    a: T,
    b: T,
    opts: &IntegrateOptions<T>,
) -> Result<SymplecticPath<T>> {
    if n == 0 || !(b > a) {
        return Err(Error::Input("need n >= 1 and b > a".into()));
    }
    let j = standard_j::<T>(n);
    let steps = match opts.steps {
        Some(s) if s > 0 => s,
        Some(_) => return Err(Error::Input("steps must be positive".into())),
        None => {
            let mut rho = T::zero();
            for i in 0..=64 {
                let t = a + (b - a) * T::lit(i as f64 / 64.0);
                let bm = coef(t);
                check_symmetric(&bm, t, n, opts.symmetry_tol)?;
                let r = frob(&(&j * bm));
                if r > rho {
                    rho = r;
                }
            }
            let want = (T::lit(32.0) * (b - a) * rho)
                .ceil()
                .to_usize()
                .unwrap_or(256);
            want.max(256)
        }
    };
    let h = (b - a) / T::lit(steps as f64);
    let mut times = Vec::with_capacity(steps + 1);
    let mut mats = Vec::with_capacity(steps + 1);
    let mut psi = DMatrix::<T>::identity(2 * n, 2 * n);
    times.push(a);
    mats.push(psi.clone());
    for k in 0..steps {
        let t = a + h * T::lit(k as f64);
        check_symmetric(&coef(t), t, n, opts.symmetry_tol)?;
        psi = rk4_step(&coef, &j, t, h, &psi);
        if opts.project {
            psi = project_symplectic(&psi)?;
        }
        if !psi.iter().all(|x| x.is_finite()) {
            return Err(Error::Numerical(format!(
                "fundamental solution overflowed near t = {}",
                t.as_f64()
            )));
        }
        times.push(if k + 1 == steps {
            b
        } else {
            a + h * T::lit((k + 1) as f64)
        });
        mats.push(psi.clone());
    }
    SymplecticPath::from_samples(n, times, mats, Some(coef))
}

/// Constant-coefficient convenience wrapper.
pub fn constant_coefficient<T: Scalar>(b: DMatrix<T>) -> Coefficient<T> {
    Arc::new(move |_t: T| b.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rotation_generator(n: usize) -> Coefficient<f64> {
        constant_coefficient(DMatrix::identity(2 * n, 2 * n))
    }

    #[test]
    fn j_squares_to_minus_identity() {
        let j = standard_j::<f64>(3);
        assert_eq!(&j * &j, -DMatrix::<f64>::identity(6, 6));
        assert!(is_symplectic(&j, 1e-14).unwrap());
    }

    #[test]
    fn constant_coefficient_matches_exponential() {
        let b = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, 0.3, -0.1, 0.0, //
                0.3, 1.0, 0.2, 0.4, //
                -0.1, 0.2, -1.5, 0.1, //
                0.0, 0.4, 0.1, 0.7,
            ],
        );
        let j = standard_j::<f64>(2);
        let path = integrate_fundamental(
            constant_coefficient(b.clone()),
            2,
            0.0,
            1.3,
            &Default::default(),
        )
        .unwrap();
        let exact = (&j * &b * 1.3).exp();
        assert_relative_eq!(path.endpoint(), &exact, epsilon = 1e-9, max_relative = 1e-9);
        assert!(path.max_symplectic_defect() < 1e-13);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let coef: Coefficient<f64> = Arc::new(|t: f64| {
            DMatrix::from_row_slice(
                2,
                2,
                &[1.0 + 0.5 * t.sin(), 0.2 * t, 0.2 * t, 2.0 + t.cos()],
            )
        });
        let opts = |s| IntegrateOptions {
            steps: Some(s),
            project: false,
            ..Default::default()
        };
        let fine = integrate_fundamental(coef.clone(), 1, 0.0, 2.0, &opts(4096)).unwrap();
        let e1 = (integrate_fundamental(coef.clone(), 1, 0.0, 2.0, &opts(20))
            .unwrap()
            .endpoint()
            - fine.endpoint())
        .norm();
        let e2 = (integrate_fundamental(coef, 1, 0.0, 2.0, &opts(40))
            .unwrap()
            .endpoint()
            - fine.endpoint())
        .norm();
        let order = (e1 / e2).log2();
        assert!((3.7..4.4).contains(&order), "observed order {order}");
    }

    #[test]
    fn rejects_asymmetric_coefficient() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let err = integrate_fundamental(constant_coefficient(b), 1, 0.0, 1.0, &Default::default())
            .unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn block_roundtrip() {
        let m = DMatrix::from_fn(4, 4, |i, j| (i * 4 + j) as f64);
        let b = block_decompose(&m).unwrap();
        assert_eq!(b.b[(0, 1)], 3.0);
        assert_eq!(b.assemble(), m);
        assert!(block_decompose(&DMatrix::<f64>::zeros(3, 3)).is_err());
    }

    #[test]
    fn iterate_reproduces_monodromy_powers() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.3]);
        let path = integrate_fundamental(constant_coefficient(b), 1, 0.0, 1.0, &Default::default())
            .unwrap();
        let it = path.iterate(5).unwrap();
        assert_eq!(it.endpoint(), &matrix_power(path.endpoint(), 5));
        assert_relative_eq!(it.end_time(), 5.0);
        assert!(it.times().windows(2).all(|w| w[1] > w[0]));
        let mid = it.eval(2.37).unwrap();
        let direct = path.eval(0.37).unwrap() * matrix_power(path.endpoint(), 2);
        assert_relative_eq!(mid, direct, epsilon = 1e-10);
    }

    #[test]
    fn off_grid_eval_is_accurate() {
        let path =
            integrate_fundamental(rotation_generator(1), 1, 0.0, 1.0, &Default::default()).unwrap();
        let m = path.eval(0.123456).unwrap();
        let (c, s) = (0.123456f64.cos(), 0.123456f64.sin());
        assert_relative_eq!(
            m,
            DMatrix::from_row_slice(2, 2, &[c, -s, s, c]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn projection_restores_symplecticity() {
        let j = standard_j::<f64>(1);
        let rot = (&j * 0.7).exp();
        let noisy = &rot + DMatrix::from_row_slice(2, 2, &[1e-7, -2e-7, 3e-7, 1e-7]);
        let p = project_symplectic(&noisy).unwrap();
        assert!(symplectic_residual(&p).unwrap() < 1e-14);
        assert!((p - noisy).norm() < 1e-6);
    }

    #[test]
    fn single_precision_kernels() {
        let b = DMatrix::<f32>::identity(2, 2);
        let path =
            integrate_fundamental(constant_coefficient(b), 1, 0.0f32, 1.0, &Default::default())
                .unwrap();
        let e = path.endpoint();
        assert!((e[(0, 0)] - 1.0f32.cos()).abs() < 1e-5);
        assert!(is_symplectic(e, 1e-5f32).unwrap());
    }
}
