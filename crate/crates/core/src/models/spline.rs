//! Periodic cubic splines on uniform grids.

use crate::error::{Error, Result};

/// Interpolating periodic cubic spline of samples `y_j = f(j T / N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicSpline {
    period: f64,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl PeriodicSpline {
    pub fn new(y: Vec<f64>, period: f64) -> Result<Self> {
        let n = y.len();
        if n < 3 || !(period > 0.0) {
            return Err(Error::Input(
                "a periodic spline needs at least three samples and a positive period".into(),
            ));
        }
        let h = period / n as f64;
        // cyclic tridiagonal system: m_{j-1} + 4 m_j + m_{j+1} = 6 (y_{j+1} - 2 y_j + y_{j-1}) / h^2
        let rhs: Vec<f64> = (0..n)
            .map(|j| 6.0 * (y[(j + 1) % n] - 2.0 * y[j] + y[(j + n - 1) % n]) / (h * h))
            .collect();
        let m = solve_cyclic(n, &rhs);
        Ok(PeriodicSpline { period, y, m })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_derivative(t).0
    }

    pub fn eval_with_derivative(&self, t: f64) -> (f64, f64) {
        let n = self.y.len();
        let h = self.period / n as f64;
        let s = t.rem_euclid(self.period) / h;
        let j = (s.floor() as usize).min(n - 1);
        let u = s - j as f64;
        let (y0, y1) = (self.y[j], self.y[(j + 1) % n]);
        let (m0, m1) = (self.m[j], self.m[(j + 1) % n]);
        let a = 1.0 - u;
        let val = a * y0 + u * y1 + h * h / 6.0 * ((a * a * a - a) * m0 + (u * u * u - u) * m1);
        let der = (y1 - y0) / h + h / 6.0 * ((1.0 - 3.0 * a * a) * m0 + (3.0 * u * u - 1.0) * m1);
        (val, der)
    }
}

/// Solves the cyclic system with diagonal 4 and off-diagonals 1 via Sherman-Morrison.
fn solve_cyclic(n: usize, rhs: &[f64]) -> Vec<f64> {
    let (a, b, c) = (1.0, 4.0, 1.0);
    let (alpha, beta) = (c, a);
    let gamma = -b;
    let mut diag = vec![b; n];
    diag[0] = b - gamma;
    diag[n - 1] = b - alpha * beta / gamma;
    let solve = |d: &[f64], r: &[f64]| -> Vec<f64> {
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = c / d[0];
        dp[0] = r[0] / d[0];
        for i in 1..n {
            let den = d[i] - a * cp[i - 1];
            cp[i] = c / den;
            dp[i] = (r[i] - a * dp[i - 1]) / den;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    };
    let x = solve(&diag, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve(&diag, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn reproduces_knots_and_converges() {
        let n = 64;
        let f = |t: f64| (2.0 * PI * t).sin() + 0.3 * (4.0 * PI * t).cos();
        let y: Vec<f64> = (0..n).map(|j| f(j as f64 / n as f64)).collect();
        let s = PeriodicSpline::new(y.clone(), 1.0).unwrap();
        for (j, yj) in y.iter().enumerate() {
            assert!((s.eval(j as f64 / n as f64) - yj).abs() < 1e-13);
        }
        let err = (0..1000)
            .map(|k| (s.eval(k as f64 / 1000.0) - f(k as f64 / 1000.0)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
        assert!((s.eval(1.25) - s.eval(0.25)).abs() < 1e-14);
    }
}
