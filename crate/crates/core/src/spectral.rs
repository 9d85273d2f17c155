//! Real discrete Fourier helpers on uniform periodic grids.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Normalised cosine and sine sums of real samples:
/// `cc[m] = (1/N) sum x_j cos(2 pi m j / N)`, `cs[m] = (1/N) sum x_j sin(2 pi m j / N)`.
pub fn analyze(samples: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    let cc = buf.iter().map(|z| z.re * inv).collect();
    let cs = buf.iter().map(|z| -z.im * inv).collect();
    (cc, cs)
}

/// Samples on `N` points of `a_0 + sum_k a_k cos(2 pi k j / N) + b_k sin(2 pi k j / N)`.
/// Modes must satisfy `k < N / 2`.
pub fn synthesize(cos: &[f64], sin: &[f64], n: usize) -> Vec<f64> {
    assert!(
        2 * cos.len().max(sin.len()) <= n + 1,
        "too few samples for the requested modes"
    );
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    if let Some(&a0) = cos.first() {
        buf[0] = Complex64::new(a0, 0.0);
    }
    for k in 1..cos.len().max(sin.len()) {
        let a = cos.get(k).copied().unwrap_or(0.0);
        let b = sin.get(k).copied().unwrap_or(0.0);
        let z = Complex64::new(0.5 * a, -0.5 * b);
        buf[k] += z;
        buf[n - k] += z.conj();
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.re).collect()
}

/// Spectral derivative of periodic samples over a period `tau`; the Nyquist mode is dropped.
pub fn differentiate(samples: &[f64], tau: f64) -> Vec<f64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let w = 2.0 * std::f64::consts::PI / tau;
    for (k, z) in buf.iter_mut().enumerate() {
        let m = if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            0.0
        } else {
            k as f64 - n as f64
        };
        *z *= Complex64::new(0.0, w * m) / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn analysis_inverts_synthesis() {
        let cos = [0.5, 1.0, 0.0, -0.25];
        let sin = [0.0, 0.3, 2.0, 0.0];
        let x = synthesize(&cos, &sin, 16);
        for (j, xj) in x.iter().enumerate() {
            let t = j as f64 / 16.0;
            let direct = 0.5
                + (2.0 * PI * t).cos()
                + 0.3 * (2.0 * PI * t).sin()
                + 2.0 * (4.0 * PI * t).sin()
                - 0.25 * (6.0 * PI * t).cos();
            assert!((xj - direct).abs() < 1e-13);
        }
        let (cc, cs) = analyze(&x);
        assert!((cc[0] - 0.5).abs() < 1e-14);
        assert!((2.0 * cc[1] - 1.0).abs() < 1e-14);
        assert!((2.0 * cs[2] - 2.0).abs() < 1e-14);
        assert!((2.0 * cc[3] + 0.25).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_trig_polynomial() {
        let n = 32;
        let tau = 2.5;
        let x: Vec<f64> = (0..n)
            .map(|j| (2.0 * PI * 3.0 * j as f64 / n as f64).sin())
            .collect();
        let d = differentiate(&x, tau);
        for (j, dj) in d.iter().enumerate() {
            let want = 2.0 * PI * 3.0 / tau * (2.0 * PI * 3.0 * j as f64 / n as f64).cos();
            assert!((dj - want).abs() < 1e-12);
        }
    }
}
