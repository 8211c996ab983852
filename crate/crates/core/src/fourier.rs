//! Small FFT toolbox for smooth periodic data: forward/inverse transforms,
//! trigonometric interpolation and spectral differentiation.
//!
//! Conventions: a function sampled at `t_j = 2π j/N` on one period is stored
//! as `N` complex samples. `coeffs[k]` holds the coefficient of `e^{i m t}`
//! with `m = k` for `k < N/2` and `m = k - N` otherwise (the usual FFT
//! layout), normalized so that `f(t) = Σ_m c_m e^{imt}`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Forward transform: samples on a uniform grid to Fourier coefficients.
pub fn fft_coeffs(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse of [`fft_coeffs`].
pub fn ifft_samples(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Signed mode number for FFT bin `k` of an `n`-point transform.
pub fn mode_number(k: usize, n: usize) -> i64 {
    if 2 * k < n {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Evaluate a trigonometric polynomial with the given FFT-layout
/// coefficients at an arbitrary angle `t` (period 2π).
pub fn eval_trig(coeffs: &[Complex64], t: f64) -> Complex64 {
    let n = coeffs.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate() {
        let m = mode_number(k, n) as f64;
        acc += c * Complex64::from_polar(1.0, m * t);
    }
    acc
}

/// Spectral derivative: coefficients of f'.
pub fn derivative_coeffs(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let m = mode_number(k, n) as f64;
            c * Complex64::new(0.0, m)
        })
        .collect()
}

/// Samples of the derivative of a periodic function given by samples on
/// `[0, period)`; exact for band-limited data.
pub fn spectral_derivative(samples: &[Complex64], period: f64) -> Vec<Complex64> {
    let n = samples.len();
    let mut coeffs = fft_coeffs(samples);
    // coefficients live on e^{2πi m x / period}
    let omega = 2.0 * PI / period;
    for (k, c) in coeffs.iter_mut().enumerate() {
        let m = mode_number(k, n) as f64;
        *c *= Complex64::new(0.0, m * omega);
    }
    ifft_samples(&coeffs)
}

/// Uniform sample points `2π j / n` on one period.
pub fn sample_points(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn roundtrip_and_interpolation() {
        let n = 64;
        let f = |t: f64| Complex64::new((2.0 * t).cos(), (3.0 * t).sin() + 0.5);
        let samples: Vec<_> = sample_points(n).into_iter().map(f).collect();
        let coeffs = fft_coeffs(&samples);
        let back = ifft_samples(&coeffs);
        for (a, b) in samples.iter().zip(&back) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
        }
        // off-grid evaluation is exact for band-limited input
        let t = 0.7321;
        let v = eval_trig(&coeffs, t);
        assert_abs_diff_eq!(v.re, f(t).re, epsilon = 1e-11);
        assert_abs_diff_eq!(v.im, f(t).im, epsilon = 1e-11);
    }

    #[test]
    fn spectral_derivative_matches_analytic() {
        let n = 128;
        let samples: Vec<_> = sample_points(n)
            .into_iter()
            .map(|t| Complex64::new((4.0 * t).sin(), 0.0))
            .collect();
        let d = spectral_derivative(&samples, 2.0 * PI);
        for (j, t) in sample_points(n).into_iter().enumerate() {
            assert_abs_diff_eq!(d[j].re, 4.0 * (4.0 * t).cos(), epsilon = 1e-10);
        }
    }
}
