//! Helpers for samples on a uniform periodic grid `θ_k = 2πk/N`.

use num_complex::Complex64;
use rustfft::FftPlanner;

pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64)
        .collect()
}

/// Periodic trapezoid rule for the phase average `(1/2π)∫₀^{2π} f dθ`.
pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Spectral derivative `d/dθ` of periodic samples; the Nyquist mode is dropped.
pub fn derivative(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward.process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let freq = if k < n.div_ceil(2) {
            k as f64
        } else if n % 2 == 0 && k == n / 2 {
            0.0
        } else {
            k as f64 - n as f64
        };
        *c *= Complex64::new(0.0, freq);
    }
    inverse.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Trigonometric interpolation of periodic samples at arbitrary `θ`.
pub fn interpolate(samples: &[f64], theta: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward.process(&mut buf);
    theta
        .iter()
        .map(|&t| {
            let mut s = buf[0].re;
            for k in 1..n.div_ceil(2) {
                s += 2.0 * (buf[k] * Complex64::from_polar(1.0, k as f64 * t)).re;
            }
            if n % 2 == 0 {
                s += (buf[n / 2] * Complex64::from_polar(1.0, (n / 2) as f64 * t)).re;
            }
            s / n as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_trig_polynomial() {
        for n in [64, 65] {
            let th = phase_grid(n);
            let f: Vec<f64> = th.iter().map(|t| (3.0 * t).sin() + 0.5 * (7.0 * t).cos() + 2.0).collect();
            let df = derivative(&f);
            for (t, d) in th.iter().zip(&df) {
                let exact = 3.0 * (3.0 * t).cos() - 3.5 * (7.0 * t).sin();
                assert!((d - exact).abs() < 1e-12);
            }
            assert!((mean(&f) - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn trapezoid_is_spectral() {
        // mean of exp(cos θ) is I₀(1)
        let f: Vec<f64> = phase_grid(32).iter().map(|t| t.cos().exp()).collect();
        assert!((mean(&f) - 1.266_065_877_752_008_4).abs() < 1e-15);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_between() {
        let th = phase_grid(16);
        let f: Vec<f64> = th.iter().map(|t| (2.0 * t).cos() - (5.0 * t).sin()).collect();
        let pts = [0.0, 0.3, 1.7, th[5]];
        for (t, v) in pts.iter().zip(interpolate(&f, &pts)) {
            assert!((v - ((2.0 * t).cos() - (5.0 * t).sin())).abs() < 1e-13);
        }
    }
}
