//! Discrete sine modes of the interior grid (eigenvectors of `Lap_h`).

use std::f64::consts::PI;

/// Coefficients `c_k = 2 dx sum_i u_i sin(k pi x_i)`, `k = 1..=nx`.
pub fn sine_coefficients(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let dx = 1.0 / (n as f64 + 1.0);
    (1..=n)
        .map(|k| {
            2.0 * dx
                * u.iter()
                    .enumerate()
                    .map(|(i, v)| v * (k as f64 * PI * (i + 1) as f64 * dx).sin())
                    .sum::<f64>()
        })
        .collect()
}

/// Inverse of [`sine_coefficients`].
pub fn sine_synthesis(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    let dx = 1.0 / (n as f64 + 1.0);
    (0..n)
        .map(|i| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * PI * (i + 1) as f64 * dx).sin())
                .sum()
        })
        .collect()
}

/// Orthogonal projection onto the lowest `keep` sine modes.
pub fn low_pass(u: &[f64], keep: usize) -> Vec<f64> {
    let mut c = sine_coefficients(u);
    for v in c.iter_mut().skip(keep) {
        *v = 0.0;
    }
    sine_synthesis(&c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_roundtrip() {
        let u: Vec<f64> = (0..11).map(|i| (i as f64 * 0.37).cos() - 0.2).collect();
        let back = sine_synthesis(&sine_coefficients(&u));
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn low_pass_keeps_low_mode() {
        let n = 15;
        let dx = 1.0 / 16.0;
        let low: Vec<f64> = (1..=n).map(|i| (PI * i as f64 * dx).sin()).collect();
        let high: Vec<f64> = (1..=n).map(|i| (14.0 * PI * i as f64 * dx).sin()).collect();
        let mix: Vec<f64> = low.iter().zip(&high).map(|(a, b)| a + b).collect();
        let filtered = low_pass(&mix, 12);
        for (a, b) in filtered.iter().zip(&low) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
