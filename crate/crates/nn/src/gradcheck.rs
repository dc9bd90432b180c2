//! Central finite differences for checking analytic gradients.

/// Numerical gradient of `f` at `x` with step `h`.
pub fn numeric_gradient<F: FnMut(&[f64]) -> f64>(x: &[f64], h: f64, mut f: F) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error of a whole gradient tensor, `max|a - n| / max|n|`.
///
/// Entry-wise ratios are not used: entries that nearly cancel carry the
/// O(h^2) truncation error of the difference quotient at full weight.
/// The scale is floored at `floor` so that a gradient which is identically
/// zero (a bias feeding batch norm) compares against rounding noise
/// absolutely.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let diff = analytic.iter().zip(numeric).map(|(a, n)| (a - n).abs()).fold(0.0, f64::max);
    let scale = numeric.iter().chain(analytic).map(|v| v.abs()).fold(floor, f64::max);
    diff / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let g = numeric_gradient(&[1.0, -2.0], 1e-5, |x| x[0] * x[0] + 3.0 * x[1]);
        assert!((g[0] - 2.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn relative_error_uses_tensor_scale() {
        assert!((max_relative_error(&[1.0, 2.0], &[1.0, 2.2], 1e-8) - 0.2 / 2.2).abs() < 1e-12);
        assert_eq!(max_relative_error(&[0.0], &[0.0], 1e-8), 0.0);
        assert!((max_relative_error(&[0.0, 1e-13], &[0.0, 0.0], 1e-8) - 1e-5).abs() < 1e-18);
    }
}
