//! Finite-difference weights on arbitrary stencils (Fornberg's recursion).

/// Weights `w[k][j]` such that `f^{(k)}(z) ≈ Σ_j w[k][j] f(x[j])` for
/// `k = 0..=m`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Derivative of order `k` of uniformly sampled data at index `i`, using a
/// stencil of `width` points (odd), shifted inward near the ends.
pub fn uniform_derivative(values: &[f64], spacing: f64, i: usize, k: usize, width: usize) -> f64 {
    let n = values.len();
    let width = width.min(n);
    let half = width / 2;
    let start = i.saturating_sub(half).min(n - width);
    let xs: Vec<f64> = (start..start + width).map(|j| j as f64 * spacing).collect();
    let w = fornberg_weights(i as f64 * spacing, &xs, k);
    w[k].iter().zip(&values[start..start + width]).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_three_point_weights() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[1][0] + 0.5).abs() < 1e-15 && (w[1][2] - 0.5).abs() < 1e-15);
        assert!((w[2][0] - 1.0).abs() < 1e-15 && (w[2][1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn seven_point_derivative_of_sine() {
        let h = 0.01;
        let v: Vec<f64> = (0..100).map(|j| (j as f64 * h).sin()).collect();
        let d = uniform_derivative(&v, h, 50, 1, 7);
        assert!((d - 0.5f64.cos()).abs() < 1e-12);
        let d2 = uniform_derivative(&v, h, 2, 2, 7);
        assert!((d2 + 0.02f64.sin()).abs() < 1e-8);
    }
}
