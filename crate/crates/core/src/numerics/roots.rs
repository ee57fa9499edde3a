//! Scalar bracketing and small Newton systems.

/// Bisection on a sign change; returns the midpoint of the final bracket.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if (fa < 0.0) == (fb < 0.0) {
        return None;
    }
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m <= a.min(b) || m >= a.max(b) {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Newton iteration for a scalar function with derivative.
pub fn newton<F: FnMut(f64) -> (f64, f64)>(mut f: F, mut x: f64, tol: f64, max_iter: usize) -> Option<f64> {
    for _ in 0..max_iter {
        let (v, d) = f(x);
        if !v.is_finite() || !d.is_finite() || d == 0.0 {
            return None;
        }
        let dx = v / d;
        x -= dx;
        if dx.abs() <= tol * x.abs().max(1.0) {
            return Some(x);
        }
    }
    None
}

/// Outcome of a 2×2 Newton solve.
#[derive(Debug, Clone, Copy)]
pub struct Newton2 {
    pub x: [f64; 2],
    pub residual: f64,
    /// Determinant of the Jacobian at the solution.
    pub det: f64,
}

/// Solves `F(x) = 0` for `F: R² → R²` given a closure returning
/// `(F(x), J(x))` with `J[i][j] = ∂F_i/∂x_j`. Returns `None` when the
/// iteration diverges or leaves `bounds`.
pub fn newton2<F>(mut f: F, mut x: [f64; 2], bounds: [[f64; 2]; 2], tol: f64, max_iter: usize) -> Option<Newton2>
where
    F: FnMut([f64; 2]) -> Option<([f64; 2], [[f64; 2]; 2])>,
{
    for _ in 0..max_iter {
        let (v, j) = f(x)?;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let res = v[0].abs().max(v[1].abs());
        if res <= tol {
            return Some(Newton2 { x, residual: res, det });
        }
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx0 = (j[1][1] * v[0] - j[0][1] * v[1]) / det;
        let dx1 = (-j[1][0] * v[0] + j[0][0] * v[1]) / det;
        x[0] -= dx0;
        x[1] -= dx1;
        if !(x[0].is_finite() && x[1].is_finite()) {
            return None;
        }
        if x[0] < bounds[0][0] || x[0] > bounds[0][1] || x[1] < bounds[1][0] || x[1] > bounds[1][1] {
            return None;
        }
    }
    let (v, j) = f(x)?;
    let res = v[0].abs().max(v[1].abs());
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if res <= tol * 1e3 {
        Some(Newton2 { x, residual: res, det })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisect_rejects_no_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_none());
    }

    #[test]
    fn newton2_circle_line() {
        // x² + y² = 1, x = y
        let s = newton2(
            |p| Some(([p[0] * p[0] + p[1] * p[1] - 1.0, p[0] - p[1]], [[2.0 * p[0], 2.0 * p[1]], [1.0, -1.0]])),
            [0.5, 0.6],
            [[-2.0, 2.0], [-2.0, 2.0]],
            1e-14,
            50,
        )
        .unwrap();
        assert!((s.x[0] - 0.5f64.sqrt()).abs() < 1e-13);
    }
}
