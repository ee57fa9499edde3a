//! One-dimensional quadrature rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Chebyshev rule of the first kind:
/// `∫_{-1}^{1} f(y) (1-y²)^{-1/2} dy ≈ π/n Σ f(cos((2k-1)π/2n))`.
pub fn gauss_chebyshev<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = PI / n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        acc += f(((k as f64 + 0.5) * h).cos());
    }
    acc * h
}

/// Chebyshev-weighted integral refined by doubling the node count until two
/// successive values agree to `tol`. Returns `(value, |difference|, nodes)`.
pub fn gauss_chebyshev_adaptive<F: Fn(f64) -> f64>(
    f: F,
    tol: f64,
    max_nodes: usize,
) -> (f64, f64, usize) {
    let mut n = 16;
    let mut prev = gauss_chebyshev(&f, n);
    loop {
        let n2 = 2 * n;
        let next = gauss_chebyshev(&f, n2);
        let diff = (next - prev).abs();
        if diff <= tol || n2 >= max_nodes {
            return (next, diff, n2);
        }
        n = n2;
        prev = next;
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.partial_cmp(&o.err).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature.
/// Returns `(value, error estimate)`.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&mut f, a, b);
    heap.push(Panel { a, b, val: v, err: e });
    let mut total = v;
    let mut total_err = e;
    while total_err > abs_tol.max(rel_tol * total.abs()) && heap.len() < max_panels {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.val;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, val: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, val: v2, err: e2 });
    }
    // re-sum to shed accumulated rounding from the running totals
    let (mut s, mut se) = (0.0, 0.0);
    for p in heap.iter() {
        s += p.val;
        se += p.err;
    }
    (s, se)
}

/// Composite Gauss–Legendre on `panels` equal sub-intervals.
pub fn composite_gauss<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let c = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc += wi * f(c + 0.5 * h * xi);
        }
    }
    acc * 0.5 * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_rule_matches_closed_form() {
        // ∫ y² (1-y²)^{-1/2} = π/2
        let v = gauss_chebyshev(|y| y * y, 8);
        assert!((v - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kink() {
        let (v, e) = adaptive_gk(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12, 0.0, 2000);
        assert!((v - (0.045 + 0.245)).abs() < 1e-11, "v={v} e={e}");
    }

    #[test]
    fn composite_rule_on_smooth_integrand() {
        let v = composite_gauss(f64::sin, 0.0, PI, 8, 6);
        assert!((v - 2.0).abs() < 1e-13);
    }
}
