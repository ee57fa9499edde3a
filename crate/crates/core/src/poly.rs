//! Sparse polynomials in the four coordinates `(t, x, y, z)`, used for exact
//! exterior derivatives of polynomial forms.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

pub const T: usize = 0;
pub const X: usize = 1;
pub const Y: usize = 2;
pub const Z: usize = 3;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly4 {
    terms: BTreeMap<[u32; 4], f64>,
}

impl Poly4 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term([0; 4], c);
        p
    }

    pub fn var(i: usize) -> Self {
        let mut e = [0; 4];
        e[i] = 1;
        let mut p = Self::zero();
        p.add_term(e, 1.0);
        p
    }

    fn add_term(&mut self, e: [u32; 4], c: f64) {
        let entry = self.terms.entry(e).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut p = Self::zero();
        for (e, v) in &self.terms {
            p.add_term(*e, v * c);
        }
        p
    }

    pub fn deriv(&self, i: usize) -> Self {
        let mut p = Self::zero();
        for (e, v) in &self.terms {
            if e[i] > 0 {
                let mut e2 = *e;
                e2[i] -= 1;
                p.add_term(e2, v * e[i] as f64);
            }
        }
        p
    }

    pub fn eval(&self, p: [f64; 4]) -> f64 {
        self.terms
            .iter()
            .map(|(e, v)| v * (0..4).map(|i| p[i].powi(e[i] as i32)).product::<f64>())
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|v| *v == 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Add for &Poly4 {
    type Output = Poly4;
    fn add(self, o: &Poly4) -> Poly4 {
        let mut p = self.clone();
        for (e, v) in &o.terms {
            p.add_term(*e, *v);
        }
        p
    }
}

impl Sub for &Poly4 {
    type Output = Poly4;
    fn sub(self, o: &Poly4) -> Poly4 {
        self + &o.scale(-1.0)
    }
}

impl Neg for &Poly4 {
    type Output = Poly4;
    fn neg(self) -> Poly4 {
        self.scale(-1.0)
    }
}

impl Mul for &Poly4 {
    type Output = Poly4;
    fn mul(self, o: &Poly4) -> Poly4 {
        let mut p = Poly4::zero();
        for (e1, v1) in &self.terms {
            for (e2, v2) in &o.terms {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3]];
                p.add_term(e, v1 * v2);
            }
        }
        p
    }
}

/// A 1-form with polynomial coefficients along `(dt, dx, dy, dz)`.
#[derive(Debug, Clone, Default)]
pub struct PolyOneForm(pub [Poly4; 4]);

/// A 2-form with polynomial coefficients on `dx^i ∧ dx^j`, `i < j`, stored in
/// the order `tx, ty, tz, xy, xz, yz`.
#[derive(Debug, Clone, Default)]
pub struct PolyTwoForm(pub [Poly4; 6]);

pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

impl PolyOneForm {
    /// Exact differential of a polynomial function.
    pub fn differential(f: &Poly4) -> Self {
        Self([f.deriv(T), f.deriv(X), f.deriv(Y), f.deriv(Z)])
    }

    pub fn scale_by(&self, f: &Poly4) -> Self {
        Self(std::array::from_fn(|i| f * &self.0[i]))
    }

    pub fn plus(&self, o: &Self) -> Self {
        Self(std::array::from_fn(|i| &self.0[i] + &o.0[i]))
    }

    /// Exterior derivative: `(dθ)_{ij} = ∂_i θ_j − ∂_j θ_i`.
    pub fn exterior_derivative(&self) -> PolyTwoForm {
        PolyTwoForm(std::array::from_fn(|k| {
            let (i, j) = PAIRS[k];
            &self.0[j].deriv(i) - &self.0[i].deriv(j)
        }))
    }

    pub fn wedge(&self, o: &Self) -> PolyTwoForm {
        PolyTwoForm(std::array::from_fn(|k| {
            let (i, j) = PAIRS[k];
            &(&self.0[i] * &o.0[j]) - &(&self.0[j] * &o.0[i])
        }))
    }
}

impl PolyTwoForm {
    pub fn minus(&self, o: &Self) -> Self {
        Self(std::array::from_fn(|i| &self.0[i] - &o.0[i]))
    }

    pub fn plus(&self, o: &Self) -> Self {
        Self(std::array::from_fn(|i| &self.0[i] + &o.0[i]))
    }

    pub fn eval(&self, p: [f64; 4]) -> [f64; 6] {
        std::array::from_fn(|i| self.0[i].eval(p))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Poly4::is_zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exterior_derivative_of_exact_form_vanishes() {
        let f = &(&Poly4::var(T) * &Poly4::var(X)) + &(&Poly4::var(Z) * &Poly4::var(Z));
        let df = PolyOneForm::differential(&f);
        assert!(df.exterior_derivative().is_zero());
    }

    #[test]
    fn product_and_derivative() {
        let x = Poly4::var(X);
        let p = &(&x * &x) * &x;
        assert_eq!(p.deriv(X).eval([0.0, 2.0, 0.0, 0.0]), 12.0);
    }
}
