//! Sparse real polynomials in a fixed number of variables.
//!
//! Every model polynomial (frame coefficients, `F_mu`, pencils, normal forms)
//! goes through the same exponent/coefficient representation so that one
//! evaluation path serves all groups.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One monomial `coef * x_1^e_1 * ... * x_n^e_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exp: Vec<u32>,
    pub coef: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    nvars: usize,
    terms: Vec<Term>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_terms(nvars, [(vec![0; nvars], c)])
    }

    /// `c * x_i`.
    pub fn var(nvars: usize, i: usize, c: f64) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::from_terms(nvars, [(e, c)])
    }

    /// Builds a polynomial, merging repeated exponents and dropping zeros.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length mismatch");
            *acc.entry(e).or_insert(0.0) += c;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(exp, coef)| Term { exp, coef })
            .collect();
        Poly { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial reports 0.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exp.iter().sum()).max().unwrap_or(0)
    }

    /// Some(d) when every monomial has total degree d.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut it = self.terms.iter().map(|t| t.exp.iter().sum::<u32>());
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Value of the constant term.
    pub fn constant_term(&self) -> f64 {
        self.terms
            .iter()
            .find(|t| t.exp.iter().all(|&e| e == 0))
            .map_or(0.0, |t| t.coef)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert!(x.len() >= self.nvars);
        self.terms
            .iter()
            .map(|t| {
                t.exp
                    .iter()
                    .zip(x)
                    .fold(t.coef, |acc, (&e, &xi)| acc * xi.powi(e as i32))
            })
            .sum()
    }

    pub fn derivative(&self, i: usize) -> Poly {
        let terms = self.terms.iter().filter(|t| t.exp[i] > 0).map(|t| {
            let mut e = t.exp.clone();
            let k = e[i];
            e[i] -= 1;
            (e, t.coef * k as f64)
        });
        Poly::from_terms(self.nvars, terms)
    }

    pub fn gradient(&self) -> Vec<Poly> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::from_terms(self.nvars, self.terms.iter().map(|t| (t.exp.clone(), t.coef * s)))
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let all = self.terms.iter().chain(&other.terms).map(|t| (t.exp.clone(), t.coef));
        Poly::from_terms(self.nvars, all)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let e = a.exp.iter().zip(&b.exp).map(|(x, y)| x + y).collect();
                out.push((e, a.coef * b.coef));
            }
        }
        Poly::from_terms(self.nvars, out)
    }

    /// `a + b * self`.
    pub fn affine(&self, a: f64, b: f64) -> Poly {
        self.scale(b).add(&Poly::constant(self.nvars, a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half_norm_sq(n: usize) -> Poly {
        Poly::from_terms(n, (0..n).map(|i| {
            let mut e = vec![0; n];
            e[i] = 2;
            (e, 0.5)
        }))
    }

    #[test]
    fn merges_and_drops_terms() {
        let p = Poly::from_terms(2, [(vec![1, 0], 1.0), (vec![1, 0], -1.0), (vec![0, 1], 2.0)]);
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.eval(&[7.0, 3.0]), 6.0);
    }

    #[test]
    fn derivative_of_quadratic() {
        let p = half_norm_sq(2);
        let g = p.gradient();
        assert_eq!(g[0].eval(&[3.0, -1.0]), 3.0);
        assert_eq!(g[1].eval(&[3.0, -1.0]), -1.0);
        assert_eq!(p.homogeneous_degree(), Some(2));
    }

    #[test]
    fn product_and_affine() {
        let x = Poly::var(2, 0, 1.0);
        let y = Poly::var(2, 1, 1.0);
        let xy = x.mul(&y).affine(1.0, 3.0);
        assert_eq!(xy.eval(&[2.0, 5.0]), 31.0);
        assert_eq!(xy.constant_term(), 1.0);
        assert_eq!(xy.homogeneous_degree(), None);
    }

    proptest! {
        #[test]
        fn homogeneity(l in -3.0f64..3.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let p = half_norm_sq(2);
            let lhs = p.eval(&[l * a, l * b]);
            let rhs = l * l * p.eval(&[a, b]);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn product_evaluates_pointwise(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let p = half_norm_sq(2).affine(1.0, -2.0);
            let q = Poly::var(2, 1, 1.5).affine(0.25, 1.0);
            let pq = p.mul(&q).eval(&[a, b]);
            prop_assert!((pq - p.eval(&[a, b]) * q.eval(&[a, b])).abs() < 1e-12);
        }
    }
}
