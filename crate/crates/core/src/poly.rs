//! Sparse multivariate polynomials over exact rationals.
//!
//! Terms are kept in a `BTreeMap` keyed by graded-lex multi-indices, so
//! iteration order (and therefore every derived serialization) is
//! deterministic. Zero coefficients are never stored.

use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt;

use crate::multiindex::MultiIndex;
use crate::rational::{rat, Rational};

#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    vars: usize,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl Poly {
    pub fn zero(vars: usize) -> Self {
        Poly { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: usize, c: Rational) -> Self {
        let mut p = Poly::zero(vars);
        p.add_term(MultiIndex::zero(vars), c);
        p
    }

    pub fn one(vars: usize) -> Self {
        Poly::constant(vars, rat(1))
    }

    /// The coordinate monomial `x_axis`.
    pub fn var(vars: usize, axis: usize) -> Self {
        let mut p = Poly::zero(vars);
        p.add_term(MultiIndex::unit(vars, axis), rat(1));
        p
    }

    pub fn monomial(vars: usize, alpha: MultiIndex, c: Rational) -> Self {
        debug_assert_eq!(alpha.len(), vars);
        let mut p = Poly::zero(vars);
        p.add_term(alpha, c);
        p
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Rational {
        self.terms.get(alpha).cloned().unwrap_or_else(|| rat(0))
    }

    pub fn total_degree(&self) -> usize {
        self.terms.keys().map(|a| a.degree()).max().unwrap_or(0)
    }

    /// Highest exponent of one variable across all terms.
    pub fn degree_in(&self, axis: usize) -> usize {
        self.terms.keys().map(|a| a.get(axis)).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: Rational) {
        debug_assert_eq!(alpha.len(), self.vars);
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(alpha) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.vars, other.vars);
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly {
            vars: self.vars,
            terms: self.terms.iter().map(|(a, c)| (a.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.vars);
        }
        Poly {
            vars: self.vars,
            terms: self.terms.iter().map(|(a, v)| (a.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.vars, other.vars);
        let mut out = Poly::zero(self.vars);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.add(b), ca * cb);
            }
        }
        out
    }

    /// Partial derivative along one axis.
    pub fn derivative(&self, axis: usize) -> Poly {
        let mut out = Poly::zero(self.vars);
        for (a, c) in &self.terms {
            let e = a.get(axis);
            if e == 0 {
                continue;
            }
            let mut entries = a.entries().to_vec();
            entries[axis] = e - 1;
            out.add_term(MultiIndex::new(entries), c * rat(e as i64));
        }
        out
    }

    /// Iterated partial derivative `∂^alpha`.
    pub fn derivative_multi(&self, alpha: &MultiIndex) -> Poly {
        let mut out = self.clone();
        for axis in 0..alpha.len() {
            for _ in 0..alpha.get(axis) {
                out = out.derivative(axis);
            }
        }
        out
    }

    /// Antiderivative along one axis with zero constant term.
    pub fn antiderivative(&self, axis: usize) -> Poly {
        let mut out = Poly::zero(self.vars);
        for (a, c) in &self.terms {
            let e = a.get(axis);
            let mut entries = a.entries().to_vec();
            entries[axis] = e + 1;
            out.add_term(MultiIndex::new(entries), c / rat((e + 1) as i64));
        }
        out
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        debug_assert_eq!(point.len(), self.vars);
        let mut acc = rat(0);
        for (a, c) in &self.terms {
            let mut term = c.clone();
            for (axis, &e) in a.entries().iter().enumerate() {
                for _ in 0..e {
                    term *= point[axis].clone();
                }
            }
            acc += term;
        }
        acc
    }

    /// Substitutes a constant for one variable, producing a polynomial in one
    /// fewer variable (the axis is removed).
    pub fn substitute_axis(&self, axis: usize, value: &Rational) -> Poly {
        let mut out = Poly::zero(self.vars - 1);
        for (a, c) in &self.terms {
            let mut term = c.clone();
            for _ in 0..a.get(axis) {
                term *= value.clone();
            }
            let mut entries = a.entries().to_vec();
            entries.remove(axis);
            out.add_term(MultiIndex::new(entries), term);
        }
        out
    }

    /// Inserts a fresh variable at position `axis` with exponent zero
    /// everywhere (inverse of integrating an axis away).
    pub fn lift_axis(&self, axis: usize) -> Poly {
        let mut out = Poly::zero(self.vars + 1);
        for (a, c) in &self.terms {
            let mut entries = a.entries().to_vec();
            entries.insert(axis, 0);
            out.add_term(MultiIndex::new(entries), c.clone());
        }
        out
    }

    /// Inverse of `lift_axis`: removes a variable the polynomial does not
    /// actually use. Panics when the axis carries a positive exponent.
    pub fn drop_axis(&self, axis: usize) -> Poly {
        assert_eq!(self.degree_in(axis), 0, "cannot drop a live axis");
        let mut out = Poly::zero(self.vars - 1);
        for (a, c) in &self.terms {
            let mut entries = a.entries().to_vec();
            entries.remove(axis);
            out.add_term(MultiIndex::new(entries), c.clone());
        }
        out
    }

    /// Definite integral over a product box, all axes at once.
    pub fn integrate_box(&self, box_: &[(Rational, Rational)]) -> Rational {
        debug_assert_eq!(box_.len(), self.vars);
        let mut acc = rat(0);
        for (a, c) in &self.terms {
            let mut term = c.clone();
            for (axis, &e) in a.entries().iter().enumerate() {
                let (lo, hi) = &box_[axis];
                let k = rat((e + 1) as i64);
                term *= (pow(hi, e + 1) - pow(lo, e + 1)) / k;
            }
            acc += term;
        }
        acc
    }
}

fn pow(base: &Rational, exp: usize) -> Rational {
    let mut acc = rat(1);
    for _ in 0..exp {
        acc *= base.clone();
    }
    acc
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (a, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (axis, &e) in a.entries().iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", axis + 1)?,
                    _ => write!(f, "*x{}^{}", axis + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn x(vars: usize, axis: usize) -> Poly {
        Poly::var(vars, axis)
    }

    #[test]
    fn arithmetic_and_degree() {
        let p = x(2, 0).mul(&x(2, 1)).add(&Poly::constant(2, rat(3)));
        assert_eq!(p.total_degree(), 2);
        assert_eq!(p.coeff(&MultiIndex::new(vec![1, 1])), rat(1));
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn derivative_and_antiderivative_invert() {
        let p = x(1, 0).mul(&x(1, 0)).scale(&ratio(3, 2)); // (3/2) x^2
        let d = p.derivative(0); // 3x
        assert_eq!(d.coeff(&MultiIndex::new(vec![1])), rat(3));
        assert_eq!(d.antiderivative(0), p);
    }

    #[test]
    fn eval_and_integrate() {
        let p = x(2, 0).mul(&x(2, 1)); // x*y
        assert_eq!(p.eval(&[rat(2), rat(5)]), rat(10));
        let box_ = [(rat(0), rat(1)), (rat(0), rat(2))];
        assert_eq!(p.integrate_box(&box_), rat(1)); // (1/2)(4/2) = 1
    }

    #[test]
    fn substitution_drops_axis() {
        let p = x(2, 0).mul(&x(2, 1)).add(&x(2, 1)); // xy + y
        let q = p.substitute_axis(0, &rat(3)); // 4y
        assert_eq!(q.vars(), 1);
        assert_eq!(q.coeff(&MultiIndex::new(vec![1])), rat(4));
        assert_eq!(q.lift_axis(0).vars(), 2);
    }

    #[test]
    fn lift_and_drop_are_inverse() {
        let p = x(2, 0).mul(&x(2, 1)).add(&x(2, 0)); // xy + x
        for axis in 0..=2 {
            assert_eq!(p.lift_axis(axis).drop_axis(axis), p);
        }
    }
}
