//! Multi-indices for partial derivatives and monomials.
//!
//! A `MultiIndex` is a fixed-length vector of nonnegative exponents, one per
//! coordinate axis. Every enumeration in the crate orders multi-indices
//! graded-lexicographically (total degree first, then lexicographic), which
//! is what makes bases and serialized output deterministic.

use num_bigint::BigInt;
use num_traits::One;
use std::cmp::Ordering;
use std::fmt;

use crate::rational::factorial;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(len: usize) -> Self {
        MultiIndex(vec![0; len])
    }

    /// The unit index along one axis.
    pub fn unit(len: usize, axis: usize) -> Self {
        let mut e = vec![0; len];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> usize {
        self.0[axis]
    }

    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise subtraction; `None` if any entry would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn bump(&self, axis: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[axis] += 1;
        MultiIndex(e)
    }

    /// `alpha!`, the product of entry factorials.
    pub fn factorial(&self) -> BigInt {
        let mut acc = BigInt::one();
        for &e in &self.0 {
            acc *= factorial(e);
        }
        acc
    }

    /// Falling-factorial coefficient picked up when `∂^self` hits `x^gamma`:
    /// `gamma!/(gamma-self)!`, or `None` when the derivative kills the monomial.
    pub fn derivative_factor(&self, gamma: &MultiIndex) -> Option<BigInt> {
        let rest = gamma.checked_sub(self)?;
        Some(gamma.factorial() / rest.factorial())
    }
}

/// Graded-lexicographic order: compare total degree, then entries.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// All multi-indices of length `m` with total degree at most `max_degree`,
/// in graded-lexicographic order.
pub fn enumerate_multiindices(m: usize, max_degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        let mut current = vec![0usize; m];
        emit_degree(m, d, 0, &mut current, &mut out);
    }
    out
}

fn emit_degree(m: usize, remaining: usize, axis: usize, current: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if m == 0 {
        if remaining == 0 {
            out.push(MultiIndex(vec![]));
        }
        return;
    }
    if axis == m - 1 {
        current[axis] = remaining;
        out.push(MultiIndex(current.clone()));
        current[axis] = 0;
        return;
    }
    for e in 0..=remaining {
        current[axis] = e;
        emit_degree(m, remaining - e, axis + 1, current, out);
        current[axis] = 0;
    }
}
