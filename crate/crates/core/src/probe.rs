//! Deterministic pseudo-random probe data for verification suites.
//!
//! The generator is a self-contained splitmix64 so that a seed fixes every
//! probe bit-for-bit across platforms and dependency versions; randomized
//! verification must be reproducible to be worth reporting.

use crate::bundle::BundleSpec;
use crate::error::Result;
use crate::fiber::Fiber;
use crate::multiindex::{enumerate_multiindices, MultiIndex};
use crate::rational::{rat, Rational};
use crate::section::PolySection;

#[derive(Clone, Debug)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng { state: seed.wrapping_add(0x9E3779B97F4A7C15) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// Small rational with numerator in -4..=4 and denominator in 1..=3;
    /// biased away from zero so probes exercise every term.
    pub fn small_rational(&mut self) -> Rational {
        let numer = self.below(9) as i64 - 4;
        let denom = self.below(3) as i64 + 1;
        Rational::new(numer.into(), denom.into())
    }

    pub fn small_nonzero_rational(&mut self) -> Rational {
        loop {
            let q = self.small_rational();
            if !num_traits::Zero::is_zero(&q) {
                return q;
            }
        }
    }
}

/// Random polynomial section of total degree at most `max_degree`. Sparse on
/// purpose: roughly half the (monomial, component) cells are filled.
/// Trace-free bundles are projected into the contraction kernel.
pub fn random_section(bundle: &BundleSpec, m: usize, max_degree: usize, rng: &mut Prng) -> Result<PolySection> {
    let fiber = Fiber::new(bundle, m)?;
    let mut s = PolySection::zero(bundle, m)?;
    for gamma in enumerate_multiindices(m, max_degree) {
        let mut v = fiber.zero_vec();
        let mut any = false;
        for x in v.iter_mut() {
            if rng.below(2) == 0 {
                *x = rng.small_rational();
                any = true;
            }
        }
        if any {
            let v = fiber.project_storage(&v);
            for (i, c) in v.into_iter().enumerate() {
                s.add_to(gamma.clone(), i, c);
            }
        }
    }
    Ok(s)
}

/// Random polynomial vector field of total degree at most `max_degree`.
pub fn random_vector_field(m: usize, max_degree: usize, rng: &mut Prng) -> PolySection {
    random_section(&BundleSpec::tangent(), m, max_degree, rng).expect("tangent bundle always valid")
}

/// The monomial field `x^beta ∂_axis`.
pub fn monomial_field(m: usize, beta: &MultiIndex, axis: usize) -> PolySection {
    PolySection::monomial(&BundleSpec::tangent(), m, beta.clone(), axis, rat(1))
        .expect("tangent bundle always valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_streams() {
        let mut a = Prng::new(42);
        let mut b = Prng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = Prng::new(43);
        assert_ne!(a.next_u64(), c.next_u64());
    }

    #[test]
    fn random_trace_free_sections_stay_in_kernel() {
        let b = BundleSpec::trace_free_forms(1).unwrap();
        let fiber = Fiber::new(&b, 3).unwrap();
        let t = fiber.trace_data().unwrap();
        let mut rng = Prng::new(7);
        let s = random_section(&b, 3, 2, &mut rng).unwrap();
        assert!(!s.is_zero());
        for (_, v) in s.coeffs() {
            for row in &t.contraction {
                let mut acc = rat(0);
                for (a, b) in row.iter().zip(v) {
                    acc += a * b;
                }
                assert_eq!(acc, rat(0));
            }
        }
    }
}
