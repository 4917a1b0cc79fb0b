//! Lie derivatives and the exterior calculus on polynomial sections.
//!
//! The Lie derivative along a polynomial field X acts on a section s of any
//! bundle here as `X^i ∂_i s` minus the derived gl(m) action of the Jacobian
//! of X: `+∂X` on each upper slot and the contragredient on each lower slot.
//! Constrained bundles (symmetry groups, trace-free) are preserved because
//! their projectors are built from invariant contractions.

use crate::bundle::{BundleSpec, Variance};
use crate::error::{Error, Result};
use crate::fiber::{insertion_map, pairing_map, wedge_map, Fiber};
use crate::section::{bilinear_section, PolySection};

fn expect_vector_field(x: &PolySection) -> Result<()> {
    if x.bundle() != &BundleSpec::tangent() {
        return Err(Error::BundleMismatch(format!(
            "expected a vector field (bundle T), got {}",
            x.bundle()
        )));
    }
    Ok(())
}

/// `L_X s` for a polynomial vector field X and a polynomial section s.
pub fn lie_derivative(x: &PolySection, s: &PolySection) -> Result<PolySection> {
    expect_vector_field(x)?;
    if x.m() != s.m() {
        return Err(Error::BundleMismatch("field and section live over different dimensions".into()));
    }
    let m = s.m();
    let fiber = Fiber::new(s.bundle(), m)?;
    // transport term X^i ∂_i s
    let mut out = PolySection::zero(s.bundle(), m)?;
    for i in 0..m {
        let xi = x.component_poly(i);
        if xi.is_zero() {
            continue;
        }
        out = out.add(&s.partial_derivative(i).mul_poly(&xi))?;
    }
    // fiber term -gl(∂X) s, assembled from elementary matrices
    for j in 0..m {
        for l in 0..m {
            let coeff = x.component_poly(j).derivative(l);
            if coeff.is_zero() {
                continue;
            }
            let moved = s.apply_matrix(&fiber.gl_matrix(j, l));
            out = out.sub(&moved.mul_poly(&coeff))?;
        }
    }
    Ok(out)
}

/// Lie bracket of vector fields, `[X, Y] = L_X Y`.
pub fn lie_bracket(x: &PolySection, y: &PolySection) -> Result<PolySection> {
    expect_vector_field(y)?;
    lie_derivative(x, y)
}

/// Exterior derivative of a differential form.
pub fn exterior_derivative(omega: &PolySection) -> Result<PolySection> {
    let (variance, k) = omega
        .bundle()
        .as_alt_power()
        .ok_or_else(|| Error::NotAFormBundle(omega.bundle().to_string()))?;
    if variance != Variance::Lower {
        return Err(Error::NotAFormBundle(format!(
            "exterior derivative needs a form, got {}",
            omega.bundle()
        )));
    }
    let m = omega.m();
    let target = BundleSpec::forms(k + 1);
    let out_fiber = Fiber::new(&target, m)?;
    let in_fiber = Fiber::new(omega.bundle(), m)?;
    let mut out = PolySection::zero(&target, m)?;
    for (row, tuple) in out_fiber.tuples().iter().enumerate() {
        for (pos, &l) in tuple.iter().enumerate() {
            let rest: Vec<usize> = tuple
                .iter()
                .enumerate()
                .filter(|(p, _)| *p != pos)
                .map(|(_, &v)| v)
                .collect();
            let Some(src) = in_fiber.tuple_index(&rest) else { continue };
            let sign = if pos % 2 == 0 { 1 } else { -1 };
            let d = omega.component_poly(src).derivative(l);
            for (alpha, c) in d.terms() {
                out.add_to(alpha.clone(), row, c.clone() * crate::rational::rat(sign));
            }
        }
    }
    Ok(out)
}

/// Wedge product of forms (or of multivector fields); degree-zero factors
/// act as scalar multiplication.
pub fn wedge(a: &PolySection, b: &PolySection) -> Result<PolySection> {
    let (va, ka) = a
        .bundle()
        .as_alt_power()
        .ok_or_else(|| Error::NotAFormBundle(a.bundle().to_string()))?;
    let (vb, kb) = b
        .bundle()
        .as_alt_power()
        .ok_or_else(|| Error::NotAFormBundle(b.bundle().to_string()))?;
    let variance = if ka > 0 { va } else { vb };
    let target = if ka + kb == 0 {
        BundleSpec::scalar()
    } else {
        BundleSpec::alt_power(variance, ka + kb)
    };
    let m = a.m();
    let fa = Fiber::new(a.bundle(), m)?;
    let fb = Fiber::new(b.bundle(), m)?;
    let fo = Fiber::new(&target, m)?;
    let map = wedge_map(&fa, &fb, &fo)?;
    bilinear_section(&map, a, b, &target)
}

/// Insertion `i_X ω` of a vector field into the first slot of a form.
pub fn insertion(x: &PolySection, omega: &PolySection) -> Result<PolySection> {
    expect_vector_field(x)?;
    let (_, k) = omega
        .bundle()
        .as_alt_power()
        .filter(|(v, k)| *v == Variance::Lower && *k > 0)
        .ok_or_else(|| Error::NotAFormBundle(format!(
            "insertion needs a form of positive degree, got {}",
            omega.bundle()
        )))?;
    let m = omega.m();
    let target = BundleSpec::forms(k - 1);
    let f_in = Fiber::new(omega.bundle(), m)?;
    let f_out = Fiber::new(&target, m)?;
    let map = insertion_map(&f_in, &f_out)?;
    bilinear_section(&map, x, omega, &target)
}

/// Canonical pairing of a density-valued kernel value `σ ∈ E* ⊗ Λ^m T*`
/// against a section of E, producing a top-degree form.
pub fn pairing(sigma: &PolySection, s: &PolySection) -> Result<PolySection> {
    let m = s.m();
    let top = BundleSpec::forms(m);
    let f_sigma = Fiber::new(sigma.bundle(), m)?;
    let f_s = Fiber::new(s.bundle(), m)?;
    let f_top = Fiber::new(&top, m)?;
    let map = pairing_map(&f_sigma, &f_s, &f_top)?;
    bilinear_section(&map, sigma, s, &top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::MultiIndex;
    use crate::probe::{random_section, random_vector_field, Prng};
    use crate::rational::{rat, ratio, Rational};
    use crate::section::PolySection;

    fn mi(entries: &[usize]) -> MultiIndex {
        MultiIndex::new(entries.to_vec())
    }

    fn field(m: usize, beta: &[usize], axis: usize) -> PolySection {
        PolySection::monomial(&BundleSpec::tangent(), m, mi(beta), axis, rat(1)).unwrap()
    }

    #[test]
    fn translation_invariant_fields_differentiate() {
        // L_{∂_1} s = ∂_1 s on any bundle
        let x = field(2, &[0, 0], 0);
        let mut rng = Prng::new(1);
        for b in [BundleSpec::tangent(), BundleSpec::forms(2), BundleSpec::sym_power(Variance::Upper, 2)] {
            let s = random_section(&b, 2, 3, &mut rng).unwrap();
            let lhs = lie_derivative(&x, &s).unwrap();
            assert_eq!(lhs, s.partial_derivative(0), "bundle {b}");
        }
    }

    #[test]
    fn scalar_lie_derivative_is_directional() {
        // L_X f = X^i ∂_i f
        let m = 2;
        let x = field(m, &[1, 0], 1); // x1 ∂_2 in 1-based labels
        let f = PolySection::monomial(&BundleSpec::scalar(), m, mi(&[0, 2]), 0, rat(1)).unwrap();
        let lf = lie_derivative(&x, &f).unwrap();
        // x1 ∂_2 (x2^2) = 2 x1 x2
        assert_eq!(lf.coeff(&mi(&[1, 1]))[0], rat(2));
    }

    #[test]
    fn linear_field_rotates_coframe() {
        // m = 2: L_{x1 ∂_2}(dx2) = dx1
        let m = 2;
        let x = field(m, &[1, 0], 1);
        let dx2 = PolySection::monomial(&BundleSpec::forms(1), m, mi(&[0, 0]), 1, rat(1)).unwrap();
        let got = lie_derivative(&x, &dx2).unwrap();
        let dx1 = PolySection::monomial(&BundleSpec::forms(1), m, mi(&[0, 0]), 0, rat(1)).unwrap();
        assert_eq!(got, dx1);
    }

    // Independent oracle for the previous example: the flow of x1 ∂_2 is the
    // exact affine shear (x1, x2 + t x1); pull dx2 back through it and take
    // the exact difference quotient, which is the derivative because the
    // family is linear in t.
    #[test]
    fn flow_pullback_difference_quotient() {
        let eps = ratio(1, 7);
        // Fl_eps^*(dx2) = d(x2 + eps x1) = dx2 + eps dx1, both constant forms
        let pullback_minus_identity: Vec<Rational> = vec![eps.clone(), rat(0)];
        let quotient: Vec<Rational> = pullback_minus_identity
            .into_iter()
            .map(|c| c / eps.clone())
            .collect();
        assert_eq!(quotient, vec![rat(1), rat(0)]);
        // matches the lie_derivative result dx1 = components (1, 0)
    }

    #[test]
    fn bracket_antisymmetry_and_known_value() {
        let m = 2;
        let x = field(m, &[1, 0], 1); // x1 ∂_2
        let y = field(m, &[0, 0], 0); // ∂_1
        let b = lie_bracket(&x, &y).unwrap();
        // [x1 ∂_2, ∂_1] = -∂_2
        let expect = PolySection::monomial(&BundleSpec::tangent(), m, mi(&[0, 0]), 1, rat(-1)).unwrap();
        assert_eq!(b, expect);
        let b2 = lie_bracket(&y, &x).unwrap();
        assert_eq!(b2, b.neg());
    }

    #[test]
    fn lie_derivative_respects_brackets() {
        // L_[X,Y] = L_X L_Y - L_Y L_X on a spread of bundles
        let m = 2;
        let mut rng = Prng::new(5);
        let bundles = [
            BundleSpec::tangent(),
            BundleSpec::cotangent(),
            BundleSpec::forms(2),
            BundleSpec::sym_power(Variance::Upper, 2),
            BundleSpec::vector_valued_forms(1),
            BundleSpec::trace_free_forms(1).unwrap(),
        ];
        for b in &bundles {
            for _ in 0..4 {
                let x = random_vector_field(m, 2, &mut rng);
                let y = random_vector_field(m, 2, &mut rng);
                let s = random_section(b, m, 2, &mut rng).unwrap();
                let lhs = lie_derivative(&lie_bracket(&x, &y).unwrap(), &s).unwrap();
                let rhs = lie_derivative(&x, &lie_derivative(&y, &s).unwrap())
                    .unwrap()
                    .sub(&lie_derivative(&y, &lie_derivative(&x, &s).unwrap()).unwrap())
                    .unwrap();
                assert_eq!(lhs, rhs, "bundle {b}");
            }
        }
    }

    #[test]
    fn exterior_derivative_squares_to_zero() {
        let m = 3;
        let mut rng = Prng::new(9);
        for k in 0..2usize {
            let s = random_section(&BundleSpec::forms(k), m, 3, &mut rng).unwrap();
            let dd = exterior_derivative(&exterior_derivative(&s).unwrap()).unwrap();
            assert!(dd.is_zero(), "k={k}");
        }
    }

    #[test]
    fn exterior_derivative_of_function() {
        let m = 2;
        let f = PolySection::monomial(&BundleSpec::scalar(), m, mi(&[1, 1]), 0, rat(1)).unwrap();
        let df = exterior_derivative(&f).unwrap();
        // d(x1 x2) = x2 dx1 + x1 dx2
        assert_eq!(df.coeff(&mi(&[0, 1]))[0], rat(1));
        assert_eq!(df.coeff(&mi(&[1, 0]))[1], rat(1));
    }

    #[test]
    fn cartan_homotopy_formula() {
        // L_X = i_X d + d i_X on forms of positive degree
        let m = 3;
        let mut rng = Prng::new(11);
        for k in 1..=2usize {
            for _ in 0..4 {
                let x = random_vector_field(m, 2, &mut rng);
                let w = random_section(&BundleSpec::forms(k), m, 2, &mut rng).unwrap();
                let lhs = lie_derivative(&x, &w).unwrap();
                let rhs = insertion(&x, &exterior_derivative(&w).unwrap())
                    .unwrap()
                    .add(&exterior_derivative(&insertion(&x, &w).unwrap()).unwrap())
                    .unwrap();
                assert_eq!(lhs, rhs, "k={k}");
            }
        }
    }

    #[test]
    fn lie_derivative_commutes_with_d() {
        let m = 2;
        let mut rng = Prng::new(13);
        for k in 0..=1usize {
            for _ in 0..4 {
                let x = random_vector_field(m, 2, &mut rng);
                let w = random_section(&BundleSpec::forms(k), m, 2, &mut rng).unwrap();
                let lhs = lie_derivative(&x, &exterior_derivative(&w).unwrap()).unwrap();
                let rhs = exterior_derivative(&lie_derivative(&x, &w).unwrap()).unwrap();
                assert_eq!(lhs, rhs, "k={k}");
            }
        }
    }

    #[test]
    fn wedge_leibniz_under_lie_derivative() {
        let m = 3;
        let mut rng = Prng::new(17);
        for _ in 0..4 {
            let x = random_vector_field(m, 2, &mut rng);
            let a = random_section(&BundleSpec::forms(1), m, 2, &mut rng).unwrap();
            let b = random_section(&BundleSpec::forms(1), m, 2, &mut rng).unwrap();
            let lhs = lie_derivative(&x, &wedge(&a, &b).unwrap()).unwrap();
            let rhs = wedge(&lie_derivative(&x, &a).unwrap(), &b)
                .unwrap()
                .add(&wedge(&a, &lie_derivative(&x, &b).unwrap()).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn pairing_leibniz_under_lie_derivative() {
        // L_X ⟨σ, s⟩ = ⟨L_X σ, s⟩ + ⟨σ, L_X s⟩ with σ density-valued
        let m = 2;
        let mut rng = Prng::new(19);
        for e in [BundleSpec::tangent(), BundleSpec::forms(1)] {
            let sigma_bundle = e.dual_density(m).unwrap();
            for _ in 0..3 {
                let x = random_vector_field(m, 2, &mut rng);
                let sigma = random_section(&sigma_bundle, m, 2, &mut rng).unwrap();
                let s = random_section(&e, m, 2, &mut rng).unwrap();
                let lhs = lie_derivative(&x, &pairing(&sigma, &s).unwrap()).unwrap();
                let rhs = pairing(&lie_derivative(&x, &sigma).unwrap(), &s)
                    .unwrap()
                    .add(&pairing(&sigma, &lie_derivative(&x, &s).unwrap()).unwrap())
                    .unwrap();
                assert_eq!(lhs, rhs, "E = {e}");
            }
        }
    }

    #[test]
    fn lie_derivative_preserves_trace_free_sections() {
        let m = 3;
        let b = BundleSpec::trace_free_forms(2).unwrap();
        let fiber = Fiber::new(&b, m).unwrap();
        let t = fiber.trace_data().unwrap();
        let mut rng = Prng::new(23);
        let x = random_vector_field(m, 3, &mut rng);
        let s = random_section(&b, m, 2, &mut rng).unwrap();
        let ls = lie_derivative(&x, &s).unwrap();
        for (_, v) in ls.coeffs() {
            for row in &t.contraction {
                let mut acc = rat(0);
                for (a, b) in row.iter().zip(v) {
                    acc += a * b;
                }
                assert_eq!(acc, rat(0));
            }
        }
    }

    #[test]
    fn wedge_rejects_mixed_variance() {
        let m = 2;
        let a = PolySection::monomial(&BundleSpec::multivectors(1), m, mi(&[0, 0]), 0, rat(1)).unwrap();
        let b = PolySection::monomial(&BundleSpec::forms(1), m, mi(&[0, 0]), 0, rat(1)).unwrap();
        assert!(wedge(&a, &b).is_err());
    }
}
