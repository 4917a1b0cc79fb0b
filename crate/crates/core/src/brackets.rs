//! The classical bilinear brackets that commute with Lie derivatives:
//! Schouten (symmetric multivectors), Schouten-Nijenhuis (alternating
//! multivectors), Frölicher-Nijenhuis (vector-valued forms), and the
//! trace-free compression of the latter.
//!
//! Multivector and form-valued inputs are expanded over the storage basis,
//! whose elements are decomposable, so the classical decomposable formulas
//! apply term by term. The expansions are well defined because each formula
//! is balanced under moving coefficient functions across the tensor sign.

use crate::bundle::{BundleSpec, Variance};
use crate::error::{Error, Result};
use crate::fiber::Fiber;
use crate::lie::{exterior_derivative, insertion, lie_bracket, lie_derivative, wedge};
use crate::multiindex::MultiIndex;
use crate::poly::Poly;
use crate::rational::{factorial, rat, Rational};
use crate::section::{apply_linear_map, retag, PolySection};

/// A polynomial on `T*R^m` in base variables `x^1..x^m` and momentum
/// variables `p_1..p_m`, homogeneous of degree `degree` in the momenta.
/// Variables `0..m` are base, `m..2m` momenta.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberwisePolynomial {
    pub m: usize,
    pub degree: usize,
    pub poly: Poly,
}

/// Number of distinct permutations of a weakly increasing tuple.
fn tuple_multiplicity(tuple: &[usize], m: usize) -> Rational {
    let mut mult = vec![0usize; m];
    for &i in tuple {
        mult[i] += 1;
    }
    let mut denom = num_bigint::BigInt::from(1);
    for c in mult {
        denom *= factorial(c);
    }
    Rational::new(factorial(tuple.len()), denom)
}

/// Symbol of a symmetric multivector field: `∂_{i_1}⊙…⊙∂_{i_k} ↦ p_{i_1}···p_{i_k}`.
pub fn to_fiberwise(s: &PolySection) -> Result<FiberwisePolynomial> {
    let (variance, k) = s
        .bundle()
        .as_sym_power()
        .filter(|(v, _)| *v == Variance::Upper)
        .ok_or_else(|| Error::BundleMismatch(format!(
            "fiberwise polynomials encode S^k T sections, got {}",
            s.bundle()
        )))?;
    debug_assert_eq!(variance, Variance::Upper);
    let m = s.m();
    let fiber = Fiber::new(s.bundle(), m)?;
    let mut poly = Poly::zero(2 * m);
    for (row, tuple) in fiber.tuples().iter().enumerate() {
        let mult = tuple_multiplicity(tuple, m);
        let comp = s.component_poly(row);
        for (gamma, c) in comp.terms() {
            let mut e = vec![0usize; 2 * m];
            e[..m].copy_from_slice(gamma.entries());
            for &i in tuple {
                e[m + i] += 1;
            }
            poly.add_term(MultiIndex::new(e), c * &mult);
        }
    }
    Ok(FiberwisePolynomial { m, degree: k, poly })
}

/// Inverse of [`to_fiberwise`]; requires momentum homogeneity.
pub fn from_fiberwise(fp: &FiberwisePolynomial) -> Result<PolySection> {
    let m = fp.m;
    let bundle = BundleSpec::sym_power(Variance::Upper, fp.degree);
    let fiber = Fiber::new(&bundle, m)?;
    let mut out = PolySection::zero(&bundle, m)?;
    for (e, c) in fp.poly.terms() {
        let entries = e.entries();
        let mut tuple = Vec::with_capacity(fp.degree);
        for i in 0..m {
            for _ in 0..entries[m + i] {
                tuple.push(i);
            }
        }
        if tuple.len() != fp.degree {
            return Err(Error::ShapeMismatch(format!(
                "momentum degree {} where {} expected",
                tuple.len(),
                fp.degree
            )));
        }
        let row = fiber
            .tuple_index(&tuple)
            .expect("weakly increasing tuple is a storage representative");
        let mult = tuple_multiplicity(&tuple, m);
        out.add_to(MultiIndex::new(entries[..m].to_vec()), row, c / mult);
    }
    Ok(out)
}

fn poisson(f: &Poly, g: &Poly, m: usize) -> Poly {
    let mut out = Poly::zero(2 * m);
    for i in 0..m {
        out = out.add(&f.derivative(m + i).mul(&g.derivative(i)));
        out = out.sub(&f.derivative(i).mul(&g.derivative(m + i)));
    }
    out
}

/// Schouten bracket `S^kT × S^ℓT → S^{k+ℓ−1}T`: the Poisson bracket of the
/// fiberwise polynomial symbols.
pub fn schouten(a: &PolySection, b: &PolySection) -> Result<PolySection> {
    let fa = to_fiberwise(a)?;
    let fb = to_fiberwise(b)?;
    if fa.degree == 0 || fb.degree == 0 {
        return Err(Error::BundleMismatch(
            "schouten bracket needs symmetric degree at least 1 on both sides".into(),
        ));
    }
    if a.m() != b.m() {
        return Err(Error::BundleMismatch("sections over different dimensions".into()));
    }
    let m = a.m();
    from_fiberwise(&FiberwisePolynomial {
        m,
        degree: fa.degree + fb.degree - 1,
        poly: poisson(&fa.poly, &fb.poly, m),
    })
}

/// Basis vector field `∂_axis`, optionally carrying a polynomial coefficient.
fn basis_field(m: usize, axis: usize, coeff: Option<&Poly>) -> PolySection {
    match coeff {
        None => PolySection::monomial(&BundleSpec::tangent(), m, MultiIndex::zero(m), axis, rat(1))
            .unwrap(),
        Some(p) => {
            let mut s = PolySection::zero(&BundleSpec::tangent(), m).unwrap();
            for (gamma, c) in p.terms() {
                s.add_to(gamma.clone(), axis, c.clone());
            }
            s
        }
    }
}

/// Schouten-Nijenhuis bracket `Λ^pT × Λ^qT → Λ^{p+q−1}T`, the bilinear
/// extension of
/// `D(X_1∧…∧X_p, Y_1∧…∧Y_q) = Σ_{i,j} (−1)^{i+j} [X_i,Y_j] ∧ (rest)`.
pub fn schouten_nijenhuis(a: &PolySection, b: &PolySection) -> Result<PolySection> {
    let (_, p) = a
        .bundle()
        .as_alt_power()
        .filter(|(v, k)| *v == Variance::Upper && *k >= 1)
        .ok_or_else(|| Error::BundleMismatch(format!(
            "expected a multivector field of positive degree, got {}",
            a.bundle()
        )))?;
    let (_, q) = b
        .bundle()
        .as_alt_power()
        .filter(|(v, k)| *v == Variance::Upper && *k >= 1)
        .ok_or_else(|| Error::BundleMismatch(format!(
            "expected a multivector field of positive degree, got {}",
            b.bundle()
        )))?;
    if a.m() != b.m() {
        return Err(Error::BundleMismatch("sections over different dimensions".into()));
    }
    let m = a.m();
    let out_bundle = BundleSpec::multivectors(p + q - 1);
    let fa = Fiber::new(a.bundle(), m)?;
    let fb = Fiber::new(b.bundle(), m)?;
    let mut out = PolySection::zero(&out_bundle, m)?;
    for (ra, ta) in fa.tuples().iter().enumerate() {
        let pa = a.component_poly(ra);
        if pa.is_zero() {
            continue;
        }
        for (rb, tb) in fb.tuples().iter().enumerate() {
            let pb = b.component_poly(rb);
            if pb.is_zero() {
                continue;
            }
            // decomposable representatives with the coefficient on the first
            // factor; the formula is balanced, so the placement is immaterial
            for i in 0..p {
                for j in 0..q {
                    let xi = basis_field(m, ta[i], (i == 0).then_some(&pa));
                    let yj = basis_field(m, tb[j], (j == 0).then_some(&pb));
                    let mut term = lie_bracket(&xi, &yj)?;
                    if term.is_zero() {
                        continue;
                    }
                    for (pos, &axis) in ta.iter().enumerate() {
                        if pos != i {
                            term = wedge(&term, &basis_field(m, axis, (pos == 0).then_some(&pa)))?;
                        }
                    }
                    for (pos, &axis) in tb.iter().enumerate() {
                        if pos != j {
                            term = wedge(&term, &basis_field(m, axis, (pos == 0).then_some(&pb)))?;
                        }
                    }
                    let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                    out = out.add(&term.scale(&rat(sign)))?;
                }
            }
        }
    }
    Ok(out)
}

/// Degree of a (non trace-free) vector-valued form bundle, with plain vector
/// fields counting as degree 0.
fn fn_degree(b: &BundleSpec) -> Option<usize> {
    if b.is_trace_free() {
        return None;
    }
    if *b == BundleSpec::tangent() {
        return Some(0);
    }
    b.vector_valued_form_degree()
}

/// `(form of degree j) ⊗ ∂_axis` as a `Λ^j T* ⊗ T` section.
fn form_tensor_basis(form: &PolySection, axis: usize) -> Result<PolySection> {
    let (_, j) = form
        .bundle()
        .as_alt_power()
        .filter(|(v, _)| *v == Variance::Lower)
        .ok_or_else(|| Error::NotAFormBundle(form.bundle().to_string()))?;
    let m = form.m();
    let out_bundle = if j == 0 { BundleSpec::tangent() } else { BundleSpec::vector_valued_forms(j) };
    let in_fiber = Fiber::new(form.bundle(), m)?;
    let out_fiber = Fiber::new(&out_bundle, m)?;
    let mut out = PolySection::zero(&out_bundle, m)?;
    for (row, tuple) in in_fiber.tuples().iter().enumerate() {
        let mut t = tuple.clone();
        t.push(axis);
        let orow = out_fiber.tuple_index(&t).expect("form tuple extends to a storage tuple");
        for (gamma, c) in form.component_poly(row).terms() {
            out.add_to(gamma.clone(), orow, c.clone());
        }
    }
    Ok(out)
}

/// Frölicher-Nijenhuis bracket
/// `Λ^kT*⊗T × Λ^ℓT*⊗T → Λ^{k+ℓ}T*⊗T`. On decomposables `K = ω⊗X`,
/// `L = η⊗Y`:
///
/// `[K,L] = ω∧η⊗[X,Y] + ω∧L_Xη⊗Y − L_Yω∧η⊗X + (−1)^k (dω∧i_Xη⊗Y + i_Yω∧dη⊗X)`
///
/// extended bilinearly over the storage basis, where every vector part is a
/// constant `∂_a` and the first term drops.
pub fn frolicher_nijenhuis(kk: &PolySection, ll: &PolySection) -> Result<PolySection> {
    let k = fn_degree(kk.bundle()).ok_or_else(|| Error::BundleMismatch(format!(
        "expected an ambient vector-valued form, got {}",
        kk.bundle()
    )))?;
    let l = fn_degree(ll.bundle()).ok_or_else(|| Error::BundleMismatch(format!(
        "expected an ambient vector-valued form, got {}",
        ll.bundle()
    )))?;
    if kk.m() != ll.m() {
        return Err(Error::BundleMismatch("sections over different dimensions".into()));
    }
    let m = kk.m();
    let out_bundle = if k + l == 0 {
        BundleSpec::tangent()
    } else {
        BundleSpec::vector_valued_forms(k + l)
    };
    let k_fiber = Fiber::new(kk.bundle(), m)?;
    let l_fiber = Fiber::new(ll.bundle(), m)?;
    let k_sign = rat(if k % 2 == 0 { 1 } else { -1 });
    let mut out = PolySection::zero(&out_bundle, m)?;
    for (rk, tk) in k_fiber.tuples().iter().enumerate() {
        let pk = kk.component_poly(rk);
        if pk.is_zero() {
            continue;
        }
        let (ik, a) = (&tk[..k], tk[k]);
        let omega = form_from_tuple(m, k, ik, &pk)?;
        let x = basis_field(m, a, None);
        let d_omega = exterior_derivative(&omega)?;
        for (rl, tl) in l_fiber.tuples().iter().enumerate() {
            let pl = ll.component_poly(rl);
            if pl.is_zero() {
                continue;
            }
            let (il, b) = (&tl[..l], tl[l]);
            let eta = form_from_tuple(m, l, il, &pl)?;
            let y = basis_field(m, b, None);
            // ω ∧ L_X η ⊗ Y
            let t2 = wedge(&omega, &lie_derivative(&x, &eta)?)?;
            out = out.add(&form_tensor_basis(&t2, b)?)?;
            // − L_Y ω ∧ η ⊗ X
            let t3 = wedge(&lie_derivative(&y, &omega)?, &eta)?;
            out = out.sub(&form_tensor_basis(&t3, a)?)?;
            // (−1)^k dω ∧ i_X η ⊗ Y
            if l > 0 {
                let t4 = wedge(&d_omega, &insertion(&x, &eta)?)?;
                out = out.add(&form_tensor_basis(&t4, b)?.scale(&k_sign))?;
            }
            // (−1)^k i_Y ω ∧ dη ⊗ X
            if k > 0 {
                let t5 = wedge(&insertion(&y, &omega)?, &exterior_derivative(&eta)?)?;
                out = out.add(&form_tensor_basis(&t5, a)?.scale(&k_sign))?;
            }
        }
    }
    Ok(out)
}

/// `coeff · dx^{tuple}` as a `Λ^j T*` section.
fn form_from_tuple(m: usize, j: usize, tuple: &[usize], coeff: &Poly) -> Result<PolySection> {
    let bundle = BundleSpec::forms(j);
    let fiber = Fiber::new(&bundle, m)?;
    let row = fiber.tuple_index(tuple).expect("storage tuple of the form factor");
    let mut s = PolySection::zero(&bundle, m)?;
    for (gamma, c) in coeff.terms() {
        s.add_to(gamma.clone(), row, c.clone());
    }
    Ok(s)
}

/// Splits an ambient `Λ^kT*⊗T` section into its trace-free part and the
/// `Λ^{k−1}T*` summand: `s = c + incl(f)` with `c` in the contraction
/// kernel.
pub fn trace_free_split(s: &PolySection) -> Result<(PolySection, PolySection)> {
    let k = s
        .bundle()
        .vector_valued_form_degree()
        .ok_or_else(|| Error::BundleMismatch(format!(
            "trace-free split applies to Λ^kT*⊗T sections, got {}",
            s.bundle()
        )))?;
    let m = s.m();
    if k < 1 || k > m {
        return Err(Error::InvalidBundle(format!(
            "trace-free split needs 1 <= k <= m, got k = {k}, m = {m}"
        )));
    }
    let c_bundle = BundleSpec::trace_free_forms(k)?;
    let tf = Fiber::new(&c_bundle, m)?;
    let t = tf.trace_data().expect("trace-free fiber carries split matrices");
    let f = apply_linear_map(s, &t.contraction, &BundleSpec::forms(k - 1))?;
    let embedded = apply_linear_map(&f, &t.inclusion, s.bundle())?;
    let c = retag(&s.sub(&embedded)?, &c_bundle)?;
    Ok((c, f))
}

/// Compressed Frölicher-Nijenhuis bracket `C^k × C^ℓ → C^{k+ℓ}`: include,
/// bracket, project back.
pub fn compressed_fn(k_sec: &PolySection, l_sec: &PolySection) -> Result<PolySection> {
    let (kb, lb) = (k_sec.bundle(), l_sec.bundle());
    if !kb.is_trace_free() || !lb.is_trace_free() {
        return Err(Error::BundleMismatch(format!(
            "compressed bracket takes trace-free sections, got {kb} and {lb}"
        )));
    }
    let k = kb.vector_valued_form_degree().unwrap();
    let l = lb.vector_valued_form_degree().unwrap();
    let m = k_sec.m();
    let out_bundle = BundleSpec::trace_free_forms(k + l)?;
    if k + l > m {
        return PolySection::zero(&out_bundle, m);
    }
    let ambient_k = retag(k_sec, &BundleSpec::vector_valued_forms(k))?;
    let ambient_l = retag(l_sec, &BundleSpec::vector_valued_forms(l))?;
    let bracket = frolicher_nijenhuis(&ambient_k, &ambient_l)?;
    Ok(trace_free_split(&bracket)?.0)
}

/// The constant section `Σ_a dx^a ⊗ ∂_a` of `T*⊗T`; absolutely invariant.
pub fn identity_section(m: usize) -> PolySection {
    let bundle = BundleSpec::vector_valued_forms(1);
    let fiber = Fiber::new(&bundle, m).unwrap();
    let components: Vec<Rational> = fiber
        .tuples()
        .iter()
        .map(|t| if t[0] == t[1] { rat(1) } else { rat(0) })
        .collect();
    PolySection::constant(&bundle, m, components).unwrap()
}
