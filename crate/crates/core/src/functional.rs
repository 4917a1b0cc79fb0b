//! Integration functionals and elementary almost natural operators.
//!
//! An elementary almost natural operator splits its argument slots into
//! blocks. Each block feeds an integral functional λ built from a natural
//! kernel into the density dual of the block's last argument; the remaining
//! slots feed an ordinary local operator. The whole product commutes with
//! Lie derivatives because each λ eats a full Lie derivative into the
//! integral of an exact top form, which vanishes on compact supports.
//!
//! Everything here is exact: the splines integrate cell by cell in rational
//! arithmetic, so the commutation residual of a well-formed operator is
//! literally the zero section.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use crate::bundle::BundleSpec;
use crate::classifier::{storage_polys_from_coords, OperatorScheme};
use crate::error::{Error, Result};
use crate::fiber::{pairing_map, wedge_map, Fiber};
use crate::lie;
use crate::linalg::dense_solve;
use crate::multiindex::MultiIndex;
use crate::poly::Poly;
use crate::rational::{rat, Rational};
use crate::section::PolySection;
use crate::spline::SplineSection;

/// The slot partition of a k-linear functional: integral blocks plus a
/// local remainder. Slots are numbered from 1. Construction normalizes the
/// blocks so their leading elements increase strictly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlmostNaturalType {
    k: usize,
    blocks: Vec<BTreeSet<usize>>,
    j_block: Vec<usize>,
}

impl AlmostNaturalType {
    pub fn new(k: usize, blocks: Vec<BTreeSet<usize>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::ShapeMismatch("a type needs at least one slot".into()));
        }
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::ShapeMismatch("empty integral block".into()));
            }
            for &slot in block {
                if slot == 0 || slot > k {
                    return Err(Error::ShapeMismatch(format!(
                        "slot {} outside 1..={}",
                        slot, k
                    )));
                }
                if !seen.insert(slot) {
                    return Err(Error::ShapeMismatch(format!(
                        "slot {} assigned to two blocks",
                        slot
                    )));
                }
            }
        }
        let mut blocks = blocks;
        blocks.sort_by_key(|b| *b.iter().next().expect("nonempty block"));
        let j_block: Vec<usize> = (1..=k).filter(|slot| !seen.contains(slot)).collect();
        Ok(AlmostNaturalType { k, blocks, j_block })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn blocks(&self) -> &[BTreeSet<usize>] {
        &self.blocks
    }

    pub fn j_block(&self) -> &[usize] {
        &self.j_block
    }

    /// Whether the operator stays local when the slots in `probed` are
    /// curried out: true exactly when no integral block lies wholly inside
    /// the probed set.
    pub fn is_local_in(&self, probed: &BTreeSet<usize>) -> bool {
        debug_assert!(probed.iter().all(|&s| s >= 1 && s <= self.k));
        !self.blocks.iter().any(|b| b.is_subset(probed))
    }
}

/// Free-function form of [`AlmostNaturalType::is_local_in`].
pub fn locality_predicate(antype: &AlmostNaturalType, probed: &BTreeSet<usize>) -> bool {
    antype.is_local_in(probed)
}

/// The kernel of one integral functional λ on n spline arguments.
#[derive(Clone, Debug)]
pub enum Kernel {
    /// n = 1: pair the lone argument against a fixed absolutely invariant
    /// co-density and integrate.
    Invariant(PolySection),
    /// n ≥ 2: apply a natural scheme to the first n−1 arguments, pair the
    /// resulting co-density with the last, integrate.
    Scheme(OperatorScheme),
}

impl Kernel {
    pub fn arity(&self) -> usize {
        match self {
            Kernel::Invariant(_) => 1,
            Kernel::Scheme(d) => d.sources().len() + 1,
        }
    }
}

fn coords_of_cell(fiber: &Fiber, storage: &[Poly]) -> Vec<Poly> {
    match fiber.trace_data() {
        Some(td) => td.free_cols.iter().map(|&c| storage[c].clone()).collect(),
        None => storage.to_vec(),
    }
}

/// Applies a differentiation scheme to spline sections, cell by cell on the
/// common grid. The output is supported where every argument is.
pub fn evaluate_scheme_on_splines(
    scheme: &OperatorScheme,
    args: &[SplineSection],
) -> Result<SplineSection> {
    if args.len() != scheme.sources().len() {
        return Err(Error::SignatureMismatch(format!(
            "scheme takes {} sections, got {}",
            scheme.sources().len(),
            args.len()
        )));
    }
    let m = scheme.m();
    for (s, b) in args.iter().zip(scheme.sources()) {
        if s.bundle() != b {
            return Err(Error::BundleMismatch(format!(
                "expected a section of {}, got {}",
                b,
                s.bundle()
            )));
        }
        if s.m() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: s.m(),
            });
        }
    }
    let s_min = args.iter().map(|s| s.smoothness()).min().expect("k >= 1");
    if s_min < scheme.order() {
        return Err(Error::SmoothnessExhausted {
            needed: scheme.order(),
            available: s_min,
        });
    }
    let common = SplineSection::common_grid_all(args)?;
    let src_fibers: Vec<Fiber> = scheme
        .sources()
        .iter()
        .map(|b| Fiber::new(b, m))
        .collect::<Result<_>>()?;
    let tgt_fiber = Fiber::new(scheme.target(), m)?;
    let degree: usize = args.iter().map(|s| s.degree()).sum();
    let mut out = SplineSection::zero(
        scheme.target(),
        m,
        common[0].bounds(),
        common[0].ncells(),
        degree.max(s_min - scheme.order() + 1),
        s_min - scheme.order(),
    )?;
    let mut keys: BTreeSet<Vec<usize>> = common[0].cells().map(|(k, _)| k.clone()).collect();
    for s in &common[1..] {
        let stored: BTreeSet<Vec<usize>> = s.cells().map(|(k, _)| k.clone()).collect();
        keys = keys.intersection(&stored).cloned().collect();
    }
    for key in keys {
        let coord_tables: Vec<Vec<Poly>> = common
            .iter()
            .zip(&src_fibers)
            .map(|(s, f)| coords_of_cell(f, &s.cell_polys(&key)))
            .collect();
        let tgt_coords = scheme.apply_to_coordinate_polys(&coord_tables);
        out.set_cell(key, storage_polys_from_coords(&tgt_fiber, &tgt_coords));
    }
    out.recompute_degree();
    Ok(out)
}

/// Pointwise pairing of a co-density spline with a section spline, yielding
/// a top form.
pub fn pair_density(sigma: &SplineSection, s: &SplineSection) -> Result<SplineSection> {
    let m = sigma.m();
    let sig_fiber = Fiber::new(sigma.bundle(), m)?;
    let e_fiber = Fiber::new(s.bundle(), m)?;
    let top = BundleSpec::forms(m);
    let out_fiber = Fiber::new(&top, m)?;
    let pm = pairing_map(&sig_fiber, &e_fiber, &out_fiber)?;
    let (a, b) = SplineSection::common_grid(sigma, s)?;
    let mut out = SplineSection::zero(
        &top,
        m,
        a.bounds(),
        a.ncells(),
        (a.degree() + b.degree()).max(a.smoothness().min(b.smoothness()) + 1),
        a.smoothness().min(b.smoothness()),
    )?;
    for (key, pa) in a.cells() {
        if b.cell_polys(key).iter().all(Poly::is_zero) {
            continue;
        }
        let pb = b.cell_polys(key);
        let mut acc = vec![Poly::zero(m); out_fiber.storage_dim()];
        for (o, i, j, c) in &pm.entries {
            if !pa[*i].is_zero() && !pb[*j].is_zero() {
                acc[*o] = acc[*o].add(&pa[*i].mul(&pb[*j]).scale(c));
            }
        }
        out.set_cell(key.clone(), acc);
    }
    out.recompute_degree();
    Ok(out)
}

/// Same pairing with a global polynomial co-density (invariant kernels).
pub fn pair_invariant_density(sigma: &PolySection, s: &SplineSection) -> Result<SplineSection> {
    let m = s.m();
    if sigma.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: sigma.m(),
        });
    }
    let sig_fiber = Fiber::new(sigma.bundle(), m)?;
    let e_fiber = Fiber::new(s.bundle(), m)?;
    let top = BundleSpec::forms(m);
    let out_fiber = Fiber::new(&top, m)?;
    let pm = pairing_map(&sig_fiber, &e_fiber, &out_fiber)?;
    let sig_polys = sigma.component_polys();
    let mut out = SplineSection::zero(
        &top,
        m,
        s.bounds(),
        s.ncells(),
        s.degree() + sigma.max_degree() + 1,
        s.smoothness(),
    )?;
    for (key, pb) in s.cells() {
        let mut acc = vec![Poly::zero(m); out_fiber.storage_dim()];
        for (o, i, j, c) in &pm.entries {
            if !sig_polys[*i].is_zero() && !pb[*j].is_zero() {
                acc[*o] = acc[*o].add(&sig_polys[*i].mul(&pb[*j]).scale(c));
            }
        }
        out.set_cell(key.clone(), acc);
    }
    out.recompute_degree();
    Ok(out)
}

/// The integral functional of a kernel: pair, then integrate exactly.
pub fn lambda_functional(kernel: &Kernel, sections: &[SplineSection]) -> Result<Rational> {
    if sections.len() != kernel.arity() {
        return Err(Error::SignatureMismatch(format!(
            "functional takes {} sections, got {}",
            kernel.arity(),
            sections.len()
        )));
    }
    match kernel {
        Kernel::Invariant(sigma) => pair_invariant_density(sigma, &sections[0])?.integrate(),
        Kernel::Scheme(d) => {
            let n = sections.len();
            let value = evaluate_scheme_on_splines(d, &sections[..n - 1])?;
            pair_density(&value, &sections[n - 1])?.integrate()
        }
    }
}

/// The local factor acting on the slots outside every integral block.
#[derive(Clone, Debug)]
pub enum LocalPart {
    /// At least one local slot: an ordinary differentiation scheme.
    Scheme(OperatorScheme),
    /// No local slots: a fixed absolutely invariant section of the target.
    Invariant(PolySection),
}

/// A product of integral functionals, one per block, times a local part.
#[derive(Clone, Debug)]
pub struct ElementaryAlmostNatural {
    antype: AlmostNaturalType,
    arg_bundles: Vec<BundleSpec>,
    m: usize,
    kernels: Vec<Kernel>,
    local: LocalPart,
}

impl ElementaryAlmostNatural {
    pub fn new(
        antype: AlmostNaturalType,
        arg_bundles: &[BundleSpec],
        m: usize,
        kernels: Vec<Kernel>,
        local: LocalPart,
    ) -> Result<Self> {
        if arg_bundles.len() != antype.k() {
            return Err(Error::SignatureMismatch(format!(
                "type has {} slots, got {} bundles",
                antype.k(),
                arg_bundles.len()
            )));
        }
        if kernels.len() != antype.blocks().len() {
            return Err(Error::SignatureMismatch(format!(
                "type has {} blocks, got {} kernels",
                antype.blocks().len(),
                kernels.len()
            )));
        }
        for (block, kernel) in antype.blocks().iter().zip(&kernels) {
            if kernel.arity() != block.len() {
                return Err(Error::SignatureMismatch(format!(
                    "block of {} slots given a kernel of arity {}",
                    block.len(),
                    kernel.arity()
                )));
            }
            if let Kernel::Scheme(d) = kernel {
                if d.m() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: d.m(),
                    });
                }
                // the scheme eats every block slot except the pairing one
                for (&slot, src) in block.iter().zip(d.sources()) {
                    if &arg_bundles[slot - 1] != src {
                        return Err(Error::BundleMismatch(format!(
                            "slot {} carries {}, kernel expects {}",
                            slot,
                            arg_bundles[slot - 1],
                            src
                        )));
                    }
                }
            }
        }
        match &local {
            LocalPart::Scheme(d) => {
                if d.m() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: d.m(),
                    });
                }
                if d.sources().len() != antype.j_block().len() {
                    return Err(Error::SignatureMismatch(format!(
                        "local part takes {} sections but {} slots remain",
                        d.sources().len(),
                        antype.j_block().len()
                    )));
                }
                for (&slot, src) in antype.j_block().iter().zip(d.sources()) {
                    if &arg_bundles[slot - 1] != src {
                        return Err(Error::BundleMismatch(format!(
                            "slot {} carries {}, local part expects {}",
                            slot,
                            arg_bundles[slot - 1],
                            src
                        )));
                    }
                }
            }
            LocalPart::Invariant(sigma) => {
                if !antype.j_block().is_empty() {
                    return Err(Error::SignatureMismatch(
                        "an invariant local part leaves no room for local slots".into(),
                    ));
                }
                if sigma.m() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: sigma.m(),
                    });
                }
            }
        }
        Ok(ElementaryAlmostNatural {
            antype,
            arg_bundles: arg_bundles.to_vec(),
            m,
            kernels,
            local,
        })
    }

    pub fn antype(&self) -> &AlmostNaturalType {
        &self.antype
    }

    pub fn arg_bundles(&self) -> &[BundleSpec] {
        &self.arg_bundles
    }

    pub fn target(&self) -> &BundleSpec {
        match &self.local {
            LocalPart::Scheme(d) => d.target(),
            LocalPart::Invariant(sigma) => sigma.bundle(),
        }
    }
}

/// A section that is either compactly supported piecewise polynomial or
/// globally polynomial (the image of an invariant local part).
#[derive(Clone, Debug)]
pub enum SectionValue {
    Spline(SplineSection),
    Polynomial(PolySection),
}

impl SectionValue {
    pub fn is_zero(&self) -> bool {
        match self {
            SectionValue::Spline(s) => s.is_zero(),
            SectionValue::Polynomial(p) => p.is_zero(),
        }
    }

    pub fn sub(&self, other: &SectionValue) -> Result<SectionValue> {
        match (self, other) {
            (SectionValue::Spline(a), SectionValue::Spline(b)) => {
                Ok(SectionValue::Spline(a.sub(b)?))
            }
            (SectionValue::Polynomial(a), SectionValue::Polynomial(b)) => {
                Ok(SectionValue::Polynomial(a.sub(b)?))
            }
            _ => Err(Error::ShapeMismatch(
                "cannot mix compactly supported and polynomial values".into(),
            )),
        }
    }

    pub fn lie_derivative(&self, x: &PolySection) -> Result<SectionValue> {
        match self {
            SectionValue::Spline(s) => Ok(SectionValue::Spline(s.lie_derivative(x)?)),
            SectionValue::Polynomial(p) => Ok(SectionValue::Polynomial(lie::lie_derivative(x, p)?)),
        }
    }
}

/// Evaluates the operator: the product of the block functionals scales the
/// local part applied to the remaining slots.
pub fn evaluate_almost_natural(
    op: &ElementaryAlmostNatural,
    args: &[SplineSection],
) -> Result<SectionValue> {
    if args.len() != op.antype.k() {
        return Err(Error::SignatureMismatch(format!(
            "operator takes {} sections, got {}",
            op.antype.k(),
            args.len()
        )));
    }
    for (s, b) in args.iter().zip(&op.arg_bundles) {
        if s.bundle() != b {
            return Err(Error::BundleMismatch(format!(
                "expected a section of {}, got {}",
                b,
                s.bundle()
            )));
        }
        if s.m() != op.m {
            return Err(Error::DimensionMismatch {
                expected: op.m,
                found: s.m(),
            });
        }
    }
    let mut scalar = Rational::one();
    for (block, kernel) in op.antype.blocks().iter().zip(&op.kernels) {
        let block_args: Vec<SplineSection> =
            block.iter().map(|&slot| args[slot - 1].clone()).collect();
        scalar *= lambda_functional(kernel, &block_args)?;
    }
    match &op.local {
        LocalPart::Scheme(d) => {
            let local_args: Vec<SplineSection> = op
                .antype
                .j_block()
                .iter()
                .map(|&slot| args[slot - 1].clone())
                .collect();
            Ok(SectionValue::Spline(
                evaluate_scheme_on_splines(d, &local_args)?.scale(&scalar),
            ))
        }
        LocalPart::Invariant(sigma) => Ok(SectionValue::Polynomial(sigma.scale(&scalar))),
    }
}

/// `L_X(D(s..)) - sum_i D(.., L_X s_i, ..)`; the zero section exactly when
/// every kernel is natural and the local parts are equivariant.
pub fn lie_commutation_residual(
    op: &ElementaryAlmostNatural,
    x: &PolySection,
    args: &[SplineSection],
) -> Result<SectionValue> {
    let mut residual = evaluate_almost_natural(op, args)?.lie_derivative(x)?;
    for i in 0..args.len() {
        let mut moved = args.to_vec();
        moved[i] = args[i].lie_derivative(x)?;
        residual = residual.sub(&evaluate_almost_natural(op, &moved)?)?;
    }
    Ok(residual)
}

/// Splits a compactly supported scalar spline as `f = c * Psi + sum_i d_i(g_i)`
/// where `c` is the total integral, `Psi` the product of the reference bump
/// over all axes, and every witness `g_i` is again compactly supported. One
/// axis is peeled at a time: subtracting `psi(x_1) * (integral over x_1)`
/// leaves every line integral zero, so the running antiderivative closes up.
pub fn exactness_witness(
    f: &SplineSection,
    psi: &SplineSection,
) -> Result<(Rational, Vec<SplineSection>)> {
    if !f.bundle().is_scalar() || !psi.bundle().is_scalar() || psi.m() != 1 {
        return Err(Error::BundleMismatch(
            "the decomposition works on scalar sections with a 1d reference bump".into(),
        ));
    }
    if !psi.integrate_scalar()?.is_one() {
        return Err(Error::ShapeMismatch("reference bump must have unit integral".into()));
    }
    if f.bounds().iter().any(|b| b != &psi.bounds()[0]) {
        return Err(Error::ShapeMismatch(
            "reference bump must live on the same interval as every axis".into(),
        ));
    }
    if f.m() == 1 {
        let c = f.integrate_scalar()?;
        let g = f.sub(&psi.scale(&c))?.antiderivative_axis(0)?;
        return Ok((c, vec![g]));
    }
    let h = f.integrate_axis(0)?;
    let sheet = h.tensor_with_1d(0, psi)?;
    let g0 = f.sub(&sheet)?.antiderivative_axis(0)?;
    let (c, tail) = exactness_witness(&h, psi)?;
    let mut witnesses = vec![g0];
    for g in tail {
        witnesses.push(g.tensor_with_1d(0, psi)?);
    }
    Ok((c, witnesses))
}

/// Rebuilds `c * Psi + sum_i d_i(g_i)`; the inverse of `exactness_witness`.
pub fn reconstruct_from_witness(
    c: &Rational,
    witnesses: &[SplineSection],
    psi: &SplineSection,
) -> Result<SplineSection> {
    let m = witnesses.len();
    let mut product = psi.clone();
    for axis in 1..m {
        product = product.tensor_with_1d(axis, psi)?;
    }
    let mut out = product.scale(c);
    for (axis, g) in witnesses.iter().enumerate() {
        out = out.add(&g.derivative(axis)?)?;
    }
    Ok(out)
}

/// The invariant co-density that pairs to the identity on top forms:
/// `pairing(volume_codensity(m), omega) = omega`.
pub fn volume_codensity(m: usize) -> Result<PolySection> {
    let top = BundleSpec::forms(m);
    let sig_bundle = top.dual_density(m)?;
    let sig_fiber = Fiber::new(&sig_bundle, m)?;
    let e_fiber = Fiber::new(&top, m)?;
    let pm = pairing_map(&sig_fiber, &e_fiber, &e_fiber)?;
    let mut row = vec![Rational::zero(); sig_fiber.storage_dim()];
    for (o, i, j, c) in &pm.entries {
        if *o == 0 && *j == 0 {
            row[*i] += c;
        }
    }
    let sol = dense_solve(sig_fiber.storage_dim(), &[row], &[rat(1)])
        .ok_or_else(|| Error::ShapeMismatch("degenerate top-form pairing".into()))?;
    PolySection::constant(&sig_bundle, m, sol)
}

/// The fiber map taking a 1-form to the co-density whose pairing with a
/// second 1-form is their exterior product. Requires m = 2, where the wedge
/// of two 1-forms is a top form. Rows index co-density storage, columns
/// 1-form components.
fn one_form_wedge_partner(m: usize) -> Result<Vec<Vec<Rational>>> {
    let one = BundleSpec::forms(1);
    let sig_bundle = one.dual_density(m)?;
    let sig_fiber = Fiber::new(&sig_bundle, m)?;
    let a_fiber = Fiber::new(&one, m)?;
    let top_fiber = Fiber::new(&BundleSpec::forms(m), m)?;
    let pm = pairing_map(&sig_fiber, &a_fiber, &top_fiber)?;
    let wm = wedge_map(&a_fiber, &a_fiber, &top_fiber)?;
    let a_dim = a_fiber.storage_dim();
    let sig_dim = sig_fiber.storage_dim();
    let mut columns: Vec<Vec<Rational>> = Vec::with_capacity(a_dim);
    for u in 0..a_dim {
        let rows: Vec<Vec<Rational>> = (0..a_dim)
            .map(|beta| {
                let mut row = vec![Rational::zero(); sig_dim];
                for (o, i, j, c) in &pm.entries {
                    if *o == 0 && *j == beta {
                        row[*i] += c;
                    }
                }
                row
            })
            .collect();
        let rhs: Vec<Rational> = (0..a_dim)
            .map(|beta| {
                let mut v = Rational::zero();
                for (o, i, j, c) in &wm.entries {
                    if *o == 0 && *i == u && *j == beta {
                        v += c;
                    }
                }
                v
            })
            .collect();
        let col = dense_solve(sig_dim, &rows, &rhs).ok_or_else(|| {
            Error::ShapeMismatch("wedge of 1-forms is not a top form here".into())
        })?;
        columns.push(col);
    }
    let mut mat = vec![vec![Rational::zero(); a_dim]; sig_dim];
    for (u, col) in columns.iter().enumerate() {
        for (t, v) in col.iter().enumerate() {
            mat[t][u] = v.clone();
        }
    }
    Ok(mat)
}

/// λ(ω) = ∫ω on top forms.
pub fn kernel_total_volume(m: usize) -> Result<Kernel> {
    Ok(Kernel::Invariant(volume_codensity(m)?))
}

/// λ(f, ω) = ∫ f·ω for a scalar f and a top form ω.
pub fn kernel_scalar_times_volume(m: usize) -> Result<Kernel> {
    let sigma = volume_codensity(m)?;
    let mut d = OperatorScheme::new(
        &[BundleSpec::scalar()],
        &BundleSpec::forms(m).dual_density(m)?,
        0,
        m,
    )?;
    for (t, c) in sigma.value_at_origin().into_iter().enumerate() {
        if !c.is_zero() {
            d.set_coefficient((vec![(MultiIndex::zero(m), 0)], t), c)?;
        }
    }
    Ok(Kernel::Scheme(d))
}

/// λ(f, g, ω) = ∫ f·g·ω for scalars f, g and a top form ω.
pub fn kernel_two_scalars_times_volume(m: usize) -> Result<Kernel> {
    let sigma = volume_codensity(m)?;
    let mut d = OperatorScheme::new(
        &[BundleSpec::scalar(), BundleSpec::scalar()],
        &BundleSpec::forms(m).dual_density(m)?,
        0,
        m,
    )?;
    for (t, c) in sigma.value_at_origin().into_iter().enumerate() {
        if !c.is_zero() {
            d.set_coefficient(
                (vec![(MultiIndex::zero(m), 0), (MultiIndex::zero(m), 0)], t),
                c,
            )?;
        }
    }
    Ok(Kernel::Scheme(d))
}

/// λ(α, β) = ∫ α∧β for 1-forms on a surface (m = 2).
pub fn kernel_one_form_wedge(m: usize) -> Result<Kernel> {
    let mat = one_form_wedge_partner(m)?;
    let one = BundleSpec::forms(1);
    let mut d = OperatorScheme::new(&[one.clone()], &one.dual_density(m)?, 0, m)?;
    for (t, row) in mat.iter().enumerate() {
        for (u, c) in row.iter().enumerate() {
            if !c.is_zero() {
                d.set_coefficient((vec![(MultiIndex::zero(m), u)], t), c.clone())?;
            }
        }
    }
    Ok(Kernel::Scheme(d))
}

/// λ(g, α) = ∫ g·dα for a scalar g and a 1-form α on a surface. The kernel
/// sends g to the wedge partner of −dg, so the pairing integrates by parts.
pub fn kernel_scalar_against_differential(m: usize) -> Result<Kernel> {
    let mat = one_form_wedge_partner(m)?;
    let one = BundleSpec::forms(1);
    let mut d = OperatorScheme::new(&[BundleSpec::scalar()], &one.dual_density(m)?, 1, m)?;
    for (t, row) in mat.iter().enumerate() {
        for (l, c) in row.iter().enumerate() {
            if !c.is_zero() {
                d.set_coefficient((vec![(MultiIndex::unit(m, l), 0)], t), -c)?;
            }
        }
    }
    Ok(Kernel::Scheme(d))
}

/// The five reference functionals on a surface, each with the bundles of
/// its arguments in order.
pub fn standard_kernel_suite() -> Result<Vec<(Kernel, Vec<BundleSpec>)>> {
    let m = 2;
    let scalar = BundleSpec::scalar();
    let one = BundleSpec::forms(1);
    let top = BundleSpec::forms(2);
    Ok(vec![
        (kernel_total_volume(m)?, vec![top.clone()]),
        (kernel_scalar_times_volume(m)?, vec![scalar.clone(), top.clone()]),
        (kernel_one_form_wedge(m)?, vec![one.clone(), one.clone()]),
        (kernel_scalar_against_differential(m)?, vec![scalar.clone(), one]),
        (kernel_two_scalars_times_volume(m)?, vec![scalar.clone(), scalar, top]),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::{random_vector_field, Prng};
    use crate::rational::ratio;
    use crate::rep::invariant_sections;
    use crate::spline::{product_bump, psi_bump, random_spline, unit_bump_1d};

    fn set(slots: &[usize]) -> BTreeSet<usize> {
        slots.iter().copied().collect()
    }

    fn wide_box(m: usize) -> (Vec<(Rational, Rational)>, Vec<usize>) {
        ((0..m).map(|_| (rat(0), rat(8))).collect(), vec![8; m])
    }

    /// Scalar bump supported on `[4*o, 4*o+4]` per axis inside the 8-box.
    fn corner_bump(offsets: &[usize]) -> SplineSection {
        let (bounds, ncells) = wide_box(offsets.len());
        let cell_offsets: Vec<usize> = offsets.iter().map(|&o| 4 * o).collect();
        product_bump(&bounds, &ncells, 3, &cell_offsets).unwrap()
    }

    fn as_top_form(scalar: &SplineSection) -> SplineSection {
        let mut out = SplineSection::zero(
            &BundleSpec::forms(scalar.m()),
            scalar.m(),
            scalar.bounds(),
            scalar.ncells(),
            scalar.degree(),
            scalar.smoothness(),
        )
        .unwrap();
        for (key, polys) in scalar.cells() {
            out.set_cell(key.clone(), polys.clone());
        }
        out
    }

    /// Independent oracle: integrate the product of two same-grid scalars.
    fn integral_of_product(a: &SplineSection, b: &SplineSection) -> Rational {
        let (a, b) = SplineSection::common_grid(a, b).unwrap();
        let mut acc = Rational::zero();
        for (key, pa) in a.cells() {
            let pb = b.cell_polys(key);
            acc += pa[0].mul(&pb[0]).integrate_box(&a.cell_bounds(key));
        }
        acc
    }

    fn identity_scalar_scheme(m: usize) -> OperatorScheme {
        let scalar = BundleSpec::scalar();
        let mut d = OperatorScheme::new(&[scalar.clone()], &scalar, 0, m).unwrap();
        d.set_coefficient((vec![(MultiIndex::zero(m), 0)], 0), rat(1)).unwrap();
        d
    }

    fn product_scalar_scheme(m: usize) -> OperatorScheme {
        let scalar = BundleSpec::scalar();
        let mut d =
            OperatorScheme::new(&[scalar.clone(), scalar.clone()], &scalar, 0, m).unwrap();
        d.set_coefficient(
            (vec![(MultiIndex::zero(m), 0), (MultiIndex::zero(m), 0)], 0),
            rat(1),
        )
        .unwrap();
        d
    }

    /// f·∫g·ω on (scalar, scalar, top form) arguments.
    fn scale_by_integral_op() -> ElementaryAlmostNatural {
        let antype = AlmostNaturalType::new(3, vec![set(&[2, 3])]).unwrap();
        ElementaryAlmostNatural::new(
            antype,
            &[BundleSpec::scalar(), BundleSpec::scalar(), BundleSpec::forms(2)],
            2,
            vec![kernel_scalar_times_volume(2).unwrap()],
            LocalPart::Scheme(identity_scalar_scheme(2)),
        )
        .unwrap()
    }

    #[test]
    fn locality_verdicts_match_the_curried_reading() {
        let antype = AlmostNaturalType::new(3, vec![set(&[2, 3])]).unwrap();
        assert_eq!(antype.j_block(), &[1]);
        assert!(locality_predicate(&antype, &set(&[1, 2])));
        assert!(!locality_predicate(&antype, &set(&[2, 3])));
        assert!(locality_predicate(&antype, &set(&[1, 3])));
    }

    #[test]
    fn locality_is_monotone_for_small_arities() {
        let mut rng = Prng::new(91);
        for k in 1..=6usize {
            for _ in 0..40 {
                // random assignment of each slot to the local block or one
                // of three integral blocks
                let mut blocks = vec![BTreeSet::new(), BTreeSet::new(), BTreeSet::new()];
                for slot in 1..=k {
                    let choice = rng.below(4) as usize;
                    if choice > 0 {
                        blocks[choice - 1].insert(slot);
                    }
                }
                blocks.retain(|b: &BTreeSet<usize>| !b.is_empty());
                let antype = AlmostNaturalType::new(k, blocks).unwrap();
                for big in 0u32..(1 << k) {
                    let big_set: BTreeSet<usize> =
                        (1..=k).filter(|&s| big & (1 << (s - 1)) != 0).collect();
                    if antype.is_local_in(&big_set) {
                        // every subset of a local probe is local
                        let members: Vec<usize> = big_set.iter().copied().collect();
                        for small in 0u32..(1 << members.len()) {
                            let small_set: BTreeSet<usize> = members
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| small & (1 << i) != 0)
                                .map(|(_, &s)| s)
                                .collect();
                            assert!(antype.is_local_in(&small_set));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn type_construction_rejects_bad_partitions() {
        assert!(AlmostNaturalType::new(3, vec![set(&[1]), set(&[1, 2])]).is_err());
        assert!(AlmostNaturalType::new(3, vec![set(&[])]).is_err());
        assert!(AlmostNaturalType::new(3, vec![set(&[4])]).is_err());
        // normalization sorts blocks by leading slot
        let t = AlmostNaturalType::new(4, vec![set(&[3, 4]), set(&[1])]).unwrap();
        assert_eq!(t.blocks()[0], set(&[1]));
        assert_eq!(t.j_block(), &[2]);
    }

    #[test]
    fn volume_codensity_pairs_to_the_identity_and_is_invariant() {
        for m in 1..=3 {
            let sigma = volume_codensity(m).unwrap();
            let inv = invariant_sections(sigma.bundle(), m).unwrap();
            assert_eq!(inv.basis.len(), 1);
            let mut rng = Prng::new(7);
            let omega = crate::probe::random_section(&BundleSpec::forms(m), m, 2, &mut rng).unwrap();
            assert_eq!(lie::pairing(&sigma, &omega).unwrap(), omega);
            for _ in 0..4 {
                let x = random_vector_field(m, 2, &mut rng);
                assert!(lie::lie_derivative(&x, &sigma).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn plain_volume_functional_is_integration() {
        let kernel = kernel_total_volume(2).unwrap();
        let f = corner_bump(&[0, 0]);
        let omega = as_top_form(&f);
        assert_eq!(
            lambda_functional(&kernel, &[omega.clone()]).unwrap(),
            omega.integrate().unwrap()
        );
        assert_eq!(omega.integrate().unwrap(), rat(1));
    }

    #[test]
    fn scalar_volume_functional_matches_cellwise_products() {
        let kernel = kernel_scalar_times_volume(2).unwrap();
        let mut rng = Prng::new(11);
        let (bounds, ncells) = wide_box(2);
        for _ in 0..3 {
            let f = random_spline(&BundleSpec::scalar(), 2, &bounds, &ncells, 2, &mut rng).unwrap();
            let g = random_spline(&BundleSpec::scalar(), 2, &bounds, &ncells, 2, &mut rng).unwrap();
            let got = lambda_functional(&kernel, &[f.clone(), as_top_form(&g)]).unwrap();
            assert_eq!(got, integral_of_product(&f, &g));
        }
    }

    #[test]
    fn wedge_functional_is_antisymmetric_and_exact() {
        let kernel = kernel_one_form_wedge(2).unwrap();
        let one = BundleSpec::forms(1);
        let f = corner_bump(&[0, 0]);
        let g = corner_bump(&[0, 0]);
        // alpha = f dx^1, beta = g dx^2: the wedge integrates f*g
        let mut alpha = SplineSection::zero(&one, 2, f.bounds(), f.ncells(), 3, 2).unwrap();
        for (key, polys) in f.cells() {
            alpha.set_cell(key.clone(), vec![polys[0].clone(), Poly::zero(2)]);
        }
        let mut beta = SplineSection::zero(&one, 2, g.bounds(), g.ncells(), 3, 2).unwrap();
        for (key, polys) in g.cells() {
            beta.set_cell(key.clone(), vec![Poly::zero(2), polys[0].clone()]);
        }
        let got = lambda_functional(&kernel, &[alpha.clone(), beta.clone()]).unwrap();
        assert_eq!(got, integral_of_product(&f, &g));
        assert_eq!(
            lambda_functional(&kernel, &[beta.clone(), alpha.clone()]).unwrap(),
            -got.clone()
        );
        let mixed = alpha.add(&beta).unwrap();
        assert_eq!(lambda_functional(&kernel, &[mixed.clone(), mixed]).unwrap(), rat(0));
    }

    #[test]
    fn differential_functional_integrates_g_d_alpha() {
        let kernel = kernel_scalar_against_differential(2).unwrap();
        let mut rng = Prng::new(13);
        let (bounds, ncells) = wide_box(2);
        let g = random_spline(&BundleSpec::scalar(), 2, &bounds, &ncells, 2, &mut rng).unwrap();
        let alpha =
            random_spline(&BundleSpec::forms(1), 2, &bounds, &ncells, 2, &mut rng).unwrap();
        // d(alpha) coefficient: d_0(alpha_1) - d_1(alpha_0)
        let d0 = alpha.derivative(0).unwrap();
        let d1 = alpha.derivative(1).unwrap();
        let mut curl = SplineSection::zero(
            &BundleSpec::scalar(),
            2,
            alpha.bounds(),
            alpha.ncells(),
            3,
            1,
        )
        .unwrap();
        for (key, p0) in d0.cells() {
            let p1 = d1.cell_polys(key);
            curl.set_cell(key.clone(), vec![p0[1].sub(&p1[0])]);
        }
        for (key, p1) in d1.cells() {
            if d0.cell_polys(key).iter().all(Poly::is_zero) {
                curl.set_cell(key.clone(), vec![p1[0].neg()]);
            }
        }
        let got = lambda_functional(&kernel, &[g.clone(), alpha]).unwrap();
        assert_eq!(got, integral_of_product(&g, &curl));
    }

    #[test]
    fn every_reference_functional_commutes_with_lie_derivatives() {
        let suite = standard_kernel_suite().unwrap();
        let mut rng = Prng::new(17);
        let (bounds, ncells) = wide_box(2);
        for (kernel, bundles) in &suite {
            for trial in 0..3 {
                let args: Vec<SplineSection> = bundles
                    .iter()
                    .map(|b| random_spline(b, 2, &bounds, &ncells, 2, &mut rng).unwrap())
                    .collect();
                let x = random_vector_field(2, 2, &mut rng);
                let mut total = Rational::zero();
                for i in 0..args.len() {
                    let mut moved = args.clone();
                    moved[i] = args[i].lie_derivative(&x).unwrap();
                    total += lambda_functional(kernel, &moved).unwrap();
                }
                assert_eq!(total, rat(0), "kernel arity {} trial {}", kernel.arity(), trial);
            }
        }
    }

    #[test]
    fn almost_natural_evaluation_matches_its_formula() {
        let op = scale_by_integral_op();
        let f = corner_bump(&[0, 0]);
        let g = corner_bump(&[1, 1]);
        let omega = as_top_form(&corner_bump(&[1, 1]));
        let c = integral_of_product(&g, &corner_bump(&[1, 1]));
        let got = evaluate_almost_natural(&op, &[f.clone(), g, omega]).unwrap();
        match got {
            SectionValue::Spline(s) => assert!(s.sub(&f.scale(&c)).unwrap().is_zero()),
            SectionValue::Polynomial(_) => panic!("local slot should give a spline"),
        }
    }

    #[test]
    fn disjoint_blocks_vanish_but_locality_still_fails_in_them() {
        let op = scale_by_integral_op();
        let f = corner_bump(&[0, 0]);
        let g = corner_bump(&[1, 1]);
        let omega_far = as_top_form(&corner_bump(&[0, 1]));
        // disjoint g and omega kill the block functional
        let zeroed = evaluate_almost_natural(&op, &[f.clone(), g.clone(), omega_far]).unwrap();
        assert!(zeroed.is_zero());
        // overlapping g and omega leave a multiple of f far from their support
        let omega_near = as_top_form(&corner_bump(&[1, 1]));
        let lively = evaluate_almost_natural(&op, &[f.clone(), g, omega_near]).unwrap();
        match lively {
            SectionValue::Spline(s) => {
                assert!(!s.is_zero());
                assert_eq!(
                    s.evaluate_at(&[rat(2), rat(2)]),
                    vec![f.evaluate_at(&[rat(2), rat(2)])[0].clone()
                        * s.integrate_scalar().unwrap()
                        / f.integrate_scalar().unwrap()]
                );
            }
            SectionValue::Polynomial(_) => panic!("local slot should give a spline"),
        }
        // the predicate agrees: currying the block out is not local
        assert!(!op.antype().is_local_in(&set(&[2, 3])));
    }

    #[test]
    fn commutation_residual_vanishes_for_the_reference_operator() {
        let op = scale_by_integral_op();
        let mut rng = Prng::new(29);
        let (bounds, ncells) = wide_box(2);
        for _ in 0..2 {
            let f = random_spline(&BundleSpec::scalar(), 2, &bounds, &ncells, 2, &mut rng).unwrap();
            let g = random_spline(&BundleSpec::scalar(), 2, &bounds, &ncells, 2, &mut rng).unwrap();
            let omega =
                random_spline(&BundleSpec::forms(2), 2, &bounds, &ncells, 2, &mut rng).unwrap();
            let x = random_vector_field(2, 2, &mut rng);
            let residual = lie_commutation_residual(&op, &x, &[f, g, omega]).unwrap();
            assert!(residual.is_zero());
        }
    }

    #[test]
    fn invariant_local_part_scales_and_commutes() {
        let antype = AlmostNaturalType::new(1, vec![set(&[1])]).unwrap();
        let mixed = BundleSpec::mixed_tensor(1, 1);
        let inv = invariant_sections(&mixed, 2).unwrap();
        assert_eq!(inv.basis.len(), 1);
        let sigma = PolySection::constant(&mixed, 2, inv.basis[0].clone()).unwrap();
        let op = ElementaryAlmostNatural::new(
            antype,
            &[BundleSpec::forms(2)],
            2,
            vec![kernel_total_volume(2).unwrap()],
            LocalPart::Invariant(sigma.clone()),
        )
        .unwrap();
        let omega = as_top_form(&corner_bump(&[0, 0]).scale(&ratio(3, 2)));
        let got = evaluate_almost_natural(&op, &[omega.clone()]).unwrap();
        match &got {
            SectionValue::Polynomial(p) => {
                assert_eq!(p, &sigma.scale(&omega.integrate().unwrap()))
            }
            SectionValue::Spline(_) => panic!("empty local block should give a polynomial"),
        }
        let mut rng = Prng::new(31);
        let x = random_vector_field(2, 2, &mut rng);
        let residual = lie_commutation_residual(&op, &x, &[omega]).unwrap();
        assert!(residual.is_zero());
    }

    #[test]
    fn broken_pairing_leaves_a_residual() {
        // constant co-density picking one coordinate: not invariant
        let one = BundleSpec::forms(1);
        let sig_bundle = one.dual_density(2).unwrap();
        let sig_dim = Fiber::new(&sig_bundle, 2).unwrap().storage_dim();
        let mut components = vec![Rational::zero(); sig_dim];
        components[0] = rat(1);
        let tau = PolySection::constant(&sig_bundle, 2, components).unwrap();
        let shear = PolySection::from_component_polys(
            &BundleSpec::tangent(),
            2,
            &[Poly::zero(2), Poly::var(2, 0)],
        )
        .unwrap();
        assert!(!lie::lie_derivative(&shear, &tau).unwrap().is_zero());

        let antype = AlmostNaturalType::new(2, vec![set(&[2])]).unwrap();
        let op = ElementaryAlmostNatural::new(
            antype,
            &[BundleSpec::scalar(), one],
            2,
            vec![Kernel::Invariant(tau)],
            LocalPart::Scheme(identity_scalar_scheme(2)),
        )
        .unwrap();
        let f = corner_bump(&[0, 0]);
        let alpha = {
            let bump = corner_bump(&[1, 1]);
            let mut a = SplineSection::zero(&BundleSpec::forms(1), 2, bump.bounds(), bump.ncells(), 3, 2)
                .unwrap();
            for (key, polys) in bump.cells() {
                a.set_cell(key.clone(), vec![Poly::zero(2), polys[0].clone()]);
            }
            a
        };
        let residual = lie_commutation_residual(&op, &shear, &[f, alpha]).unwrap();
        assert!(!residual.is_zero());
    }

    #[test]
    fn different_types_give_independent_functionals() {
        let scalar = BundleSpec::scalar();
        let top = BundleSpec::forms(2);
        let bundles = [scalar.clone(), scalar.clone(), top];
        let t1 = scale_by_integral_op();
        let t2 = ElementaryAlmostNatural::new(
            AlmostNaturalType::new(3, vec![set(&[3])]).unwrap(),
            &bundles,
            2,
            vec![kernel_total_volume(2).unwrap()],
            LocalPart::Scheme(product_scalar_scheme(2)),
        )
        .unwrap();
        let t3 = ElementaryAlmostNatural::new(
            AlmostNaturalType::new(3, vec![set(&[1, 3])]).unwrap(),
            &bundles,
            2,
            vec![kernel_scalar_times_volume(2).unwrap()],
            LocalPart::Scheme(identity_scalar_scheme(2)),
        )
        .unwrap();
        let ops = [&t1, &t2, &t3];
        assert!(ops
            .iter()
            .zip(ops.iter().skip(1))
            .all(|(a, b)| a.antype() != b.antype()));

        let left = corner_bump(&[0, 0]);
        let right = corner_bump(&[1, 1]);
        let probes = [
            [left.clone(), right.clone(), as_top_form(&right)],
            [right.clone(), right.clone(), as_top_form(&left)],
            [right.clone(), left.clone(), as_top_form(&right)],
        ];
        let mut mat = [[Rational::zero(), Rational::zero(), Rational::zero()],
            [Rational::zero(), Rational::zero(), Rational::zero()],
            [Rational::zero(), Rational::zero(), Rational::zero()]];
        for (row, op) in ops.iter().enumerate() {
            for (col, probe) in probes.iter().enumerate() {
                let value = match evaluate_almost_natural(op, probe).unwrap() {
                    SectionValue::Spline(s) => s.integrate_scalar().unwrap(),
                    SectionValue::Polynomial(_) => unreachable!(),
                };
                mat[row][col] = value;
            }
        }
        let det = mat[0][0].clone() * (&mat[1][1] * &mat[2][2] - &mat[1][2] * &mat[2][1])
            - mat[0][1].clone() * (&mat[1][0] * &mat[2][2] - &mat[1][2] * &mat[2][0])
            + mat[0][2].clone() * (&mat[1][0] * &mat[2][1] - &mat[1][1] * &mat[2][0]);
        assert!(!det.is_zero());
    }

    #[test]
    fn scheme_on_splines_agrees_with_derivatives() {
        let scalar = BundleSpec::scalar();
        let mut d = OperatorScheme::new(&[scalar.clone()], &scalar, 1, 2).unwrap();
        d.set_coefficient((vec![(MultiIndex::unit(2, 0), 0)], 0), rat(1)).unwrap();
        let f = corner_bump(&[0, 0]);
        let got = evaluate_scheme_on_splines(&d, &[f.clone()]).unwrap();
        assert_eq!(got, f.derivative(0).unwrap());

        let id = identity_scalar_scheme(2);
        assert_eq!(evaluate_scheme_on_splines(&id, &[f.clone()]).unwrap(), f);
    }

    #[test]
    fn evaluation_validates_shapes_and_smoothness() {
        let id = identity_scalar_scheme(2);
        let f = corner_bump(&[0, 0]);
        assert!(evaluate_scheme_on_splines(&id, &[]).is_err());
        assert!(evaluate_scheme_on_splines(&id, &[as_top_form(&f)]).is_err());

        let mut d = OperatorScheme::new(&[BundleSpec::scalar()], &BundleSpec::scalar(), 3, 2)
            .unwrap();
        d.set_coefficient((vec![(MultiIndex::new(vec![3, 0]), 0)], 0), rat(1)).unwrap();
        match evaluate_scheme_on_splines(&d, &[f]) {
            Err(Error::SmoothnessExhausted { needed: 3, available: 2 }) => {}
            other => panic!("expected smoothness refusal, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn witness_round_trips_include_the_trivial_cases() {
        let psi = unit_bump_1d((rat(0), rat(8)), 8, 3, 2).unwrap();
        // the reference bump itself: c = 1, no derivative part
        let m1_product = psi.clone();
        let (c, gs) = exactness_witness(&m1_product, &psi).unwrap();
        assert_eq!(c, rat(1));
        assert!(gs.iter().all(SplineSection::is_zero));

        // a pure derivative: c = 0 and the round trip is exact
        let h = psi_like_2d();
        let f = h.derivative(0).unwrap();
        let (c, gs) = exactness_witness(&f, &psi).unwrap();
        assert_eq!(c, rat(0));
        let back = reconstruct_from_witness(&c, &gs, &psi).unwrap();
        assert!(back.sub(&f).unwrap().is_zero());
    }

    fn psi_like_2d() -> SplineSection {
        let b = unit_bump_1d((rat(0), rat(8)), 8, 3, 1).unwrap();
        let c = unit_bump_1d((rat(0), rat(8)), 8, 3, 3).unwrap();
        b.tensor_with_1d(1, &c).unwrap()
    }

    #[test]
    fn witness_round_trips_random_sections() {
        let psi = unit_bump_1d((rat(0), rat(8)), 8, 3, 2).unwrap();
        let mut rng = Prng::new(41);
        let (bounds, ncells) = wide_box(2);
        for m in [1usize, 2] {
            for _ in 0..4 {
                let f = random_spline(
                    &BundleSpec::scalar(),
                    m,
                    &bounds[..m],
                    &ncells[..m],
                    2,
                    &mut rng,
                )
                .unwrap();
                let (c, gs) = exactness_witness(&f, &psi).unwrap();
                assert_eq!(c, f.integrate_scalar().unwrap());
                assert_eq!(gs.len(), m);
                let back = reconstruct_from_witness(&c, &gs, &psi).unwrap();
                assert!(back.sub(&f).unwrap().is_zero());
                for g in &gs {
                    g.validate().unwrap();
                }
            }
        }
    }

    #[test]
    fn witness_requires_a_matching_reference_box() {
        let psi4 = psi_bump(1);
        assert_eq!(psi4.integrate_scalar().unwrap(), rat(1));
        let f = corner_bump(&[0]);
        assert!(exactness_witness(&f, &psi4).is_err());
    }
}
