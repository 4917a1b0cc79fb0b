//! Classification of multilinear natural differential operators.
//!
//! A k-linear local operator of order r between natural bundles is pinned
//! down by a single multilinear map on r-jets at the origin, and naturality
//! turns into equivariance of that map under the jet prolongations of vector
//! fields. Equivariance under the connected group follows from its Lie
//! algebra, which is spanned by the polynomial fields `x^beta d_j` with
//! `1 <= |beta| <= r + 2`, so the whole classification problem is a finite
//! exact-rational nullspace computation.
//!
//! The unknowns are the coefficients of the jet map on the monomial basis.
//! Every equation couples only unknowns whose total monomial degree agrees,
//! so the system splits into degree blocks that are solved independently.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::bundle::BundleSpec;
use crate::error::{Error, Result};
use crate::fiber::Fiber;
use crate::lie::lie_derivative;
use crate::linalg::{dense_solve, SparseSystem};
use crate::multiindex::{enumerate_multiindices, MultiIndex};
use crate::poly::Poly;
use crate::rational::{format_ratio, rat, Rational};
use crate::section::PolySection;

/// One coefficient slot of a differentiation scheme: a derivative
/// multi-index and a fiber coordinate per source, plus a target coordinate.
pub type SchemeKey = (Vec<(MultiIndex, usize)>, usize);

/// Limits that make `classify` refuse oversized queries instead of thrashing.
///
/// Hitting a cap reports `Error::ResourceCap`, which callers must not
/// confuse with "the space of operators is empty".
#[derive(Clone, Copy, Debug)]
pub struct ResourceLimits {
    pub max_unknowns: usize,
    /// Cap on generated matrix entries, counted before duplicate columns
    /// inside a row are merged.
    pub max_nonzeros: usize,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        ResourceLimits {
            max_unknowns: 200_000,
            max_nonzeros: 50_000_000,
        }
    }
}

/// A differentiation scheme: a finite linear combination of terms
/// `c * d^alpha_1(s_1)[u_1] * ... * d^alpha_k(s_k)[u_k] -> e_t`,
/// where `[u]` picks a fiber coordinate (a free storage slot for trace-free
/// bundles) and `e_t` is a target fiber coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorScheme {
    sources: Vec<BundleSpec>,
    target: BundleSpec,
    r: usize,
    m: usize,
    src_dims: Vec<usize>,
    tgt_dim: usize,
    coefficients: BTreeMap<SchemeKey, Rational>,
}

impl OperatorScheme {
    pub fn new(sources: &[BundleSpec], target: &BundleSpec, r: usize, m: usize) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::SignatureMismatch(
                "a scheme needs at least one source".into(),
            ));
        }
        let src_dims = sources
            .iter()
            .map(|b| Fiber::new(b, m).map(|f| f.dim()))
            .collect::<Result<Vec<_>>>()?;
        let tgt_dim = Fiber::new(target, m)?.dim();
        Ok(OperatorScheme {
            sources: sources.to_vec(),
            target: target.clone(),
            r,
            m,
            src_dims,
            tgt_dim,
            coefficients: BTreeMap::new(),
        })
    }

    pub fn sources(&self) -> &[BundleSpec] {
        &self.sources
    }

    pub fn target(&self) -> &BundleSpec {
        &self.target
    }

    pub fn order(&self) -> usize {
        self.r
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&SchemeKey, &Rational)> {
        self.coefficients.iter()
    }

    pub fn coefficient(&self, key: &SchemeKey) -> Rational {
        self.coefficients.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn set_coefficient(&mut self, key: SchemeKey, c: Rational) -> Result<()> {
        self.validate_key(&key)?;
        if c.is_zero() {
            self.coefficients.remove(&key);
        } else {
            self.coefficients.insert(key, c);
        }
        Ok(())
    }

    pub fn add_coefficient(&mut self, key: SchemeKey, c: Rational) -> Result<()> {
        let next = self.coefficient(&key) + c;
        self.set_coefficient(key, next)
    }

    fn validate_key(&self, key: &SchemeKey) -> Result<()> {
        let (pairs, t) = key;
        if pairs.len() != self.sources.len() {
            return Err(Error::ShapeMismatch(format!(
                "key has {} slots, scheme has {} sources",
                pairs.len(),
                self.sources.len()
            )));
        }
        for (i, (alpha, u)) in pairs.iter().enumerate() {
            if alpha.len() != self.m {
                return Err(Error::ShapeMismatch(format!(
                    "multi-index length {} in an m = {} scheme",
                    alpha.len(),
                    self.m
                )));
            }
            if alpha.degree() > self.r {
                return Err(Error::ShapeMismatch(format!(
                    "derivative order {} exceeds scheme order {}",
                    alpha.degree(),
                    self.r
                )));
            }
            if *u >= self.src_dims[i] {
                return Err(Error::ShapeMismatch(format!(
                    "component {} out of range for source {}",
                    u, i
                )));
            }
        }
        if *t >= self.tgt_dim {
            return Err(Error::ShapeMismatch(format!(
                "target component {} out of range",
                t
            )));
        }
        Ok(())
    }

    pub fn scale(&mut self, c: &Rational) {
        if c.is_zero() {
            self.coefficients.clear();
            return;
        }
        for v in self.coefficients.values_mut() {
            *v *= c;
        }
    }

    /// Adds `c * other` into `self`; signatures must agree exactly.
    pub fn add_scaled(&mut self, other: &OperatorScheme, c: &Rational) -> Result<()> {
        if self.sources != other.sources || self.target != other.target || self.m != other.m {
            return Err(Error::SignatureMismatch(
                "scheme addition requires identical signatures".into(),
            ));
        }
        if other.r > self.r {
            return Err(Error::SignatureMismatch(format!(
                "cannot add an order-{} scheme into an order-{} scheme",
                other.r, self.r
            )));
        }
        for (key, v) in &other.coefficients {
            self.add_coefficient(key.clone(), v * c)?;
        }
        Ok(())
    }

    /// Applies the scheme to polynomial sections of the source bundles.
    pub fn evaluate(&self, sections: &[PolySection]) -> Result<PolySection> {
        if sections.len() != self.sources.len() {
            return Err(Error::SignatureMismatch(format!(
                "scheme takes {} sections, got {}",
                self.sources.len(),
                sections.len()
            )));
        }
        for (s, b) in sections.iter().zip(&self.sources) {
            if s.bundle() != b {
                return Err(Error::BundleMismatch(format!(
                    "expected a section of {}, got {}",
                    b,
                    s.bundle()
                )));
            }
            if s.m() != self.m {
                return Err(Error::DimensionMismatch {
                    expected: self.m,
                    found: s.m(),
                });
            }
        }
        let coord_polys: Vec<Vec<Poly>> = sections
            .iter()
            .zip(&self.sources)
            .map(|(s, b)| {
                let fiber = Fiber::new(b, self.m)?;
                Ok(coordinate_polys(&fiber, s))
            })
            .collect::<Result<_>>()?;
        let tgt_fiber = Fiber::new(&self.target, self.m)?;
        let tgt_coords = self.apply_to_coordinate_polys(&coord_polys);
        let storage_polys = storage_polys_from_coords(&tgt_fiber, &tgt_coords);
        PolySection::from_component_polys(&self.target, self.m, &storage_polys)
    }

    /// Core of `evaluate`: applies the scheme to one coordinate-polynomial
    /// table per source and returns target coordinate polynomials. Spline
    /// evaluation reuses this cell by cell.
    pub fn apply_to_coordinate_polys(&self, coord_polys: &[Vec<Poly>]) -> Vec<Poly> {
        let mut tgt_coords = vec![Poly::zero(self.m); self.tgt_dim];
        for ((pairs, t), c) in &self.coefficients {
            let mut term = Poly::constant(self.m, c.clone());
            for (i, (alpha, u)) in pairs.iter().enumerate() {
                if term.is_zero() {
                    break;
                }
                term = term.mul(&coord_polys[i][*u].derivative_multi(alpha));
            }
            tgt_coords[*t] = tgt_coords[*t].add(&term);
        }
        tgt_coords
    }

    /// Deterministic plain-text rendering, one line per target coordinate.
    pub fn pretty(&self) -> String {
        if self.coefficients.is_empty() {
            return "0".to_string();
        }
        let mut by_target: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for ((pairs, t), c) in &self.coefficients {
            let factors: Vec<String> = pairs
                .iter()
                .enumerate()
                .map(|(i, (alpha, u))| {
                    if alpha.is_zero() {
                        format!("s{}[{}]", i + 1, u)
                    } else {
                        let exps: Vec<String> =
                            alpha.entries().iter().map(|e| e.to_string()).collect();
                        format!("d^({})s{}[{}]", exps.join(","), i + 1, u)
                    }
                })
                .collect();
            by_target
                .entry(*t)
                .or_default()
                .push(format!("({}) {}", format_ratio(c), factors.join(" ")));
        }
        by_target
            .iter()
            .map(|(t, terms)| format!("out[{}] = {}", t, terms.join(" + ")))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn to_json(&self) -> Value {
        json!({
            "sources": self.sources.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
            "target": self.target.to_string(),
            "r": self.r,
            "m": self.m,
            "terms": scheme_terms_json(self),
        })
    }
}

/// Fiber coordinates of a section, as polynomials in the base variables.
/// For trace-free bundles these are the free storage slots; otherwise the
/// coordinates are the storage components themselves.
pub(crate) fn coordinate_polys(fiber: &Fiber, s: &PolySection) -> Vec<Poly> {
    match fiber.trace_data() {
        Some(td) => td.free_cols.iter().map(|&c| s.component_poly(c)).collect(),
        None => (0..fiber.storage_dim()).map(|c| s.component_poly(c)).collect(),
    }
}

pub(crate) fn storage_polys_from_coords(fiber: &Fiber, coords: &[Poly]) -> Vec<Poly> {
    match fiber.trace_data() {
        Some(td) => {
            let m = fiber.m();
            let mut out = vec![Poly::zero(m); fiber.storage_dim()];
            for (u, poly) in coords.iter().enumerate() {
                for (slot, w) in td.kernel[u].iter().enumerate() {
                    if !w.is_zero() {
                        out[slot] = out[slot].add(&poly.scale(w));
                    }
                }
            }
            out
        }
        None => coords.to_vec(),
    }
}

/// The fiber action `G_{jl}` written in fiber coordinates. For trace-free
/// bundles the storage matrix is conjugated onto the kernel basis, which is
/// stable under the action.
pub fn gl_coord_matrix(fiber: &Fiber, j: usize, l: usize) -> Vec<Vec<Rational>> {
    let g = fiber.gl_matrix(j, l);
    if fiber.trace_data().is_none() {
        return g;
    }
    let dim = fiber.dim();
    let sdim = fiber.storage_dim();
    let mut out = vec![vec![Rational::zero(); dim]; dim];
    for u in 0..dim {
        let mut e = vec![Rational::zero(); dim];
        e[u] = Rational::one();
        let storage = fiber.coords_to_storage(&e);
        let mut image = vec![Rational::zero(); sdim];
        for (row, out_slot) in image.iter_mut().enumerate() {
            for (col, v) in storage.iter().enumerate() {
                if !v.is_zero() && !g[row][col].is_zero() {
                    *out_slot += &g[row][col] * v;
                }
            }
        }
        let coords = fiber.storage_to_coords(&image);
        debug_assert_eq!(fiber.coords_to_storage(&coords), image);
        for (row, v) in coords.into_iter().enumerate() {
            out[row][u] = v;
        }
    }
    out
}

/// Jet-space data for one source bundle.
struct SourceData {
    dim: usize,
    monomials: Vec<MultiIndex>,
    mon_deg: Vec<usize>,
    mon_index: BTreeMap<MultiIndex, usize>,
    jet_dim: usize,
    /// gl_cols[j][l][u] lists the nonzero entries of column u of G_{jl}.
    gl_cols: Vec<Vec<Vec<Vec<(usize, Rational)>>>>,
}

impl SourceData {
    fn build(bundle: &BundleSpec, m: usize, r: usize) -> Result<SourceData> {
        let fiber = Fiber::new(bundle, m)?;
        let dim = fiber.dim();
        let monomials = enumerate_multiindices(m, r);
        let mon_deg: Vec<usize> = monomials.iter().map(|g| g.degree()).collect();
        let mon_index: BTreeMap<MultiIndex, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        let jet_dim = monomials.len() * dim;
        let mut gl_cols = Vec::with_capacity(m);
        for j in 0..m {
            let mut row = Vec::with_capacity(m);
            for l in 0..m {
                let g = gl_coord_matrix(&fiber, j, l);
                let cols: Vec<Vec<(usize, Rational)>> = (0..dim)
                    .map(|u| {
                        (0..dim)
                            .filter(|&u2| !g[u2][u].is_zero())
                            .map(|u2| (u2, g[u2][u].clone()))
                            .collect()
                    })
                    .collect();
                row.push(cols);
            }
            gl_cols.push(row);
        }
        Ok(SourceData {
            dim,
            monomials,
            mon_deg,
            mon_index,
            jet_dim,
            gl_cols,
        })
    }

    /// Expansion of `L_{x^beta d_j}` on the truncated jet basis: for each
    /// jet element, the list of (jet element, coefficient) it maps to.
    /// On `x^gamma e_u` the action is
    /// `gamma_j x^{gamma+beta-e_j} e_u - sum_l beta_l x^{gamma+beta-e_l} G_{jl} e_u`,
    /// with monomials above degree r cut off.
    fn action_table(&self, j: usize, beta: &MultiIndex) -> Vec<Vec<(usize, Rational)>> {
        let m = beta.len();
        let mut out = vec![Vec::new(); self.jet_dim];
        for (gi, gamma) in self.monomials.iter().enumerate() {
            let shifted = gamma.add(beta);
            let transport = if gamma.get(j) > 0 {
                shifted
                    .checked_sub(&MultiIndex::unit(m, j))
                    .and_then(|gp| self.mon_index.get(&gp))
                    .map(|&mi| (mi, rat(gamma.get(j) as i64)))
            } else {
                None
            };
            let mut gl_moves: Vec<(usize, usize, Rational)> = Vec::new();
            for l in 0..m {
                let bl = beta.get(l);
                if bl == 0 {
                    continue;
                }
                if let Some(gp) = shifted.checked_sub(&MultiIndex::unit(m, l)) {
                    if let Some(&mi) = self.mon_index.get(&gp) {
                        gl_moves.push((mi, l, rat(-(bl as i64))));
                    }
                }
            }
            for u in 0..self.dim {
                let e = gi * self.dim + u;
                if let Some((mi, ref c)) = transport {
                    out[e].push((mi * self.dim + u, c.clone()));
                }
                for (mi, l, c) in &gl_moves {
                    for (u2, g) in &self.gl_cols[j][*l][u] {
                        out[e].push((mi * self.dim + u2, c * g));
                    }
                }
            }
        }
        out
    }
}

struct BlockSystem {
    degree: usize,
    /// Global unknown indices, in column order.
    members: Vec<usize>,
    system: SparseSystem,
}

/// The equivariance equations for one classification query, split into
/// total-degree blocks.
pub struct AssembledSystem {
    sources: Vec<BundleSpec>,
    target: BundleSpec,
    r: usize,
    m: usize,
    src: Vec<SourceData>,
    tdim: usize,
    total: usize,
    nonzeros: usize,
    blocks: Vec<BlockSystem>,
}

impl AssembledSystem {
    pub fn unknown_count(&self) -> usize {
        self.total
    }

    pub fn nonzero_count(&self) -> usize {
        self.nonzeros
    }

    /// Per block: (total jet degree, unknowns, equations).
    pub fn block_summary(&self) -> Vec<(usize, usize, usize)> {
        self.blocks
            .iter()
            .map(|b| (b.degree, b.members.len(), b.system.nrows()))
            .collect()
    }

    fn decode_unknown(&self, mut g: usize) -> (Vec<(MultiIndex, usize)>, usize, BigInt) {
        let t = g % self.tdim;
        g /= self.tdim;
        let k = self.src.len();
        let mut pairs = vec![(MultiIndex::zero(self.m), 0usize); k];
        let mut fact = BigInt::one();
        for i in (0..k).rev() {
            let e = g % self.src[i].jet_dim;
            g /= self.src[i].jet_dim;
            let gamma = self.src[i].monomials[e / self.src[i].dim].clone();
            let u = e % self.src[i].dim;
            fact *= gamma.factorial();
            pairs[i] = (gamma, u);
        }
        (pairs, t, fact)
    }

    /// Solves each degree block and converts nullspace vectors into schemes.
    ///
    /// The jet-map coefficient on a monomial tuple `x^gamma_i e_u_i` equals
    /// the scheme coefficient times `prod_i gamma_i!`, so nullspace entries
    /// are divided by that factor on the way out.
    pub fn solve(mut self) -> Result<Vec<OperatorScheme>> {
        let template = OperatorScheme::new(&self.sources, &self.target, self.r, self.m)?;
        let mut basis = Vec::new();
        for block in std::mem::take(&mut self.blocks) {
            let ech = block.system.eliminate();
            for v in ech.nullspace_basis() {
                let mut scheme = template.clone();
                for (col, value) in v.into_iter().enumerate() {
                    if value.is_zero() {
                        continue;
                    }
                    let (pairs, t, fact) = self.decode_unknown(block.members[col]);
                    let c = value / Rational::from_integer(fact);
                    scheme.set_coefficient((pairs, t), c)?;
                }
                basis.push(scheme);
            }
        }
        Ok(basis)
    }
}

/// Builds the equivariance equations for k-linear order-r operators with the
/// given sources and target over R^m.
pub fn assemble_system(
    sources: &[BundleSpec],
    target: &BundleSpec,
    r: usize,
    m: usize,
    limits: &ResourceLimits,
) -> Result<AssembledSystem> {
    if sources.is_empty() {
        return Err(Error::SignatureMismatch(
            "classification needs at least one source".into(),
        ));
    }
    if m == 0 {
        return Err(Error::ShapeMismatch("base dimension must be positive".into()));
    }
    let src: Vec<SourceData> = sources
        .iter()
        .map(|b| SourceData::build(b, m, r))
        .collect::<Result<_>>()?;
    let tgt_fiber = Fiber::new(target, m)?;
    let tdim = tgt_fiber.dim();
    let k = sources.len();

    let mut wide: u128 = tdim as u128;
    for s in &src {
        wide = wide.saturating_mul(s.jet_dim as u128);
    }
    if wide > limits.max_unknowns as u128 {
        return Err(Error::ResourceCap {
            what: "unknowns",
            found: wide.min(usize::MAX as u128) as usize,
            cap: limits.max_unknowns,
        });
    }
    let total = wide as usize;
    if total == 0 {
        // a zero-dimensional fiber kills every operator
        return Ok(AssembledSystem {
            sources: sources.to_vec(),
            target: target.clone(),
            r,
            m,
            src,
            tdim,
            total,
            nonzeros: 0,
            blocks: Vec::new(),
        });
    }

    let mut strides = vec![0usize; k];
    let mut acc = tdim;
    for i in (0..k).rev() {
        strides[i] = acc;
        acc *= src[i].jet_dim;
    }

    // column layout: the odometer below visits globals in increasing order,
    // so columns inside a block are sorted by global index
    let nblocks = k * r + 1;
    let mut place: Vec<(usize, usize)> = Vec::with_capacity(total);
    let mut blocks: Vec<BlockSystem> = (0..nblocks)
        .map(|degree| BlockSystem {
            degree,
            members: Vec::new(),
            system: SparseSystem::new(0),
        })
        .collect();
    {
        let mut idx = vec![0usize; k];
        'layout: loop {
            let gdeg: usize = idx
                .iter()
                .zip(&src)
                .map(|(&e, s)| s.mon_deg[e / s.dim])
                .sum();
            for _ in 0..tdim {
                let global = place.len();
                place.push((gdeg, blocks[gdeg].members.len()));
                blocks[gdeg].members.push(global);
            }
            let mut pos = k;
            while pos > 0 {
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < src[pos].jet_dim {
                    continue 'layout;
                }
                idx[pos] = 0;
            }
            break;
        }
    }
    assert_eq!(place.len(), total);
    for block in &mut blocks {
        block.system = SparseSystem::new(block.members.len());
    }

    let mut nonzeros = 0usize;
    let betas: Vec<MultiIndex> = enumerate_multiindices(m, r + 2)
        .into_iter()
        .filter(|b| b.degree() >= 1)
        .collect();
    for beta in &betas {
        let bdeg = beta.degree();
        for j in 0..m {
            let actions: Vec<Vec<Vec<(usize, Rational)>>> =
                src.iter().map(|s| s.action_table(j, beta)).collect();
            // the value-level action on the target only sees the constant
            // part of the field's derivative, so it appears for |beta| = 1
            let tgt_rows: Option<Vec<Vec<(usize, Rational)>>> = if bdeg == 1 {
                let l = (0..m).find(|&l| beta.get(l) == 1).expect("degree-1 index");
                let g = gl_coord_matrix(&tgt_fiber, j, l);
                Some(
                    (0..tdim)
                        .map(|t| {
                            (0..tdim)
                                .filter(|&t2| !g[t][t2].is_zero())
                                .map(|t2| (t2, g[t][t2].clone()))
                                .collect()
                        })
                        .collect(),
                )
            } else {
                None
            };
            let any = actions.iter().any(|a| a.iter().any(|v| !v.is_empty()))
                || tgt_rows
                    .as_ref()
                    .map_or(false, |ts| ts.iter().any(|v| !v.is_empty()));
            if bdeg == r + 2 {
                // the top band certifies that the generator list is long
                // enough: everything it could produce is cut off at order r
                assert!(!any, "top-degree jet generators must act by zero");
            }
            if !any {
                continue;
            }

            let mut idx = vec![0usize; k];
            'rows: loop {
                let gdeg: usize = idx
                    .iter()
                    .zip(&src)
                    .map(|(&e, s)| s.mon_deg[e / s.dim])
                    .sum();
                let base: usize = idx.iter().zip(&strides).map(|(&e, &st)| e * st).sum();
                let mut slot_terms: Vec<(usize, Rational)> = Vec::new();
                for (i, act) in actions.iter().enumerate() {
                    let rebase = base - idx[i] * strides[i];
                    for (e2, c) in &act[idx[i]] {
                        slot_terms.push((rebase + e2 * strides[i], c.clone()));
                    }
                }
                let has_tgt = tgt_rows
                    .as_ref()
                    .map_or(false, |ts| ts.iter().any(|v| !v.is_empty()));
                if !slot_terms.is_empty() || has_tgt {
                    let block = gdeg + bdeg - 1;
                    for t in 0..tdim {
                        let mut row: Vec<(usize, Rational)> =
                            Vec::with_capacity(slot_terms.len() + tdim);
                        for (g0, c) in &slot_terms {
                            let (b2, col) = place[g0 + t];
                            debug_assert_eq!(b2, block);
                            row.push((col, c.clone()));
                        }
                        if let Some(ts) = &tgt_rows {
                            for (t2, c) in &ts[t] {
                                let (b2, col) = place[base + t2];
                                debug_assert_eq!(b2, block);
                                row.push((col, c.clone()));
                            }
                        }
                        nonzeros += row.len();
                        if nonzeros > limits.max_nonzeros {
                            return Err(Error::ResourceCap {
                                what: "matrix entries",
                                found: nonzeros,
                                cap: limits.max_nonzeros,
                            });
                        }
                        blocks[block].system.push_rational_row(row);
                    }
                }
                let mut pos = k;
                while pos > 0 {
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < src[pos].jet_dim {
                        continue 'rows;
                    }
                    idx[pos] = 0;
                }
                break;
            }
        }
    }

    Ok(AssembledSystem {
        sources: sources.to_vec(),
        target: target.clone(),
        r,
        m,
        src,
        tdim,
        total,
        nonzeros,
        blocks,
    })
}

/// The result of a classification query: a canonical basis of the space of
/// k-linear order-r natural operators with the given signature.
pub struct ClassificationResult {
    sources: Vec<BundleSpec>,
    target: BundleSpec,
    r: usize,
    m: usize,
    basis: Vec<OperatorScheme>,
}

impl ClassificationResult {
    pub fn sources(&self) -> &[BundleSpec] {
        &self.sources
    }

    pub fn target(&self) -> &BundleSpec {
        &self.target
    }

    pub fn order(&self) -> usize {
        self.r
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[OperatorScheme] {
        &self.basis
    }

    pub fn to_json(&self) -> Value {
        json!({
            "query": {
                "sources": self.sources.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
                "target": self.target.to_string(),
                "r": self.r,
                "m": self.m,
            },
            "dimension": self.basis.len(),
            "basis": self.basis.iter().map(scheme_terms_json).collect::<Vec<_>>(),
        })
    }
}

fn scheme_terms_json(s: &OperatorScheme) -> Value {
    let terms: Vec<Value> = s
        .coefficients
        .iter()
        .map(|((pairs, t), c)| {
            json!({
                "alphas": pairs.iter().map(|(a, _)| a.entries().to_vec()).collect::<Vec<_>>(),
                "src_components": pairs.iter().map(|(_, u)| *u).collect::<Vec<_>>(),
                "tgt_component": t,
                "coeff": format_ratio(c),
            })
        })
        .collect();
    json!({ "terms": terms })
}

/// Classifies all k-linear order-r natural operators with the given
/// signature over R^m. The basis is canonical: degree blocks in increasing
/// order, canonical nullspace vectors within each block.
pub fn classify(
    sources: &[BundleSpec],
    target: &BundleSpec,
    r: usize,
    m: usize,
    limits: &ResourceLimits,
) -> Result<ClassificationResult> {
    let assembled = assemble_system(sources, target, r, m, limits)?;
    let basis = assembled.solve()?;
    Ok(ClassificationResult {
        sources: sources.to_vec(),
        target: target.clone(),
        r,
        m,
        basis,
    })
}

/// Expresses `candidate` in the basis of `result`, or reports that it lies
/// outside the span. The candidate may have lower order; its signature must
/// match otherwise.
pub fn match_against(
    result: &ClassificationResult,
    candidate: &OperatorScheme,
) -> Result<Option<Vec<Rational>>> {
    if candidate.sources != result.sources
        || candidate.target != result.target
        || candidate.m != result.m
    {
        return Err(Error::SignatureMismatch(
            "matching requires identical sources, target, and base dimension".into(),
        ));
    }
    if candidate.r > result.r {
        return Err(Error::SignatureMismatch(format!(
            "candidate order {} exceeds classified order {}",
            candidate.r, result.r
        )));
    }
    let mut keys: BTreeSet<&SchemeKey> = BTreeSet::new();
    for b in &result.basis {
        keys.extend(b.coefficients.keys());
    }
    keys.extend(candidate.coefficients.keys());
    let rows: Vec<Vec<Rational>> = keys
        .iter()
        .map(|key| result.basis.iter().map(|b| b.coefficient(key)).collect())
        .collect();
    let rhs: Vec<Rational> = keys.iter().map(|key| candidate.coefficient(key)).collect();
    Ok(dense_solve(result.basis.len(), &rows, &rhs))
}

/// Reads off the scheme of a concrete k-linear operator by probing it with
/// monomial sections. `op` must be k-linear and of order at most r; the
/// scheme then reproduces it on every polynomial input.
pub fn scheme_from_op<F>(
    op: F,
    sources: &[BundleSpec],
    target: &BundleSpec,
    r: usize,
    m: usize,
) -> Result<OperatorScheme>
where
    F: Fn(&[PolySection]) -> Result<PolySection>,
{
    let mut scheme = OperatorScheme::new(sources, target, r, m)?;
    let src: Vec<(Fiber, Vec<MultiIndex>)> = sources
        .iter()
        .map(|b| Ok((Fiber::new(b, m)?, enumerate_multiindices(m, r))))
        .collect::<Result<_>>()?;
    let tgt_fiber = Fiber::new(target, m)?;
    let dims: Vec<usize> = src.iter().map(|(f, mons)| f.dim() * mons.len()).collect();
    if dims.iter().any(|&d| d == 0) || tgt_fiber.dim() == 0 {
        return Ok(scheme);
    }
    let k = sources.len();
    let mut idx = vec![0usize; k];
    'probe: loop {
        let mut args = Vec::with_capacity(k);
        let mut pairs = Vec::with_capacity(k);
        let mut fact = BigInt::one();
        for (i, (fiber, mons)) in src.iter().enumerate() {
            let gamma = mons[idx[i] / fiber.dim()].clone();
            let u = idx[i] % fiber.dim();
            let mut coords = vec![Rational::zero(); fiber.dim()];
            coords[u] = Rational::one();
            let storage = fiber.coords_to_storage(&coords);
            let mut section = PolySection::zero(&sources[i], m)?;
            section.set_coeff(gamma.clone(), storage);
            args.push(section);
            fact *= gamma.factorial();
            pairs.push((gamma, u));
        }
        let out = op(&args)?;
        let coords = tgt_fiber.storage_to_coords(&out.value_at_origin());
        let fact = Rational::from_integer(fact);
        for (t, c) in coords.into_iter().enumerate() {
            if !c.is_zero() {
                scheme.set_coefficient((pairs.clone(), t), c / &fact)?;
            }
        }
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < dims[pos] {
                continue 'probe;
            }
            idx[pos] = 0;
        }
        break;
    }
    Ok(scheme)
}

pub fn scheme_from_unary<F>(
    op: F,
    source: &BundleSpec,
    target: &BundleSpec,
    r: usize,
    m: usize,
) -> Result<OperatorScheme>
where
    F: Fn(&PolySection) -> Result<PolySection>,
{
    scheme_from_op(|args| op(&args[0]), &[source.clone()], target, r, m)
}

pub fn scheme_from_bilinear<F>(
    op: F,
    sources: (&BundleSpec, &BundleSpec),
    target: &BundleSpec,
    r: usize,
    m: usize,
) -> Result<OperatorScheme>
where
    F: Fn(&PolySection, &PolySection) -> Result<PolySection>,
{
    scheme_from_op(
        |args| op(&args[0], &args[1]),
        &[sources.0.clone(), sources.1.clone()],
        target,
        r,
        m,
    )
}

/// The defect of naturality on concrete inputs:
/// `L_X(D(s_1,..,s_k)) - sum_i D(.., L_X s_i, ..)`.
pub fn equivariance_residual(
    scheme: &OperatorScheme,
    x: &PolySection,
    sections: &[PolySection],
) -> Result<PolySection> {
    let applied = scheme.evaluate(sections)?;
    let mut residual = lie_derivative(x, &applied)?;
    for i in 0..sections.len() {
        let mut args = sections.to_vec();
        args[i] = lie_derivative(x, &sections[i])?;
        residual = residual.sub(&scheme.evaluate(&args)?)?;
    }
    Ok(residual)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for tail in permutations(k - 1) {
        for slot in 0..k {
            let mut perm = tail.clone();
            perm.insert(slot, k - 1);
            out.push(perm);
        }
    }
    out
}

/// Averages a scheme over all permutations of its arguments. All sources
/// must coincide for the permuted schemes to share a signature.
pub fn symmetrize_scheme(scheme: &OperatorScheme) -> Result<OperatorScheme> {
    let k = scheme.sources.len();
    if scheme.sources.iter().any(|b| b != &scheme.sources[0]) {
        return Err(Error::SignatureMismatch(
            "symmetrization requires identical sources".into(),
        ));
    }
    let mut out = OperatorScheme::new(&scheme.sources, &scheme.target, scheme.r, scheme.m)?;
    let weight = Rational::new(BigInt::one(), crate::rational::factorial(k));
    for ((pairs, t), c) in &scheme.coefficients {
        for perm in permutations(k) {
            let new_pairs: Vec<(MultiIndex, usize)> =
                perm.iter().map(|&i| pairs[i].clone()).collect();
            out.add_coefficient((new_pairs, *t), c * &weight)?;
        }
    }
    Ok(out)
}
