//! Compactly supported piecewise-polynomial sections on rational grids.
//!
//! Integration functionals need sections that vanish outside a box, which
//! polynomial sections never do. Tensor-product splines over uniform
//! rational grids fill the gap: the class is closed under derivatives,
//! multiplication by polynomials, fiberwise linear maps, Lie derivatives
//! along polynomial fields, and exact cell-by-cell integration, so every
//! integral identity can be checked to literal equality.
//!
//! Cell polynomials live in global coordinates. Refining a grid therefore
//! never touches coefficients, it only re-keys cells, which is what makes
//! mixed-grid arithmetic cheap and exact.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::bundle::BundleSpec;
use crate::error::{Error, Result};
use crate::fiber::Fiber;
use crate::multiindex::MultiIndex;
use crate::poly::Poly;
use crate::probe::Prng;
use crate::rational::{format_ratio, rat, Rational};
use crate::section::PolySection;

/// A section that is piecewise polynomial over a uniform grid on a box and
/// identically zero outside. `smoothness` is the guaranteed global C^s
/// class, checked exactly by `validate`; `degree` bounds the per-axis degree
/// of every cell polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplineSection {
    bundle: BundleSpec,
    m: usize,
    storage_dim: usize,
    bounds: Vec<(Rational, Rational)>,
    ncells: Vec<usize>,
    degree: usize,
    smoothness: usize,
    cells: BTreeMap<Vec<usize>, Vec<Poly>>,
}

impl SplineSection {
    pub fn zero(
        bundle: &BundleSpec,
        m: usize,
        bounds: &[(Rational, Rational)],
        ncells: &[usize],
        degree: usize,
        smoothness: usize,
    ) -> Result<Self> {
        if bounds.len() != m || ncells.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "expected {} axis bounds and cell counts, got {} and {}",
                m,
                bounds.len(),
                ncells.len()
            )));
        }
        if bounds.iter().any(|(lo, hi)| lo >= hi) || ncells.iter().any(|&n| n == 0) {
            return Err(Error::ShapeMismatch("degenerate spline grid".into()));
        }
        if degree < smoothness + 1 {
            return Err(Error::ShapeMismatch(format!(
                "degree {} cannot carry C^{} smoothness",
                degree, smoothness
            )));
        }
        let storage_dim = Fiber::new(bundle, m)?.storage_dim();
        Ok(SplineSection {
            bundle: bundle.clone(),
            m,
            storage_dim,
            bounds: bounds.to_vec(),
            ncells: ncells.to_vec(),
            degree,
            smoothness,
            cells: BTreeMap::new(),
        })
    }

    pub fn bundle(&self) -> &BundleSpec {
        &self.bundle
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn storage_dim(&self) -> usize {
        self.storage_dim
    }

    pub fn bounds(&self) -> &[(Rational, Rational)] {
        &self.bounds
    }

    pub fn ncells(&self) -> &[usize] {
        &self.ncells
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn is_zero(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = (&Vec<usize>, &Vec<Poly>)> {
        self.cells.iter()
    }

    fn knot(&self, axis: usize, j: usize) -> Rational {
        let (lo, hi) = &self.bounds[axis];
        lo + (hi - lo) * Rational::new(BigInt::from(j), BigInt::from(self.ncells[axis]))
    }

    pub(crate) fn cell_bounds(&self, key: &[usize]) -> Vec<(Rational, Rational)> {
        (0..self.m)
            .map(|a| (self.knot(a, key[a]), self.knot(a, key[a] + 1)))
            .collect()
    }

    pub(crate) fn set_cell(&mut self, key: Vec<usize>, polys: Vec<Poly>) {
        debug_assert_eq!(polys.len(), self.storage_dim);
        debug_assert!(key.iter().zip(&self.ncells).all(|(&j, &n)| j < n));
        if polys.iter().all(Poly::is_zero) {
            self.cells.remove(&key);
        } else {
            self.cells.insert(key, polys);
        }
    }

    pub(crate) fn cell_polys(&self, key: &[usize]) -> Vec<Poly> {
        self.cells
            .get(key)
            .cloned()
            .unwrap_or_else(|| vec![Poly::zero(self.m); self.storage_dim])
    }

    pub(crate) fn recompute_degree(&mut self) {
        let mut d = 0;
        for polys in self.cells.values() {
            for p in polys {
                for a in 0..self.m {
                    d = d.max(p.degree_in(a));
                }
            }
        }
        self.degree = d.max(self.smoothness + 1);
    }

    /// Splits every cell along each axis by the given factor. Coefficients
    /// are untouched because cell polynomials use global coordinates.
    pub fn refine(&self, factors: &[usize]) -> SplineSection {
        assert_eq!(factors.len(), self.m);
        assert!(factors.iter().all(|&f| f >= 1));
        let mut out = self.clone();
        out.ncells = self
            .ncells
            .iter()
            .zip(factors)
            .map(|(&n, &f)| n * f)
            .collect();
        out.cells = BTreeMap::new();
        for (key, polys) in &self.cells {
            let mut sub = vec![0usize; self.m];
            'copy: loop {
                let new_key: Vec<usize> = key
                    .iter()
                    .zip(factors)
                    .zip(&sub)
                    .map(|((&j, &f), &s)| j * f + s)
                    .collect();
                out.cells.insert(new_key, polys.clone());
                let mut pos = self.m;
                while pos > 0 {
                    pos -= 1;
                    sub[pos] += 1;
                    if sub[pos] < factors[pos] {
                        continue 'copy;
                    }
                    sub[pos] = 0;
                }
                break;
            }
        }
        out
    }

    /// Refines both operands onto their least common grid. Boxes must agree.
    pub fn common_grid(a: &SplineSection, b: &SplineSection) -> Result<(SplineSection, SplineSection)> {
        let mut v = SplineSection::common_grid_all(&[a.clone(), b.clone()])?;
        let b = v.pop().expect("two results");
        let a = v.pop().expect("two results");
        Ok((a, b))
    }

    /// `common_grid` for any number of sections at once.
    pub fn common_grid_all(splines: &[SplineSection]) -> Result<Vec<SplineSection>> {
        let first = splines.first().expect("at least one section");
        if splines.iter().any(|s| s.m != first.m || s.bounds != first.bounds) {
            return Err(Error::ShapeMismatch(
                "splines live on different boxes".into(),
            ));
        }
        let mut lcm = first.ncells.clone();
        for s in splines {
            for (l, &n) in lcm.iter_mut().zip(&s.ncells) {
                *l = l.lcm(&n);
            }
        }
        Ok(splines
            .iter()
            .map(|s| {
                let factors: Vec<usize> =
                    lcm.iter().zip(&s.ncells).map(|(&l, &n)| l / n).collect();
                s.refine(&factors)
            })
            .collect())
    }

    pub fn add(&self, other: &SplineSection) -> Result<SplineSection> {
        if self.bundle != other.bundle || self.m != other.m {
            return Err(Error::BundleMismatch(format!(
                "cannot add a section of {} to one of {}",
                other.bundle, self.bundle
            )));
        }
        let (mut a, b) = SplineSection::common_grid(self, other)?;
        a.smoothness = self.smoothness.min(other.smoothness);
        a.degree = self.degree.max(other.degree);
        for (key, polys) in &b.cells {
            let mut acc = a.cell_polys(key);
            for (slot, p) in acc.iter_mut().zip(polys) {
                *slot = slot.add(p);
            }
            a.set_cell(key.clone(), acc);
        }
        Ok(a)
    }

    pub fn sub(&self, other: &SplineSection) -> Result<SplineSection> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> SplineSection {
        self.scale(&rat(-1))
    }

    pub fn scale(&self, c: &Rational) -> SplineSection {
        let mut out = self.clone();
        if c.is_zero() {
            out.cells.clear();
            return out;
        }
        for polys in out.cells.values_mut() {
            for p in polys.iter_mut() {
                *p = p.scale(c);
            }
        }
        out
    }

    /// Multiplies every component by a global polynomial. Smoothness is
    /// unchanged; the degree bound grows by the polynomial's degree.
    pub fn mul_poly(&self, p: &Poly) -> SplineSection {
        assert_eq!(p.vars(), self.m);
        let mut out = self.clone();
        out.cells = BTreeMap::new();
        for (key, polys) in &self.cells {
            out.set_cell(key.clone(), polys.iter().map(|q| q.mul(p)).collect());
        }
        out.degree = self.degree + p.total_degree();
        out
    }

    /// Applies a constant fiberwise linear map in storage coordinates.
    pub fn apply_matrix(&self, mat: &[Vec<Rational>]) -> SplineSection {
        assert_eq!(mat.len(), self.storage_dim);
        let mut out = self.clone();
        out.cells = BTreeMap::new();
        for (key, polys) in &self.cells {
            let mapped: Vec<Poly> = mat
                .iter()
                .map(|row| {
                    let mut acc = Poly::zero(self.m);
                    for (c, p) in row.iter().zip(polys) {
                        if !c.is_zero() && !p.is_zero() {
                            acc = acc.add(&p.scale(c));
                        }
                    }
                    acc
                })
                .collect();
            out.set_cell(key.clone(), mapped);
        }
        out
    }

    /// Componentwise partial derivative. Costs one order of smoothness;
    /// refuses once continuity can no longer be guaranteed.
    pub fn derivative(&self, axis: usize) -> Result<SplineSection> {
        if self.smoothness == 0 {
            return Err(Error::SmoothnessExhausted {
                needed: 1,
                available: 0,
            });
        }
        let mut out = self.clone();
        out.smoothness = self.smoothness - 1;
        out.cells = BTreeMap::new();
        for (key, polys) in &self.cells {
            out.set_cell(
                key.clone(),
                polys.iter().map(|p| p.derivative(axis)).collect(),
            );
        }
        out.recompute_degree();
        Ok(out)
    }

    /// Lie derivative along a polynomial vector field, `X^j d_j(s)` minus
    /// the fiber action of the field's Jacobian.
    pub fn lie_derivative(&self, x: &PolySection) -> Result<SplineSection> {
        if x.bundle() != &BundleSpec::tangent() || x.m() != self.m {
            return Err(Error::BundleMismatch(
                "Lie derivatives are taken along tangent fields".into(),
            ));
        }
        if self.smoothness == 0 {
            return Err(Error::SmoothnessExhausted {
                needed: 1,
                available: 0,
            });
        }
        let fiber = Fiber::new(&self.bundle, self.m)?;
        let mut out = SplineSection::zero(
            &self.bundle,
            self.m,
            &self.bounds,
            &self.ncells,
            self.degree,
            self.smoothness - 1,
        )?;
        for j in 0..self.m {
            let xj = x.component_poly(j);
            if !xj.is_zero() {
                out = out.add(&self.derivative(j)?.mul_poly(&xj))?;
            }
            for l in 0..self.m {
                let dxl = xj.derivative(l);
                if dxl.is_zero() {
                    continue;
                }
                let g = fiber.gl_matrix(j, l);
                out = out.sub(&self.apply_matrix(&g).mul_poly(&dxl))?;
            }
        }
        Ok(out)
    }

    /// Storage components at a point; zero outside the box. Cells are taken
    /// half-open, with the top boundary closed on the last cell.
    pub fn evaluate_at(&self, point: &[Rational]) -> Vec<Rational> {
        assert_eq!(point.len(), self.m);
        let mut key = Vec::with_capacity(self.m);
        for a in 0..self.m {
            let (lo, hi) = &self.bounds[a];
            if point[a] < *lo || point[a] > *hi {
                return vec![Rational::zero(); self.storage_dim];
            }
            let rel = (&point[a] - lo) / (hi - lo) * rat(self.ncells[a] as i64);
            let mut j = rel.floor().to_integer().to_usize().unwrap_or(0);
            if j == self.ncells[a] {
                j -= 1;
            }
            key.push(j);
        }
        match self.cells.get(&key) {
            Some(polys) => polys.iter().map(|p| p.eval(point)).collect(),
            None => vec![Rational::zero(); self.storage_dim],
        }
    }

    fn integrate_component(&self, component: usize) -> Rational {
        let mut acc = Rational::zero();
        for (key, polys) in &self.cells {
            if !polys[component].is_zero() {
                acc += polys[component].integrate_box(&self.cell_bounds(key));
            }
        }
        acc
    }

    /// Integral of a top-degree form over the whole base.
    pub fn integrate(&self) -> Result<Rational> {
        use crate::bundle::Variance;
        if self.bundle.as_alt_power() != Some((Variance::Lower, self.m)) {
            return Err(Error::NotAFormBundle(format!(
                "integration needs a top-degree form, got {}",
                self.bundle
            )));
        }
        Ok(self.integrate_component(0))
    }

    /// Integral of a scalar function over the whole base.
    pub fn integrate_scalar(&self) -> Result<Rational> {
        if !self.bundle.is_scalar() {
            return Err(Error::BundleMismatch(format!(
                "expected a scalar section, got {}",
                self.bundle
            )));
        }
        Ok(self.integrate_component(0))
    }

    /// Integrates a scalar spline over one axis, producing a spline in the
    /// remaining variables.
    pub fn integrate_axis(&self, axis: usize) -> Result<SplineSection> {
        if !self.bundle.is_scalar() {
            return Err(Error::BundleMismatch(
                "axis integration is defined for scalar sections".into(),
            ));
        }
        assert!(axis < self.m);
        let mut bounds = self.bounds.clone();
        bounds.remove(axis);
        let mut ncells = self.ncells.clone();
        ncells.remove(axis);
        let mut out = SplineSection::zero(
            &self.bundle,
            self.m - 1,
            &bounds,
            &ncells,
            self.degree,
            self.smoothness,
        )?;
        for (key, polys) in &self.cells {
            let lo = self.knot(axis, key[axis]);
            let hi = self.knot(axis, key[axis] + 1);
            let anti = polys[0].antiderivative(axis);
            let slab = anti
                .substitute_axis(axis, &hi)
                .sub(&anti.substitute_axis(axis, &lo));
            if slab.is_zero() {
                continue;
            }
            let mut new_key = key.clone();
            new_key.remove(axis);
            let mut acc = out.cell_polys(&new_key);
            acc[0] = acc[0].add(&slab);
            out.set_cell(new_key, acc);
        }
        out.recompute_degree();
        Ok(out)
    }

    /// Running integral along one axis from the lower box edge. The result
    /// is compactly supported only when every axis line integrates to zero;
    /// anything else is refused.
    pub fn antiderivative_axis(&self, axis: usize) -> Result<SplineSection> {
        assert!(axis < self.m);
        // smoothness only improves along the integrated axis, so the global
        // claim gains a degree only when there is no transverse direction
        let smoothness = if self.m == 1 {
            self.smoothness + 1
        } else {
            self.smoothness
        };
        let mut out = SplineSection::zero(
            &self.bundle,
            self.m,
            &self.bounds,
            &self.ncells,
            self.degree + 1,
            smoothness,
        )?;
        // group stored cells by their transverse position
        let mut columns: BTreeMap<Vec<usize>, BTreeSet<usize>> = BTreeMap::new();
        for key in self.cells.keys() {
            let mut transverse = key.clone();
            let j = transverse.remove(axis);
            columns.entry(transverse).or_default().insert(j);
        }
        for (transverse, slabs) in columns {
            let first = *slabs.iter().next().expect("nonempty column");
            let last = *slabs.iter().next_back().expect("nonempty column");
            // running is the accumulated integral, a polynomial of the
            // transverse variables (constant in the integration axis)
            let mut running = vec![Poly::zero(self.m); self.storage_dim];
            for j in first..=last {
                let mut key = transverse.clone();
                key.insert(axis, j);
                let lo = self.knot(axis, j);
                let hi = self.knot(axis, j + 1);
                let polys = self.cell_polys(&key);
                let mut new_polys = Vec::with_capacity(self.storage_dim);
                let mut next_running = Vec::with_capacity(self.storage_dim);
                for (p, run) in polys.iter().zip(&running) {
                    let anti = p.antiderivative(axis);
                    let based = anti.sub(&anti.substitute_axis(axis, &lo).lift_axis(axis));
                    next_running
                        .push(run.add(&anti.substitute_axis(axis, &hi).lift_axis(axis).sub(
                            &anti.substitute_axis(axis, &lo).lift_axis(axis),
                        )));
                    new_polys.push(based.add(run));
                }
                out.set_cell(key, new_polys);
                running = next_running;
            }
            if running.iter().any(|p| !p.is_zero()) {
                return Err(Error::ShapeMismatch(
                    "antiderivative is not compactly supported: axis integral is nonzero".into(),
                ));
            }
        }
        out.recompute_degree();
        Ok(out)
    }

    /// Tensors a scalar spline with a one-dimensional scalar spline,
    /// inserting the new variable at `axis`.
    pub fn tensor_with_1d(&self, axis: usize, factor: &SplineSection) -> Result<SplineSection> {
        if !self.bundle.is_scalar() || !factor.bundle.is_scalar() || factor.m != 1 {
            return Err(Error::BundleMismatch(
                "tensoring is defined for a scalar section and a 1d scalar factor".into(),
            ));
        }
        assert!(axis <= self.m);
        let mut bounds = self.bounds.clone();
        bounds.insert(axis, factor.bounds[0].clone());
        let mut ncells = self.ncells.clone();
        ncells.insert(axis, factor.ncells[0]);
        let mut out = SplineSection::zero(
            &self.bundle,
            self.m + 1,
            &bounds,
            &ncells,
            self.degree.max(factor.degree),
            self.smoothness.min(factor.smoothness),
        )?;
        for (key, polys) in &self.cells {
            let lifted = polys[0].lift_axis(axis);
            for (fkey, fpolys) in &factor.cells {
                // re-express the 1d piece in the inserted variable
                let mut fpoly = Poly::zero(self.m + 1);
                for (alpha, c) in fpolys[0].terms() {
                    let mut entries = vec![0usize; self.m + 1];
                    entries[axis] = alpha.get(0);
                    fpoly.add_term(MultiIndex::new(entries), c.clone());
                }
                let mut new_key = key.clone();
                new_key.insert(axis, fkey[0]);
                out.set_cell(new_key, vec![lifted.mul(&fpoly)]);
            }
        }
        Ok(out)
    }

    /// Checks the class invariants exactly: per-axis degree bounds, and C^s
    /// continuity across every interior knot plane and the box boundary.
    pub fn validate(&self) -> Result<()> {
        for (key, polys) in &self.cells {
            if polys.len() != self.storage_dim {
                return Err(Error::ShapeMismatch("cell with wrong fiber size".into()));
            }
            for p in polys {
                for a in 0..self.m {
                    if p.degree_in(a) > self.degree {
                        return Err(Error::ShapeMismatch(format!(
                            "cell {:?} exceeds degree {} on axis {}",
                            key, self.degree, a
                        )));
                    }
                }
            }
        }
        // interfaces: each stored cell checks its lower face per axis, plus
        // the upper face when no stored neighbor will check it from there
        for key in self.cells.keys() {
            for a in 0..self.m {
                self.check_interface(key, a)?;
                let mut upper = key.clone();
                upper[a] += 1;
                if upper[a] == self.ncells[a] || !self.cells.contains_key(&upper) {
                    self.check_interface(&upper, a)?;
                }
            }
        }
        Ok(())
    }

    /// Compares jets across the knot plane below cell index `key[axis]`.
    /// `key[axis]` may equal `ncells[axis]` to denote the outside region.
    fn check_interface(&self, key: &[usize], axis: usize) -> Result<()> {
        let j = key[axis];
        let knot = self.knot(axis, j);
        let zero = vec![Poly::zero(self.m); self.storage_dim];
        let upper_cell = key.to_vec();
        let upper = if j == self.ncells[axis] {
            &zero
        } else {
            match self.cells.get(&upper_cell) {
                Some(p) => p,
                None => &zero,
            }
        };
        let lower = if j == 0 {
            zero.clone()
        } else {
            let mut lower_key = key.to_vec();
            lower_key[axis] = j - 1;
            self.cell_polys(&lower_key)
        };
        for (lhs, rhs) in lower.iter().zip(upper) {
            let mut a = lhs.clone();
            let mut b = rhs.clone();
            for order in 0..=self.smoothness {
                if a.substitute_axis(axis, &knot) != b.substitute_axis(axis, &knot) {
                    return Err(Error::ShapeMismatch(format!(
                        "C^{} break at axis {} knot {}",
                        order,
                        axis,
                        format_ratio(&knot)
                    )));
                }
                a = a.derivative(axis);
                b = b.derivative(axis);
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let cells: BTreeMap<String, Value> = self
            .cells
            .iter()
            .map(|(key, polys)| {
                let k = key
                    .iter()
                    .map(|j| j.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                let table: Vec<Value> = polys
                    .iter()
                    .map(|p| {
                        Value::Array(
                            p.terms()
                                .map(|(a, c)| {
                                    json!([a.entries().to_vec(), format_ratio(c)])
                                })
                                .collect(),
                        )
                    })
                    .collect();
                (k, Value::Array(table))
            })
            .collect();
        json!({
            "bundle": self.bundle.to_string(),
            "box": self
                .bounds
                .iter()
                .map(|(lo, hi)| json!([format_ratio(lo), format_ratio(hi)]))
                .collect::<Vec<_>>(),
            "knots": self.ncells,
            "degree": self.degree,
            "smoothness": self.smoothness,
            "cells": cells,
        })
    }
}

/// Substitutes `x -> a*x + b` into a univariate polynomial.
fn affine_substitute(p: &Poly, a: &Rational, b: &Rational) -> Poly {
    assert_eq!(p.vars(), 1);
    let mut out = Poly::zero(1);
    // powers of (a x + b) built iteratively
    let mut power = Poly::constant(1, rat(1));
    let linear = {
        let mut l = Poly::constant(1, b.clone());
        l.add_term(MultiIndex::new(vec![1]), a.clone());
        l
    };
    let max_deg = p.terms().map(|(al, _)| al.get(0)).max().unwrap_or(0);
    let mut powers = Vec::with_capacity(max_deg + 1);
    for _ in 0..=max_deg {
        powers.push(power.clone());
        power = power.mul(&linear);
    }
    for (alpha, c) in p.terms() {
        out = out.add(&powers[alpha.get(0)].scale(c));
    }
    out
}

/// The uniform B-spline of the given degree on integer knots `0..=p+1`,
/// returned as one polynomial per unit cell. Built by the knot-insertion
/// recursion; exact at every step.
pub fn cardinal_bspline_pieces(p: usize) -> Vec<Poly> {
    // degree 0: the indicator of [0, 1)
    let mut pieces = vec![Poly::constant(1, rat(1))];
    for d in 1..=p {
        let prev = pieces;
        let mut next = vec![Poly::zero(1); d + 1];
        let t = Poly::var(1, 0);
        let inv = Rational::new(BigInt::from(1), BigInt::from(d));
        for (j, piece) in prev.iter().enumerate() {
            if piece.is_zero() {
                continue;
            }
            // left factor t/d on the same cell offset
            next[j] = next[j].add(&t.mul(piece).scale(&inv));
            // right factor (d+1-t)/d after shifting the lower spline by one
            let shifted = affine_substitute(piece, &rat(1), &rat(-1));
            let mut weight = Poly::constant(1, rat((d + 1) as i64));
            weight.add_term(MultiIndex::new(vec![1]), rat(-1));
            next[j + 1] = next[j + 1].add(&weight.mul(&shifted).scale(&inv));
        }
        pieces = next;
    }
    pieces
}

/// The cubic reference bump on `[0, 4]`: the uniform B-spline written out
/// piece by piece, pinned as data. Unit integral, C^2, vanishes to second
/// order at both ends.
const PSI_PIECES: [[i64; 4]; 4] = [
    // numerators over 6 for 1, t, t^2, t^3
    [0, 0, 0, 1],
    [4, -12, 12, -3],
    [-44, 60, -24, 3],
    [64, -48, 12, -1],
];

fn psi_piece(j: usize) -> Poly {
    let mut p = Poly::zero(1);
    for (k, num) in PSI_PIECES[j].iter().enumerate() {
        p.add_term(
            MultiIndex::new(vec![k]),
            Rational::new(BigInt::from(*num), BigInt::from(6)),
        );
    }
    p
}

/// One-dimensional B-spline bump of the given degree, supported on the
/// `degree + 1` cells starting at `offset`.
pub fn bump_1d(
    bounds: (Rational, Rational),
    ncells: usize,
    degree: usize,
    offset: usize,
) -> Result<SplineSection> {
    if degree < 2 {
        return Err(Error::ShapeMismatch(
            "bumps need degree at least 2 to be C^1".into(),
        ));
    }
    if offset + degree + 1 > ncells {
        return Err(Error::ShapeMismatch(format!(
            "support of {} cells at offset {} exceeds {} cells",
            degree + 1,
            offset,
            ncells
        )));
    }
    let scalar = BundleSpec::scalar();
    let mut out = SplineSection::zero(
        &scalar,
        1,
        &[bounds.clone()],
        &[ncells],
        degree,
        degree - 1,
    )?;
    let (lo, hi) = &bounds;
    let h = (hi - lo) / rat(ncells as i64);
    let x0 = lo + &h * rat(offset as i64);
    // global x maps to the cardinal variable t = (x - x0)/h
    let a = rat(1) / &h;
    let b = -&x0 / &h;
    let pieces = if degree == 3 {
        (0..4).map(psi_piece).collect::<Vec<_>>()
    } else {
        cardinal_bspline_pieces(degree)
    };
    for (j, piece) in pieces.iter().enumerate() {
        out.set_cell(vec![offset + j], vec![affine_substitute(piece, &a, &b)]);
    }
    Ok(out)
}

/// Same bump scaled to unit integral.
pub fn unit_bump_1d(
    bounds: (Rational, Rational),
    ncells: usize,
    degree: usize,
    offset: usize,
) -> Result<SplineSection> {
    let raw = bump_1d(bounds, ncells, degree, offset)?;
    let total = raw.integrate_scalar()?;
    Ok(raw.scale(&(rat(1) / total)))
}

/// Product of per-axis bumps, one offset per axis. Scalar, not normalized.
pub fn product_bump(
    bounds: &[(Rational, Rational)],
    ncells: &[usize],
    degree: usize,
    offsets: &[usize],
) -> Result<SplineSection> {
    assert_eq!(bounds.len(), ncells.len());
    assert_eq!(bounds.len(), offsets.len());
    let mut out = bump_1d(bounds[0].clone(), ncells[0], degree, offsets[0])?;
    for a in 1..bounds.len() {
        let factor = bump_1d(bounds[a].clone(), ncells[a], degree, offsets[a])?;
        out = out.tensor_with_1d(a, &factor)?;
    }
    Ok(out)
}

/// The pinned reference bump: m-fold product of the cubic B-spline on
/// `[0, 4]` with four cells per axis. Unit integral in every dimension.
pub fn psi_bump(m: usize) -> SplineSection {
    let bounds: Vec<(Rational, Rational)> = (0..m).map(|_| (rat(0), rat(4))).collect();
    let ncells = vec![4usize; m];
    let offsets = vec![0usize; m];
    product_bump(&bounds, &ncells, 3, &offsets).expect("reference bump is well formed")
}

/// Random section: per storage component, a few cubic bumps with random
/// small rational coefficients and random placement. Trace-free bundles are
/// projected onto their fiber cellwise, which preserves smoothness.
pub fn random_spline(
    bundle: &BundleSpec,
    m: usize,
    bounds: &[(Rational, Rational)],
    ncells: &[usize],
    bumps: usize,
    rng: &mut Prng,
) -> Result<SplineSection> {
    if ncells.iter().any(|&n| n < 4) {
        return Err(Error::ShapeMismatch(
            "random splines need at least 4 cells per axis".into(),
        ));
    }
    let fiber = Fiber::new(bundle, m)?;
    let mut out = SplineSection::zero(bundle, m, bounds, ncells, 3, 2)?;
    for component in 0..out.storage_dim {
        for _ in 0..bumps {
            let offsets: Vec<usize> = ncells
                .iter()
                .map(|&n| rng.below((n - 3) as u64) as usize)
                .collect();
            let bump = product_bump(bounds, ncells, 3, &offsets)?;
            let c = rng.small_nonzero_rational();
            let (mut merged, piece) = SplineSection::common_grid(&out, &bump.scale(&c))?;
            for (key, polys) in &piece.cells {
                let mut acc = merged.cell_polys(key);
                acc[component] = acc[component].add(&polys[0]);
                merged.set_cell(key.clone(), acc);
            }
            out = merged;
        }
    }
    if fiber.trace_data().is_some() {
        let mut projected = out.clone();
        projected.cells = BTreeMap::new();
        for (key, polys) in &out.cells {
            // project each coefficient vector; columns of the projector act
            // on polynomials exactly as on numbers
            let mut mapped = vec![Poly::zero(m); out.storage_dim];
            for (slot, p) in polys.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let mut e = vec![Rational::zero(); out.storage_dim];
                e[slot] = rat(1);
                let image = fiber.project_storage(&e);
                for (row, w) in image.iter().enumerate() {
                    if !w.is_zero() {
                        mapped[row] = mapped[row].add(&p.scale(w));
                    }
                }
            }
            projected.set_cell(key.clone(), mapped);
        }
        out = projected;
    }
    Ok(out)
}
