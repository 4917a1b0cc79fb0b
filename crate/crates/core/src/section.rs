//! Polynomial sections of tensor bundles in the standard trivialization
//! over R^m, plus jets at the origin.
//!
//! A `PolySection` maps monomial multi-indices to storage component vectors;
//! the map is sparse and zero vectors are never stored. For trace-free
//! bundles the components are ambient `Λ^k T* ⊗ T` storage and constructors
//! are expected to land in the contraction kernel (use
//! [`Fiber::project_storage`] when in doubt).

use num_traits::Zero;
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

use crate::bundle::BundleSpec;
use crate::error::{Error, Result};
use crate::fiber::{BilinearFiberMap, Fiber};
use crate::multiindex::MultiIndex;
use crate::poly::Poly;
use crate::rational::{format_ratio, parse_ratio, rat, Rational};

#[derive(Clone, PartialEq, Eq)]
pub struct PolySection {
    bundle: BundleSpec,
    m: usize,
    storage_dim: usize,
    coeffs: BTreeMap<MultiIndex, Vec<Rational>>,
}

impl PolySection {
    pub fn zero(bundle: &BundleSpec, m: usize) -> Result<Self> {
        let fiber = Fiber::new(bundle, m)?;
        Ok(PolySection {
            bundle: bundle.clone(),
            m,
            storage_dim: fiber.storage_dim(),
            coeffs: BTreeMap::new(),
        })
    }

    /// Constant section with the given storage components.
    pub fn constant(bundle: &BundleSpec, m: usize, components: Vec<Rational>) -> Result<Self> {
        let mut s = PolySection::zero(bundle, m)?;
        if components.len() != s.storage_dim {
            return Err(Error::DimensionMismatch { expected: s.storage_dim, found: components.len() });
        }
        s.set_coeff(MultiIndex::zero(m), components);
        Ok(s)
    }

    /// `x^gamma` times a single storage basis element.
    pub fn monomial(bundle: &BundleSpec, m: usize, gamma: MultiIndex, component: usize, c: Rational) -> Result<Self> {
        let mut s = PolySection::zero(bundle, m)?;
        if component >= s.storage_dim {
            return Err(Error::DimensionMismatch { expected: s.storage_dim, found: component });
        }
        let mut v = vec![rat(0); s.storage_dim];
        v[component] = c;
        s.set_coeff(gamma, v);
        Ok(s)
    }

    pub fn from_component_polys(bundle: &BundleSpec, m: usize, polys: &[Poly]) -> Result<Self> {
        let mut s = PolySection::zero(bundle, m)?;
        if polys.len() != s.storage_dim {
            return Err(Error::DimensionMismatch { expected: s.storage_dim, found: polys.len() });
        }
        for (i, p) in polys.iter().enumerate() {
            for (alpha, c) in p.terms() {
                s.add_to(alpha.clone(), i, c.clone());
            }
        }
        Ok(s)
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

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, &Vec<Rational>)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, gamma: &MultiIndex) -> Vec<Rational> {
        self.coeffs
            .get(gamma)
            .cloned()
            .unwrap_or_else(|| vec![rat(0); self.storage_dim])
    }

    pub fn set_coeff(&mut self, gamma: MultiIndex, components: Vec<Rational>) {
        debug_assert_eq!(components.len(), self.storage_dim);
        if components.iter().all(|c| c.is_zero()) {
            self.coeffs.remove(&gamma);
        } else {
            self.coeffs.insert(gamma, components);
        }
    }

    pub fn add_to(&mut self, gamma: MultiIndex, component: usize, c: Rational) {
        if c.is_zero() {
            return;
        }
        let dim = self.storage_dim;
        let entry = self.coeffs.entry(gamma.clone()).or_insert_with(|| vec![rat(0); dim]);
        entry[component] += c;
        if entry.iter().all(|x| x.is_zero()) {
            self.coeffs.remove(&gamma);
        }
    }

    /// One storage component as a scalar polynomial.
    pub fn component_poly(&self, i: usize) -> Poly {
        let mut p = Poly::zero(self.m);
        for (gamma, v) in &self.coeffs {
            if !v[i].is_zero() {
                p.add_term(gamma.clone(), v[i].clone());
            }
        }
        p
    }

    pub fn component_polys(&self) -> Vec<Poly> {
        (0..self.storage_dim).map(|i| self.component_poly(i)).collect()
    }

    pub fn add(&self, other: &PolySection) -> Result<PolySection> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (gamma, v) in &other.coeffs {
            for (i, c) in v.iter().enumerate() {
                out.add_to(gamma.clone(), i, c.clone());
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &PolySection) -> Result<PolySection> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> PolySection {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            for c in v.iter_mut() {
                *c = -c.clone();
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> PolySection {
        if c.is_zero() {
            return PolySection {
                bundle: self.bundle.clone(),
                m: self.m,
                storage_dim: self.storage_dim,
                coeffs: BTreeMap::new(),
            };
        }
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            for x in v.iter_mut() {
                *x = x.clone() * c;
            }
        }
        out
    }

    /// Multiplies every component by a scalar polynomial.
    pub fn mul_poly(&self, p: &Poly) -> PolySection {
        let mut out = PolySection {
            bundle: self.bundle.clone(),
            m: self.m,
            storage_dim: self.storage_dim,
            coeffs: BTreeMap::new(),
        };
        for (gamma, v) in &self.coeffs {
            for (beta, c) in p.terms() {
                let key = gamma.add(beta);
                for (i, x) in v.iter().enumerate() {
                    out.add_to(key.clone(), i, x * c);
                }
            }
        }
        out
    }

    pub fn partial_derivative(&self, axis: usize) -> PolySection {
        let mut out = PolySection {
            bundle: self.bundle.clone(),
            m: self.m,
            storage_dim: self.storage_dim,
            coeffs: BTreeMap::new(),
        };
        for (gamma, v) in &self.coeffs {
            let e = gamma.get(axis);
            if e == 0 {
                continue;
            }
            let mut entries = gamma.entries().to_vec();
            entries[axis] = e - 1;
            let key = MultiIndex::new(entries);
            for (i, x) in v.iter().enumerate() {
                out.add_to(key.clone(), i, x * rat(e as i64));
            }
        }
        out
    }

    /// Applies a storage matrix fiberwise: `out = M s` coefficient by
    /// coefficient.
    pub fn apply_matrix(&self, mat: &[Vec<Rational>]) -> PolySection {
        let mut out = PolySection {
            bundle: self.bundle.clone(),
            m: self.m,
            storage_dim: self.storage_dim,
            coeffs: BTreeMap::new(),
        };
        for (gamma, v) in &self.coeffs {
            for (row, mrow) in mat.iter().enumerate() {
                let mut acc = rat(0);
                for (a, b) in mrow.iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc += a * b;
                    }
                }
                out.add_to(gamma.clone(), row, acc);
            }
        }
        out
    }

    /// Evaluates all components at a point.
    pub fn eval(&self, point: &[Rational]) -> Vec<Rational> {
        let mut out = vec![rat(0); self.storage_dim];
        for (gamma, v) in &self.coeffs {
            let mut mono = rat(1);
            for (axis, &e) in gamma.entries().iter().enumerate() {
                for _ in 0..e {
                    mono *= point[axis].clone();
                }
            }
            for (i, c) in v.iter().enumerate() {
                if !c.is_zero() {
                    out[i] += c * &mono;
                }
            }
        }
        out
    }

    /// Value at the origin, which is just the degree-zero coefficient.
    pub fn value_at_origin(&self) -> Vec<Rational> {
        self.coeff(&MultiIndex::zero(self.m))
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.keys().map(|g| g.degree()).max().unwrap_or(0)
    }

    fn check_same(&self, other: &PolySection) -> Result<()> {
        if self.bundle != other.bundle || self.m != other.m {
            return Err(Error::BundleMismatch(format!(
                "{} over R^{} vs {} over R^{}",
                self.bundle, self.m, other.bundle, other.m
            )));
        }
        Ok(())
    }

    /// JSON form: `{"bundle", "m", "coefficients": {"g1,g2,..": ["n/d", ..]}}`.
    pub fn to_json(&self) -> Value {
        let mut coeffs = Map::new();
        for (gamma, v) in &self.coeffs {
            coeffs.insert(
                gamma.to_string(),
                Value::Array(v.iter().map(|c| Value::String(format_ratio(c))).collect()),
            );
        }
        json!({
            "bundle": self.bundle.to_string(),
            "m": self.m,
            "coefficients": coeffs,
        })
    }

    pub fn from_json(bundle: &BundleSpec, value: &Value) -> Result<Self> {
        let m = value["m"]
            .as_u64()
            .ok_or_else(|| Error::Parse("section JSON missing m".into()))? as usize;
        let mut s = PolySection::zero(bundle, m)?;
        let coeffs = value["coefficients"]
            .as_object()
            .ok_or_else(|| Error::Parse("section JSON missing coefficients".into()))?;
        for (key, arr) in coeffs {
            let entries: Vec<usize> = key
                .split(',')
                .map(|p| p.trim().parse().map_err(|_| Error::Parse(format!("bad multi-index `{key}`"))))
                .collect::<Result<_>>()?;
            if entries.len() != m {
                return Err(Error::Parse(format!("multi-index `{key}` has wrong length")));
            }
            let arr = arr
                .as_array()
                .ok_or_else(|| Error::Parse("coefficient entry is not an array".into()))?;
            let v: Vec<Rational> = arr
                .iter()
                .map(|x| {
                    x.as_str()
                        .ok_or_else(|| Error::Parse("coefficient is not a string".into()))
                        .and_then(parse_ratio)
                })
                .collect::<Result<_>>()?;
            if v.len() != s.storage_dim {
                return Err(Error::DimensionMismatch { expected: s.storage_dim, found: v.len() });
            }
            s.set_coeff(MultiIndex::new(entries), v);
        }
        Ok(s)
    }
}

impl std::fmt::Debug for PolySection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PolySection[{} over R^{}] {{", self.bundle, self.m)?;
        for (gamma, v) in &self.coeffs {
            let rendered: Vec<String> = v.iter().map(format_ratio).collect();
            write!(f, " x^({gamma}) -> [{}];", rendered.join(", "))?;
        }
        write!(f, " }}")
    }
}

/// A jet at the origin: the coefficients of a polynomial section up to a
/// fixed total degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Jet {
    pub order: usize,
    pub section: PolySection,
}

impl Jet {
    pub fn of(section: &PolySection, order: usize) -> Jet {
        Jet { order, section: truncate(section, order) }
    }
}

/// Drops all coefficients of total degree above `r`.
pub fn truncate(section: &PolySection, r: usize) -> PolySection {
    let mut out = PolySection {
        bundle: section.bundle.clone(),
        m: section.m,
        storage_dim: section.storage_dim,
        coeffs: BTreeMap::new(),
    };
    for (gamma, v) in &section.coeffs {
        if gamma.degree() <= r {
            out.coeffs.insert(gamma.clone(), v.clone());
        }
    }
    out
}

/// Dimension of the space of r-jets of sections of a rank-`fiber_dim` bundle
/// at a point of R^m.
pub fn jet_dimension(m: usize, fiber_dim: usize, r: usize) -> usize {
    let monomials: usize = crate::multiindex::enumerate_multiindices(m, r).len();
    fiber_dim * monomials
}

/// Applies a rectangular fiberwise linear map into another bundle:
/// `out_i = Σ_j mat[i][j] s_j` coefficient by coefficient.
pub fn apply_linear_map(
    s: &PolySection,
    mat: &[Vec<Rational>],
    out_bundle: &BundleSpec,
) -> Result<PolySection> {
    let mut out = PolySection::zero(out_bundle, s.m())?;
    if mat.len() != out.storage_dim {
        return Err(Error::DimensionMismatch { expected: out.storage_dim, found: mat.len() });
    }
    for (gamma, v) in &s.coeffs {
        for (row, mrow) in mat.iter().enumerate() {
            if mrow.len() != s.storage_dim {
                return Err(Error::DimensionMismatch { expected: s.storage_dim, found: mrow.len() });
            }
            let mut acc = rat(0);
            for (a, b) in mrow.iter().zip(v) {
                if !a.is_zero() && !b.is_zero() {
                    acc += a * b;
                }
            }
            out.add_to(gamma.clone(), row, acc);
        }
    }
    Ok(out)
}

/// Rebuilds a section in a different bundle with identical storage layout,
/// e.g. viewing a trace-free section inside its ambient bundle.
pub fn retag(s: &PolySection, bundle: &BundleSpec) -> Result<PolySection> {
    let mut out = PolySection::zero(bundle, s.m())?;
    if out.storage_dim != s.storage_dim {
        return Err(Error::DimensionMismatch { expected: s.storage_dim, found: out.storage_dim });
    }
    out.coeffs = s.coeffs.clone();
    Ok(out)
}

/// Applies a fiberwise bilinear map to two sections, convolving coefficients.
pub fn bilinear_section(
    map: &BilinearFiberMap,
    a: &PolySection,
    b: &PolySection,
    out_bundle: &BundleSpec,
) -> Result<PolySection> {
    if a.m() != b.m() {
        return Err(Error::BundleMismatch("sections over different dimensions".into()));
    }
    let mut out = PolySection::zero(out_bundle, a.m())?;
    for (ga, va) in a.coeffs() {
        for (gb, vb) in b.coeffs() {
            let key = ga.add(gb);
            for (o, i, j, c) in &map.entries {
                if !va[*i].is_zero() && !vb[*j].is_zero() {
                    out.add_to(key.clone(), *o, c * &va[*i] * &vb[*j]);
                }
            }
        }
    }
    Ok(out)
}
