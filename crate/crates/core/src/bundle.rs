//! Descriptions of natural tensor bundles over an oriented m-manifold.
//!
//! A bundle is a product of factors, each a symmetric or alternating power of
//! the tangent or cotangent bundle; an optional trace-free flag carves the
//! kernel of the canonical contraction out of vector-valued forms. The
//! description is dimension-agnostic: pairing it with a concrete `m` happens
//! in [`crate::fiber`].

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Variance {
    /// Tangent-type slot (vector index).
    Upper,
    /// Cotangent-type slot (covector index).
    Lower,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum GroupKind {
    Symmetric,
    Alternating,
}

/// One tensor factor: `arity` slots of the same variance, jointly symmetric
/// or alternating. Arity-1 factors are plain `T` or `T*`; the kind is then
/// irrelevant and normalized to `Symmetric`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Factor {
    pub variance: Variance,
    pub kind: GroupKind,
    pub arity: usize,
}

impl Factor {
    pub fn new(variance: Variance, kind: GroupKind, arity: usize) -> Self {
        let kind = if arity <= 1 { GroupKind::Symmetric } else { kind };
        Factor { variance, kind, arity }
    }
}

/// A natural tensor bundle: ordered factors plus the trace-free flag.
///
/// `trace_free` is only legal on the shape `Λ^k T* ⊗ T` (one alternating
/// lower factor followed by one upper slot); the resulting bundle is the
/// kernel of the canonical contraction to `Λ^(k-1) T*`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct BundleSpec {
    factors: Vec<Factor>,
    trace_free: bool,
}

impl BundleSpec {
    /// The scalar bundle `Λ^0` (functions).
    pub fn scalar() -> Self {
        BundleSpec { factors: vec![], trace_free: false }
    }

    pub fn tangent() -> Self {
        BundleSpec::from_factors(vec![Factor::new(Variance::Upper, GroupKind::Symmetric, 1)])
    }

    pub fn cotangent() -> Self {
        BundleSpec::from_factors(vec![Factor::new(Variance::Lower, GroupKind::Symmetric, 1)])
    }

    pub fn sym_power(variance: Variance, k: usize) -> Self {
        BundleSpec::from_factors(vec![Factor::new(variance, GroupKind::Symmetric, k)])
    }

    pub fn alt_power(variance: Variance, k: usize) -> Self {
        if k == 0 {
            return BundleSpec::scalar();
        }
        BundleSpec::from_factors(vec![Factor::new(variance, GroupKind::Alternating, k)])
    }

    /// Differential k-forms `Λ^k T*`.
    pub fn forms(k: usize) -> Self {
        BundleSpec::alt_power(Variance::Lower, k)
    }

    /// Multivector fields `Λ^p T`.
    pub fn multivectors(p: usize) -> Self {
        BundleSpec::alt_power(Variance::Upper, p)
    }

    /// Vector-valued forms `Λ^k T* ⊗ T`.
    pub fn vector_valued_forms(k: usize) -> Self {
        BundleSpec::from_factors(vec![
            Factor::new(Variance::Lower, GroupKind::Alternating, k),
            Factor::new(Variance::Upper, GroupKind::Symmetric, 1),
        ])
    }

    /// The trace-free part `C^k` of `Λ^k T* ⊗ T`. Requires `k >= 1`.
    pub fn trace_free_forms(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidBundle(
                "trace-free part needs at least one form degree (C^0 is not a bundle)".into(),
            ));
        }
        let mut b = BundleSpec::vector_valued_forms(k);
        b.trace_free = true;
        Ok(b)
    }

    pub fn from_factors(factors: Vec<Factor>) -> Self {
        let factors = factors
            .into_iter()
            .filter(|f| f.arity > 0)
            .map(|f| Factor::new(f.variance, f.kind, f.arity))
            .collect();
        BundleSpec { factors, trace_free: false }
    }

    /// Tensor product, concatenating factor lists. Neither operand may be
    /// trace-free (the flag does not distribute over products).
    pub fn tensor(&self, other: &BundleSpec) -> Result<BundleSpec> {
        if self.trace_free || other.trace_free {
            return Err(Error::InvalidBundle(
                "trace-free bundles cannot appear in tensor products".into(),
            ));
        }
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Ok(BundleSpec::from_factors(factors))
    }

    /// `⊗^p T ⊗ ⊗^q T*` with no symmetry.
    pub fn mixed_tensor(p: usize, q: usize) -> Self {
        let mut factors = Vec::new();
        for _ in 0..p {
            factors.push(Factor::new(Variance::Upper, GroupKind::Symmetric, 1));
        }
        for _ in 0..q {
            factors.push(Factor::new(Variance::Lower, GroupKind::Symmetric, 1));
        }
        BundleSpec::from_factors(factors)
    }

    /// The dual bundle: same factors with variance flipped, in the same
    /// order, so that slot-by-slot contraction is the canonical pairing.
    /// Not defined for trace-free bundles.
    pub fn dual(&self) -> Result<BundleSpec> {
        if self.trace_free {
            return Err(Error::InvalidBundle("dual of a trace-free bundle is not supported".into()));
        }
        let factors = self
            .factors
            .iter()
            .map(|f| {
                Factor::new(
                    match f.variance {
                        Variance::Upper => Variance::Lower,
                        Variance::Lower => Variance::Upper,
                    },
                    f.kind,
                    f.arity,
                )
            })
            .collect();
        Ok(BundleSpec { factors, trace_free: false })
    }

    /// `self* ⊗ Λ^m T*`, the value bundle of integration kernels against
    /// sections of `self`.
    pub fn dual_density(&self, m: usize) -> Result<BundleSpec> {
        let dual = self.dual()?;
        dual.tensor(&BundleSpec::forms(m))
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn is_trace_free(&self) -> bool {
        self.trace_free
    }

    pub fn upper_slots(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| f.variance == Variance::Upper)
            .map(|f| f.arity)
            .sum()
    }

    pub fn lower_slots(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| f.variance == Variance::Lower)
            .map(|f| f.arity)
            .sum()
    }

    pub fn total_slots(&self) -> usize {
        self.upper_slots() + self.lower_slots()
    }

    pub fn is_scalar(&self) -> bool {
        self.factors.is_empty()
    }

    /// True for `Λ^k T*` (including `Λ^0`) and `Λ^p T`.
    pub fn as_alt_power(&self) -> Option<(Variance, usize)> {
        if self.trace_free {
            return None;
        }
        match self.factors.as_slice() {
            [] => Some((Variance::Lower, 0)),
            [f] if f.kind == GroupKind::Alternating || f.arity == 1 => Some((f.variance, f.arity)),
            _ => None,
        }
    }

    /// True for `S^k T` and `S^k T*` (including scalars and single slots).
    pub fn as_sym_power(&self) -> Option<(Variance, usize)> {
        if self.trace_free {
            return None;
        }
        match self.factors.as_slice() {
            [] => Some((Variance::Upper, 0)),
            [f] if f.kind == GroupKind::Symmetric || f.arity == 1 => Some((f.variance, f.arity)),
            _ => None,
        }
    }

    /// Degree `k` when the bundle has the `Λ^k T* ⊗ T` shape (trace-free or
    /// not).
    pub fn vector_valued_form_degree(&self) -> Option<usize> {
        match self.factors.as_slice() {
            [lo, up]
                if lo.variance == Variance::Lower
                    && (lo.kind == GroupKind::Alternating || lo.arity == 1)
                    && up.variance == Variance::Upper
                    && up.arity == 1 =>
            {
                Some(lo.arity)
            }
            _ => None,
        }
    }

    /// Variance of each slot in storage order.
    pub fn slot_variances(&self) -> Vec<Variance> {
        let mut out = Vec::with_capacity(self.total_slots());
        for f in &self.factors {
            for _ in 0..f.arity {
                out.push(f.variance);
            }
        }
        out
    }
}

impl fmt::Display for BundleSpec {
    /// Canonical form in the bundle mini-language, e.g. `Lam^2 T* * T`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.trace_free {
            let k = self.factors[0].arity;
            return write!(f, "C^{k}");
        }
        if self.factors.is_empty() {
            return write!(f, "Lam^0");
        }
        let mut parts = Vec::new();
        for factor in &self.factors {
            let base = match factor.variance {
                Variance::Upper => "T",
                Variance::Lower => "T*",
            };
            let part = if factor.arity == 1 {
                base.to_string()
            } else {
                match factor.kind {
                    GroupKind::Symmetric => format!("S^{} {}", factor.arity, base),
                    GroupKind::Alternating => format!("Lam^{} {}", factor.arity, base),
                }
            };
            parts.push(part);
        }
        write!(f, "{}", parts.join(" * "))
    }
}
