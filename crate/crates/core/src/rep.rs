//! Fiberwise gl(m) representation theory: derived actions, absolutely
//! invariant fiber vectors, Casimir numbers, and the order bound they give.

use num_traits::Zero;

use crate::bundle::BundleSpec;
use crate::error::{Error, Result};
use crate::fiber::Fiber;
use crate::linalg::SparseSystem;
use crate::rational::{rat, Rational};

/// Derived action of an arbitrary m×m matrix on fiber storage: `+A` on each
/// upper slot, the contragredient on each lower slot. Linear in `A`, so it is
/// assembled from the elementary-matrix actions.
pub fn gl_action_matrix(fiber: &Fiber, a: &[Vec<Rational>]) -> Result<Vec<Vec<Rational>>> {
    let m = fiber.m();
    if a.len() != m || a.iter().any(|row| row.len() != m) {
        return Err(Error::ShapeMismatch(format!("expected a {m}x{m} matrix")));
    }
    let dim = fiber.storage_dim();
    let mut out = vec![vec![rat(0); dim]; dim];
    for j in 0..m {
        for l in 0..m {
            if a[j][l].is_zero() {
                continue;
            }
            let g = fiber.gl_matrix(j, l);
            for (orow, grow) in out.iter_mut().zip(&g) {
                for (o, x) in orow.iter_mut().zip(grow) {
                    if !x.is_zero() {
                        *o += &a[j][l] * x;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Derived action applied to a single fiber vector.
pub fn gl_action(fiber: &Fiber, a: &[Vec<Rational>], v: &[Rational]) -> Result<Vec<Rational>> {
    if v.len() != fiber.storage_dim() {
        return Err(Error::DimensionMismatch { expected: fiber.storage_dim(), found: v.len() });
    }
    let mat = gl_action_matrix(fiber, a)?;
    Ok(mat
        .iter()
        .map(|row| {
            let mut acc = rat(0);
            for (a, b) in row.iter().zip(v) {
                if !a.is_zero() && !b.is_zero() {
                    acc += a * b;
                }
            }
            acc
        })
        .collect())
}

/// Fiber vectors annihilated by every elementary matrix, i.e. values of
/// absolutely invariant sections. The basis is canonical reduced echelon.
#[derive(Clone, Debug)]
pub struct InvariantBasis {
    pub bundle: BundleSpec,
    pub m: usize,
    pub basis: Vec<Vec<Rational>>,
}

pub fn invariant_sections(bundle: &BundleSpec, m: usize) -> Result<InvariantBasis> {
    let fiber = Fiber::new(bundle, m)?;
    let dim = fiber.storage_dim();
    let mut sys = SparseSystem::new(dim);
    for j in 0..m {
        for l in 0..m {
            for row in fiber.gl_matrix(j, l) {
                sys.push_rational_row(row.into_iter().enumerate());
            }
        }
    }
    // ambient storage may hold vectors outside a trace-free fiber; cut the
    // nullspace down to the contraction kernel
    if let Some(t) = fiber.trace_data() {
        for row in &t.contraction {
            sys.push_rational_row(row.iter().cloned().enumerate());
        }
    }
    Ok(InvariantBasis { bundle: bundle.clone(), m, basis: sys.eliminate().nullspace_basis() })
}

/// Casimir number `⟨μ, μ + 2δ⟩` with `δ = (m−1, m−2, …, 1, 0)` and the
/// Euclidean product on e-coordinates.
pub fn casimir(weight: &[i64]) -> Rational {
    let m = weight.len();
    let mut acc: i64 = 0;
    for (i, &w) in weight.iter().enumerate() {
        let delta = (m - 1 - i) as i64;
        acc += w * (w + 2 * delta);
    }
    rat(acc)
}

/// Largest j ≥ 0 such that adding j basis weights `e^{i}` (repeats allowed)
/// to ρ reaches a weight with the same Casimir number as μ; −1 if no j works.
///
/// Writing C(λ) = |λ + δ|² − |δ|², the condition is that ρ + v + δ lies on
/// the sphere of radius² C_μ + |δ|², which caps each vᵢ ≥ 0 exactly; the
/// search over capped count vectors is exhaustive.
pub fn order_bound(rho: &[i64], mu: &[i64]) -> Result<i64> {
    if rho.len() != mu.len() {
        return Err(Error::DimensionMismatch { expected: rho.len(), found: mu.len() });
    }
    let m = rho.len();
    let delta: Vec<i64> = (0..m).map(|i| (m - 1 - i) as i64).collect();
    let target: i64 = mu
        .iter()
        .zip(&delta)
        .map(|(w, d)| (w + d) * (w + d))
        .sum();
    // per-coordinate cap: (ρᵢ + δᵢ + vᵢ)² alone must not exceed the radius²
    let caps: Vec<i64> = (0..m)
        .map(|i| {
            let base = rho[i] + delta[i];
            let mut v = 0i64;
            while (base + v + 1) * (base + v + 1) <= target {
                v += 1;
            }
            v
        })
        .collect();
    let mut best: i64 = -1;
    let mut counts = vec![0i64; m];
    loop {
        let sq: i64 = (0..m)
            .map(|i| {
                let x = rho[i] + delta[i] + counts[i];
                x * x
            })
            .sum();
        if sq == target {
            let total: i64 = counts.iter().sum();
            best = best.max(total);
        }
        // odometer over the capped boxes
        let mut axis = 0;
        loop {
            if axis == m {
                return Ok(best);
            }
            if counts[axis] < caps[axis] {
                counts[axis] += 1;
                break;
            }
            counts[axis] = 0;
            axis += 1;
        }
    }
}
