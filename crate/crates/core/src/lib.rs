//! Exact-arithmetic workbench for multilinear natural operators on tensor
//! bundles over oriented m-manifolds.
//!
//! The crate classifies, evaluates, and cross-checks local operators that
//! commute with Lie derivatives: the classifier reduces naturality to an
//! exact linear system on jet coefficients, the bracket modules provide the
//! classical constructions the classifier should rediscover (Lie, Schouten,
//! Schouten-Nijenhuis, Frölicher-Nijenhuis and its trace-free compression),
//! and the functional side realizes integral almost-natural operators on
//! compactly supported spline sections. Everything is computed over
//! arbitrary-precision rationals; there is no floating point anywhere.

pub mod brackets;
pub mod bundle;
pub mod classifier;
pub mod error;
pub mod fiber;
pub mod functional;
pub mod lie;
pub mod linalg;
pub mod multiindex;
pub mod poly;
pub mod probe;
pub mod rational;
pub mod rep;
pub mod section;
pub mod spline;

pub use brackets::{
    compressed_fn, frolicher_nijenhuis, from_fiberwise, identity_section, schouten,
    schouten_nijenhuis, to_fiberwise, trace_free_split, FiberwisePolynomial,
};
pub use bundle::{BundleSpec, Factor, GroupKind, Variance};
pub use classifier::{
    assemble_system, classify, equivariance_residual, gl_coord_matrix, match_against,
    scheme_from_bilinear, scheme_from_op, scheme_from_unary, symmetrize_scheme, AssembledSystem,
    ClassificationResult, OperatorScheme, ResourceLimits, SchemeKey,
};
pub use error::{Error, Result};
pub use fiber::{BilinearFiberMap, Fiber};
pub use functional::{
    evaluate_almost_natural, evaluate_scheme_on_splines, exactness_witness, kernel_one_form_wedge,
    kernel_scalar_against_differential, kernel_scalar_times_volume, kernel_total_volume,
    kernel_two_scalars_times_volume, lambda_functional, lie_commutation_residual,
    locality_predicate, pair_density, pair_invariant_density, reconstruct_from_witness,
    standard_kernel_suite, volume_codensity, AlmostNaturalType, ElementaryAlmostNatural, Kernel,
    LocalPart, SectionValue,
};
pub use lie::{exterior_derivative, insertion, lie_bracket, lie_derivative, pairing, wedge};
pub use linalg::{dense_nullspace, dense_solve, Echelon, SparseSystem};
pub use multiindex::{enumerate_multiindices, MultiIndex};
pub use poly::Poly;
pub use probe::{monomial_field, random_section, random_vector_field, Prng};
pub use rational::{format_ratio, parse_ratio, rat, ratio, Rational};
pub use rep::{casimir, gl_action, gl_action_matrix, invariant_sections, order_bound, InvariantBasis};
pub use section::{apply_linear_map, bilinear_section, jet_dimension, retag, truncate, Jet, PolySection};
pub use spline::{
    bump_1d, cardinal_bspline_pieces, product_bump, psi_bump, random_spline, unit_bump_1d,
    SplineSection,
};
