//! Acceptance suite: one test per headline claim, each printing a single
//! PASS/FAIL line (visible with `--nocapture`). Every check is exact; a
//! failure carries the inputs that broke it.

use std::collections::BTreeSet;
use std::time::Instant;

use natop_core::{
    classify, compressed_fn, dense_nullspace, equivariance_residual, exactness_witness,
    exterior_derivative, frolicher_nijenhuis, invariant_sections, lambda_functional, lie_bracket,
    lie_derivative, match_against, random_section, random_spline, random_vector_field, rat,
    reconstruct_from_witness, scheme_from_bilinear, schouten, schouten_nijenhuis,
    standard_kernel_suite, symmetrize_scheme, unit_bump_1d, wedge, AlmostNaturalType, BundleSpec,
    ClassificationResult, PolySection, Prng, Rational, ResourceLimits, Variance,
};

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn limits() -> ResourceLimits {
    ResourceLimits::default()
}

fn classified(
    sources: &[BundleSpec],
    target: &BundleSpec,
    r: usize,
    m: usize,
) -> ClassificationResult {
    classify(sources, target, r, m, &limits()).expect("classification runs")
}

/// Whether the classified space is a line through the candidate operator.
fn is_spanned_by<F>(result: &ClassificationResult, op: F) -> bool
where
    F: Fn(&PolySection, &PolySection) -> natop_core::Result<PolySection>,
{
    if result.dimension() != 1 {
        return false;
    }
    let candidate = scheme_from_bilinear(
        op,
        (&result.sources()[0], &result.sources()[1]),
        result.target(),
        result.order(),
        result.m(),
    )
    .expect("candidate probes cleanly");
    match match_against(result, &candidate).expect("same signature") {
        Some(coords) => coords.iter().any(|c| *c != rat(0)),
        None => false,
    }
}

#[test]
fn criterion_01_vector_field_bracket_spans_every_low_order_space() {
    let start = Instant::now();
    let t = BundleSpec::tangent();
    let mut ok = true;
    let mut dims = Vec::new();
    for m in [2usize, 3] {
        for r in [1usize, 2] {
            let result = classified(&[t.clone(), t.clone()], &t, r, m);
            dims.push(format!("r={r} m={m}: dim {}", result.dimension()));
            ok &= is_spanned_by(&result, |a, b| lie_bracket(a, b));
        }
    }
    let detail = format!("{} in {:.1?}", dims.join(", "), start.elapsed());
    println!(
        "criterion 01 vector-field bracket uniqueness: {} ({detail})",
        verdict(ok)
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_02_symmetric_field_bracket_is_the_unique_generator() {
    let start = Instant::now();
    let s2 = BundleSpec::sym_power(Variance::Upper, 2);
    let s3 = BundleSpec::sym_power(Variance::Upper, 3);
    let result = classified(&[s2.clone(), s2], &s3, 1, 2);
    let ok = is_spanned_by(&result, |a, b| schouten(a, b));
    let detail = format!("dim {} in {:.1?}", result.dimension(), start.elapsed());
    println!(
        "criterion 02 symmetric-multivector bracket uniqueness: {} ({detail})",
        verdict(ok)
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_03_multivector_bracket_is_the_unique_generator() {
    let start = Instant::now();
    let result = classified(
        &[BundleSpec::multivectors(2), BundleSpec::multivectors(1)],
        &BundleSpec::multivectors(2),
        1,
        3,
    );
    let ok = is_spanned_by(&result, |a, b| schouten_nijenhuis(a, b));
    let detail = format!("dim {} in {:.1?}", result.dimension(), start.elapsed());
    println!(
        "criterion 03 multivector bracket uniqueness: {} ({detail})",
        verdict(ok)
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_04_form_operator_counts_follow_the_binomial() {
    let start = Instant::now();
    let expect = |d: i64| -> usize {
        match d {
            0 | 2 => 1,
            1 => 2,
            _ => 0,
        }
    };
    let mut queries = 0usize;
    let mut bad = Vec::new();
    for m in 1usize..=3 {
        for p1 in 0..=m {
            for p2 in 0..=m {
                for q in 0..=m {
                    let result = classified(
                        &[BundleSpec::forms(p1), BundleSpec::forms(p2)],
                        &BundleSpec::forms(q),
                        1,
                        m,
                    );
                    queries += 1;
                    let want = expect(q as i64 - p1 as i64 - p2 as i64);
                    if result.dimension() != want {
                        bad.push(format!(
                            "(Lam^{p1} T*, Lam^{p2} T*) -> Lam^{q} T* at m={m}: dim {} != {want}",
                            result.dimension()
                        ));
                    }
                }
            }
        }
    }
    let ok = bad.is_empty();
    let detail = if ok {
        format!("{queries} queries in {:.1?}", start.elapsed())
    } else {
        bad.join("; ")
    };
    println!(
        "criterion 04 form-valued operator counts: {} ({detail})",
        verdict(ok)
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_05_symmetric_scalar_multiplication_is_unique() {
    let start = Instant::now();
    let scalar = BundleSpec::scalar();
    let result = classified(&[scalar.clone(), scalar.clone(), scalar.clone()], &scalar, 1, 2);
    let symmetrized: Vec<_> = result
        .basis()
        .iter()
        .map(|b| symmetrize_scheme(b).expect("identical sources"))
        .collect();
    // rank of the symmetrized span, via the dependency nullspace
    let mut keys = BTreeSet::new();
    for s in &symmetrized {
        keys.extend(s.coefficients().map(|(k, _)| k.clone()));
    }
    let rows: Vec<Vec<Rational>> = keys
        .iter()
        .map(|key| symmetrized.iter().map(|s| s.coefficient(key)).collect())
        .collect();
    let rank = symmetrized.len() - dense_nullspace(symmetrized.len(), &rows).len();
    let ok = rank == 1;
    let detail = format!(
        "full dim {}, symmetric rank {rank} in {:.1?}",
        result.dimension(),
        start.elapsed()
    );
    println!(
        "criterion 05 symmetric scalar multiplication: {} ({detail})",
        verdict(ok)
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_06_invariant_section_dimensions() {
    let start = Instant::now();
    let mut bad = Vec::new();
    for m in [2usize, 3] {
        let mixed = BundleSpec::cotangent().tensor(&BundleSpec::tangent()).unwrap();
        if invariant_sections(&mixed, m).unwrap().basis.len() != 1 {
            bad.push(format!("T* * T at m={m} not 1-dimensional"));
        }
        for k in 1usize..=3 {
            let b = BundleSpec::sym_power(Variance::Upper, k);
            let dim = invariant_sections(&b, m).unwrap().basis.len();
            if dim != 0 {
                bad.push(format!("S^{k} T at m={m}: dim {dim} != 0"));
            }
        }
        for p in 0usize..=2 {
            for q in 0usize..=2 {
                if p == q {
                    continue;
                }
                let b = BundleSpec::mixed_tensor(p, q);
                let dim = invariant_sections(&b, m).unwrap().basis.len();
                if dim != 0 {
                    bad.push(format!("mixed ({p},{q}) at m={m}: dim {dim} != 0"));
                }
            }
        }
    }
    let ok = bad.is_empty();
    let detail = if ok {
        format!("in {:.1?}", start.elapsed())
    } else {
        bad.join("; ")
    };
    println!(
        "criterion 06 absolutely invariant sections: {} ({detail})",
        verdict(ok)
    );
    assert!(ok, "{detail}");
}

type ConcreteOp = fn(&[PolySection]) -> natop_core::Result<PolySection>;

fn direct_residual(
    op: ConcreteOp,
    x: &PolySection,
    args: &[PolySection],
) -> natop_core::Result<PolySection> {
    let mut residual = lie_derivative(x, &op(args)?)?;
    for i in 0..args.len() {
        let mut moved = args.to_vec();
        moved[i] = lie_derivative(x, &args[i])?;
        residual = residual.sub(&op(&moved)?)?;
    }
    Ok(residual)
}

#[test]
fn criterion_07_brackets_and_classified_bases_commute_with_flows() {
    let start = Instant::now();
    let probes = 30usize;
    let degree = 3usize;
    let mut rng = Prng::new(2024);
    let mut bad = Vec::new();

    let vvf1 = BundleSpec::vector_valued_forms(1);
    let c1 = BundleSpec::trace_free_forms(1).unwrap();
    let concrete: Vec<(&str, usize, Vec<BundleSpec>, ConcreteOp)> = vec![
        ("lie m=2", 2, vec![BundleSpec::tangent(); 2], |a| lie_bracket(&a[0], &a[1])),
        ("lie m=3", 3, vec![BundleSpec::tangent(); 2], |a| lie_bracket(&a[0], &a[1])),
        (
            "schouten m=2",
            2,
            vec![BundleSpec::sym_power(Variance::Upper, 2); 2],
            |a| schouten(&a[0], &a[1]),
        ),
        (
            "multivector m=3",
            3,
            vec![BundleSpec::multivectors(2), BundleSpec::multivectors(1)],
            |a| schouten_nijenhuis(&a[0], &a[1]),
        ),
        ("vector-valued m=2", 2, vec![vvf1.clone(), vvf1], |a| {
            frolicher_nijenhuis(&a[0], &a[1])
        }),
        ("trace-free m=3", 3, vec![c1.clone(), c1], |a| compressed_fn(&a[0], &a[1])),
        ("exterior derivative m=3", 3, vec![BundleSpec::forms(1)], |a| {
            exterior_derivative(&a[0])
        }),
        ("wedge m=3", 3, vec![BundleSpec::forms(1), BundleSpec::forms(1)], |a| {
            wedge(&a[0], &a[1])
        }),
    ];
    for (name, m, bundles, op) in &concrete {
        for probe in 0..probes {
            let x = random_vector_field(*m, degree, &mut rng);
            let args: Vec<PolySection> = bundles
                .iter()
                .map(|b| random_section(b, *m, degree, &mut rng).unwrap())
                .collect();
            if !direct_residual(*op, &x, &args).unwrap().is_zero() {
                bad.push(format!("{name} probe {probe}"));
            }
        }
    }

    let t = BundleSpec::tangent();
    let s2 = BundleSpec::sym_power(Variance::Upper, 2);
    let s3 = BundleSpec::sym_power(Variance::Upper, 3);
    let classifications = [
        classified(&[t.clone(), t.clone()], &t, 1, 2),
        classified(&[t.clone(), t.clone()], &t, 2, 2),
        classified(&[s2.clone(), s2], &s3, 1, 2),
        classified(&[BundleSpec::forms(1), BundleSpec::forms(1)], &BundleSpec::forms(2), 1, 2),
        classified(
            &[BundleSpec::multivectors(2), BundleSpec::multivectors(1)],
            &BundleSpec::multivectors(2),
            1,
            2,
        ),
    ];
    let mut elements = 0usize;
    for result in &classifications {
        for (i, scheme) in result.basis().iter().enumerate() {
            elements += 1;
            for probe in 0..probes {
                let x = random_vector_field(result.m(), degree, &mut rng);
                let args: Vec<PolySection> = result
                    .sources()
                    .iter()
                    .map(|b| random_section(b, result.m(), degree, &mut rng).unwrap())
                    .collect();
                if !equivariance_residual(scheme, &x, &args).unwrap().is_zero() {
                    bad.push(format!(
                        "basis {i} of ({:?} -> {}) probe {probe}",
                        result.sources(),
                        result.target()
                    ));
                }
            }
        }
    }

    let ok = bad.is_empty();
    let detail = if ok {
        format!(
            "{} concrete ops and {elements} basis elements x {probes} probes in {:.1?}",
            concrete.len(),
            start.elapsed()
        )
    } else {
        bad.join("; ")
    };
    println!(
        "criterion 07 flow-commutation property suite: {} ({detail})",
        verdict(ok)
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_08_integral_functionals_annihilate_flow_derivatives() {
    let start = Instant::now();
    let suite = standard_kernel_suite().unwrap();
    let bounds = vec![(rat(0), rat(8)), (rat(0), rat(8))];
    let ncells = vec![8usize, 8];
    let trials = 6usize;
    let mut rng = Prng::new(88);
    let mut bad = Vec::new();
    for (idx, (kernel, bundles)) in suite.iter().enumerate() {
        for trial in 0..trials {
            let args: Vec<_> = bundles
                .iter()
                .map(|b| random_spline(b, 2, &bounds, &ncells, 2, &mut rng).unwrap())
                .collect();
            let x = random_vector_field(2, 2, &mut rng);
            let mut total = rat(0);
            for i in 0..args.len() {
                let mut moved = args.clone();
                moved[i] = args[i].lie_derivative(&x).unwrap();
                total += lambda_functional(kernel, &moved).unwrap();
            }
            if total != rat(0) {
                bad.push(format!("kernel {idx} trial {trial}: sum {total}"));
            }
        }
    }
    let ok = bad.is_empty();
    let detail = if ok {
        format!(
            "{} kernels x {trials} seeded spline probes in {:.1?}",
            suite.len(),
            start.elapsed()
        )
    } else {
        bad.join("; ")
    };
    println!(
        "criterion 08 integral functional naturality: {} ({detail})",
        verdict(ok)
    );
    assert!(ok, "{detail}");
}

/// Every slot partition on k slots: each slot is local or joins one of the
/// integral blocks, enumerated as restricted growth strings so each
/// partition appears once.
fn all_types(k: usize) -> Vec<AlmostNaturalType> {
    fn rec(slot: usize, k: usize, used: usize, assign: &mut Vec<usize>, out: &mut Vec<AlmostNaturalType>) {
        if slot == k {
            let blocks_n = *assign.iter().max().unwrap_or(&0);
            let mut blocks = vec![BTreeSet::new(); blocks_n];
            for (i, &a) in assign.iter().enumerate() {
                if a > 0 {
                    blocks[a - 1].insert(i + 1);
                }
            }
            out.push(AlmostNaturalType::new(k, blocks).expect("valid partition"));
            return;
        }
        for choice in 0..=(used + 1) {
            assign.push(choice);
            rec(slot + 1, k, used.max(choice), assign, out);
            assign.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, 0, &mut vec![], &mut out);
    out
}

#[test]
fn criterion_09_locality_verdicts_and_exhaustive_monotonicity() {
    let start = Instant::now();
    let sample = AlmostNaturalType::new(3, vec![[2, 3].into_iter().collect()]).unwrap();
    let probe = |slots: &[usize]| -> BTreeSet<usize> { slots.iter().copied().collect() };
    let mut ok = sample.is_local_in(&probe(&[1, 2]))
        && !sample.is_local_in(&probe(&[2, 3]))
        && sample.is_local_in(&probe(&[1, 3]));

    let mut types = 0usize;
    'outer: for k in 1usize..=6 {
        for antype in all_types(k) {
            types += 1;
            for mask in 0u32..(1 << k) {
                let big: BTreeSet<usize> =
                    (1..=k).filter(|&s| mask & (1 << (s - 1)) != 0).collect();
                if !antype.is_local_in(&big) {
                    continue;
                }
                // enumerate submasks; every subset of a local set is local
                let mut sub = mask;
                loop {
                    let small: BTreeSet<usize> =
                        (1..=k).filter(|&s| sub & (1 << (s - 1)) != 0).collect();
                    if !antype.is_local_in(&small) {
                        ok = false;
                        break 'outer;
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & mask;
                }
            }
        }
    }
    let detail = format!("3 verdicts, {types} partitions checked in {:.1?}", start.elapsed());
    println!(
        "criterion 09 locality predicate table and monotonicity: {} ({detail})",
        verdict(ok)
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_10_witness_decomposition_round_trips() {
    let start = Instant::now();
    let psi = unit_bump_1d((rat(0), rat(8)), 8, 3, 2).unwrap();
    let bounds = vec![(rat(0), rat(8)), (rat(0), rat(8))];
    let ncells = vec![8usize, 8];
    let mut rng = Prng::new(404);
    let mut bad = Vec::new();
    let mut count = 0usize;
    for m in [1usize, 2] {
        for trial in 0..50usize {
            count += 1;
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
            let back = reconstruct_from_witness(&c, &gs, &psi).unwrap();
            let exact = c == f.integrate_scalar().unwrap()
                && gs.len() == m
                && back.sub(&f).unwrap().is_zero()
                && gs.iter().all(|g| g.validate().is_ok());
            if !exact {
                bad.push(format!("m={m} trial {trial}"));
            }
        }
    }
    let ok = bad.is_empty();
    let detail = if ok {
        format!("{count} sections in {:.1?}", start.elapsed())
    } else {
        bad.join("; ")
    };
    println!(
        "criterion 10 exactness witness round trips: {} ({detail})",
        verdict(ok)
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_11_trace_free_compression_degenerates_then_classifies() {
    let start = Instant::now();
    let c1 = BundleSpec::trace_free_forms(1).unwrap();
    let c2 = BundleSpec::trace_free_forms(2).unwrap();

    // on a surface the target collapses, so the bracket must vanish
    let mut rng = Prng::new(5150);
    let mut flat = true;
    for _ in 0..5 {
        let a = random_section(&c1, 2, 3, &mut rng).unwrap();
        let b = random_section(&c1, 2, 3, &mut rng).unwrap();
        flat &= compressed_fn(&a, &b).unwrap().is_zero();
    }
    let scheme2 = scheme_from_bilinear(|a, b| compressed_fn(a, b), (&c1, &c1), &c2, 1, 2).unwrap();
    flat &= scheme2.is_zero();

    // in three dimensions it is the unique generator
    let result = classified(&[c1.clone(), c1], &c2, 1, 3);
    let spanned = is_spanned_by(&result, |a, b| compressed_fn(a, b));

    let ok = flat && spanned;
    let detail = format!(
        "m=2 identically zero: {flat}; m=3 dim {} spanned: {spanned}; in {:.1?}",
        result.dimension(),
        start.elapsed()
    );
    println!(
        "criterion 11 trace-free bracket compression: {} ({detail})",
        verdict(ok)
    );
    assert!(ok, "{detail}");
}
