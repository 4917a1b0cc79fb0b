//! One function per subcommand, each producing a JSON value and a text
//! rendering of the same report. Verification commands also say whether
//! every identity held; the caller turns that into the exit status.

use serde_json::{json, Value};

use natop_core::{
    casimir, classify, compressed_fn, exactness_witness, format_ratio, frolicher_nijenhuis,
    kernel_scalar_times_volume, lambda_functional, lie_bracket, lie_commutation_residual,
    lie_derivative, order_bound, random_section, random_spline, random_vector_field, rat,
    reconstruct_from_witness, schouten, schouten_nijenhuis, standard_kernel_suite, unit_bump_1d,
    AlmostNaturalType, BundleSpec, ElementaryAlmostNatural, Error, LocalPart, MultiIndex,
    OperatorScheme, PolySection, Prng, Rational, ResourceLimits, SplineSection, Variance,
};

use crate::Failure;

pub struct Report {
    pub json: Value,
    pub text: String,
    /// False iff a verification subcommand saw a failing identity.
    pub ok: bool,
}

fn core_err(e: Error) -> Failure {
    match e {
        Error::ResourceCap { .. } => Failure::Cap(e.to_string()),
        other => Failure::Usage(other.to_string()),
    }
}

pub fn run_classify(
    sources: &[BundleSpec],
    target: &BundleSpec,
    r: usize,
    m: usize,
    limits: &ResourceLimits,
) -> Result<Report, Failure> {
    let result = classify(sources, target, r, m, limits).map_err(core_err)?;
    let mut text = format!(
        "sources: {}\ntarget: {}\nr: {}\nm: {}\ndimension: {}\n",
        sources
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(", "),
        target,
        r,
        m,
        result.dimension()
    );
    for (i, op) in result.basis().iter().enumerate() {
        text.push_str(&format!("basis element {i}:\n{}\n", op.pretty()));
    }
    Ok(Report { json: result.to_json(), text, ok: true })
}

pub fn run_invariants(bundle: &BundleSpec, m: usize) -> Result<Report, Failure> {
    let inv = natop_core::invariant_sections(bundle, m).map_err(core_err)?;
    let rows: Vec<Vec<String>> = inv
        .basis
        .iter()
        .map(|v| v.iter().map(format_ratio).collect())
        .collect();
    let mut text = format!(
        "bundle: {}\nm: {}\ndimension: {}\n",
        bundle,
        m,
        inv.basis.len()
    );
    for (i, row) in rows.iter().enumerate() {
        text.push_str(&format!("basis element {i}: [{}]\n", row.join(", ")));
    }
    Ok(Report {
        json: json!({
            "command": "invariants",
            "bundle": bundle.to_string(),
            "m": m,
            "dimension": inv.basis.len(),
            "basis": rows,
        }),
        text,
        ok: true,
    })
}

pub fn run_casimir(m: usize, weight: &[i64]) -> Result<Report, Failure> {
    if m == 0 {
        return Err(Failure::Usage("m must be positive".into()));
    }
    if weight.len() > m {
        return Err(Failure::Usage(format!(
            "{} weight entries exceed m = {}",
            weight.len(),
            m
        )));
    }
    let mut padded = weight.to_vec();
    padded.resize(m, 0);
    let value = format_ratio(&casimir(&padded));
    Ok(Report {
        json: json!({
            "command": "casimir",
            "m": m,
            "weight": padded,
            "casimir": value,
        }),
        text: format!("{value}\n"),
        ok: true,
    })
}

pub fn run_bound(rho: &[i64], mu: &[i64]) -> Result<Report, Failure> {
    let bound = order_bound(rho, mu).map_err(core_err)?;
    Ok(Report {
        json: json!({
            "command": "bound",
            "rho": rho,
            "mu": mu,
            "bound": bound,
        }),
        text: format!("{bound}\n"),
        ok: true,
    })
}

type BracketOp = fn(&[PolySection]) -> natop_core::Result<PolySection>;

fn op_lie(args: &[PolySection]) -> natop_core::Result<PolySection> {
    lie_bracket(&args[0], &args[1])
}

fn op_schouten(args: &[PolySection]) -> natop_core::Result<PolySection> {
    schouten(&args[0], &args[1])
}

fn op_sn(args: &[PolySection]) -> natop_core::Result<PolySection> {
    schouten_nijenhuis(&args[0], &args[1])
}

fn op_fn(args: &[PolySection]) -> natop_core::Result<PolySection> {
    frolicher_nijenhuis(&args[0], &args[1])
}

fn op_cfn(args: &[PolySection]) -> natop_core::Result<PolySection> {
    compressed_fn(&args[0], &args[1])
}

fn op_d(args: &[PolySection]) -> natop_core::Result<PolySection> {
    natop_core::exterior_derivative(&args[0])
}

fn op_wedge(args: &[PolySection]) -> natop_core::Result<PolySection> {
    natop_core::wedge(&args[0], &args[1])
}

fn bracket_checks(m: usize) -> Vec<(&'static str, Vec<BundleSpec>, BracketOp)> {
    let vvf1 = BundleSpec::vector_valued_forms(1);
    vec![
        ("lie bracket", vec![BundleSpec::tangent(), BundleSpec::tangent()], op_lie),
        (
            "schouten",
            vec![
                BundleSpec::sym_power(Variance::Upper, 2),
                BundleSpec::sym_power(Variance::Upper, 2),
            ],
            op_schouten,
        ),
        (
            "schouten-nijenhuis",
            vec![BundleSpec::multivectors(2), BundleSpec::multivectors(1)],
            op_sn,
        ),
        ("frolicher-nijenhuis", vec![vvf1.clone(), vvf1], op_fn),
        (
            "compressed frolicher-nijenhuis",
            vec![
                BundleSpec::trace_free_forms(1).expect("k = 1"),
                BundleSpec::trace_free_forms(1).expect("k = 1"),
            ],
            op_cfn,
        ),
        ("exterior derivative", vec![BundleSpec::forms(1)], op_d),
        (
            "wedge",
            vec![BundleSpec::forms(1), BundleSpec::forms(if m > 1 { 1 } else { 0 })],
            op_wedge,
        ),
    ]
}

fn poly_residual(
    op: BracketOp,
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

pub fn run_verify_brackets(
    m: usize,
    probes: usize,
    seed: u64,
    degree: usize,
) -> Result<Report, Failure> {
    if m == 0 {
        return Err(Failure::Usage("m must be positive".into()));
    }
    let mut rng = Prng::new(seed);
    let mut identities = Vec::new();
    let mut text = String::new();
    let mut all_ok = true;
    for (name, bundles, op) in bracket_checks(m) {
        let mut failures = Vec::new();
        for probe in 0..probes {
            let x = random_vector_field(m, degree, &mut rng);
            let args: Vec<PolySection> = bundles
                .iter()
                .map(|b| random_section(b, m, degree, &mut rng))
                .collect::<natop_core::Result<_>>()
                .map_err(core_err)?;
            let residual = poly_residual(op, &x, &args).map_err(core_err)?;
            if !residual.is_zero() {
                failures.push(json!({
                    "probe": probe,
                    "field": x.to_json(),
                    "sections": args.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
                    "residual": residual.to_json(),
                }));
            }
        }
        let ok = failures.is_empty();
        all_ok &= ok;
        text.push_str(&format!(
            "{name}: {probes} probes, {}\n",
            if ok {
                "residual identically zero".to_string()
            } else {
                format!("{} FAILED", failures.len())
            }
        ));
        identities.push(json!({
            "name": name,
            "probes": probes,
            "failures": failures,
        }));
    }
    text.push_str(&format!(
        "{}: seed {seed}, degree {degree}\n",
        if all_ok { "ok" } else { "FAILED" }
    ));
    Ok(Report {
        json: json!({
            "command": "verify-brackets",
            "m": m,
            "seed": seed,
            "probes": probes,
            "degree": degree,
            "identities": identities,
            "ok": all_ok,
        }),
        text,
        ok: all_ok,
    })
}

fn wide_box() -> (Vec<(Rational, Rational)>, Vec<usize>) {
    (vec![(rat(0), rat(8)), (rat(0), rat(8))], vec![8, 8])
}

fn reference_almost_natural() -> ElementaryAlmostNatural {
    let scalar = BundleSpec::scalar();
    let antype = AlmostNaturalType::new(3, vec![[2, 3].into_iter().collect()])
        .expect("valid partition");
    let mut id = OperatorScheme::new(&[scalar.clone()], &scalar, 0, 2).expect("identity scheme");
    id.set_coefficient((vec![(MultiIndex::zero(2), 0)], 0), rat(1))
        .expect("constant term");
    ElementaryAlmostNatural::new(
        antype,
        &[scalar.clone(), scalar, BundleSpec::forms(2)],
        2,
        vec![kernel_scalar_times_volume(2).expect("surface kernel")],
        LocalPart::Scheme(id),
    )
    .expect("well-formed operator")
}

const KERNEL_NAMES: [&str; 5] = [
    "total volume",
    "scalar times volume",
    "one-form wedge",
    "scalar against differential",
    "two scalars times volume",
];

pub fn run_verify_functionals(trials: usize, seed: u64) -> Result<Report, Failure> {
    let suite = standard_kernel_suite().map_err(core_err)?;
    let (bounds, ncells) = wide_box();
    let mut rng = Prng::new(seed);
    let mut checks = Vec::new();
    let mut text = String::new();
    let mut all_ok = true;

    let mut push_check = |name: String, failures: Vec<Value>, text: &mut String, all_ok: &mut bool| {
        let ok = failures.is_empty();
        *all_ok &= ok;
        text.push_str(&format!(
            "{name}: {trials} trials, {}\n",
            if ok { "exact".to_string() } else { format!("{} FAILED", failures.len()) }
        ));
        checks.push(json!({ "name": name, "trials": trials, "failures": failures }));
    };

    for ((kernel, bundles), name) in suite.iter().zip(KERNEL_NAMES) {
        let mut failures = Vec::new();
        for trial in 0..trials {
            let args: Vec<SplineSection> = bundles
                .iter()
                .map(|b| random_spline(b, 2, &bounds, &ncells, 2, &mut rng))
                .collect::<natop_core::Result<_>>()
                .map_err(core_err)?;
            let x = random_vector_field(2, 2, &mut rng);
            let mut total = rat(0);
            for i in 0..args.len() {
                let mut moved = args.clone();
                moved[i] = args[i].lie_derivative(&x).map_err(core_err)?;
                total += lambda_functional(kernel, &moved).map_err(core_err)?;
            }
            if total != rat(0) {
                failures.push(json!({
                    "trial": trial,
                    "field": x.to_json(),
                    "sections": args.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
                    "sum": format_ratio(&total),
                }));
            }
        }
        push_check(
            format!("lambda naturality: {name}"),
            failures,
            &mut text,
            &mut all_ok,
        );
    }

    let psi = unit_bump_1d(
        (bounds[0].0.clone(), bounds[0].1.clone()),
        ncells[0],
        3,
        2,
    )
    .map_err(core_err)?;
    let mut failures = Vec::new();
    for trial in 0..trials {
        for m in [1usize, 2] {
            let f = random_spline(
                &BundleSpec::scalar(),
                m,
                &bounds[..m],
                &ncells[..m],
                2,
                &mut rng,
            )
            .map_err(core_err)?;
            let (c, gs) = exactness_witness(&f, &psi).map_err(core_err)?;
            let back = reconstruct_from_witness(&c, &gs, &psi).map_err(core_err)?;
            let exact = c == f.integrate_scalar().map_err(core_err)?
                && back.sub(&f).map_err(core_err)?.is_zero();
            if !exact {
                failures.push(json!({ "trial": trial, "m": m, "section": f.to_json() }));
            }
        }
    }
    push_check("exactness witness round trip".into(), failures, &mut text, &mut all_ok);

    let op = reference_almost_natural();
    let mut failures = Vec::new();
    for trial in 0..trials {
        let f = random_spline(&BundleSpec::scalar(), 2, &bounds, &ncells, 2, &mut rng)
            .map_err(core_err)?;
        let g = random_spline(&BundleSpec::scalar(), 2, &bounds, &ncells, 2, &mut rng)
            .map_err(core_err)?;
        let omega = random_spline(&BundleSpec::forms(2), 2, &bounds, &ncells, 2, &mut rng)
            .map_err(core_err)?;
        let x = random_vector_field(2, 2, &mut rng);
        let residual = lie_commutation_residual(&op, &x, &[f.clone(), g.clone(), omega.clone()])
            .map_err(core_err)?;
        if !residual.is_zero() {
            failures.push(json!({
                "trial": trial,
                "field": x.to_json(),
                "sections": [f.to_json(), g.to_json(), omega.to_json()],
            }));
        }
    }
    push_check("almost natural commutation".into(), failures, &mut text, &mut all_ok);

    text.push_str(&format!(
        "{}: seed {seed}, m = 2\n",
        if all_ok { "ok" } else { "FAILED" }
    ));
    Ok(Report {
        json: json!({
            "command": "verify-functionals",
            "m": 2,
            "seed": seed,
            "trials": trials,
            "checks": checks,
            "ok": all_ok,
        }),
        text,
        ok: all_ok,
    })
}

pub fn run_demo_locality() -> Result<Report, Failure> {
    let antype = AlmostNaturalType::new(3, vec![[2, 3].into_iter().collect()])
        .expect("valid partition");
    let probes: [&[usize]; 3] = [&[1, 2], &[2, 3], &[1, 3]];
    let mut verdicts = Vec::new();
    let mut text = String::from("type: integral block {2, 3}, local slot {1}\n");
    for probe in probes {
        let set = probe.iter().copied().collect();
        let local = antype.is_local_in(&set);
        text.push_str(&format!(
            "fixing slots {{{}}}: {}\n",
            probe
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(", "),
            if local { "local" } else { "not local" }
        ));
        verdicts.push(json!({ "probe": probe, "local": local }));
    }
    text.push_str("rule: local in a fixed slot set iff it contains no whole integral block\n");
    Ok(Report {
        json: json!({
            "command": "demo-locality",
            "type": { "integral_blocks": [[2, 3]], "local_slots": [1] },
            "verdicts": verdicts,
            "rule": "local in a fixed slot set iff it contains no whole integral block",
        }),
        text,
        ok: true,
    })
}
