//! One PASS/FAIL line per acceptance criterion, then a single assertion
//! over all of them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::Command;

use hornshacl::chase::{
    core_of, enumerate_endomorphisms, is_isomorphic, oblivious_chase, run_core_chase, AtomSet,
    ChaseError,
};
use hornshacl::format::{parse_abox, parse_shapes, parse_targets, parse_tbox};
use hornshacl::gen::{self, random_case, AtMost, GenConfig};
use hornshacl::kb::{
    ABox, Concept, ConceptSet, Interpretation, OneHalfType, Role, RoleSet, Signature, TwoType,
};
use hornshacl::model::{build_can, complete_abox, succ_config, BuildOptions};
use hornshacl::pipeline::{prepare, run, Input, Mode, RunConfig};
use hornshacl::rewrite::{rewrite, RewriteOptions};
use hornshacl::shacl::strata::constraint_dependencies;
use hornshacl::shacl::{
    normalize, perfect_assignment, stratify_constraints, stratify_normal, validate, ShapeAtom,
    Stratification,
};
use hornshacl::tbox::saturate_with;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(data(name)).expect("fixture exists")
}

fn input(tbox: &str, abox: &str, shapes: &str, targets: &str) -> Input {
    Input {
        tbox: parse_tbox(tbox).unwrap(),
        abox: parse_abox(abox).unwrap(),
        constraints: parse_shapes(shapes).unwrap(),
        targets: parse_targets(targets).unwrap(),
    }
}

fn set(sig: &Signature, names: &[&str]) -> ConceptSet {
    sig.concept_set(&names.iter().map(Concept::new).collect::<Vec<_>>())
}

fn roles(sig: &Signature, names: &[&str]) -> RoleSet {
    sig.role_set(&names.iter().map(Role::new).collect::<Vec<_>>())
}

const WORKED_TBOX: &str = "B0 <= some r0.A0\nB0 <= some r1.A1\nB1 <= max1 r1.A1\nA0 <= A1\n\
                           r0 <= r1\nB1 <= some r2.top\nB0 <= only r2.A2\n";

fn successor_configuration() -> Outcome {
    let sat = saturate_with(&parse_tbox(WORKED_TBOX).unwrap(), [], []).unwrap();
    let sig = sat.signature();
    let b = set(sig, &["B0", "B1"]);
    let f = [TwoType::new(b, roles(sig, &["r1"]), set(sig, &["A2"]))];
    let f2 = [TwoType::new(
        b,
        roles(sig, &["r1", "r2"]),
        set(sig, &["A2"]),
    )];
    let u = OneHalfType::new(roles(sig, &["r0", "r1"]), set(sig, &["A0", "A1"]));
    let u2 = OneHalfType::new(roles(sig, &["r2"]), set(sig, &["A2"]));
    let got: BTreeSet<_> = succ_config(&sat, &f).into_iter().collect();
    ensure(got == BTreeSet::from([u, u2]), "succ_config(F) differs")?;
    let got2: BTreeSet<_> = succ_config(&sat, &f2).into_iter().collect();
    ensure(got2 == BTreeSet::from([u]), "succ_config(F') differs")?;
    Ok("both configurations match exactly".into())
}

fn abox_completion() -> Outcome {
    let abox = parse_abox("B0(a)\nr0(a,b)\nr2(a,b)\nA0(b)\n").unwrap();
    let sat = saturate_with(&parse_tbox(WORKED_TBOX).unwrap(), [], []).unwrap();
    let got = complete_abox(&sat, &abox)
        .map_err(|e| e.to_string())?
        .to_abox(&sat);
    let expected = parse_abox("B0(a)\nr0(a,b)\nr1(a,b)\nr2(a,b)\nA0(b)\nA1(b)\nA2(b)\n").unwrap();
    ensure(got == expected, format!("completed to\n{got}"))?;
    Ok("completion adds exactly r1(a,b), A1(b), A2(b)".into())
}

fn austere_models() -> Outcome {
    let pet = input(
        &read("pet.tbox"),
        &read("pet.abox"),
        &read("pet.shacl"),
        &read("pet.targets"),
    );
    let prepared = prepare(&pet).map_err(|e| e.to_string())?;
    let completed = prepared
        .completed
        .as_ref()
        .ok_or("pet KB is inconsistent")?;
    let can = build_can(&prepared.sat, completed, BuildOptions::depth(8));
    ensure(
        can.len() == 2 && can.anonymous_count() == 0,
        format!("can has {} nodes", can.len()),
    )?;
    let (linda, blu) = (
        can.individual_id(&"linda".into()).unwrap(),
        can.individual_id(&"blu".into()).unwrap(),
    );
    ensure(
        can.has_role(&Role::new("hasPet"), linda, blu),
        "hasPet(linda,blu) is missing",
    )?;
    let direct = run(&pet, &RunConfig::mode(Mode::Direct)).map_err(|e| e.to_string())?;
    ensure(
        direct.verdicts() == [false],
        "target is not a violation over can",
    )?;
    let chased = oblivious_chase(&prepared.sat, &prepared.abox, 100)
        .map_err(|e| e.to_string())?
        .to_interpretation();
    let strat = stratify_constraints(&prepared.constraints).unwrap();
    let over_chase = validate(&chased, &prepared.constraints, &strat, &prepared.targets)
        .map_err(|e| e.to_string())?;
    ensure(
        over_chase.iter().all(|v| v.valid),
        "target is not valid over the oblivious chase",
    )?;

    let sat = saturate_with(&parse_tbox("A <= some r.A\n").unwrap(), [], []).unwrap();
    let completed = complete_abox(&sat, &parse_abox("A(a)\n").unwrap()).unwrap();
    for n in 0..=8 {
        let can = build_can(&sat, &completed, BuildOptions::depth(n));
        ensure(
            can.len() == n + 1 && can.role_pairs().count() == n,
            format!("can_{n} is not a chain of length {n}"),
        )?;
        ensure(!can.is_complete(), format!("can_{n} claims completeness"))?;
    }
    Ok("pet: 2 nodes, VIOLATION over can, VALID over the oblivious chase; chain: lengths 0..8 incomplete".into())
}

fn core_properties() -> Outcome {
    const BOUND: usize = 10;
    let cfg = GenConfig {
        concepts: 4,
        individuals: 3,
        axioms: 5,
        ..GenConfig::default()
    };
    let (mut checked, mut filtered, mut chase_checked, mut anonymous) = (0, 0, 0, 0);
    let mut seed = 0u64;
    while checked < 50 {
        seed += 1;
        ensure(seed < 20_000, format!("only {checked} usable KBs"))?;
        let mut rng = gen::rng(seed);
        let (tbox, abox) = (
            gen::random_tbox(&mut rng, &cfg),
            gen::random_abox(&mut rng, &cfg),
        );
        if !gen::is_finite_and_consistent(&tbox, &abox) {
            continue;
        }
        let prepared = prepare(&Input {
            tbox,
            abox,
            ..Input::default()
        })
        .map_err(|e| e.to_string())?;
        let completed = prepared
            .completed
            .as_ref()
            .ok_or("inconsistent after preparation")?;
        let can = build_can(&prepared.sat, completed, BuildOptions::depth(32));
        let oblivious = match oblivious_chase(&prepared.sat, &prepared.abox, BOUND) {
            Ok(o) if o.len() <= BOUND && can.len() <= BOUND => o,
            _ => {
                filtered += 1;
                continue;
            }
        };
        checked += 1;
        anonymous += usize::from(can.anonymous_count() > 0);
        let can_atoms = AtomSet::from_interpretation(&can);
        let homs = enumerate_endomorphisms(&can_atoms, BOUND).map_err(|e| e.to_string())?;
        ensure(
            homs.iter().all(|h| h.is_isomorphism()),
            format!("seed {seed}: can has a proper endomorphism"),
        )?;
        let core = core_of(&oblivious, BOUND).map_err(|e| e.to_string())?;
        ensure(
            is_isomorphic(&core, &can_atoms, BOUND) == Ok(true),
            format!("seed {seed}: core of the chase differs from can"),
        )?;
        match run_core_chase(&prepared.sat, &prepared.abox, 10, 64) {
            Ok(result) => {
                chase_checked += 1;
                ensure(
                    is_isomorphic(&result, &can_atoms, 64) == Ok(true),
                    format!("seed {seed}: core chase differs from can"),
                )?;
            }
            Err(ChaseError::NotTerminated(_)) => {}
            Err(e) => return Err(format!("seed {seed}: {e}")),
        }
    }
    Ok(format!("{checked} KBs ({anonymous} with anonymous nodes), {chase_checked} core chases within 10 rounds, {filtered} filtered above {BOUND} nodes"))
}

fn emitted_bodies(tbox: &str, shapes: &str) -> Result<Vec<BTreeSet<String>>, String> {
    let constraints = parse_shapes(shapes).unwrap();
    let prepared = prepare(&Input {
        tbox: parse_tbox(tbox).unwrap(),
        constraints,
        ..Input::default()
    })
    .map_err(|e| e.to_string())?;
    let rewriting = rewrite(
        &prepared.sat,
        &prepared.normalized(),
        &RewriteOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok(rewriting
        .emitted
        .iter()
        .filter(|r| r.head.as_str() == "s")
        .map(|r| r.body.iter().map(|l| l.to_string()).collect())
        .collect())
}

fn strings(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn rewriting_examples() -> Outcome {
    let positive = emitted_bodies(&read("positive.tbox"), &read("positive.shacl"))?;
    ensure(
        positive.contains(&strings(&["A", "!B", "!C", "!some [p].B"])),
        "positive example constraint missing",
    )?;
    let negative = emitted_bodies(&read("negative.tbox"), &read("negative.shacl"))?;
    let expected = strings(&["A", "!B", "!C", "some [p].$sC", "!some [p].B"]);
    ensure(
        negative.contains(&expected),
        "negative example constraint missing",
    )?;
    for (name, abox) in [("positive", "positive.abox"), ("negative", "negative.abox")] {
        let case = input(
            &read(&format!("{name}.tbox")),
            &read(abox),
            &read(&format!("{name}.shacl")),
            &read("a.targets"),
        );
        let report = run(&case, &RunConfig::mode(Mode::Rewrite)).map_err(|e| e.to_string())?;
        ensure(
            report.verdicts() == [true],
            format!("{name}: s(a) is not valid over A_T"),
        )?;
    }
    Ok("both emitted constraints found; s(a) VALID over A_T in both".into())
}

fn compare_routes(mode: Mode, cfg: &GenConfig, wanted: usize, reference: Mode) -> Outcome {
    let (mut cases, mut targets, mut valid) = (0, 0, 0);
    let mut seed = 0;
    while cases < wanted {
        seed += 1;
        let Some(case) = random_case(seed, cfg) else {
            continue;
        };
        if cfg.at_most == AtMost::Always && !case.tbox.has_at_most_one() {
            return Err(format!("seed {seed}: no at-most axiom"));
        }
        let a = run(&case, &RunConfig::mode(reference)).map_err(|e| format!("seed {seed}: {e}"))?;
        let b = run(&case, &RunConfig::mode(mode)).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(
            a.verdicts() == b.verdicts(),
            format!("seed {seed}: {reference} and {mode} disagree"),
        )?;
        cases += 1;
        targets += a.targets.len();
        valid += a.verdicts().iter().filter(|v| **v).count();
    }
    Ok(format!(
        "{cases} cases, {targets} targets ({valid} valid), zero disagreements"
    ))
}

fn direct_equals_rewrite() -> Outcome {
    compare_routes(Mode::Rewrite, &GenConfig::default(), 200, Mode::Direct)
}

fn plain_routes() -> Outcome {
    let alchi = GenConfig {
        at_most: AtMost::Never,
        ..GenConfig::default()
    };
    let a = compare_routes(Mode::PureAlchi, &alchi, 100, Mode::Rewrite)
        .map_err(|e| format!("(a) {e}"))?;
    let shiq = GenConfig {
        at_most: AtMost::Always,
        ..GenConfig::default()
    };
    let b = compare_routes(Mode::PureShaclb, &shiq, 100, Mode::Rewrite)
        .map_err(|e| format!("(b) {e}"))?;
    Ok(format!("(a) {a}; (b) {b}"))
}

fn normalization() -> Outcome {
    let cfg = GenConfig {
        constraints: 6,
        ..GenConfig::default()
    };
    let mut checked_targets = 0;
    for seed in 0..200 {
        let mut rng = gen::rng(seed);
        let interp = gen::random_interpretation(&mut rng, &cfg);
        let constraints = gen::random_shapes_graph(&mut rng, &cfg);
        let heads: BTreeSet<_> = constraints.iter().map(|c| c.head.clone()).collect();
        let targets: BTreeSet<ShapeAtom> = heads
            .iter()
            .flat_map(|s| {
                (0..cfg.individuals).map(move |i| ShapeAtom {
                    shape: s.clone(),
                    node: gen::individual(i),
                })
            })
            .collect();
        let before = validate(
            &interp,
            &constraints,
            &stratify_constraints(&constraints).unwrap(),
            &targets,
        )
        .unwrap();
        let normal = normalize(&constraints);
        let strat = stratify_normal(&normal).map_err(|e| format!("seed {seed}: {e}"))?;
        let after = validate(&interp, &normal, &strat, &targets).unwrap();
        ensure(
            before == after,
            format!("seed {seed}: verdicts change under normalization"),
        )?;
        checked_targets += targets.len();
    }
    let unguarded = parse_shapes("$s <- eq(r, t)\n");
    ensure(
        unguarded.is_err(),
        "the unguarded eq constraint was accepted",
    )?;
    let diagnostic = unguarded.unwrap_err().to_string();
    let guarded = input("", "r(a,c)\nt(b,c)\n", "$s <- @a & eq(r, t)\n", "$s(@a)\n");
    let report = run(&guarded, &RunConfig::mode(Mode::Direct)).map_err(|e| e.to_string())?;
    ensure(report.verdicts() == [false], "guarded eq(r,t) holds at a")?;
    Ok(format!(
        "200 pairs, {checked_targets} targets unchanged; unguarded eq rejected: {diagnostic}"
    ))
}

fn stratification() -> Outcome {
    let s = stratify_constraints(&parse_shapes(&read("negative.shacl")).unwrap())
        .map_err(|e| e.to_string())?;
    let level = |n: &str| s.level(&n.into());
    ensure(
        level("sC").max(level("s1")) < level("s2").min(level("s")),
        "sC and s1 are not below s2 and s",
    )?;
    ensure(
        stratify_constraints(&parse_shapes("$s <- !$s\n").unwrap()).is_err(),
        "s <- !s was accepted",
    )?;

    let constraints = parse_shapes(
        "$a <- A | some [r].$a\n$b <- !$a & B\n$c <- some [^r].$b\n$d <- !$c\n$e <- $d | $a\n",
    )
    .unwrap();
    let least = stratify_constraints(&constraints).unwrap();
    ensure(
        least.stratum_count() == 3,
        format!("{} strata", least.stratum_count()),
    )?;
    let spread = BTreeMap::from([
        ("a".into(), 0),
        ("b".into(), 2),
        ("c".into(), 3),
        ("d".into(), 5),
        ("e".into(), 6),
    ]);
    let other = Stratification::from_assignment(&constraint_dependencies(&constraints), spread)
        .map_err(|e| e.to_string())?;
    let cfg = GenConfig {
        concepts: 2,
        roles: 1,
        individuals: 8,
        ..GenConfig::default()
    };
    for seed in 0..50 {
        let mut rng = gen::rng(seed);
        let mut abox = gen::random_abox(&mut rng, &cfg);
        abox.add_concept("B".into(), gen::individual(seed as usize % 8));
        let interp = Interpretation::from_abox(&rename_to_a(&abox));
        let (x, y) = (
            perfect_assignment(&interp, &constraints, &least),
            perfect_assignment(&interp, &constraints, &other),
        );
        ensure(x == y, format!("seed {seed}: perfect assignments differ"))?;
    }
    Ok(
        "sC, s1 below s2, s; s <- !s rejected; two stratifications agree on 50 interpretations"
            .into(),
    )
}

/// Maps the generator's concept `A0` to `A`, so the fixed constraints see it.
fn rename_to_a(abox: &ABox) -> ABox {
    let mut out = ABox::new();
    for a in abox.individuals() {
        out.add_individual(a.clone());
    }
    for (c, a) in abox.concept_atoms() {
        let c = if c.as_str() == "A0" {
            Concept::new("A")
        } else {
            c.clone()
        };
        out.add_concept(c, a.clone());
    }
    for (r, a, b) in abox.role_atoms() {
        out.add_role(
            &Role::new(if r.as_str() == "r0" { "r" } else { r.as_str() }),
            a.clone(),
            b.clone(),
        );
    }
    out
}

fn consistency_gate() -> Outcome {
    let case = input(
        &read("clash.tbox"),
        &read("clash.abox"),
        "$s <- top\n",
        "$s(@a)\n",
    );
    let report = run(&case, &RunConfig::mode(Mode::Direct)).map_err(|e| e.to_string())?;
    ensure(
        !report.consistent && report.exit_code() == 2,
        "library run is not flagged inconsistent",
    )?;
    let status = Command::new(env!("CARGO_BIN_EXE_hornshacl"))
        .args(["validate", "--tbox"])
        .arg(data("clash.tbox"))
        .arg("--abox")
        .arg(data("clash.abox"))
        .arg("--shapes")
        .arg(data("pet.shacl"))
        .arg("--targets")
        .arg(data("a.targets"))
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        status.status.code() == Some(2),
        format!("exit code {:?}", status.status.code()),
    )?;
    Ok("exit code 2".into())
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("successor configuration", successor_configuration),
        ("ABox completion", abox_completion),
        ("austere models", austere_models),
        ("core properties", core_properties),
        ("rewriting examples", rewriting_examples),
        ("direct equals rewrite", direct_equals_rewrite),
        ("plain-ABox routes", plain_routes),
        ("normalization", normalization),
        ("stratification", stratification),
        ("consistency gate", consistency_gate),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
