//! Route agreement and round-trip invariants over seeded random inputs.

use std::collections::BTreeSet;

use proptest::prelude::*;

use hornshacl::format::{
    parse_abox, parse_shapes_with, parse_tbox, print_constraints, ShapeParseOptions,
};
use hornshacl::gen::{self, random_case, AtMost, GenConfig};
use hornshacl::pipeline::{prepare, run, Mode, RunConfig};
use hornshacl::rewrite::{rewrite, RewriteOptions, RootTypes};
use hornshacl::shacl::{normalize, stratify_constraints, stratify_normal, validate, ShapeAtom};

fn agree(seed: u64, cfg: &GenConfig, a: Mode, b: Mode) -> Result<(), TestCaseError> {
    let Some(case) = random_case(seed, cfg) else {
        return Ok(());
    };
    let x = run(&case, &RunConfig::mode(a)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let y = run(&case, &RunConfig::mode(b)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(x.verdicts(), y.verdicts());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn direct_and_rewrite_agree(seed in any::<u64>()) {
        agree(seed, &GenConfig::default(), Mode::Direct, Mode::Rewrite)?;
    }

    #[test]
    fn core_chase_and_direct_agree(seed in any::<u64>()) {
        let cfg = GenConfig { individuals: 3, axioms: 5, ..GenConfig::default() };
        agree(seed, &cfg, Mode::Direct, Mode::Chase)?;
    }

    #[test]
    fn plain_routes_agree_with_rewrite(seed in any::<u64>()) {
        let alchi = GenConfig { at_most: AtMost::Never, ..GenConfig::default() };
        agree(seed, &alchi, Mode::Rewrite, Mode::PureAlchi)?;
        let shiq = GenConfig { at_most: AtMost::Always, ..GenConfig::default() };
        agree(seed, &shiq, Mode::Rewrite, Mode::PureShaclb)?;
    }

    #[test]
    fn eager_and_lazy_root_types_agree(seed in any::<u64>()) {
        let Some(case) = random_case(seed, &GenConfig::default()) else { return Ok(()) };
        let prepared = prepare(&case).unwrap();
        let completed = prepared.completed.as_ref().unwrap();
        let interp = completed.to_interpretation(&prepared.sat);
        let normal = prepared.normalized();
        let verdicts = |roots| {
            let r = rewrite(&prepared.sat, &normal, &RewriteOptions { roots, keep_quadruples: false }).unwrap();
            validate(&interp, &r.rules, &r.stratification, &prepared.targets).unwrap()
        };
        prop_assert_eq!(verdicts(RootTypes::All), verdicts(RootTypes::Only(prepared.root_types())));
    }

    #[test]
    fn normalization_preserves_verdicts(seed in any::<u64>()) {
        let cfg = GenConfig { constraints: 6, ..GenConfig::default() };
        let mut rng = gen::rng(seed);
        let interp = gen::random_interpretation(&mut rng, &cfg);
        let constraints = gen::random_shapes_graph(&mut rng, &cfg);
        let heads: BTreeSet<_> = constraints.iter().map(|c| c.head.clone()).collect();
        let targets: BTreeSet<ShapeAtom> = heads
            .iter()
            .flat_map(|s| (0..cfg.individuals).map(move |i| ShapeAtom { shape: s.clone(), node: gen::individual(i) }))
            .collect();
        let before = validate(&interp, &constraints, &stratify_constraints(&constraints).unwrap(), &targets).unwrap();
        let normal = normalize(&constraints);
        let after = validate(&interp, &normal, &stratify_normal(&normal).unwrap(), &targets).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn printed_inputs_parse_back(seed in any::<u64>()) {
        let cfg = GenConfig::default();
        let mut rng = gen::rng(seed);
        let tbox = gen::random_tbox(&mut rng, &cfg);
        prop_assert_eq!(parse_tbox(&tbox.to_string()).unwrap(), tbox);
        let abox = gen::random_abox(&mut rng, &cfg);
        let reparsed = parse_abox(&abox.to_string()).unwrap();
        prop_assert_eq!(reparsed.to_string(), abox.to_string());
        let shapes = gen::random_shapes_graph(&mut rng, &cfg);
        let text = print_constraints(&shapes);
        let options = ShapeParseOptions { allow_reserved: true };
        prop_assert_eq!(print_constraints(&parse_shapes_with(&text, options).unwrap()), text);
    }

    #[test]
    fn rewritings_parse_back(seed in any::<u64>()) {
        let Some(case) = random_case(seed, &GenConfig::default()) else { return Ok(()) };
        let prepared = prepare(&case).unwrap();
        let rewriting = rewrite(&prepared.sat, &prepared.normalized(), &RewriteOptions::default()).unwrap();
        let text = rewriting.to_string();
        let options = ShapeParseOptions { allow_reserved: true };
        let reparsed = parse_shapes_with(&text, options).unwrap();
        let interp = prepared.completed.as_ref().unwrap().to_interpretation(&prepared.sat);
        let targets: BTreeSet<ShapeAtom> = rewriting
            .rules
            .iter()
            .flat_map(|c| prepared.abox.individuals().map(move |a| ShapeAtom { shape: c.head.clone(), node: a.clone() }))
            .collect();
        let expected = validate(&interp, &rewriting.rules, &rewriting.stratification, &targets).unwrap();
        let actual = validate(&interp, &reparsed, &stratify_constraints(&reparsed).unwrap(), &targets).unwrap();
        prop_assert_eq!(expected, actual);
    }

    #[test]
    fn json_reports_are_deterministic(seed in any::<u64>()) {
        let Some(case) = random_case(seed, &GenConfig::default()) else { return Ok(()) };
        let a = run(&case, &RunConfig::mode(Mode::Rewrite)).unwrap().to_json();
        let b = run(&case, &RunConfig::mode(Mode::Rewrite)).unwrap().to_json();
        prop_assert_eq!(a, b);
    }
}
