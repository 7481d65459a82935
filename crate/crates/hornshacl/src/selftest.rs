//! Randomized differential harness: every case is validated along the
//! direct, rewrite and plain-ABox routes, and the canonical model is
//! checked to be a model and a core. The first failing case is shrunk by
//! dropping axioms, atoms, constraints and targets while it keeps failing.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::chase::{enumerate_endomorphisms, AtomSet};
use crate::format::print_constraints;
use crate::gen::{is_finite_and_consistent, random_case, rng, AtMost, GenConfig};
use crate::kb::{ABox, Role, TBox};
use crate::model::{build_can, is_model, BuildOptions, Mutation};
use crate::pipeline::{
    prepare, run_prepared, Input, Mode, RunConfig, DEFAULT_DEPTH, DEFAULT_MAX_NODES,
};

/// Canonical models above this size skip the core check.
pub const CORE_CHECK_BOUND: usize = 10;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SelftestConfig {
    pub seed: u64,
    pub cases: usize,
    /// Build canonical models that keep already witnessed successors.
    pub inject_bug: bool,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Counterexample {
    pub case: usize,
    pub case_seed: u64,
    pub reason: String,
    pub tbox: String,
    pub abox: String,
    pub shapes: String,
    pub targets: String,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub cases: usize,
    pub passed: usize,
    /// Cases for which no finite consistent knowledge base was generated.
    pub skipped: usize,
    pub counterexample: Option<Counterexample>,
}

impl SelftestReport {
    pub fn is_success(&self) -> bool {
        self.counterexample.is_none()
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "seed {} cases {} passed {} skipped {}",
            self.seed, self.cases, self.passed, self.skipped
        )?;
        match &self.counterexample {
            None => writeln!(f, "PASS"),
            Some(c) => {
                writeln!(
                    f,
                    "FAIL case {} (case seed {}): {}",
                    c.case, c.case_seed, c.reason
                )?;
                writeln!(
                    f,
                    "--- tbox\n{}--- abox\n{}--- shapes\n{}--- targets\n{}",
                    c.tbox, c.abox, c.shapes, c.targets
                )
            }
        }
    }
}

/// Even cases may carry at-most axioms, odd ones never do, so both plain
/// routes get exercised.
fn case_config(case: usize) -> GenConfig {
    let at_most = if case.is_multiple_of(2) {
        AtMost::Sometimes
    } else {
        AtMost::Never
    };
    GenConfig {
        at_most,
        ..GenConfig::default()
    }
}

/// The first violated property, if any.
pub fn check_case(input: &Input, mutation: Mutation) -> Option<String> {
    let prepared = prepare(input).ok()?;
    let completed = prepared.completed.as_ref()?;
    let config = |mode| RunConfig {
        mode,
        depth: DEFAULT_DEPTH,
        max_nodes: DEFAULT_MAX_NODES,
        mutation,
    };
    let direct = match run_prepared(&prepared, &config(Mode::Direct)) {
        Ok(r) => r,
        Err(e) => return Some(format!("direct route failed: {e}")),
    };
    let plain = if prepared.sat.has_at_most_one() {
        Mode::PureShaclb
    } else {
        Mode::PureAlchi
    };
    for mode in [Mode::Rewrite, plain] {
        match run_prepared(&prepared, &config(mode)) {
            Err(e) => return Some(format!("{mode} route failed: {e}")),
            Ok(r) => {
                if let Some((d, o)) = direct
                    .targets
                    .iter()
                    .zip(&r.targets)
                    .find(|(d, o)| d.valid != o.valid)
                {
                    return Some(format!(
                        "${}(@{}) is {} directly but {} via {mode}",
                        d.shape, d.node, d.valid, o.valid
                    ));
                }
            }
        }
    }
    let options = BuildOptions {
        depth: DEFAULT_DEPTH,
        max_nodes: DEFAULT_MAX_NODES,
        mutation,
    };
    let can = build_can(&prepared.sat, completed, options);
    if !is_model(&can, &prepared.sat, &prepared.abox) {
        return Some("the canonical model is not a model".to_string());
    }
    if can.len() <= CORE_CHECK_BOUND {
        let atoms = AtomSet::from_interpretation(&can);
        match enumerate_endomorphisms(&atoms, CORE_CHECK_BOUND) {
            Ok(homs) if homs.iter().all(|h| h.is_isomorphism()) => {}
            Ok(_) => {
                return Some("the canonical model has a non-injective endomorphism".to_string())
            }
            Err(e) => return Some(format!("endomorphism search failed: {e}")),
        }
    }
    None
}

fn rebuild_abox(abox: &ABox, skip: usize) -> ABox {
    let mut out = ABox::new();
    for a in abox.individuals() {
        out.add_individual(a.clone());
    }
    let concepts = abox.concept_atoms().map(|(c, a)| (c.clone(), a.clone()));
    for (i, (c, a)) in concepts.enumerate() {
        if i != skip {
            out.add_concept(c, a);
        }
    }
    let offset = abox.concept_atoms().count();
    for (i, (r, a, b)) in abox.role_atoms().enumerate() {
        if i + offset != skip {
            out.add_role(&Role::new(r.as_str()), a.clone(), b.clone());
        }
    }
    out
}

/// One-element removals of the input, in a fixed order.
fn shrinks(input: &Input) -> Vec<Input> {
    let mut out = Vec::new();
    let axioms: Vec<_> = input.tbox.axioms().cloned().collect();
    for i in 0..axioms.len() {
        let tbox = TBox::from_axioms(
            axioms
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, a)| a.clone()),
        );
        out.push(Input {
            tbox,
            ..input.clone()
        });
    }
    for i in 0..input.abox.len() {
        out.push(Input {
            abox: rebuild_abox(&input.abox, i),
            ..input.clone()
        });
    }
    for i in 0..input.constraints.len() {
        let mut constraints = input.constraints.clone();
        constraints.remove(i);
        out.push(Input {
            constraints,
            ..input.clone()
        });
    }
    for t in &input.targets {
        if input.targets.len() > 1 {
            let mut targets = input.targets.clone();
            targets.remove(t);
            out.push(Input {
                targets,
                ..input.clone()
            });
        }
    }
    out
}

/// Greedy shrinking that keeps inputs finite and consistent.
pub fn minimize(input: &Input, mutation: Mutation) -> (Input, String) {
    let mut current = input.clone();
    let mut reason = check_case(&current, mutation).unwrap_or_default();
    'outer: loop {
        for candidate in shrinks(&current) {
            if !is_finite_and_consistent(&candidate.tbox, &candidate.abox) {
                continue;
            }
            if let Some(r) = check_case(&candidate, mutation) {
                current = candidate;
                reason = r;
                continue 'outer;
            }
        }
        return (current, reason);
    }
}

pub fn selftest(config: &SelftestConfig) -> SelftestReport {
    let mutation = Mutation {
        ignore_witnesses: config.inject_bug,
    };
    let mut seeds = rng(config.seed);
    let mut report = SelftestReport {
        seed: config.seed,
        cases: config.cases,
        passed: 0,
        skipped: 0,
        counterexample: None,
    };
    for case in 0..config.cases {
        let case_seed: u64 = seeds.gen();
        let Some(input) = random_case(case_seed, &case_config(case)) else {
            report.skipped += 1;
            continue;
        };
        if check_case(&input, mutation).is_none() {
            report.passed += 1;
            continue;
        }
        let (small, reason) = minimize(&input, mutation);
        report.counterexample = Some(Counterexample {
            case,
            case_seed,
            reason,
            tbox: small.tbox.to_string(),
            abox: small.abox.to_string(),
            shapes: print_constraints(&small.constraints),
            targets: print_constraints(&small.targets),
        });
        break;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cases_pass_trivially() {
        let report = selftest(&SelftestConfig {
            seed: 1,
            cases: 0,
            inject_bug: false,
        });
        assert!(report.is_success());
        assert_eq!(report.passed, 0);
    }

    #[test]
    fn a_correct_build_passes() {
        let report = selftest(&SelftestConfig {
            seed: 1,
            cases: 30,
            inject_bug: false,
        });
        assert!(report.is_success(), "{report}");
        assert_eq!(report.passed + report.skipped, 30);
    }

    #[test]
    fn the_injected_bug_is_caught_and_shrunk() {
        let report = selftest(&SelftestConfig {
            seed: 1,
            cases: 100,
            inject_bug: true,
        });
        let c = report.counterexample.expect("the mutation is detected");
        assert!(c.tbox.lines().count() <= 3, "{}", c.tbox);
    }

    #[test]
    fn reports_are_deterministic() {
        let config = SelftestConfig {
            seed: 7,
            cases: 10,
            inject_bug: true,
        };
        assert_eq!(selftest(&config).to_string(), selftest(&config).to_string());
    }
}
