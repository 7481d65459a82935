//! Seeded generators of small knowledge bases and stratified constraint
//! sets for differential testing. Output depends only on the seed.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kb::{
    ABox, Axiom, Concept, Filler, Head, Individual, Interpretation, Role, ShapeName, TBox,
};
use crate::model::{complete_abox, has_finite_can};
use crate::pipeline::Input;
use crate::shacl::{Constraint, NormalBody, NormalConstraint, Regex, ShapeAtom, ShapeExpr};
use crate::tbox::saturate_with;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GenConfig {
    pub concepts: usize,
    pub roles: usize,
    pub individuals: usize,
    pub axioms: usize,
    pub constraints: usize,
    /// Constraint strata; negation only points to a lower one.
    pub strata: usize,
    pub at_most: AtMost,
    pub role_inclusions: bool,
    /// Retries before giving up on a finite, consistent case.
    pub attempts: usize,
}

/// How at-most axioms appear in generated ontologies.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AtMost {
    Never,
    Sometimes,
    /// At least one per ontology.
    Always,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            concepts: 5,
            roles: 3,
            individuals: 6,
            axioms: 8,
            constraints: 12,
            strata: 2,
            at_most: AtMost::Sometimes,
            role_inclusions: true,
            attempts: 200,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn concept(i: usize) -> Concept {
    Concept::new(format!("A{i}"))
}

fn role(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Role {
    let name = format!("r{}", rng.gen_range(0..cfg.roles));
    if rng.gen_bool(0.3) {
        Role::inverse_of(name)
    } else {
        Role::new(name)
    }
}

fn filler(rng: &mut ChaCha8Rng, concepts: std::ops::Range<usize>) -> Filler {
    if concepts.is_empty() || rng.gen_bool(0.15) {
        Filler::Top
    } else {
        Filler::Named(concept(rng.gen_range(concepts)))
    }
}

/// Existentials only point to higher-numbered concepts, which keeps most
/// child relations acyclic; the rest is filtered out later.
pub fn random_tbox(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> TBox {
    let n = cfg.concepts;
    let mut tbox = TBox::new();
    let mut at_most = false;
    for _ in 0..cfg.axioms {
        let a = rng.gen_range(0..n);
        let axiom = match rng.gen_range(0..10) {
            0..=2 => {
                let mut lhs = BTreeSet::from([concept(a)]);
                if rng.gen_bool(0.4) {
                    lhs.insert(concept(rng.gen_range(0..n)));
                }
                let rhs = if rng.gen_bool(0.08) {
                    Head::Bottom
                } else {
                    Head::Named(concept(rng.gen_range(0..n)))
                };
                Axiom::ConjInclusion { lhs, rhs }
            }
            3..=5 => Axiom::ExistsInclusion {
                a: concept(a),
                r: role(rng, cfg),
                b: filler(rng, a + 1..n),
            },
            6..=7 => Axiom::ValueRestriction {
                a: concept(a),
                r: role(rng, cfg),
                b: Filler::Named(concept(rng.gen_range(0..n))),
            },
            8 if cfg.at_most != AtMost::Never => {
                at_most = true;
                Axiom::AtMostOne {
                    a: concept(a),
                    r: role(rng, cfg),
                    b: filler(rng, 0..n),
                }
            }
            _ if cfg.role_inclusions => {
                let (sub, sup) = (role(rng, cfg), role(rng, cfg));
                Axiom::RoleInclusion { sub, sup }
            }
            _ => Axiom::ExistsInclusion {
                a: concept(a),
                r: role(rng, cfg),
                b: filler(rng, a + 1..n),
            },
        };
        tbox.insert(axiom);
    }
    if cfg.at_most == AtMost::Always && !at_most {
        let a = rng.gen_range(0..n);
        tbox.insert(Axiom::AtMostOne {
            a: concept(a),
            r: role(rng, cfg),
            b: filler(rng, 0..n),
        });
    }
    tbox
}

pub fn individual(i: usize) -> Individual {
    Individual::new(format!("a{i}"))
}

pub fn random_abox(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> ABox {
    let mut abox = ABox::new();
    for i in 0..cfg.individuals {
        abox.add_individual(individual(i));
        if rng.gen_bool(0.6) {
            abox.add_concept(concept(rng.gen_range(0..cfg.concepts)), individual(i));
        }
    }
    for _ in 0..cfg.individuals {
        let (a, b) = (
            rng.gen_range(0..cfg.individuals),
            rng.gen_range(0..cfg.individuals),
        );
        if a != b && rng.gen_bool(0.7) {
            abox.add_role(&role(rng, cfg), individual(a), individual(b));
        }
    }
    abox
}

fn shape(i: usize) -> ShapeName {
    ShapeName::new(format!("s{i}"))
}

/// Normal-form constraints over shapes `s0..`, each shape at a fixed
/// stratum. Positive uses stay at or below the head's stratum, negated
/// ones strictly below.
pub fn random_constraints(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Vec<NormalConstraint> {
    let shapes = (cfg.constraints / 2).max(2);
    let strata = cfg.strata.max(1);
    let level: Vec<usize> = (0..shapes).map(|i| i * strata / shapes).collect();
    let pick = |rng: &mut ChaCha8Rng, pred: &dyn Fn(usize) -> bool| -> Option<ShapeName> {
        let ok: Vec<usize> = (0..shapes).filter(|&j| pred(level[j])).collect();
        ok.choose(rng).map(|&j| shape(j))
    };
    let mut out = Vec::new();
    for k in 0..cfg.constraints {
        // Every shape gets at least one definition.
        let h = if k < shapes {
            k
        } else {
            rng.gen_range(0..shapes)
        };
        let l = level[h];
        let same_or_below = |m: usize| m <= l;
        let below = |m: usize| m < l;
        let body = match rng.gen_range(0..12) {
            0 => NormalBody::Individual(individual(rng.gen_range(0..cfg.individuals))),
            1 => NormalBody::Concept(None),
            2..=4 => NormalBody::Concept(Some(concept(rng.gen_range(0..cfg.concepts)))),
            5 => NormalBody::Shape(pick(rng, &same_or_below).expect("the head qualifies")),
            6..=7 => NormalBody::And(
                pick(rng, &same_or_below).expect("the head qualifies"),
                pick(rng, &same_or_below).expect("the head qualifies"),
            ),
            8..=10 => {
                let mut roles = BTreeSet::from([role(rng, cfg)]);
                if rng.gen_bool(0.2) {
                    roles.insert(role(rng, cfg));
                }
                NormalBody::Exists(
                    roles,
                    pick(rng, &same_or_below).expect("the head qualifies"),
                )
            }
            _ => match pick(rng, &below) {
                Some(s) => NormalBody::Not(s),
                None => NormalBody::Concept(Some(concept(rng.gen_range(0..cfg.concepts)))),
            },
        };
        out.push(NormalConstraint::new(shape(h), body));
    }
    out.sort();
    out.dedup();
    out
}

/// Every pair of a head shape and an individual.
pub fn all_targets(constraints: &[NormalConstraint], individuals: usize) -> BTreeSet<ShapeAtom> {
    let heads: BTreeSet<ShapeName> = constraints.iter().map(|c| c.head.clone()).collect();
    heads
        .into_iter()
        .flat_map(|s| {
            (0..individuals).map(move |i| ShapeAtom {
                shape: s.clone(),
                node: individual(i),
            })
        })
        .collect()
}

/// A random case whose knowledge base is consistent and has a finite
/// canonical model, or `None` when every attempt failed.
pub fn random_case(seed: u64, cfg: &GenConfig) -> Option<Input> {
    let mut rng = rng(seed);
    for _ in 0..cfg.attempts {
        let tbox = random_tbox(&mut rng, cfg);
        let abox = random_abox(&mut rng, cfg);
        let constraints = random_constraints(&mut rng, cfg);
        if !is_finite_and_consistent(&tbox, &abox) {
            continue;
        }
        let targets = all_targets(&constraints, cfg.individuals);
        let constraints = constraints
            .iter()
            .map(NormalConstraint::to_constraint)
            .collect();
        return Some(Input {
            tbox,
            abox,
            constraints,
            targets,
        });
    }
    None
}

pub fn is_finite_and_consistent(tbox: &TBox, abox: &ABox) -> bool {
    let Ok(sat) = saturate_with(tbox, abox.concept_names(), abox.role_names()) else {
        return false;
    };
    match complete_abox(&sat, abox) {
        Ok(completed) => has_finite_can(&sat, &completed),
        Err(_) => false,
    }
}

fn random_regex(rng: &mut ChaCha8Rng, cfg: &GenConfig, depth: usize) -> Regex {
    if depth == 0 || rng.gen_bool(0.4) {
        return Regex::Role(role(rng, cfg));
    }
    match rng.gen_range(0..3) {
        0 => Regex::seq(
            random_regex(rng, cfg, depth - 1),
            random_regex(rng, cfg, depth - 1),
        ),
        1 => Regex::alt(
            random_regex(rng, cfg, depth - 1),
            random_regex(rng, cfg, depth - 1),
        ),
        _ => Regex::star(random_regex(rng, cfg, depth - 1)),
    }
}

/// An expression of the full grammar whose shape references respect the
/// head's stratum `level`.
fn random_expr(
    rng: &mut ChaCha8Rng,
    cfg: &GenConfig,
    levels: &[usize],
    level: usize,
    depth: usize,
) -> ShapeExpr {
    let pick = |rng: &mut ChaCha8Rng, strict: bool| -> Option<ShapeName> {
        let ok: Vec<usize> = (0..levels.len())
            .filter(|&j| {
                if strict {
                    levels[j] < level
                } else {
                    levels[j] <= level
                }
            })
            .collect();
        ok.choose(rng).map(|&j| shape(j))
    };
    let leaf = |rng: &mut ChaCha8Rng| match rng.gen_range(0..6) {
        0 => ShapeExpr::Top,
        1 => ShapeExpr::Individual(individual(rng.gen_range(0..cfg.individuals))),
        2 => pick(rng, false).map_or(ShapeExpr::Top, ShapeExpr::Shape),
        3 => pick(rng, true).map_or(ShapeExpr::Top, ShapeExpr::NegShape),
        _ => ShapeExpr::Concept(concept(rng.gen_range(0..cfg.concepts))),
    };
    if depth == 0 {
        return leaf(rng);
    }
    let sub = |rng: &mut ChaCha8Rng| random_expr(rng, cfg, levels, level, depth - 1);
    match rng.gen_range(0..8) {
        0 => ShapeExpr::Or(Box::new(sub(rng)), Box::new(sub(rng))),
        1 => ShapeExpr::and(sub(rng), sub(rng)),
        2 => {
            let mut roles = BTreeSet::from([role(rng, cfg)]);
            if rng.gen_bool(0.3) {
                roles.insert(role(rng, cfg));
            }
            ShapeExpr::ExistsRoles(roles, Box::new(sub(rng)))
        }
        3 => ShapeExpr::ExistsPath(random_regex(rng, cfg, 2), Box::new(sub(rng))),
        4 => {
            let c = individual(rng.gen_range(0..cfg.individuals));
            let (a, b) = (random_regex(rng, cfg, 2), random_regex(rng, cfg, 2));
            if rng.gen_bool(0.5) {
                ShapeExpr::GuardedEq(c, a, b)
            } else {
                ShapeExpr::GuardedDisj(c, a, b)
            }
        }
        _ => leaf(rng),
    }
}

/// A stratified set of constraints over the full expression grammar.
pub fn random_shapes_graph(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Vec<Constraint> {
    let shapes = (cfg.constraints / 2).max(2);
    let strata = cfg.strata.max(1);
    let levels: Vec<usize> = (0..shapes).map(|i| i * strata / shapes).collect();
    (0..cfg.constraints)
        .map(|k| {
            let h = if k < shapes {
                k
            } else {
                rng.gen_range(0..shapes)
            };
            Constraint {
                head: shape(h),
                body: random_expr(rng, cfg, &levels, levels[h], 3),
            }
        })
        .collect()
}

/// A random finite interpretation over the generator's names.
pub fn random_interpretation(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Interpretation {
    Interpretation::from_abox(&random_abox(rng, cfg))
}
