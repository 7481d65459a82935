//! Routes that validate over the plain ABox. The rewritten constraints are
//! prefixed by constraints that recompute `A_T`: one shape per concept and,
//! when at-most axioms can merge existential successors into named ones,
//! one binary shape per role.
//!
//! Binary shapes are materialized as role atoms under reserved names, so
//! unary constraints reach them through ordinary existentials and the
//! inverse of a binary shape is its inverted role.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::kb::{Concept, ConceptSet, Interpretation, NodeId, Role, RoleId, RoleName, ShapeName};
use crate::shacl::eval::least_fixpoint;
use crate::shacl::normalize::fresh_prefix;
use crate::shacl::{
    stratify_rules, validate, Atom, Literal, Rule, ShapeAssignment, ShapeAtom, Stratification,
    TargetVerdict,
};
use crate::tbox::SaturatedTBox;

use super::Rewriting;

/// Fresh names for concept shapes, merge guards and binary shapes.
struct Names {
    concept: String,
    guard: String,
    binary: String,
}

impl Names {
    fn new(rewriting: &Rewriting, roles: &BTreeSet<RoleName>) -> Self {
        let shapes: BTreeSet<ShapeName> = rewriting
            .rules
            .iter()
            .flat_map(|r| {
                std::iter::once(r.head.clone())
                    .chain(r.shape_refs().into_iter().map(|(s, _)| s.clone()))
            })
            .collect();
        let role_shapes: Vec<ShapeName> =
            roles.iter().map(|r| ShapeName::new(r.as_str())).collect();
        // Merge shapes are named after guards, so guards avoid role names too.
        let guard_clashes: Vec<ShapeName> = shapes
            .iter()
            .cloned()
            .chain(role_shapes.iter().cloned())
            .collect();
        Names {
            concept: fresh_prefix(&shapes, "c"),
            guard: fresh_prefix(&guard_clashes, "h"),
            binary: fresh_prefix(&role_shapes, "b"),
        }
    }

    fn concept(&self, c: &Concept) -> ShapeName {
        ShapeName::new(format!("{}{c}", self.concept))
    }

    fn guard(&self, i: usize) -> ShapeName {
        ShapeName::new(format!("{}{i}", self.guard))
    }

    /// The binary shape of `r`; inverse roles map to inverted names.
    fn binary(&self, r: &Role) -> Role {
        Role {
            name: RoleName::new(format!("{}{}", self.binary, r.name)),
            inverted: r.inverted,
        }
    }
}

fn concept_shape_atom(names: &Names, c: &Concept) -> Atom {
    Atom::Shape(names.concept(c))
}

/// Replaces concept atoms by concept shapes and expands each existential
/// into the alternatives `roles` offers for it. Positive existentials with
/// several alternatives split the rule; negated ones conjoin.
fn translate(
    rule: &Rule,
    names: &Names,
    roles: &impl Fn(&BTreeSet<Role>) -> Vec<BTreeSet<Role>>,
) -> Vec<Rule> {
    let mut bodies: Vec<Vec<Literal>> = vec![Vec::new()];
    for l in &rule.body {
        let alternatives: Vec<Atom> = match &l.atom {
            Atom::Concept(c) => vec![concept_shape_atom(names, c)],
            Atom::Exists {
                roles: rs,
                concepts,
                shapes,
            } => {
                let shapes: BTreeSet<ShapeName> = shapes
                    .iter()
                    .cloned()
                    .chain(concepts.iter().map(|c| names.concept(c)))
                    .collect();
                roles(rs)
                    .into_iter()
                    .map(|rs| Atom::Exists {
                        roles: rs,
                        concepts: BTreeSet::new(),
                        shapes: shapes.clone(),
                    })
                    .collect()
            }
            other => vec![other.clone()],
        };
        if l.negated {
            for b in &mut bodies {
                b.extend(alternatives.iter().cloned().map(Literal::neg));
            }
        } else {
            bodies = bodies
                .into_iter()
                .flat_map(|b| {
                    alternatives.iter().map(move |a| {
                        let mut b = b.clone();
                        b.push(Literal::pos(a.clone()));
                        b
                    })
                })
                .collect();
        }
    }
    bodies
        .into_iter()
        .map(|b| Rule::new(rule.head.clone(), b).canonical())
        .filter(|r| !r.is_vacuous())
        .collect()
}

fn conj_rule(names: &Names, sat: &SaturatedTBox, lhs: ConceptSet, head: &Concept) -> Rule {
    let sig = sat.signature();
    let body = lhs
        .iter()
        .map(|c| Literal::pos(concept_shape_atom(names, sig.concept(c))))
        .collect();
    Rule::new(names.concept(head), body).canonical()
}

/// `s_A ⇐ A` and `s_B ⇐ ∧ s_Ai` for every derived `⊓Ai ⊑ B`.
fn type_rules(names: &Names, sat: &SaturatedTBox) -> Vec<Rule> {
    let sig = sat.signature();
    let mut out: Vec<Rule> = sig
        .concepts()
        .iter()
        .map(|c| {
            Rule::new(
                names.concept(c),
                vec![Literal::pos(Atom::Concept(c.clone()))],
            )
        })
        .collect();
    for f in sat.conj_facts() {
        if let Some(b) = f.rhs {
            if !f.lhs.contains(b) {
                out.push(conj_rule(names, sat, f.lhs, sig.concept(b)));
            }
        }
    }
    out
}

/// Rules evaluated over the plain ABox by the ordinary evaluator.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AlchiProgram {
    pub rules: Vec<Rule>,
    pub stratification: Stratification,
}

impl fmt::Display for AlchiProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.rules.iter().try_for_each(|r| writeln!(f, "{r}"))
    }
}

fn sub_roles(sat: &SaturatedTBox, r: &Role) -> Vec<Role> {
    let sig = sat.signature();
    match sig.role_id(r) {
        Some(id) => sat.sub_roles(id).iter().map(|s| sig.role(s)).collect(),
        None => vec![r.clone()],
    }
}

/// `T_s ∪ C_T⁺` for ontologies without at-most axioms. Role atoms of the
/// ABox are not closed under role inclusions, so an existential over `R`
/// becomes the alternatives that pick an asserted sub-role for each
/// member of `R`.
pub fn alchi(sat: &SaturatedTBox, rewriting: &Rewriting) -> Result<AlchiProgram, String> {
    if sat.has_at_most_one() {
        return Err("the ontology has at-most axioms".to_string());
    }
    let sig = sat.signature();
    let roles: BTreeSet<RoleName> = sig.role_ids().map(|r| sig.role(r).name).collect();
    let names = Names::new(rewriting, &roles);
    let choose = |rs: &BTreeSet<Role>| -> Vec<BTreeSet<Role>> {
        let mut out: BTreeSet<BTreeSet<Role>> = BTreeSet::from([BTreeSet::new()]);
        for r in rs {
            let subs = sub_roles(sat, r);
            out = out
                .iter()
                .flat_map(|acc| {
                    subs.iter()
                        .map(move |s| acc.iter().cloned().chain([s.clone()]).collect())
                })
                .collect();
        }
        out.into_iter().collect()
    };
    let mut rules = type_rules(&names, sat);
    for ax in sat.value_axioms() {
        let b = ax.b.expect("trivial value restrictions are dropped");
        for s in sub_roles(sat, &sig.role(ax.r)) {
            let body = vec![Literal::pos(Atom::exists_shape(
                [s.inverse()],
                names.concept(sig.concept(ax.a)),
            ))];
            rules.push(Rule::new(names.concept(sig.concept(b)), body));
        }
    }
    for r in &rewriting.rules {
        rules.extend(translate(r, &names, &choose));
    }
    let mut seen = BTreeSet::new();
    rules.retain(|r| seen.insert(r.clone()));
    let stratification = stratify_rules(&rules).map_err(|e| e.to_string())?;
    Ok(AlchiProgram {
        rules,
        stratification,
    })
}

/// Binary shape expressions.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Path {
    /// `s?`: the identity on the nodes of shape `s`.
    Test(ShapeName),
    /// A role or a materialized binary shape.
    Role(Role),
    Inverse(Box<Path>),
    Seq(Box<Path>, Box<Path>),
    Union(Box<Path>, Box<Path>),
    Intersect(Box<Path>, Box<Path>),
    Difference(Box<Path>, Box<Path>),
    Star(Box<Path>),
}

impl Path {
    pub fn seq(paths: impl IntoIterator<Item = Path>) -> Path {
        let mut it = paths.into_iter();
        let first = it.next().expect("a sequence has at least one step");
        it.fold(first, |acc, p| Path::Seq(Box::new(acc), Box::new(p)))
    }

    pub fn pairs(
        &self,
        interp: &Interpretation,
        s: &ShapeAssignment,
    ) -> BTreeSet<(NodeId, NodeId)> {
        match self {
            Path::Test(n) => s.extension(n).into_iter().map(|x| (x, x)).collect(),
            Path::Role(r) => interp.role_ext(r),
            Path::Inverse(p) => p
                .pairs(interp, s)
                .into_iter()
                .map(|(x, y)| (y, x))
                .collect(),
            Path::Seq(a, b) => {
                let right = b.pairs(interp, s);
                let mut by_start: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
                for (y, z) in right {
                    by_start.entry(y).or_default().push(z);
                }
                a.pairs(interp, s)
                    .into_iter()
                    .flat_map(|(x, y)| by_start.get(&y).into_iter().flatten().map(move |&z| (x, z)))
                    .collect()
            }
            Path::Union(a, b) => &a.pairs(interp, s) | &b.pairs(interp, s),
            Path::Intersect(a, b) => &a.pairs(interp, s) & &b.pairs(interp, s),
            Path::Difference(a, b) => &a.pairs(interp, s) - &b.pairs(interp, s),
            Path::Star(p) => {
                let step = p.pairs(interp, s);
                let mut out: BTreeSet<(NodeId, NodeId)> =
                    interp.node_ids().map(|x| (x, x)).collect();
                loop {
                    let next: BTreeSet<(NodeId, NodeId)> = out
                        .iter()
                        .flat_map(|&(x, y)| {
                            step.iter()
                                .filter(move |&&(a, _)| a == y)
                                .map(move |&(_, z)| (x, z))
                        })
                        .collect();
                    let before = out.len();
                    out.extend(next);
                    if out.len() == before {
                        return out;
                    }
                }
            }
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Path::Test(s) => write!(f, "${s}?"),
            Path::Role(r) => write!(f, "{r}"),
            Path::Inverse(p) => write!(f, "^({p})"),
            Path::Seq(a, b) => write!(f, "({a}/{b})"),
            Path::Union(a, b) => write!(f, "({a}|{b})"),
            Path::Intersect(a, b) => write!(f, "({a}&{b})"),
            Path::Difference(a, b) => write!(f, "({a}\\{b})"),
            Path::Star(p) => write!(f, "({p})*"),
        }
    }
}

/// `head ⇐ path` for a binary shape `head`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct BinaryRule {
    pub head: Role,
    pub body: Path,
}

impl fmt::Display for BinaryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <- {}", self.head, self.body)
    }
}

/// A program with binary shapes. The base part is positive and recomputes
/// `A_T`; the rewritten constraints sit on top of it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryProgram {
    pub base: Vec<Rule>,
    pub binary: Vec<BinaryRule>,
    pub upper: Vec<Rule>,
    pub stratification: Stratification,
}

impl BinaryProgram {
    pub fn len(&self) -> usize {
        self.base.len() + self.binary.len() + self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stratum_count(&self) -> usize {
        self.stratification.stratum_count()
    }

    /// Closes the base part, materializing binary shapes as role atoms,
    /// and returns the extended interpretation with the base assignment.
    pub fn close_base(&self, interp: &Interpretation) -> (Interpretation, ShapeAssignment) {
        let mut work = interp.clone();
        let base: Vec<&Rule> = self.base.iter().collect();
        let mut s = ShapeAssignment::new();
        loop {
            s = least_fixpoint(&work, &base, s);
            let mut changed = false;
            for b in &self.binary {
                for (x, y) in b.body.pairs(&work, &s) {
                    changed |= work.add_role(&b.head, x, y);
                }
            }
            if !changed {
                return (work, s);
            }
        }
    }

    pub fn validate(
        &self,
        interp: &Interpretation,
        targets: &BTreeSet<ShapeAtom>,
    ) -> Vec<TargetVerdict> {
        let (work, base) = self.close_base(interp);
        let mut by_level: BTreeMap<usize, Vec<&Rule>> = BTreeMap::new();
        for r in &self.upper {
            by_level
                .entry(self.stratification.level(&r.head))
                .or_default()
                .push(r);
        }
        let mut s = base;
        for rules in by_level.values() {
            s = least_fixpoint(&work, rules, s);
        }
        targets
            .iter()
            .map(|t| TargetVerdict {
                shape: t.shape.clone(),
                node: t.node.clone(),
                valid: work
                    .individual_id(&t.node)
                    .is_some_and(|x| s.contains(&t.shape, x)),
            })
            .collect()
    }
}

impl fmt::Display for BinaryProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.base.iter().try_for_each(|r| writeln!(f, "{r}"))?;
        self.binary.iter().try_for_each(|r| writeln!(f, "{r}"))?;
        self.upper.iter().try_for_each(|r| writeln!(f, "{r}"))
    }
}

/// The binary-shape route. Besides the unary families it derives
/// `b_r ⇐ r`, `b_r' ⇐ b_r` for `r ⊑ r'`, and for every derived
/// `⊓Ai ⊑ ∃(⊓R).⊓N` with an at-most axiom `A ⊑ ≤1 r.B` such that `r ∈ R`
/// and `B ∈ N`: a guard `ŝ ⇐ s_A ∧ ∧ s_Ai`, a merge shape
/// `m ⇐ ŝ? · b_r · s_B?`, `b_r' ⇐ m` for each `r' ∈ R` and
/// `s_B' ⇐ ∃m⁻.⊤` for each `B' ∈ N`.
pub fn shaclb(sat: &SaturatedTBox, rewriting: &Rewriting) -> BinaryProgram {
    let sig = sat.signature();
    let role_names: BTreeSet<RoleName> = sig.role_ids().map(|r| sig.role(r).name).collect();
    let names = Names::new(rewriting, &role_names);
    let role = |id: RoleId| sig.role(id);
    let concept_shape = |c| names.concept(sig.concept(c));

    let mut base = type_rules(&names, sat);
    for ax in sat.value_axioms() {
        let b = ax.b.expect("trivial value restrictions are dropped");
        let body = vec![Literal::pos(Atom::exists_shape(
            [names.binary(&role(ax.r).inverse())],
            concept_shape(ax.a),
        ))];
        base.push(Rule::new(concept_shape(b), body));
    }

    let mut binary = Vec::new();
    for id in sig.role_ids() {
        let r = role(id);
        binary.push(BinaryRule {
            head: names.binary(&r),
            body: Path::Role(r.clone()),
        });
        for sup in sat.super_roles(id).iter().filter(|&s| s != id) {
            binary.push(BinaryRule {
                head: names.binary(&role(sup)),
                body: Path::Role(names.binary(&r)),
            });
        }
    }

    let mut merges = 0;
    for fact in sat.exist_facts() {
        for ax in sat.at_most_axioms() {
            let fits = ax.b.is_none_or(|b| fact.concepts.contains(b));
            if !fact.roles.contains(ax.r) || !fits {
                continue;
            }
            let guard = names.guard(merges);
            let merge = Role::new(format!("{}{}", names.binary, guard));
            merges += 1;
            let lhs = fact.lhs.with(ax.a);
            base.push(
                Rule::new(
                    guard.clone(),
                    lhs.iter()
                        .map(|c| Literal::pos(Atom::Shape(concept_shape(c))))
                        .collect(),
                )
                .canonical(),
            );
            let mut steps = vec![Path::Test(guard), Path::Role(names.binary(&role(ax.r)))];
            if let Some(b) = ax.b {
                steps.push(Path::Test(concept_shape(b)));
            }
            binary.push(BinaryRule {
                head: merge.clone(),
                body: Path::seq(steps),
            });
            for r in fact.roles.iter() {
                binary.push(BinaryRule {
                    head: names.binary(&role(r)),
                    body: Path::Role(merge.clone()),
                });
            }
            for c in fact.concepts.iter() {
                let body = vec![Literal::pos(Atom::Exists {
                    roles: BTreeSet::from([merge.inverse()]),
                    concepts: BTreeSet::new(),
                    shapes: BTreeSet::new(),
                })];
                base.push(Rule::new(concept_shape(c), body));
            }
        }
    }

    let to_binary = |rs: &BTreeSet<Role>| vec![rs.iter().map(|r| names.binary(r)).collect()];
    let upper: Vec<Rule> = rewriting
        .rules
        .iter()
        .flat_map(|r| translate(r, &names, &to_binary))
        .collect();
    let mut seen = BTreeSet::new();
    base.retain(|r| seen.insert(r.clone()));
    let all: Vec<Rule> = base.iter().chain(&upper).cloned().collect();
    let stratification =
        stratify_rules(&all).expect("the base part is positive and the rewriting is stratified");
    BinaryProgram {
        base,
        binary,
        upper,
        stratification,
    }
}

/// Verdicts of the plain-ABox routes, for tests and the CLI.
pub fn validate_alchi(
    program: &AlchiProgram,
    interp: &Interpretation,
    targets: &BTreeSet<ShapeAtom>,
) -> Vec<TargetVerdict> {
    validate(interp, &program.rules, &program.stratification, targets)
        .expect("plain ABoxes are complete")
}
