//! Stratified least-fixpoint evaluation over finite interpretations.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::expr::{Constraint, Regex, ShapeAtom, ShapeExpr};
use super::rules::{Atom, Literal, NormalConstraint, Rule};
use super::strata::Stratification;
use crate::kb::{Individual, Interpretation, Node, NodeId, ShapeName};

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum EvalError {
    #[error("the interpretation is a truncated approximation and the constraints use negation")]
    NegationOverTruncated,
}

/// Unary shape atoms `s(x)`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ShapeAssignment {
    atoms: BTreeMap<ShapeName, BTreeSet<NodeId>>,
}

impl ShapeAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, s: &ShapeName, x: NodeId) -> bool {
        self.atoms.get(s).is_some_and(|xs| xs.contains(&x))
    }

    pub fn insert(&mut self, s: &ShapeName, x: NodeId) -> bool {
        self.atoms.entry(s.clone()).or_default().insert(x)
    }

    pub fn extension(&self, s: &ShapeName) -> BTreeSet<NodeId> {
        self.atoms.get(s).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.atoms.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ShapeName, NodeId)> {
        self.atoms
            .iter()
            .flat_map(|(s, xs)| xs.iter().map(move |&x| (s, x)))
    }

    /// Atoms on named individuals only.
    pub fn named(&self, interp: &Interpretation) -> BTreeSet<(ShapeName, Individual)> {
        self.iter()
            .filter_map(|(s, x)| interp.node(x).individual().map(|a| (s.clone(), a.clone())))
            .collect()
    }

    /// Restricted to the given shape names.
    pub fn project(&self, names: &BTreeSet<ShapeName>) -> ShapeAssignment {
        ShapeAssignment {
            atoms: self
                .atoms
                .iter()
                .filter(|(s, _)| names.contains(*s))
                .map(|(s, x)| (s.clone(), x.clone()))
                .collect(),
        }
    }
}

/// A constraint as seen by the evaluator.
pub trait ShapeRule {
    fn head(&self) -> &ShapeName;
    /// Nodes satisfying the body under the assignment.
    fn extension(&self, interp: &Interpretation, s: &ShapeAssignment) -> BTreeSet<NodeId>;
    fn uses_negation(&self) -> bool;
}

fn individual_node(interp: &Interpretation, c: &Individual) -> Option<NodeId> {
    interp.individual_id(c)
}

/// The path relation by relational algebra; independent of the automata.
pub fn path_pairs(interp: &Interpretation, regex: &Regex) -> BTreeSet<(NodeId, NodeId)> {
    match regex {
        Regex::Role(r) => interp.role_ext(r),
        Regex::Seq(a, b) => {
            let (pa, pb) = (path_pairs(interp, a), path_pairs(interp, b));
            let mut by_src: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
            for &(x, y) in &pb {
                by_src.entry(x).or_default().push(y);
            }
            pa.iter()
                .flat_map(|&(x, y)| by_src.get(&y).into_iter().flatten().map(move |&z| (x, z)))
                .collect()
        }
        Regex::Alt(a, b) => path_pairs(interp, a)
            .union(&path_pairs(interp, b))
            .copied()
            .collect(),
        Regex::Star(a) => {
            let step = path_pairs(interp, a);
            let mut out: BTreeSet<(NodeId, NodeId)> = interp.node_ids().map(|x| (x, x)).collect();
            loop {
                let next: BTreeSet<(NodeId, NodeId)> = out
                    .iter()
                    .flat_map(|&(x, y)| {
                        step.iter()
                            .filter(move |(a, _)| *a == y)
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

fn path_image(interp: &Interpretation, regex: &Regex, c: NodeId) -> BTreeSet<NodeId> {
    path_pairs(interp, regex)
        .into_iter()
        .filter(|&(x, _)| x == c)
        .map(|(_, y)| y)
        .collect()
}

/// Extension of a shape expression, clause by clause.
pub fn expr_extension(
    interp: &Interpretation,
    e: &ShapeExpr,
    s: &ShapeAssignment,
) -> BTreeSet<NodeId> {
    match e {
        ShapeExpr::Individual(c) => individual_node(interp, c).into_iter().collect(),
        ShapeExpr::Shape(n) => s.extension(n),
        ShapeExpr::NegShape(n) => interp.node_ids().filter(|&x| !s.contains(n, x)).collect(),
        ShapeExpr::Top => interp.node_ids().collect(),
        ShapeExpr::Concept(a) => interp.concept_ext(a),
        ShapeExpr::Or(a, b) => expr_extension(interp, a, s)
            .union(&expr_extension(interp, b, s))
            .copied()
            .collect(),
        ShapeExpr::And(a, b) => expr_extension(interp, a, s)
            .intersection(&expr_extension(interp, b, s))
            .copied()
            .collect(),
        ShapeExpr::ExistsRoles(rs, body) => {
            let fill = expr_extension(interp, body, s);
            interp
                .node_ids()
                .filter(|&x| {
                    interp
                        .neighbours(x)
                        .iter()
                        .any(|(y, have)| fill.contains(y) && rs.is_subset(have))
                })
                .collect()
        }
        ShapeExpr::ExistsPath(regex, body) => {
            let fill = expr_extension(interp, body, s);
            path_pairs(interp, regex)
                .into_iter()
                .filter(|(_, y)| fill.contains(y))
                .map(|(x, _)| x)
                .collect()
        }
        ShapeExpr::GuardedEq(c, a, b) => match individual_node(interp, c) {
            Some(x) if path_image(interp, a, x) == path_image(interp, b, x) => BTreeSet::from([x]),
            _ => BTreeSet::new(),
        },
        ShapeExpr::GuardedDisj(c, a, b) => match individual_node(interp, c) {
            Some(x) if path_image(interp, a, x).is_disjoint(&path_image(interp, b, x)) => {
                BTreeSet::from([x])
            }
            _ => BTreeSet::new(),
        },
    }
}

fn expr_uses_negation(e: &ShapeExpr) -> bool {
    match e {
        ShapeExpr::NegShape(_) | ShapeExpr::GuardedEq(..) | ShapeExpr::GuardedDisj(..) => true,
        ShapeExpr::Or(a, b) | ShapeExpr::And(a, b) => {
            expr_uses_negation(a) || expr_uses_negation(b)
        }
        ShapeExpr::ExistsRoles(_, a) | ShapeExpr::ExistsPath(_, a) => expr_uses_negation(a),
        _ => false,
    }
}

impl ShapeRule for Constraint {
    fn head(&self) -> &ShapeName {
        &self.head
    }

    fn extension(&self, interp: &Interpretation, s: &ShapeAssignment) -> BTreeSet<NodeId> {
        expr_extension(interp, &self.body, s)
    }

    fn uses_negation(&self) -> bool {
        expr_uses_negation(&self.body)
    }
}

/// Whether `atom` holds at `x`.
pub fn atom_holds(interp: &Interpretation, atom: &Atom, s: &ShapeAssignment, x: NodeId) -> bool {
    match atom {
        Atom::Top => true,
        Atom::Concept(a) => interp.has_concept(x, a),
        Atom::Individual(c) => matches!(interp.node(x), Node::Named(a) if a == c),
        Atom::Shape(n) => s.contains(n, x),
        Atom::Exists {
            roles,
            concepts,
            shapes,
        } => {
            let fits = |y: NodeId| {
                concepts.iter().all(|c| interp.has_concept(y, c))
                    && shapes.iter().all(|n| s.contains(n, y))
            };
            if roles.is_empty() {
                interp.node_ids().any(fits)
            } else {
                interp
                    .neighbours(x)
                    .iter()
                    .any(|(&y, have)| roles.is_subset(have) && fits(y))
            }
        }
    }
}

pub fn literal_holds(interp: &Interpretation, l: &Literal, s: &ShapeAssignment, x: NodeId) -> bool {
    atom_holds(interp, &l.atom, s, x) != l.negated
}

impl ShapeRule for Rule {
    fn head(&self) -> &ShapeName {
        &self.head
    }

    fn extension(&self, interp: &Interpretation, s: &ShapeAssignment) -> BTreeSet<NodeId> {
        // An individual literal pins the candidate node.
        let pinned = self.body.iter().find_map(|l| match &l.atom {
            Atom::Individual(c) if !l.negated => Some(individual_node(interp, c)),
            _ => None,
        });
        let candidates: Vec<NodeId> = match pinned {
            Some(x) => x.into_iter().collect(),
            None => interp.node_ids().collect(),
        };
        candidates
            .into_iter()
            .filter(|&x| self.body.iter().all(|l| literal_holds(interp, l, s, x)))
            .collect()
    }

    fn uses_negation(&self) -> bool {
        self.body.iter().any(|l| l.negated)
    }
}

impl ShapeRule for NormalConstraint {
    fn head(&self) -> &ShapeName {
        &self.head
    }

    fn extension(&self, interp: &Interpretation, s: &ShapeAssignment) -> BTreeSet<NodeId> {
        self.to_rule().extension(interp, s)
    }

    fn uses_negation(&self) -> bool {
        self.is_negative()
    }
}

/// `T(S) = S ∪ {s(x) | s ⇐ φ, x ∈ φ(S)}`.
pub fn immediate_consequence<R: ShapeRule>(
    interp: &Interpretation,
    rules: &[R],
    s: &ShapeAssignment,
) -> ShapeAssignment {
    let mut out = s.clone();
    for r in rules {
        for x in r.extension(interp, s) {
            out.insert(r.head(), x);
        }
    }
    out
}

/// Iterates `T` to its least fixpoint above `start`.
pub fn least_fixpoint<R: ShapeRule>(
    interp: &Interpretation,
    rules: &[&R],
    start: ShapeAssignment,
) -> ShapeAssignment {
    let mut s = start;
    loop {
        let mut changed = false;
        for r in rules {
            for x in r.extension(interp, &s) {
                changed |= s.insert(r.head(), x);
            }
        }
        if !changed {
            return s;
        }
    }
}

/// `M_k`: the least fixpoint per stratum, each starting from the previous.
pub fn perfect_assignment<R: ShapeRule>(
    interp: &Interpretation,
    rules: &[R],
    strat: &Stratification,
) -> ShapeAssignment {
    let mut by_level: BTreeMap<usize, Vec<&R>> = BTreeMap::new();
    for r in rules {
        by_level.entry(strat.level(r.head())).or_default().push(r);
    }
    let mut s = ShapeAssignment::new();
    for stratum in by_level.values() {
        s = least_fixpoint(interp, stratum, s);
    }
    s
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct TargetVerdict {
    pub shape: ShapeName,
    pub node: Individual,
    pub valid: bool,
}

/// Per-target verdicts. Negation over a truncated interpretation is refused;
/// without negation a truncated interpretation gives a lower bound.
pub fn validate<R: ShapeRule>(
    interp: &Interpretation,
    rules: &[R],
    strat: &Stratification,
    targets: &BTreeSet<ShapeAtom>,
) -> Result<Vec<TargetVerdict>, EvalError> {
    if !interp.is_complete() && rules.iter().any(ShapeRule::uses_negation) {
        return Err(EvalError::NegationOverTruncated);
    }
    let pa = perfect_assignment(interp, rules, strat);
    Ok(targets
        .iter()
        .map(|t| TargetVerdict {
            shape: t.shape.clone(),
            node: t.node.clone(),
            valid: individual_node(interp, &t.node).is_some_and(|x| pa.contains(&t.shape, x)),
        })
        .collect())
}
