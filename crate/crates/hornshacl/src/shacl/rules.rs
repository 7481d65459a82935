use std::collections::BTreeSet;
use std::fmt;

use super::expr::{Constraint, ShapeExpr};
use crate::kb::{Concept, Individual, Role, ShapeName};

/// A body atom of a flattened constraint. `Exists` asks for one neighbour
/// reached by all `roles` that carries all `concepts` and all `shapes`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    Top,
    Concept(Concept),
    Individual(Individual),
    Shape(ShapeName),
    Exists {
        roles: BTreeSet<Role>,
        concepts: BTreeSet<Concept>,
        shapes: BTreeSet<ShapeName>,
    },
}

impl Atom {
    pub fn exists_shape(roles: impl IntoIterator<Item = Role>, s: ShapeName) -> Atom {
        Atom::Exists {
            roles: roles.into_iter().collect(),
            concepts: BTreeSet::new(),
            shapes: BTreeSet::from([s]),
        }
    }

    pub fn exists_concepts(
        roles: impl IntoIterator<Item = Role>,
        concepts: impl IntoIterator<Item = Concept>,
    ) -> Atom {
        Atom::Exists {
            roles: roles.into_iter().collect(),
            concepts: concepts.into_iter().collect(),
            shapes: BTreeSet::new(),
        }
    }

    pub fn shapes(&self) -> Vec<&ShapeName> {
        match self {
            Atom::Shape(s) => vec![s],
            Atom::Exists { shapes, .. } => shapes.iter().collect(),
            _ => Vec::new(),
        }
    }

    pub fn map_shapes(&self, f: &impl Fn(&ShapeName) -> ShapeName) -> Atom {
        match self {
            Atom::Shape(s) => Atom::Shape(f(s)),
            Atom::Exists {
                roles,
                concepts,
                shapes,
            } => Atom::Exists {
                roles: roles.clone(),
                concepts: concepts.clone(),
                shapes: shapes.iter().map(f).collect(),
            },
            other => other.clone(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Top => f.write_str("top"),
            Atom::Concept(c) => write!(f, "{c}"),
            Atom::Individual(c) => write!(f, "@{c}"),
            Atom::Shape(s) => write!(f, "${s}"),
            Atom::Exists {
                roles,
                concepts,
                shapes,
            } => {
                let rs: Vec<String> = roles.iter().map(|r| r.to_string()).collect();
                let mut parts: Vec<String> = concepts.iter().map(|c| c.to_string()).collect();
                parts.extend(shapes.iter().map(|s| format!("${s}")));
                write!(f, "some [{}].", rs.join(","))?;
                match parts.len() {
                    0 => f.write_str("top"),
                    1 => f.write_str(&parts[0]),
                    _ => write!(f, "({})", parts.join(" & ")),
                }
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Literal {
    pub negated: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal {
            negated: false,
            atom,
        }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            negated: true,
            atom,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// `head ⇐ l1 ∧ … ∧ ln`; the empty body is `⊤`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Rule {
    pub head: ShapeName,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: ShapeName, body: Vec<Literal>) -> Self {
        Rule { head, body }
    }

    /// Sorted, duplicate-free body; conjunct order carries no meaning.
    pub fn canonical(mut self) -> Self {
        self.body.sort();
        self.body.dedup();
        self
    }

    /// A body holding both `X` and `!X` never fires.
    pub fn is_vacuous(&self) -> bool {
        self.body
            .iter()
            .any(|l| l.negated && self.body.contains(&Literal::pos(l.atom.clone())))
    }

    /// Shape names in the body, with a flag for negated occurrences.
    pub fn shape_refs(&self) -> Vec<(&ShapeName, bool)> {
        self.body
            .iter()
            .flat_map(|l| l.atom.shapes().into_iter().map(move |s| (s, l.negated)))
            .collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${} <- ", self.head)?;
        if self.body.is_empty() {
            return f.write_str("top");
        }
        let parts: Vec<String> = self.body.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join(" & "))
    }
}

/// The six normal-form bodies.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum NormalBody {
    Individual(Individual),
    Shape(ShapeName),
    /// `None` is `⊤`.
    Concept(Option<Concept>),
    And(ShapeName, ShapeName),
    Exists(BTreeSet<Role>, ShapeName),
    Not(ShapeName),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NormalConstraint {
    pub head: ShapeName,
    pub body: NormalBody,
}

impl NormalConstraint {
    pub fn new(head: ShapeName, body: NormalBody) -> Self {
        NormalConstraint { head, body }
    }

    pub fn to_rule(&self) -> Rule {
        let lit = match &self.body {
            NormalBody::Individual(c) => vec![Literal::pos(Atom::Individual(c.clone()))],
            NormalBody::Shape(s) => vec![Literal::pos(Atom::Shape(s.clone()))],
            NormalBody::Concept(None) => Vec::new(),
            NormalBody::Concept(Some(a)) => vec![Literal::pos(Atom::Concept(a.clone()))],
            NormalBody::And(a, b) => {
                vec![
                    Literal::pos(Atom::Shape(a.clone())),
                    Literal::pos(Atom::Shape(b.clone())),
                ]
            }
            NormalBody::Exists(rs, s) => vec![Literal::pos(Atom::exists_shape(
                rs.iter().cloned(),
                s.clone(),
            ))],
            NormalBody::Not(s) => vec![Literal::neg(Atom::Shape(s.clone()))],
        };
        Rule::new(self.head.clone(), lit)
    }

    pub fn to_constraint(&self) -> Constraint {
        let body = match &self.body {
            NormalBody::Individual(c) => ShapeExpr::Individual(c.clone()),
            NormalBody::Shape(s) => ShapeExpr::Shape(s.clone()),
            NormalBody::Concept(None) => ShapeExpr::Top,
            NormalBody::Concept(Some(a)) => ShapeExpr::Concept(a.clone()),
            NormalBody::And(a, b) => {
                ShapeExpr::and(ShapeExpr::Shape(a.clone()), ShapeExpr::Shape(b.clone()))
            }
            NormalBody::Exists(rs, s) => {
                ShapeExpr::exists(rs.iter().cloned(), ShapeExpr::Shape(s.clone()))
            }
            NormalBody::Not(s) => ShapeExpr::NegShape(s.clone()),
        };
        Constraint {
            head: self.head.clone(),
            body,
        }
    }

    pub fn shape_refs(&self) -> Vec<(&ShapeName, bool)> {
        match &self.body {
            NormalBody::Shape(s) | NormalBody::Exists(_, s) => vec![(s, false)],
            NormalBody::And(a, b) => vec![(a, false), (b, false)],
            NormalBody::Not(s) => vec![(s, true)],
            _ => Vec::new(),
        }
    }

    pub fn is_negative(&self) -> bool {
        matches!(self.body, NormalBody::Not(_))
    }
}

impl fmt::Display for NormalConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_constraint())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_display_matches_the_input_syntax() {
        let rule = Rule::new(
            "s".into(),
            vec![
                Literal::pos(Atom::Concept("A".into())),
                Literal::neg(Atom::Concept("B".into())),
                Literal::pos(Atom::exists_shape([Role::new("p")], "sC".into())),
                Literal::neg(Atom::exists_concepts([Role::new("p")], ["B".into()])),
            ],
        );
        assert_eq!(
            rule.to_string(),
            "$s <- A & !B & some [p].$sC & !some [p].B"
        );
    }

    #[test]
    fn contradictory_bodies_are_vacuous() {
        let a = Atom::Concept("A".into());
        let rule = Rule::new("s".into(), vec![Literal::pos(a.clone()), Literal::neg(a)]);
        assert!(rule.is_vacuous());
    }
}
