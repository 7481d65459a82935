//! Vocabulary shared by every other module: roles with inverses, the
//! normalized axiom shapes, ABoxes, 2-types and finite interpretations.

mod interp;
mod names;
mod sets;
mod types;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use interp::{Interpretation, Node, NodeId};
pub use names::{Concept, Individual, RoleName, ShapeName};
pub use sets::{ConceptId, ConceptSet, RoleId, RoleSet, Signature, SignatureError};
pub use types::{invert_two_type, OneHalfType, TwoType};

/// A role name together with a direction; `p⁻` is `Role { name: p, inverted: true }`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Role {
    pub name: RoleName,
    pub inverted: bool,
}

impl Role {
    pub fn new(name: impl AsRef<str>) -> Self {
        Role {
            name: RoleName::new(name),
            inverted: false,
        }
    }

    pub fn inverse_of(name: impl AsRef<str>) -> Self {
        Role {
            name: RoleName::new(name),
            inverted: true,
        }
    }

    /// `(p⁻)⁻ = p`.
    pub fn inverse(&self) -> Role {
        Role {
            name: self.name.clone(),
            inverted: !self.inverted,
        }
    }
}

pub fn invert_role(r: &Role) -> Role {
    r.inverse()
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverted {
            write!(f, "^{}", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

/// The filler of an at-most, value or existential restriction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Filler {
    Top,
    Named(Concept),
}

impl Filler {
    pub fn concept(&self) -> Option<&Concept> {
        match self {
            Filler::Top => None,
            Filler::Named(c) => Some(c),
        }
    }
}

impl fmt::Display for Filler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Filler::Top => f.write_str("top"),
            Filler::Named(c) => write!(f, "{c}"),
        }
    }
}

/// Right-hand side of a conjunctive inclusion.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Head {
    Top,
    Bottom,
    Named(Concept),
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Head::Top => f.write_str("top"),
            Head::Bottom => f.write_str("bot"),
            Head::Named(c) => write!(f, "{c}"),
        }
    }
}

/// The five normalized axiom shapes. Nothing else is representable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Axiom {
    /// `A0 ⊓ … ⊓ An ⊑ B`; `lhs` is nonempty.
    ConjInclusion { lhs: BTreeSet<Concept>, rhs: Head },
    /// `A ⊑ ≤1 r.B`
    AtMostOne { a: Concept, r: Role, b: Filler },
    /// `A ⊑ ∀r.B`
    ValueRestriction { a: Concept, r: Role, b: Filler },
    /// `A ⊑ ∃r.B`
    ExistsInclusion { a: Concept, r: Role, b: Filler },
    /// `r ⊑ s`
    RoleInclusion { sub: Role, sup: Role },
}

impl Axiom {
    pub fn concepts(&self) -> Vec<&Concept> {
        match self {
            Axiom::ConjInclusion { lhs, rhs } => {
                let mut out: Vec<&Concept> = lhs.iter().collect();
                if let Head::Named(c) = rhs {
                    out.push(c);
                }
                out
            }
            Axiom::AtMostOne { a, b, .. }
            | Axiom::ValueRestriction { a, b, .. }
            | Axiom::ExistsInclusion { a, b, .. } => {
                let mut out = vec![a];
                out.extend(b.concept());
                out
            }
            Axiom::RoleInclusion { .. } => Vec::new(),
        }
    }

    pub fn roles(&self) -> Vec<&Role> {
        match self {
            Axiom::ConjInclusion { .. } => Vec::new(),
            Axiom::AtMostOne { r, .. }
            | Axiom::ValueRestriction { r, .. }
            | Axiom::ExistsInclusion { r, .. } => vec![r],
            Axiom::RoleInclusion { sub, sup } => vec![sub, sup],
        }
    }

    pub fn is_at_most_one(&self) -> bool {
        matches!(self, Axiom::AtMostOne { .. })
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::ConjInclusion { lhs, rhs } => {
                let lhs: Vec<String> = lhs.iter().map(|c| c.to_string()).collect();
                write!(f, "{} <= {rhs}", lhs.join(" & "))
            }
            Axiom::AtMostOne { a, r, b } => write!(f, "{a} <= max1 {r}.{b}"),
            Axiom::ValueRestriction { a, r, b } => write!(f, "{a} <= only {r}.{b}"),
            Axiom::ExistsInclusion { a, r, b } => write!(f, "{a} <= some {r}.{b}"),
            Axiom::RoleInclusion { sub, sup } => write!(f, "{sub} <= {sup}"),
        }
    }
}

/// A normalized Horn-SHIQ TBox.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct TBox {
    axioms: BTreeSet<Axiom>,
}

impl TBox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_axioms(axioms: impl IntoIterator<Item = Axiom>) -> Self {
        TBox {
            axioms: axioms.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, axiom: Axiom) {
        self.axioms.insert(axiom);
    }

    pub fn axioms(&self) -> impl Iterator<Item = &Axiom> {
        self.axioms.iter()
    }

    pub fn len(&self) -> usize {
        self.axioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axioms.is_empty()
    }

    pub fn concepts(&self) -> BTreeSet<Concept> {
        self.axioms
            .iter()
            .flat_map(|a| a.concepts())
            .cloned()
            .collect()
    }

    pub fn role_names(&self) -> BTreeSet<RoleName> {
        self.axioms
            .iter()
            .flat_map(|a| a.roles())
            .map(|r| r.name.clone())
            .collect()
    }

    pub fn has_at_most_one(&self) -> bool {
        self.axioms.iter().any(Axiom::is_at_most_one)
    }
}

impl fmt::Display for TBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for axiom in &self.axioms {
            writeln!(f, "{axiom}")?;
        }
        Ok(())
    }
}

/// Ground concept and role atoms over named individuals. Role atoms are
/// stored under the base role name; `^r(a,b)` is kept as `r(b,a)`.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct ABox {
    concepts: BTreeSet<(Concept, Individual)>,
    roles: BTreeSet<(RoleName, Individual, Individual)>,
    individuals: BTreeSet<Individual>,
}

impl ABox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_concept(&mut self, c: Concept, a: Individual) -> bool {
        self.individuals.insert(a.clone());
        self.concepts.insert((c, a))
    }

    pub fn add_role(&mut self, r: &Role, a: Individual, b: Individual) -> bool {
        self.individuals.insert(a.clone());
        self.individuals.insert(b.clone());
        if r.inverted {
            self.roles.insert((r.name.clone(), b, a))
        } else {
            self.roles.insert((r.name.clone(), a, b))
        }
    }

    /// Registers an individual that occurs in no atom.
    pub fn add_individual(&mut self, a: Individual) {
        self.individuals.insert(a);
    }

    pub fn has_concept(&self, c: &Concept, a: &Individual) -> bool {
        self.concepts.contains(&(c.clone(), a.clone()))
    }

    pub fn has_role(&self, r: &Role, a: &Individual, b: &Individual) -> bool {
        let (x, y) = if r.inverted { (b, a) } else { (a, b) };
        self.roles.contains(&(r.name.clone(), x.clone(), y.clone()))
    }

    pub fn concept_atoms(&self) -> impl Iterator<Item = (&Concept, &Individual)> {
        self.concepts.iter().map(|(c, a)| (c, a))
    }

    pub fn role_atoms(&self) -> impl Iterator<Item = (&RoleName, &Individual, &Individual)> {
        self.roles.iter().map(|(r, a, b)| (r, a, b))
    }

    pub fn individuals(&self) -> impl Iterator<Item = &Individual> {
        self.individuals.iter()
    }

    pub fn concepts_of(&self, a: &Individual) -> BTreeSet<Concept> {
        self.concepts
            .iter()
            .filter(|(_, x)| x == a)
            .map(|(c, _)| c.clone())
            .collect()
    }

    pub fn concept_names(&self) -> BTreeSet<Concept> {
        self.concepts.iter().map(|(c, _)| c.clone()).collect()
    }

    pub fn role_names(&self) -> BTreeSet<RoleName> {
        self.roles.iter().map(|(r, _, _)| r.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.concepts.len() + self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty() && self.roles.is_empty()
    }

    /// Directed neighbourhood: for every individual, the roles (with
    /// direction) leading to each other individual.
    pub fn neighbourhood(&self) -> BTreeMap<Individual, BTreeMap<Individual, BTreeSet<Role>>> {
        let mut out: BTreeMap<Individual, BTreeMap<Individual, BTreeSet<Role>>> = BTreeMap::new();
        for (r, a, b) in &self.roles {
            out.entry(a.clone())
                .or_default()
                .entry(b.clone())
                .or_default()
                .insert(Role {
                    name: r.clone(),
                    inverted: false,
                });
            out.entry(b.clone())
                .or_default()
                .entry(a.clone())
                .or_default()
                .insert(Role {
                    name: r.clone(),
                    inverted: true,
                });
        }
        out
    }

    /// Applies a role renaming, e.g. after collapsing role-inclusion cycles.
    pub fn rename_roles(&self, rename: impl Fn(&Role) -> Role) -> ABox {
        let mut out = ABox {
            concepts: self.concepts.clone(),
            individuals: self.individuals.clone(),
            ..ABox::default()
        };
        for (r, a, b) in &self.roles {
            let r = rename(&Role {
                name: r.clone(),
                inverted: false,
            });
            out.add_role(&r, a.clone(), b.clone());
        }
        out
    }
}

impl fmt::Display for ABox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, a) in &self.concepts {
            writeln!(f, "{c}({a})")?;
        }
        for (r, a, b) in &self.roles {
            writeln!(f, "{r}({a},{b})")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_inversion_is_an_involution() {
        let p = Role::new("p");
        assert_eq!(p.inverse(), Role::inverse_of("p"));
        assert_eq!(Role::inverse_of("p").inverse(), p);
        let has_pet = Role::new("hasPet");
        assert_eq!(invert_role(&invert_role(&has_pet)), has_pet);
    }

    #[test]
    fn inverse_role_atoms_are_stored_flipped() {
        let mut abox = ABox::new();
        abox.add_role(&Role::inverse_of("r"), "a".into(), "b".into());
        assert!(abox.has_role(&Role::new("r"), &"b".into(), &"a".into()));
        assert!(abox.has_role(&Role::inverse_of("r"), &"a".into(), &"b".into()));
        assert_eq!(abox.role_atoms().count(), 1);
    }
}
