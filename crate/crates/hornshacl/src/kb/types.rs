use super::{ConceptSet, RoleSet, Signature};

/// `(π1, π2, π3)`: the concepts at a node, the roles leading to a neighbour,
/// and the concepts at that neighbour. Equality is set equality.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct TwoType {
    pub c1: ConceptSet,
    pub roles: RoleSet,
    pub c2: ConceptSet,
}

impl TwoType {
    pub fn new(c1: ConceptSet, roles: RoleSet, c2: ConceptSet) -> Self {
        TwoType { c1, roles, c2 }
    }

    /// The type `(M, ∅, ∅)` of a node considered without any neighbour.
    pub fn bare(c1: ConceptSet) -> Self {
        TwoType {
            c1,
            roles: RoleSet::EMPTY,
            c2: ConceptSet::EMPTY,
        }
    }

    /// `inv(t) = (π3(t), π2(t)⁻, π1(t))`; `inv(inv(t)) = t`.
    pub fn inverse(&self) -> TwoType {
        TwoType {
            c1: self.c2,
            roles: self.roles.inverse(),
            c2: self.c1,
        }
    }

    pub fn show(&self, sig: &Signature) -> String {
        format!(
            "({},{},{})",
            sig.show_concepts(self.c1),
            sig.show_roles(self.roles),
            sig.show_concepts(self.c2)
        )
    }
}

pub fn invert_two_type(t: &TwoType) -> TwoType {
    t.inverse()
}

/// `(roles, concepts)`: how a fresh child hangs off its parent.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct OneHalfType {
    pub roles: RoleSet,
    pub concepts: ConceptSet,
}

impl OneHalfType {
    pub fn new(roles: RoleSet, concepts: ConceptSet) -> Self {
        OneHalfType { roles, concepts }
    }

    /// Componentwise inclusion.
    pub fn is_subsumed_by(&self, other: &OneHalfType) -> bool {
        self.roles.is_subset(other.roles) && self.concepts.is_subset(other.concepts)
    }

    /// Whether the neighbour described by `t` already witnesses this type.
    pub fn is_witnessed_by(&self, t: &TwoType) -> bool {
        self.roles.is_subset(t.roles) && self.concepts.is_subset(t.c2)
    }

    pub fn show(&self, sig: &Signature) -> String {
        format!(
            "({},{})",
            sig.show_roles(self.roles),
            sig.show_concepts(self.concepts)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{Concept, Role};
    use proptest::prelude::*;

    fn sig() -> Signature {
        let concepts = ["A", "B", "A2", "B0", "B1"].map(Concept::new);
        Signature::new(concepts, ["p".into(), "r1".into()]).unwrap()
    }

    #[test]
    fn inverse_swaps_components_and_inverts_roles() {
        let s = sig();
        let a = s.concept_set([&Concept::new("A")]);
        let b = s.concept_set([&Concept::new("B")]);
        let t = TwoType::new(a, s.role_set([&Role::new("p")]), b);
        let expected = TwoType::new(b, s.role_set([&Role::inverse_of("p")]), a);
        assert_eq!(invert_two_type(&t), expected);
        assert_eq!(t.inverse().show(&s), "({B},{^p},{A})");
    }

    #[test]
    fn empty_type_is_self_inverse() {
        assert_eq!(TwoType::default().inverse(), TwoType::default());
    }

    #[test]
    fn double_inverse_of_a_concrete_type() {
        let s = sig();
        let t = TwoType::new(
            s.concept_set(&[Concept::new("B0"), Concept::new("B1")]),
            s.role_set([&Role::new("r1")]),
            s.concept_set([&Concept::new("A2")]),
        );
        assert_eq!(t.inverse().inverse(), t);
    }

    proptest! {
        #[test]
        fn inverse_is_an_involution(c1 in any::<u128>(), r in any::<u128>(), c2 in any::<u128>()) {
            let t = TwoType::new(ConceptSet(c1), RoleSet(r), ConceptSet(c2));
            prop_assert_eq!(t.inverse().inverse(), t);
        }
    }
}
