use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{Concept, Role, RoleName};

/// Index of a concept inside a [`Signature`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ConceptId(pub u8);

/// Index of a directed role inside a [`Signature`]: `2 * name_index + inverted`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RoleId(pub u8);

impl RoleId {
    pub fn inverse(self) -> RoleId {
        RoleId(self.0 ^ 1)
    }

    pub fn is_inverted(self) -> bool {
        self.0 & 1 == 1
    }
}

pub const MAX_CONCEPTS: usize = 128;
pub const MAX_ROLE_NAMES: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("signature has {0} concept names; at most {MAX_CONCEPTS} are supported")]
    TooManyConcepts(usize),
    #[error("signature has {0} role names; at most {MAX_ROLE_NAMES} are supported")]
    TooManyRoles(usize),
}

/// Set of concepts of one [`Signature`], as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ConceptSet(pub u128);

/// Set of directed roles of one [`Signature`], as a bitmask over [`RoleId`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RoleSet(pub u128);

macro_rules! bitset_ops {
    ($set:ident, $id:ident) => {
        impl $set {
            pub const EMPTY: $set = $set(0);

            pub fn singleton(id: $id) -> Self {
                $set(1u128 << id.0)
            }

            pub fn contains(self, id: $id) -> bool {
                self.0 >> id.0 & 1 == 1
            }

            pub fn insert(&mut self, id: $id) -> bool {
                let had = self.contains(id);
                self.0 |= 1u128 << id.0;
                !had
            }

            pub fn remove(&mut self, id: $id) {
                self.0 &= !(1u128 << id.0);
            }

            pub fn with(self, id: $id) -> Self {
                $set(self.0 | 1u128 << id.0)
            }

            pub fn union(self, other: Self) -> Self {
                $set(self.0 | other.0)
            }

            pub fn intersection(self, other: Self) -> Self {
                $set(self.0 & other.0)
            }

            pub fn difference(self, other: Self) -> Self {
                $set(self.0 & !other.0)
            }

            pub fn is_subset(self, other: Self) -> bool {
                self.0 & !other.0 == 0
            }

            pub fn is_empty(self) -> bool {
                self.0 == 0
            }

            pub fn len(self) -> usize {
                self.0.count_ones() as usize
            }

            pub fn iter(self) -> impl Iterator<Item = $id> {
                let mut bits = self.0;
                std::iter::from_fn(move || {
                    if bits == 0 {
                        return None;
                    }
                    let i = bits.trailing_zeros();
                    bits &= bits - 1;
                    Some($id(i as u8))
                })
            }
        }

        impl FromIterator<$id> for $set {
            fn from_iter<I: IntoIterator<Item = $id>>(iter: I) -> Self {
                let mut out = $set::EMPTY;
                for id in iter {
                    out.insert(id);
                }
                out
            }
        }

        impl fmt::Debug for $set {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.debug_set().entries(self.iter().map(|i| i.0)).finish()
            }
        }
    };
}

bitset_ops!(ConceptSet, ConceptId);
bitset_ops!(RoleSet, RoleId);

impl RoleSet {
    /// `R⁻`, elementwise.
    pub fn inverse(self) -> RoleSet {
        const EVEN: u128 = 0x5555_5555_5555_5555_5555_5555_5555_5555;
        RoleSet((self.0 & EVEN) << 1 | (self.0 >> 1) & EVEN)
    }
}

/// The finite vocabulary the reasoner works over: every concept and role
/// name of the TBox and of the constraints. Indices follow sorted order, so
/// bitmask order agrees with name order.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Signature {
    concepts: Vec<Concept>,
    concept_index: BTreeMap<Concept, ConceptId>,
    roles: Vec<RoleName>,
    role_index: BTreeMap<RoleName, u8>,
}

impl Signature {
    pub fn new(
        concepts: impl IntoIterator<Item = Concept>,
        roles: impl IntoIterator<Item = RoleName>,
    ) -> Result<Self, SignatureError> {
        let mut concepts: Vec<Concept> = concepts.into_iter().collect();
        concepts.sort();
        concepts.dedup();
        let mut roles: Vec<RoleName> = roles.into_iter().collect();
        roles.sort();
        roles.dedup();
        if concepts.len() > MAX_CONCEPTS {
            return Err(SignatureError::TooManyConcepts(concepts.len()));
        }
        if roles.len() > MAX_ROLE_NAMES {
            return Err(SignatureError::TooManyRoles(roles.len()));
        }
        let concept_index = concepts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), ConceptId(i as u8)))
            .collect();
        let role_index = roles
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), i as u8))
            .collect();
        Ok(Signature {
            concepts,
            concept_index,
            roles,
            role_index,
        })
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn role_name_count(&self) -> usize {
        self.roles.len()
    }

    pub fn concept_id(&self, c: &Concept) -> Option<ConceptId> {
        self.concept_index.get(c).copied()
    }

    pub fn concept(&self, id: ConceptId) -> &Concept {
        &self.concepts[id.0 as usize]
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn role_names(&self) -> &[RoleName] {
        &self.roles
    }

    pub fn all_concepts(&self) -> ConceptSet {
        (0..self.concepts.len())
            .map(|i| ConceptId(i as u8))
            .collect()
    }

    pub fn all_roles(&self) -> RoleSet {
        (0..2 * self.roles.len()).map(|i| RoleId(i as u8)).collect()
    }

    pub fn role_id(&self, r: &Role) -> Option<RoleId> {
        self.role_index
            .get(&r.name)
            .map(|&i| RoleId(2 * i + r.inverted as u8))
    }

    pub fn role(&self, id: RoleId) -> Role {
        Role {
            name: self.roles[(id.0 >> 1) as usize].clone(),
            inverted: id.is_inverted(),
        }
    }

    pub fn role_ids(&self) -> impl Iterator<Item = RoleId> + '_ {
        (0..2 * self.roles.len()).map(|i| RoleId(i as u8))
    }

    pub fn concept_ids(&self) -> impl Iterator<Item = ConceptId> + '_ {
        (0..self.concepts.len()).map(|i| ConceptId(i as u8))
    }

    /// Maps known names to a set; names outside the signature are dropped.
    pub fn concept_set<'a>(&self, names: impl IntoIterator<Item = &'a Concept>) -> ConceptSet {
        names
            .into_iter()
            .filter_map(|c| self.concept_id(c))
            .collect()
    }

    pub fn role_set<'a>(&self, roles: impl IntoIterator<Item = &'a Role>) -> RoleSet {
        roles.into_iter().filter_map(|r| self.role_id(r)).collect()
    }

    pub fn concept_names(&self, set: ConceptSet) -> Vec<Concept> {
        set.iter().map(|id| self.concept(id).clone()).collect()
    }

    pub fn roles_of(&self, set: RoleSet) -> Vec<Role> {
        set.iter().map(|id| self.role(id)).collect()
    }

    pub fn show_concepts(&self, set: ConceptSet) -> String {
        let names: Vec<String> = set.iter().map(|id| self.concept(id).to_string()).collect();
        format!("{{{}}}", names.join(","))
    }

    pub fn show_roles(&self, set: RoleSet) -> String {
        let names: Vec<String> = set.iter().map(|id| self.role(id).to_string()).collect();
        format!("{{{}}}", names.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn role_ids_pair_up_with_their_inverse() {
        let sig = Signature::new([], ["p".into(), "q".into()]).unwrap();
        let p = sig.role_id(&Role::new("p")).unwrap();
        let p_inv = sig.role_id(&Role::inverse_of("p")).unwrap();
        assert_eq!(p.inverse(), p_inv);
        assert_eq!(sig.role(p_inv), Role::inverse_of("p"));
    }

    #[test]
    fn limits_are_enforced() {
        let many = (0..=MAX_CONCEPTS).map(|i| Concept::new(format!("C{i}")));
        assert_eq!(
            Signature::new(many, []).unwrap_err(),
            SignatureError::TooManyConcepts(MAX_CONCEPTS + 1)
        );
    }

    proptest! {
        #[test]
        fn role_set_inverse_is_an_involution(bits in any::<u128>()) {
            let set = RoleSet(bits);
            prop_assert_eq!(set.inverse().inverse(), set);
            prop_assert_eq!(set.inverse().len(), set.len());
            for id in set.iter() {
                prop_assert!(set.inverse().contains(id.inverse()));
            }
        }

        #[test]
        fn subset_agrees_with_membership(a in any::<u128>(), b in any::<u128>()) {
            let (a, b) = (ConceptSet(a), ConceptSet(b));
            let by_members = a.iter().all(|id| b.contains(id));
            prop_assert_eq!(a.is_subset(b), by_members);
        }
    }
}
