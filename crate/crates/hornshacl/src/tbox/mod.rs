//! Consequence-based saturation of a normalized Horn-SHIQ TBox.
//!
//! Two kinds of facts are derived: `⊓M ⊑ B` (with `B` a concept or `⊥`) and
//! `⊓M ⊑ ∃(⊓S).⊓N`. Existential facts are kept normalized (`S` closed under
//! the role hierarchy, `N` closed under the conjunctive facts) and only
//! componentwise-maximal facts are retained, which no rule can tell apart
//! from the facts they subsume.

mod cycles;

use std::collections::{BTreeMap, BTreeSet};

pub use cycles::{collapse_role_cycles, rename_role, RoleRenaming};

use crate::kb::{
    Axiom, Concept, ConceptId, ConceptSet, Filler, Head, OneHalfType, Role, RoleId, RoleName,
    RoleSet, Signature, SignatureError, TBox, TwoType,
};

/// `A ⊑ ≤1 r.B`, `A ⊑ ∀r.B` or `A ⊑ ∃r.B` over signature indices; `b` is
/// `None` for `⊤`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RoleAxiom {
    pub a: ConceptId,
    pub r: RoleId,
    pub b: Option<ConceptId>,
}

/// `⊓lhs ⊑ rhs`; `rhs == None` is `⊥`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ConjFact {
    pub lhs: ConceptSet,
    pub rhs: Option<ConceptId>,
}

/// `⊓lhs ⊑ ∃(⊓roles).⊓concepts`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ExistFact {
    pub lhs: ConceptSet,
    pub roles: RoleSet,
    pub concepts: ConceptSet,
}

impl ExistFact {
    fn subsumes(&self, other: &ExistFact) -> bool {
        self.lhs.is_subset(other.lhs)
            && other.roles.is_subset(self.roles)
            && other.concepts.is_subset(self.concepts)
    }
}

#[derive(Clone, Debug)]
pub struct SaturatedTBox {
    source: TBox,
    signature: Signature,
    role_sup: Vec<RoleSet>,
    conj_axioms: Vec<ConjFact>,
    at_most: Vec<RoleAxiom>,
    value: Vec<RoleAxiom>,
    exists_axioms: Vec<RoleAxiom>,
    conj: Vec<ConjFact>,
    exists: Vec<ExistFact>,
}

/// Saturates over the signature of the TBox alone.
pub fn saturate(tbox: &TBox) -> Result<SaturatedTBox, SignatureError> {
    saturate_with(tbox, [], [])
}

/// Saturates over the signature of the TBox extended by further concept and
/// role names (typically those occurring in the constraints).
pub fn saturate_with(
    tbox: &TBox,
    concepts: impl IntoIterator<Item = Concept>,
    roles: impl IntoIterator<Item = RoleName>,
) -> Result<SaturatedTBox, SignatureError> {
    let signature = Signature::new(
        tbox.concepts().into_iter().chain(concepts),
        tbox.role_names().into_iter().chain(roles),
    )?;
    Ok(SaturatedTBox::build(tbox.clone(), signature))
}

impl SaturatedTBox {
    fn build(source: TBox, signature: Signature) -> Self {
        let cid = |c: &Concept| signature.concept_id(c).expect("signature covers the TBox");
        let rid = |r: &Role| signature.role_id(r).expect("signature covers the TBox");
        let filler = |f: &Filler| f.concept().map(cid);

        let role_count = 2 * signature.role_name_count();
        let mut role_sup: Vec<RoleSet> = (0..role_count)
            .map(|i| RoleSet::singleton(RoleId(i as u8)))
            .collect();
        let mut conj_axioms = Vec::new();
        let (mut at_most, mut value, mut exists_axioms) = (Vec::new(), Vec::new(), Vec::new());
        for axiom in source.axioms() {
            match axiom {
                Axiom::ConjInclusion { lhs, rhs } => {
                    let lhs = signature.concept_set(lhs);
                    match rhs {
                        Head::Top => {}
                        Head::Bottom => conj_axioms.push(ConjFact { lhs, rhs: None }),
                        Head::Named(b) => conj_axioms.push(ConjFact {
                            lhs,
                            rhs: Some(cid(b)),
                        }),
                    }
                }
                Axiom::AtMostOne { a, r, b } => at_most.push(RoleAxiom {
                    a: cid(a),
                    r: rid(r),
                    b: filler(b),
                }),
                Axiom::ValueRestriction { a, r, b } => {
                    if let Some(b) = filler(b) {
                        value.push(RoleAxiom {
                            a: cid(a),
                            r: rid(r),
                            b: Some(b),
                        });
                    }
                }
                Axiom::ExistsInclusion { a, r, b } => exists_axioms.push(RoleAxiom {
                    a: cid(a),
                    r: rid(r),
                    b: filler(b),
                }),
                Axiom::RoleInclusion { sub, sup } => {
                    let (sub, sup) = (rid(sub), rid(sup));
                    role_sup[sub.0 as usize].insert(sup);
                    role_sup[sub.inverse().0 as usize].insert(sup.inverse());
                }
            }
        }
        // Reflexive-transitive closure; closed under inversion by construction.
        loop {
            let mut changed = false;
            for i in 0..role_count {
                let mut acc = role_sup[i];
                for s in role_sup[i].iter() {
                    acc = acc.union(role_sup[s.0 as usize]);
                }
                if acc != role_sup[i] {
                    role_sup[i] = acc;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let mut sat = SaturatedTBox {
            source,
            signature,
            role_sup,
            conj: conj_axioms.clone(),
            conj_axioms,
            at_most,
            value,
            exists_axioms,
            exists: Vec::new(),
        };
        sat.run();
        sat
    }

    fn run(&mut self) {
        let mut conj: BTreeSet<ConjFact> = self.conj.iter().copied().collect();
        let mut exists: BTreeSet<ExistFact> = self
            .exists_axioms
            .iter()
            .map(|ax| ExistFact {
                lhs: ConceptSet::singleton(ax.a),
                roles: RoleSet::singleton(ax.r),
                concepts: ax.b.map(ConceptSet::singleton).unwrap_or_default(),
            })
            .collect();

        loop {
            self.conj = prune_conj(&conj);
            conj = self.conj.iter().copied().collect();
            let mut next_conj = conj.clone();
            let mut next_exists: BTreeSet<ExistFact> = BTreeSet::new();

            // Normalize: close S under the hierarchy, N under the conj facts.
            for f in &exists {
                let roles = self.role_closure(f.roles);
                match self.closure(f.concepts) {
                    Some(concepts) => {
                        next_exists.insert(ExistFact {
                            lhs: f.lhs,
                            roles,
                            concepts,
                        });
                    }
                    None => {
                        next_conj.insert(ConjFact {
                            lhs: f.lhs,
                            rhs: None,
                        });
                    }
                }
            }
            let facts: Vec<ExistFact> = next_exists.iter().copied().collect();

            for f in &facts {
                for ax in &self.value {
                    // ∀ pushed into the successor.
                    if f.roles.contains(ax.r) {
                        let b = ax.b.expect("trivial value restrictions are dropped");
                        next_exists.insert(ExistFact {
                            lhs: f.lhs.with(ax.a),
                            roles: f.roles,
                            concepts: f.concepts.with(b),
                        });
                    }
                    // ∀ along an inverse edge back to the node itself.
                    if f.roles.contains(ax.r.inverse()) && f.concepts.contains(ax.a) {
                        next_conj.insert(ConjFact {
                            lhs: f.lhs,
                            rhs: ax.b,
                        });
                    }
                }
            }

            for ax in &self.at_most {
                let carries = |f: &ExistFact| {
                    f.roles.contains(ax.r) && ax.b.is_none_or(|b| f.concepts.contains(b))
                };
                let matching: Vec<&ExistFact> = facts.iter().filter(|f| carries(f)).collect();
                // Two r-successors in B of an A-node are one and the same.
                for (i, f) in matching.iter().enumerate() {
                    for g in &matching[i + 1..] {
                        next_exists.insert(ExistFact {
                            lhs: f.lhs.union(g.lhs).with(ax.a),
                            roles: f.roles.union(g.roles),
                            concepts: f.concepts.union(g.concepts),
                        });
                    }
                }
                // A successor in A whose r-successor in B is forced to be
                // the node itself.
                for f in &facts {
                    if !(f.roles.contains(ax.r.inverse()) && f.concepts.contains(ax.a)) {
                        continue;
                    }
                    let lhs = match ax.b {
                        Some(b) => f.lhs.with(b),
                        None => f.lhs,
                    };
                    for g in &matching {
                        if !g.lhs.is_subset(f.concepts) {
                            continue;
                        }
                        for c in g.concepts.iter() {
                            next_conj.insert(ConjFact { lhs, rhs: Some(c) });
                        }
                        next_exists.insert(ExistFact {
                            lhs,
                            roles: f.roles.union(g.roles.inverse()),
                            concepts: f.concepts,
                        });
                    }
                }
            }

            let next_exists = prune_exists(&next_exists, &next_conj);
            // Compare pruned sets: a redundant fact rederived every round
            // must not keep the loop alive.
            let next_conj: BTreeSet<ConjFact> = prune_conj(&next_conj).into_iter().collect();
            if next_conj == conj && next_exists == exists {
                break;
            }
            conj = next_conj;
            exists = next_exists;
        }
        self.conj = prune_conj(&conj);
        self.exists = exists.into_iter().collect();
    }

    pub fn source(&self) -> &TBox {
        &self.source
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// Super-roles of `r`, reflexive and transitive.
    pub fn super_roles(&self, r: RoleId) -> RoleSet {
        self.role_sup[r.0 as usize]
    }

    /// Roles `s` with `s ⊑* r`.
    pub fn sub_roles(&self, r: RoleId) -> RoleSet {
        self.signature
            .role_ids()
            .filter(|&s| self.super_roles(s).contains(r))
            .collect()
    }

    pub fn role_closure(&self, roles: RoleSet) -> RoleSet {
        roles
            .iter()
            .fold(roles, |acc, r| acc.union(self.super_roles(r)))
    }

    pub fn entails_role_inclusion(&self, sub: RoleId, sup: RoleId) -> bool {
        self.super_roles(sub).contains(sup)
    }

    /// The least superset of `m` closed under the derived conjunctive
    /// facts, or `None` when `⊓m ⊑ ⊥`.
    pub fn closure(&self, m: ConceptSet) -> Option<ConceptSet> {
        let mut acc = m;
        loop {
            let mut changed = false;
            for f in &self.conj {
                if f.lhs.is_subset(acc) {
                    {
                        let b = f.rhs?;
                        changed |= acc.insert(b)
                    }
                }
            }
            if !changed {
                return Some(acc);
            }
        }
    }

    /// `T ⊨ ⊓m ⊑ b`; `b == None` asks for `⊥`.
    pub fn entails_conj(&self, m: ConceptSet, b: Option<ConceptId>) -> bool {
        match (self.closure(m), b) {
            (None, _) => true,
            (Some(cl), Some(b)) => cl.contains(b),
            (Some(_), None) => false,
        }
    }

    /// Name-based variant of [`Self::entails_conj`]; names outside the
    /// signature only entail themselves.
    pub fn entails(&self, m: &[Concept], b: &Concept) -> bool {
        let ids = self.signature.concept_set(m);
        if m.contains(b) {
            return true;
        }
        match self.signature.concept_id(b) {
            Some(b) => self.entails_conj(ids, Some(b)),
            None => self.closure(ids).is_none(),
        }
    }

    /// All componentwise-maximal `(R, N)` with `T ⊨ ⊓m ⊑ ∃(⊓R).⊓N`, sorted.
    pub fn implied_existentials(&self, m: ConceptSet) -> Vec<OneHalfType> {
        let Some(cl) = self.closure(m) else {
            return Vec::new();
        };
        let candidates: BTreeSet<OneHalfType> = self
            .exists
            .iter()
            .filter(|f| f.lhs.is_subset(cl))
            .map(|f| OneHalfType::new(f.roles, f.concepts))
            .collect();
        maximal(candidates)
    }

    /// The four closure conditions on a 2-type, plus absence of `⊥`.
    pub fn is_locally_consistent(&self, t: &TwoType) -> bool {
        if self.closure(t.c1) != Some(t.c1) || self.closure(t.c2) != Some(t.c2) {
            return false;
        }
        if self.role_closure(t.roles) != t.roles {
            return false;
        }
        self.value.iter().all(|ax| {
            let b = ax.b.expect("trivial value restrictions are dropped");
            let forward = !(t.c1.contains(ax.a) && t.roles.contains(ax.r)) || t.c2.contains(b);
            let backward =
                !(t.c2.contains(ax.a) && t.roles.contains(ax.r.inverse())) || t.c1.contains(b);
            forward && backward
        })
    }

    /// Derived `⊓M ⊑ B` facts, minimal in `M`; includes the asserted ones.
    pub fn conj_facts(&self) -> &[ConjFact] {
        &self.conj
    }

    /// Derived existential facts, maximal under componentwise subsumption.
    pub fn exist_facts(&self) -> &[ExistFact] {
        &self.exists
    }

    pub fn at_most_axioms(&self) -> &[RoleAxiom] {
        &self.at_most
    }

    pub fn value_axioms(&self) -> &[RoleAxiom] {
        &self.value
    }

    pub fn exists_axioms(&self) -> &[RoleAxiom] {
        &self.exists_axioms
    }

    pub fn conj_axioms(&self) -> &[ConjFact] {
        &self.conj_axioms
    }

    pub fn has_at_most_one(&self) -> bool {
        !self.at_most.is_empty()
    }

    /// Entailed inclusions in readable form, for dumps and debugging.
    pub fn describe(&self) -> BTreeMap<&'static str, Vec<String>> {
        let sig = &self.signature;
        let conj = self
            .conj
            .iter()
            .map(|f| {
                let rhs = f
                    .rhs
                    .map(|b| sig.concept(b).to_string())
                    .unwrap_or_else(|| "bot".into());
                format!("{} <= {rhs}", sig.show_concepts(f.lhs))
            })
            .collect();
        let exists = self
            .exists
            .iter()
            .map(|f| {
                format!(
                    "{} <= some {}.{}",
                    sig.show_concepts(f.lhs),
                    sig.show_roles(f.roles),
                    sig.show_concepts(f.concepts)
                )
            })
            .collect();
        BTreeMap::from([("conj", conj), ("exists", exists)])
    }
}

/// Keeps the componentwise-maximal elements of a set of 1½-types.
pub fn maximal(candidates: impl IntoIterator<Item = OneHalfType>) -> Vec<OneHalfType> {
    let candidates: Vec<OneHalfType> = candidates.into_iter().collect();
    let mut out: Vec<OneHalfType> = candidates
        .iter()
        .filter(|u| !candidates.iter().any(|v| v != *u && u.is_subsumed_by(v)))
        .copied()
        .collect();
    out.sort();
    out.dedup();
    out
}

fn prune_conj(conj: &BTreeSet<ConjFact>) -> Vec<ConjFact> {
    let bottoms: Vec<ConceptSet> = conj
        .iter()
        .filter(|f| f.rhs.is_none())
        .map(|f| f.lhs)
        .collect();
    conj.iter()
        .filter(|f| {
            let weaker = |g: &ConjFact| {
                g != *f && g.lhs.is_subset(f.lhs) && (g.rhs == f.rhs || g.rhs.is_none())
            };
            !conj.iter().any(weaker)
                && (f.rhs.is_none() || !bottoms.iter().any(|b| b.is_subset(f.lhs)))
        })
        .copied()
        .collect()
}

fn prune_exists(exists: &BTreeSet<ExistFact>, conj: &BTreeSet<ConjFact>) -> BTreeSet<ExistFact> {
    let bottoms: Vec<ConceptSet> = conj
        .iter()
        .filter(|f| f.rhs.is_none())
        .map(|f| f.lhs)
        .collect();
    exists
        .iter()
        .filter(|f| !bottoms.iter().any(|b| b.is_subset(f.lhs)))
        .filter(|f| !exists.iter().any(|g| g != *f && g.subsumes(f)))
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_tbox;

    pub(crate) fn example_tbox() -> TBox {
        parse_tbox(
            "B0 <= some r0.A0\n\
             B0 <= some r1.A1\n\
             B1 <= max1 r1.A1\n\
             A0 <= A1\n\
             r0 <= r1\n\
             B1 <= some r2.top\n\
             B0 <= only r2.A2\n",
        )
        .unwrap()
    }

    fn set(sig: &Signature, names: &[&str]) -> ConceptSet {
        sig.concept_set(&names.iter().map(Concept::new).collect::<Vec<_>>())
    }

    fn roles(sig: &Signature, names: &[&str]) -> RoleSet {
        let roles: Vec<Role> = names
            .iter()
            .map(|n| match n.strip_prefix('^') {
                Some(base) => Role::inverse_of(base),
                None => Role::new(n),
            })
            .collect();
        sig.role_set(&roles)
    }

    #[test]
    fn merged_existential_of_the_worked_example() {
        let sat = saturate(&example_tbox()).unwrap();
        let sig = sat.signature();
        let got = sat.implied_existentials(set(sig, &["B0", "B1"]));
        let expected = vec![
            OneHalfType::new(roles(sig, &["r0", "r1"]), set(sig, &["A0", "A1"])),
            OneHalfType::new(roles(sig, &["r2"]), set(sig, &["A2"])),
        ];
        assert_eq!(got, maximal(expected));
    }

    #[test]
    fn told_subsumption_and_reflexivity() {
        let sat = saturate(&example_tbox()).unwrap();
        assert!(sat.entails(&["A0".into()], &"A1".into()));
        assert!(sat.entails(&["A".into()], &"A".into()));
        assert!(!sat.entails(&["A1".into()], &"A0".into()));
    }

    #[test]
    fn empty_tbox_has_no_existentials() {
        let sat = saturate(&TBox::new()).unwrap();
        assert!(sat.exist_facts().is_empty());
        assert!(sat.implied_existentials(ConceptSet::EMPTY).is_empty());
    }

    #[test]
    fn value_restriction_over_an_inverse_edge_reaches_the_parent() {
        let t = parse_tbox("A <= some r.B\nB <= only ^r.C\n").unwrap();
        let sat = saturate(&t).unwrap();
        assert!(sat.entails(&["A".into()], &"C".into()));
    }

    #[test]
    fn functional_inverse_merges_into_the_parent() {
        // Every B has at most one ^r-neighbour in A, and every A has an r-child in B
        // that itself requires an ^r-neighbour in A with D: that neighbour is the parent.
        let t = parse_tbox("A <= some r.B\nB <= max1 ^r.A\nB <= some ^r.D\nD <= A\n").unwrap();
        let sat = saturate(&t).unwrap();
        assert!(sat.entails(&["A".into()], &"D".into()));
    }

    #[test]
    fn bottom_in_a_successor_makes_the_node_unsatisfiable() {
        let t = parse_tbox("A <= some r.B\nB <= bot\n").unwrap();
        let sat = saturate(&t).unwrap();
        assert_eq!(sat.closure(set(sat.signature(), &["A"])), None);
    }

    #[test]
    fn local_consistency_of_the_positive_example() {
        let t = parse_tbox("A <= some p.B\nB <= some q.C\n").unwrap();
        let sat = saturate(&t).unwrap();
        let sig = sat.signature();
        let t = TwoType::new(set(sig, &["A"]), roles(sig, &["p"]), set(sig, &["B"]));
        assert!(sat.is_locally_consistent(&t));
    }

    #[test]
    fn missing_subsumer_breaks_local_consistency() {
        let sat = saturate(&parse_tbox("A0 <= A1\n").unwrap()).unwrap();
        let t = TwoType::bare(set(sat.signature(), &["A0"]));
        assert!(!sat.is_locally_consistent(&t));
    }

    #[test]
    fn saturation_is_idempotent() {
        let sat = saturate(&example_tbox()).unwrap();
        let mut again = sat.clone();
        again.run();
        assert_eq!(again.conj, sat.conj);
        assert_eq!(again.exists, sat.exists);
    }
}
