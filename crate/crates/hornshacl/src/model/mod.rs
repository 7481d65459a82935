//! The completed ABox, good successor configurations and the finite
//! approximations of the austere canonical model.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::kb::{
    ABox, Axiom, Concept, ConceptSet, Filler, Head, Individual, Interpretation, Node, NodeId,
    OneHalfType, Role, RoleSet, TwoType,
};
use crate::tbox::SaturatedTBox;

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum ModelError {
    #[error("inconsistent knowledge base: {0}")]
    Inconsistent(String),
    #[error("`{0}` is not in the signature of the saturated TBox")]
    UnknownSymbol(String),
}

/// `A_T`: the ABox closed under every axiom except the existential ones,
/// as 1-types per individual and role sets per ordered pair.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CompletedABox {
    individuals: Vec<Individual>,
    index: BTreeMap<Individual, usize>,
    types: Vec<ConceptSet>,
    /// Both directions are stored: `roles[(b,a)] = roles[(a,b)]⁻`.
    roles: BTreeMap<(usize, usize), RoleSet>,
}

impl CompletedABox {
    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn index_of(&self, a: &Individual) -> Option<usize> {
        self.index.get(a).copied()
    }

    /// The 1-type `{A | A(a) ∈ A_T}`.
    pub fn concepts(&self, a: usize) -> ConceptSet {
        self.types[a]
    }

    /// `{r | r(a,b) ∈ A_T}`, inverse roles included.
    pub fn roles(&self, a: usize, b: usize) -> RoleSet {
        self.roles.get(&(a, b)).copied().unwrap_or_default()
    }

    /// Ordered pairs `(a, b)` with at least one role, in both directions.
    pub fn neighbours(&self, a: usize) -> impl Iterator<Item = (usize, RoleSet)> + '_ {
        self.roles
            .range((a, 0)..(a + 1, 0))
            .map(|(&(_, b), &rs)| (b, rs))
    }

    pub fn to_abox(&self, sat: &SaturatedTBox) -> ABox {
        let sig = sat.signature();
        let mut abox = ABox::new();
        for (i, a) in self.individuals.iter().enumerate() {
            abox.add_individual(a.clone());
            for c in sig.concept_names(self.types[i]) {
                abox.add_concept(c, a.clone());
            }
        }
        for (&(a, b), rs) in &self.roles {
            for r in rs.iter().filter(|r| !r.is_inverted()) {
                abox.add_role(
                    &sig.role(r),
                    self.individuals[a].clone(),
                    self.individuals[b].clone(),
                );
            }
        }
        abox
    }

    /// `can_0`, the canonical interpretation of `A_T`.
    pub fn to_interpretation(&self, sat: &SaturatedTBox) -> Interpretation {
        Interpretation::from_abox(&self.to_abox(sat))
    }

    fn add_roles(&mut self, a: usize, b: usize, rs: RoleSet) -> bool {
        let fwd = self.roles.entry((a, b)).or_default();
        let before = *fwd;
        *fwd = fwd.union(rs);
        let changed = *fwd != before;
        let bwd = self.roles.entry((b, a)).or_default();
        *bwd = bwd.union(rs.inverse());
        changed
    }
}

fn lookup_concepts(
    sat: &SaturatedTBox,
    names: impl IntoIterator<Item = Concept>,
) -> Result<ConceptSet, ModelError> {
    let sig = sat.signature();
    let mut out = ConceptSet::EMPTY;
    for c in names {
        out.insert(
            sig.concept_id(&c)
                .ok_or_else(|| ModelError::UnknownSymbol(c.to_string()))?,
        );
    }
    Ok(out)
}

/// Computes `A_T`. Fails when `⊥` reaches a named individual or when an
/// at-most restriction would force two distinct individuals to coincide.
pub fn complete_abox(sat: &SaturatedTBox, abox: &ABox) -> Result<CompletedABox, ModelError> {
    let sig = sat.signature();
    let individuals: Vec<Individual> = abox.individuals().cloned().collect();
    let index: BTreeMap<Individual, usize> = individuals
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, a)| (a, i))
        .collect();
    let mut types = Vec::with_capacity(individuals.len());
    for a in &individuals {
        types.push(lookup_concepts(sat, abox.concepts_of(a))?);
    }
    let mut out = CompletedABox {
        individuals,
        index,
        types,
        roles: BTreeMap::new(),
    };
    for (r, a, b) in abox.role_atoms() {
        let role = Role {
            name: r.clone(),
            inverted: false,
        };
        let id = sig
            .role_id(&role)
            .ok_or_else(|| ModelError::UnknownSymbol(r.to_string()))?;
        out.add_roles(out.index[a], out.index[b], RoleSet::singleton(id));
    }

    loop {
        let mut changed = false;
        for i in 0..out.types.len() {
            match sat.closure(out.types[i]) {
                Some(cl) => {
                    changed |= cl != out.types[i];
                    out.types[i] = cl;
                }
                None => {
                    return Err(ModelError::Inconsistent(format!(
                        "`{}` is forced into bot",
                        out.individuals[i]
                    )))
                }
            }
        }
        let pairs: Vec<((usize, usize), RoleSet)> =
            out.roles.iter().map(|(&k, &v)| (k, v)).collect();
        for &((a, b), rs) in &pairs {
            changed |= out.add_roles(a, b, sat.role_closure(rs));
        }
        for ax in sat.value_axioms() {
            let c = ax.b.expect("trivial value restrictions are dropped");
            for &((a, b), rs) in &pairs {
                if rs.contains(ax.r) && out.types[a].contains(ax.a) {
                    changed |= out.types[b].insert(c);
                }
            }
        }
        for ax in sat.at_most_axioms() {
            for &((a, b), rs) in &pairs {
                let fits = |x: usize| ax.b.is_none_or(|b| out.types[x].contains(b));
                if !(out.types[a].contains(ax.a) && rs.contains(ax.r) && fits(b)) {
                    continue;
                }
                // The existential successor is the named successor `b`.
                let facts: Vec<_> = sat
                    .exist_facts()
                    .iter()
                    .filter(|f| f.lhs.is_subset(out.types[a]) && f.roles.contains(ax.r))
                    .filter(|f| ax.b.is_none_or(|b| f.concepts.contains(b)))
                    .copied()
                    .collect();
                for f in facts {
                    let merged = out.types[b].union(f.concepts);
                    changed |= merged != out.types[b];
                    out.types[b] = merged;
                    changed |= out.add_roles(a, b, f.roles);
                }
            }
        }
        if !changed {
            break;
        }
    }

    for ax in sat.at_most_axioms() {
        for a in 0..out.types.len() {
            if !out.types[a].contains(ax.a) {
                continue;
            }
            let succ: Vec<usize> = out
                .neighbours(a)
                .filter(|&(b, rs)| {
                    rs.contains(ax.r) && ax.b.is_none_or(|c| out.types[b].contains(c))
                })
                .map(|(b, _)| b)
                .collect();
            if succ.len() > 1 {
                return Err(ModelError::Inconsistent(format!(
                    "`{}` has {} distinct {}-successors where at most one is allowed",
                    out.individuals[a],
                    succ.len(),
                    sig.role(ax.r)
                )));
            }
        }
    }
    Ok(out)
}

pub fn is_consistent(sat: &SaturatedTBox, abox: &ABox) -> Result<bool, ModelError> {
    match complete_abox(sat, abox) {
        Ok(_) => Ok(true),
        Err(ModelError::Inconsistent(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Switches for deliberately broken variants used by mutation tests.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Mutation {
    /// Keep 1½-types that the neighbourhood already witnesses.
    pub ignore_witnesses: bool,
}

/// `succ_T(F)`: the maximal implied 1½-types of `π1` that no member of `F`
/// witnesses. All members of `F` share `π1`; an empty `F` yields `∅`.
pub fn succ_config(sat: &SaturatedTBox, f: &[TwoType]) -> Vec<OneHalfType> {
    succ_config_with(sat, f, Mutation::default())
}

pub fn succ_config_with(
    sat: &SaturatedTBox,
    f: &[TwoType],
    mutation: Mutation,
) -> Vec<OneHalfType> {
    let Some(first) = f.first() else {
        return Vec::new();
    };
    debug_assert!(
        f.iter().all(|t| t.c1 == first.c1),
        "F must share its first component"
    );
    sat.implied_existentials(first.c1)
        .into_iter()
        .filter(|u| mutation.ignore_witnesses || !f.iter().any(|t| u.is_witnessed_by(t)))
        .collect()
}

/// `child_T(t) = {(π3(t), ρ, ν) | (ρ, ν) ∈ succ_T({inv(t)})}`.
pub fn children(sat: &SaturatedTBox, t: &TwoType) -> Vec<TwoType> {
    children_with(sat, t, Mutation::default())
}

pub fn children_with(sat: &SaturatedTBox, t: &TwoType, mutation: Mutation) -> Vec<TwoType> {
    succ_config_with(sat, &[t.inverse()], mutation)
        .into_iter()
        .map(|u| TwoType::new(t.c2, u.roles, u.concepts))
        .collect()
}

/// `T_a`: the bare type of `a` and one 2-type per neighbour in `A_T`.
pub fn root_frontier(completed: &CompletedABox, a: usize) -> Vec<TwoType> {
    let own = completed.concepts(a);
    let mut out = BTreeSet::from([TwoType::bare(own)]);
    for (b, rs) in completed.neighbours(a) {
        out.insert(TwoType::new(own, rs, completed.concepts(b)));
    }
    out.into_iter().collect()
}

/// The first types `k1` of words rooted at `a`.
pub fn root_children(
    sat: &SaturatedTBox,
    completed: &CompletedABox,
    a: usize,
    mutation: Mutation,
) -> Vec<TwoType> {
    let own = completed.concepts(a);
    succ_config_with(sat, &root_frontier(completed, a), mutation)
        .into_iter()
        .map(|u| TwoType::new(own, u.roles, u.concepts))
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct BuildOptions {
    /// Maximal number of 2-types in a word; 0 gives `A_T` itself.
    pub depth: usize,
    /// Stop expanding once this many nodes exist; the result is then
    /// flagged incomplete.
    pub max_nodes: usize,
    pub mutation: Mutation,
}

impl BuildOptions {
    pub fn depth(depth: usize) -> Self {
        BuildOptions {
            depth,
            max_nodes: 1 << 20,
            mutation: Mutation::default(),
        }
    }
}

/// `can_n(T, A)` with `n = depth`. The completeness flag is set iff no word
/// at the last level has children, in which case the result is `can(T, A)`.
pub fn build_can(
    sat: &SaturatedTBox,
    completed: &CompletedABox,
    options: BuildOptions,
) -> Interpretation {
    let sig = sat.signature();
    let mut interp = completed.to_interpretation(sat);
    let mut child_cache: BTreeMap<TwoType, Vec<TwoType>> = BTreeMap::new();
    let mut children_of = |t: &TwoType| {
        child_cache
            .entry(*t)
            .or_insert_with(|| children_with(sat, t, options.mutation))
            .clone()
    };

    // Frontier entries: (node, its tail type).
    let mut frontier: Vec<(NodeId, Vec<TwoType>)> = Vec::new();
    for (i, a) in completed.individuals().iter().enumerate() {
        let x = interp.individual_id(a).expect("every individual is a node");
        frontier.push((x, root_children(sat, completed, i, options.mutation)));
    }
    let mut complete = true;
    for level in 1..=options.depth + 1 {
        let pending = frontier.iter().any(|(_, ks)| !ks.is_empty());
        if !pending {
            break;
        }
        if level > options.depth || interp.len() >= options.max_nodes {
            complete = false;
            break;
        }
        let mut next = Vec::new();
        for (parent, ks) in frontier {
            let (root, word) = match interp.node(parent) {
                Node::Named(a) => (a.clone(), Vec::new()),
                Node::Anon { root, word } => (root.clone(), word.clone()),
                Node::Blank(_) => unreachable!("canonical models have no blank nodes"),
            };
            for k in ks {
                let mut w = word.clone();
                w.push(k);
                let y = interp.add_node(Node::Anon {
                    root: root.clone(),
                    word: w,
                });
                for c in sig.concept_names(k.c2) {
                    interp.add_concept(y, c);
                }
                for r in k.roles.iter() {
                    interp.add_role(&sig.role(r), parent, y);
                }
                next.push((y, children_of(&k)));
            }
        }
        frontier = next;
    }
    interp.set_complete(complete);
    interp
}

/// Whether the child relation reachable from the roots of `A_T` is acyclic,
/// i.e. whether `can(T, A)` is finite.
pub fn has_finite_can(sat: &SaturatedTBox, completed: &CompletedABox) -> bool {
    let mut graph: BTreeMap<TwoType, Vec<TwoType>> = BTreeMap::new();
    let mut todo: Vec<TwoType> = (0..completed.individuals().len())
        .flat_map(|i| root_children(sat, completed, i, Mutation::default()))
        .collect();
    while let Some(t) = todo.pop() {
        if graph.contains_key(&t) {
            continue;
        }
        let ks = children(sat, &t);
        todo.extend(ks.iter().copied());
        graph.insert(t, ks);
    }
    let mut dg = petgraph::graphmap::DiGraphMap::<TwoType, ()>::new();
    for (t, ks) in &graph {
        dg.add_node(*t);
        for k in ks {
            dg.add_edge(*t, *k, ());
        }
    }
    graph.iter().all(|(t, ks)| !ks.contains(t)) && !petgraph::algo::is_cyclic_directed(&dg)
}

/// Checks every ABox atom and every axiom of the source TBox at every node.
pub fn is_model(interp: &Interpretation, sat: &SaturatedTBox, abox: &ABox) -> bool {
    for (c, a) in abox.concept_atoms() {
        match interp.individual_id(a) {
            Some(x) if interp.has_concept(x, c) => {}
            _ => return false,
        }
    }
    for (r, a, b) in abox.role_atoms() {
        let (Some(x), Some(y)) = (interp.individual_id(a), interp.individual_id(b)) else {
            return false;
        };
        if !interp.has_role(
            &Role {
                name: r.clone(),
                inverted: false,
            },
            x,
            y,
        ) {
            return false;
        }
    }
    let holds = |x: NodeId, f: &Filler| f.concept().is_none_or(|c| interp.has_concept(x, c));
    let along = |x: NodeId, r: &Role| {
        interp
            .neighbours(x)
            .iter()
            .filter(move |(_, rs)| rs.contains(r))
            .map(|(&y, _)| y)
            .collect::<Vec<_>>()
    };
    for x in interp.node_ids() {
        for axiom in sat.source().axioms() {
            let ok = match axiom {
                Axiom::ConjInclusion { lhs, rhs } => {
                    !lhs.iter().all(|c| interp.has_concept(x, c))
                        || match rhs {
                            Head::Top => true,
                            Head::Bottom => false,
                            Head::Named(b) => interp.has_concept(x, b),
                        }
                }
                Axiom::AtMostOne { a, r, b } => {
                    !interp.has_concept(x, a)
                        || along(x, r).into_iter().filter(|&y| holds(y, b)).count() <= 1
                }
                Axiom::ValueRestriction { a, r, b } => {
                    !interp.has_concept(x, a) || along(x, r).into_iter().all(|y| holds(y, b))
                }
                Axiom::ExistsInclusion { a, r, b } => {
                    !interp.has_concept(x, a) || along(x, r).into_iter().any(|y| holds(y, b))
                }
                Axiom::RoleInclusion { sub, sup } => along(x, sub)
                    .into_iter()
                    .all(|y| interp.has_role(sup, x, y)),
            };
            if !ok {
                return false;
            }
        }
    }
    true
}
