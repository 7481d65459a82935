//! Reference machinery for checking the canonical model: restricted and
//! oblivious chase steps, the core chase, cores by retraction, endomorphism
//! enumeration and isomorphism tests. Every search here is exponential and
//! guarded by a node bound.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::kb::{ABox, Axiom, Concept, Filler, Head, Interpretation, Node, Role, RoleName};
use crate::tbox::SaturatedTBox;

pub const DEFAULT_NODE_BOUND: usize = 12;

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum ChaseError {
    #[error("structure has {nodes} nodes, above the bound of {bound}")]
    TooLarge { nodes: usize, bound: usize },
    #[error("chase did not terminate within {0} rounds")]
    NotTerminated(usize),
}

/// Atoms over individuals and labelled nulls. Role atoms are stored under
/// the base role name.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct AtomSet {
    nodes: BTreeSet<Node>,
    concepts: BTreeSet<(Node, Concept)>,
    roles: BTreeSet<(RoleName, Node, Node)>,
    next_blank: u32,
}

impl AtomSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_abox(abox: &ABox) -> Self {
        let mut out = AtomSet::new();
        for a in abox.individuals() {
            out.nodes.insert(Node::Named(a.clone()));
        }
        for (c, a) in abox.concept_atoms() {
            out.add_concept(Node::Named(a.clone()), c.clone());
        }
        for (r, a, b) in abox.role_atoms() {
            out.add_role(
                &Role {
                    name: r.clone(),
                    inverted: false,
                },
                Node::Named(a.clone()),
                Node::Named(b.clone()),
            );
        }
        out
    }

    /// Individuals stay named; every other element becomes a labelled null.
    pub fn from_interpretation(interp: &Interpretation) -> Self {
        let mut out = AtomSet::new();
        let mut rename = Vec::with_capacity(interp.len());
        for (_, node) in interp.nodes() {
            let n = match node {
                Node::Named(_) => node.clone(),
                _ => out.fresh(),
            };
            out.nodes.insert(n.clone());
            rename.push(n);
        }
        for x in interp.node_ids() {
            for c in interp.concepts_of(x) {
                out.add_concept(rename[x.index()].clone(), c.clone());
            }
        }
        for (r, x, y) in interp.role_pairs() {
            out.roles.insert((
                r.clone(),
                rename[x.index()].clone(),
                rename[y.index()].clone(),
            ));
        }
        out
    }

    pub fn to_interpretation(&self) -> Interpretation {
        let mut out = Interpretation::new();
        for n in &self.nodes {
            out.add_node(n.clone());
        }
        for (n, c) in &self.concepts {
            let x = out.add_node(n.clone());
            out.add_concept(x, c.clone());
        }
        for (r, a, b) in &self.roles {
            let (x, y) = (out.add_node(a.clone()), out.add_node(b.clone()));
            out.add_role(
                &Role {
                    name: r.clone(),
                    inverted: false,
                },
                x,
                y,
            );
        }
        out
    }

    pub fn fresh(&mut self) -> Node {
        let n = Node::Blank(self.next_blank);
        self.next_blank += 1;
        self.nodes.insert(n.clone());
        n
    }

    pub fn add_concept(&mut self, x: Node, c: Concept) -> bool {
        self.nodes.insert(x.clone());
        self.concepts.insert((x, c))
    }

    pub fn add_role(&mut self, r: &Role, x: Node, y: Node) -> bool {
        self.nodes.insert(x.clone());
        self.nodes.insert(y.clone());
        let (x, y) = if r.inverted { (y, x) } else { (x, y) };
        self.roles.insert((r.name.clone(), x, y))
    }

    pub fn has_concept(&self, x: &Node, c: &Concept) -> bool {
        self.concepts.contains(&(x.clone(), c.clone()))
    }

    pub fn has_role(&self, r: &Role, x: &Node, y: &Node) -> bool {
        let (x, y) = if r.inverted { (y, x) } else { (x, y) };
        self.roles.contains(&(r.name.clone(), x.clone(), y.clone()))
    }

    pub fn nodes(&self) -> &BTreeSet<Node> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn atom_count(&self) -> usize {
        self.concepts.len() + self.roles.len()
    }

    pub fn blank_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_named()).count()
    }

    /// `r`-successors of `x`, `r` possibly inverted.
    pub fn successors(&self, r: &Role, x: &Node) -> Vec<Node> {
        self.roles
            .iter()
            .filter(|(name, a, b)| *name == r.name && if r.inverted { b == x } else { a == x })
            .map(|(_, a, b)| if r.inverted { a.clone() } else { b.clone() })
            .collect()
    }

    fn holds(&self, x: &Node, f: &Filler) -> bool {
        f.concept().is_none_or(|c| self.has_concept(x, c))
    }

    /// Replaces `from` by `to` everywhere.
    fn substitute(&mut self, from: &Node, to: &Node) {
        let swap = |n: &Node| if n == from { to.clone() } else { n.clone() };
        self.nodes.remove(from);
        self.concepts = self
            .concepts
            .iter()
            .map(|(n, c)| (swap(n), c.clone()))
            .collect();
        self.roles = self
            .roles
            .iter()
            .map(|(r, a, b)| (r.clone(), swap(a), swap(b)))
            .collect();
    }

    /// The substructure induced by `keep`.
    pub fn restrict(&self, keep: &BTreeSet<Node>) -> AtomSet {
        AtomSet {
            nodes: keep.clone(),
            concepts: self
                .concepts
                .iter()
                .filter(|(n, _)| keep.contains(n))
                .cloned()
                .collect(),
            roles: self
                .roles
                .iter()
                .filter(|(_, a, b)| keep.contains(a) && keep.contains(b))
                .cloned()
                .collect(),
            next_blank: self.next_blank,
        }
    }

    /// Applies at-most restrictions by merging successors until none is
    /// violated. A named node is never merged away; between two nulls the
    /// larger one goes. Returns false if two individuals would have to meet.
    fn merge_at_most(&mut self, sat: &SaturatedTBox) -> bool {
        let at_most: Vec<&Axiom> = sat
            .source()
            .axioms()
            .filter(|a| a.is_at_most_one())
            .collect();
        'outer: loop {
            for axiom in &at_most {
                let Axiom::AtMostOne { a, r, b } = axiom else {
                    unreachable!()
                };
                let holders: Vec<Node> = self
                    .concepts
                    .iter()
                    .filter(|(_, c)| c == a)
                    .map(|(n, _)| n.clone())
                    .collect();
                for x in holders {
                    let succ: Vec<Node> = self
                        .successors(r, &x)
                        .into_iter()
                        .filter(|y| self.holds(y, b))
                        .collect();
                    if succ.len() < 2 {
                        continue;
                    }
                    let (y, z) = (&succ[0], &succ[1]);
                    let (keep, drop) = match (y.is_named(), z.is_named()) {
                        (true, true) => return false,
                        (true, false) => (y, z),
                        (false, true) => (z, y),
                        (false, false) => (y.min(z), y.max(z)),
                    };
                    let (keep, drop) = (keep.clone(), drop.clone());
                    self.substitute(&drop, &keep);
                    continue 'outer;
                }
            }
            return true;
        }
    }
}

fn role_inclusions(sat: &SaturatedTBox) -> Vec<(Role, Role)> {
    sat.source()
        .axioms()
        .filter_map(|a| match a {
            Axiom::RoleInclusion { sub, sup } => Some((sub.clone(), sup.clone())),
            _ => None,
        })
        .collect()
}

/// Adds the consequences of the non-generating axioms (conjunctive,
/// universal and role inclusions) that are violated in `atoms`, in one step.
fn non_generating_matches(sat: &SaturatedTBox, atoms: &AtomSet) -> AtomSet {
    let mut out = atoms.clone();
    for x in &atoms.nodes {
        for axiom in sat.source().axioms() {
            match axiom {
                Axiom::ConjInclusion {
                    lhs,
                    rhs: Head::Named(b),
                } if lhs.iter().all(|c| atoms.has_concept(x, c)) => {
                    out.add_concept(x.clone(), b.clone());
                }
                Axiom::ValueRestriction {
                    a,
                    r,
                    b: Filler::Named(b),
                } if atoms.has_concept(x, a) => {
                    for y in atoms.successors(r, x) {
                        out.add_concept(y, b.clone());
                    }
                }
                _ => {}
            }
        }
    }
    for (sub, sup) in role_inclusions(sat) {
        for (r, a, b) in &atoms.roles {
            if *r == sub.name {
                let (x, y) = if sub.inverted { (b, a) } else { (a, b) };
                out.add_role(&sup, x.clone(), y.clone());
            }
        }
    }
    out
}

/// One parallel restricted chase step: every unsatisfied axiom match fires
/// on the input, then at-most restrictions merge successors.
pub fn fire_axioms(sat: &SaturatedTBox, atoms: &AtomSet) -> AtomSet {
    let mut out = non_generating_matches(sat, atoms);
    for x in &atoms.nodes {
        for axiom in sat.source().axioms() {
            if let Axiom::ExistsInclusion { a, r, b } = axiom {
                let satisfied = atoms.successors(r, x).iter().any(|y| atoms.holds(y, b));
                if atoms.has_concept(x, a) && !satisfied {
                    let y = out.fresh();
                    out.add_role(r, x.clone(), y.clone());
                    if let Filler::Named(c) = b {
                        out.add_concept(y, c.clone());
                    }
                }
            }
        }
    }
    out.merge_at_most(sat);
    out
}

/// The oblivious chase: each existential axiom fires once per node that
/// matches its left-hand side, whether or not it is already satisfied.
pub fn oblivious_chase(
    sat: &SaturatedTBox,
    abox: &ABox,
    max_nodes: usize,
) -> Result<AtomSet, ChaseError> {
    let mut atoms = AtomSet::from_abox(abox);
    let mut fired: BTreeSet<(usize, Node)> = BTreeSet::new();
    let existentials: Vec<&Axiom> = sat
        .source()
        .axioms()
        .filter(|a| matches!(a, Axiom::ExistsInclusion { .. }))
        .collect();
    for round in 0.. {
        loop {
            let next = non_generating_matches(sat, &atoms);
            if next == atoms {
                break;
            }
            atoms = next;
        }
        atoms.merge_at_most(sat);
        let mut progressed = false;
        let nodes: Vec<Node> = atoms.nodes.iter().cloned().collect();
        for x in nodes {
            for (i, axiom) in existentials.iter().enumerate() {
                let Axiom::ExistsInclusion { a, r, b } = axiom else {
                    unreachable!()
                };
                if atoms.has_concept(&x, a) && fired.insert((i, x.clone())) {
                    let y = atoms.fresh();
                    atoms.add_role(r, x.clone(), y.clone());
                    if let Filler::Named(c) = b {
                        atoms.add_concept(y, c.clone());
                    }
                    progressed = true;
                }
            }
        }
        if !progressed {
            return Ok(atoms);
        }
        if atoms.len() > max_nodes {
            return Err(ChaseError::NotTerminated(round + 1));
        }
    }
    unreachable!("the loop returns")
}

/// The rounds of the core chase, starting with the ABox itself.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChaseTrace {
    pub rounds: Vec<AtomSet>,
    /// The last round is a fixpoint.
    pub terminated: bool,
}

/// Alternates a restricted chase step with taking the core, recording
/// every round.
pub fn core_chase_trace(
    sat: &SaturatedTBox,
    abox: &ABox,
    max_rounds: usize,
    bound: usize,
) -> Result<ChaseTrace, ChaseError> {
    let mut rounds = vec![AtomSet::from_abox(abox)];
    for _ in 0..max_rounds {
        let atoms = rounds.last().expect("the ABox round exists");
        let next = fire_axioms(sat, atoms);
        if next.nodes == atoms.nodes && next.concepts == atoms.concepts && next.roles == atoms.roles
        {
            return Ok(ChaseTrace {
                rounds,
                terminated: true,
            });
        }
        rounds.push(core_of(&next, bound)?);
    }
    Ok(ChaseTrace {
        rounds,
        terminated: false,
    })
}

/// The result of the core chase.
pub fn run_core_chase(
    sat: &SaturatedTBox,
    abox: &ABox,
    max_rounds: usize,
    bound: usize,
) -> Result<AtomSet, ChaseError> {
    let mut trace = core_chase_trace(sat, abox, max_rounds, bound)?;
    match trace.terminated {
        true => Ok(trace.rounds.pop().expect("the ABox round exists")),
        false => Err(ChaseError::NotTerminated(max_rounds)),
    }
}

/// A node map fixing individuals and preserving atoms.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Homomorphism {
    pub map: BTreeMap<Node, Node>,
    pub injective: bool,
    pub surjective: bool,
    /// Reflects atoms: every atom over images has a preimage atom.
    pub strong: bool,
}

impl Homomorphism {
    pub fn is_embedding(&self) -> bool {
        self.injective && self.strong
    }

    pub fn is_isomorphism(&self) -> bool {
        self.is_embedding() && self.surjective
    }
}

/// Backtracking search for homomorphisms from `from` to `to`. `avoid`
/// excludes a target node from the image; `injective` restricts to
/// injective maps. Visits each solution until `visit` returns false.
fn search(
    from: &AtomSet,
    to: &AtomSet,
    avoid: Option<&Node>,
    injective: bool,
    visit: &mut impl FnMut(&BTreeMap<Node, Node>) -> bool,
) {
    // Named nodes first, then nulls in order of decreasing degree.
    let degree = |n: &Node| {
        from.roles
            .iter()
            .filter(|(_, a, b)| a == n || b == n)
            .count()
    };
    let mut order: Vec<Node> = from.nodes.iter().cloned().collect();
    order.sort_by_key(|n| (!n.is_named(), std::cmp::Reverse(degree(n))));
    let labels = |s: &AtomSet, n: &Node| -> BTreeSet<Concept> {
        s.concepts
            .range((n.clone(), Concept::new(""))..)
            .take_while(|(m, _)| m == n)
            .map(|(_, c)| c.clone())
            .collect()
    };
    let from_labels: Vec<BTreeSet<Concept>> = order.iter().map(|n| labels(from, n)).collect();
    let to_nodes: Vec<Node> = to
        .nodes
        .iter()
        .filter(|n| Some(*n) != avoid)
        .cloned()
        .collect();
    let to_labels: BTreeMap<Node, BTreeSet<Concept>> = to_nodes
        .iter()
        .map(|n| (n.clone(), labels(to, n)))
        .collect();

    let search = Search {
        order: &order,
        from_labels: &from_labels,
        from,
        to,
        to_nodes: &to_nodes,
        to_labels: &to_labels,
        injective,
    };
    search.extend(0, &mut BTreeMap::new(), visit);
}

/// Fixed data of one homomorphism search.
struct Search<'a> {
    order: &'a [Node],
    from_labels: &'a [BTreeSet<Concept>],
    from: &'a AtomSet,
    to: &'a AtomSet,
    to_nodes: &'a [Node],
    to_labels: &'a BTreeMap<Node, BTreeSet<Concept>>,
    injective: bool,
}

impl Search<'_> {
    /// Extends `map`, defined on `order[..i]`, in every consistent way.
    /// Returns false once `visit` asks to stop.
    fn extend(
        &self,
        i: usize,
        map: &mut BTreeMap<Node, Node>,
        visit: &mut impl FnMut(&BTreeMap<Node, Node>) -> bool,
    ) -> bool {
        if i == self.order.len() {
            return visit(map);
        }
        let x = &self.order[i];
        let candidates: Vec<Node> = match x {
            Node::Named(_) if self.to_labels.contains_key(x) => vec![x.clone()],
            Node::Named(_) => Vec::new(),
            _ => self.to_nodes.to_vec(),
        };
        for y in candidates {
            if !self.from_labels[i].is_subset(&self.to_labels[&y]) {
                continue;
            }
            if self.injective && map.values().any(|v| *v == y) {
                continue;
            }
            map.insert(x.clone(), y.clone());
            let edges_ok = self
                .from
                .roles
                .iter()
                .all(|(r, a, b)| match (map.get(a), map.get(b)) {
                    (Some(ha), Some(hb)) if a == x || b == x => {
                        self.to.roles.contains(&(r.clone(), ha.clone(), hb.clone()))
                    }
                    _ => true,
                });
            if edges_ok && !self.extend(i + 1, map, visit) {
                map.remove(x);
                return false;
            }
            map.remove(x);
        }
        true
    }
}

fn guard(atoms: &AtomSet, bound: usize) -> Result<(), ChaseError> {
    if atoms.len() > bound {
        return Err(ChaseError::TooLarge {
            nodes: atoms.len(),
            bound,
        });
    }
    Ok(())
}

fn classify(atoms: &AtomSet, map: &BTreeMap<Node, Node>) -> Homomorphism {
    let image: BTreeSet<&Node> = map.values().collect();
    let injective = image.len() == map.len();
    let surjective = image.len() == atoms.nodes.len();
    let preimages = |y: &Node| -> Vec<Node> {
        map.iter()
            .filter(|(_, v)| *v == y)
            .map(|(k, _)| k.clone())
            .collect()
    };
    let strong = atoms
        .concepts
        .iter()
        .filter(|(n, _)| image.contains(n))
        .all(|(n, c)| preimages(n).iter().any(|x| atoms.has_concept(x, c)))
        && atoms
            .roles
            .iter()
            .filter(|(_, a, b)| image.contains(a) && image.contains(b))
            .all(|(r, a, b)| {
                let (pa, pb) = (preimages(a), preimages(b));
                pa.iter().any(|x| {
                    pb.iter()
                        .any(|y| atoms.roles.contains(&(r.clone(), x.clone(), y.clone())))
                })
            });
    Homomorphism {
        map: map.clone(),
        injective,
        surjective,
        strong,
    }
}

pub fn enumerate_endomorphisms(
    atoms: &AtomSet,
    bound: usize,
) -> Result<Vec<Homomorphism>, ChaseError> {
    guard(atoms, bound)?;
    let mut out = Vec::new();
    search(atoms, atoms, None, false, &mut |m| {
        out.push(classify(atoms, m));
        true
    });
    Ok(out)
}

/// Retracts onto smaller images until every endomorphism is a bijection.
pub fn core_of(atoms: &AtomSet, bound: usize) -> Result<AtomSet, ChaseError> {
    guard(atoms, bound)?;
    let mut current = atoms.clone();
    'shrink: loop {
        let blanks: Vec<Node> = current
            .nodes
            .iter()
            .filter(|n| !n.is_named())
            .cloned()
            .collect();
        for avoid in &blanks {
            let mut found = None;
            search(&current, &current, Some(avoid), false, &mut |m| {
                found = Some(m.values().cloned().collect::<BTreeSet<Node>>());
                false
            });
            if let Some(image) = found {
                current = current.restrict(&image);
                continue 'shrink;
            }
        }
        return Ok(current);
    }
}

/// A bijective strong homomorphism fixing individuals exists.
pub fn is_isomorphic(a: &AtomSet, b: &AtomSet, bound: usize) -> Result<bool, ChaseError> {
    guard(a, bound)?;
    guard(b, bound)?;
    if a.len() != b.len() || a.concepts.len() != b.concepts.len() || a.roles.len() != b.roles.len()
    {
        return Ok(false);
    }
    // An injective homomorphism between equally sized finite structures
    // with equally many atoms maps atoms onto atoms.
    let mut found = false;
    search(a, b, None, true, &mut |_| {
        found = true;
        false
    });
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{parse_abox, parse_tbox};
    use crate::model::{build_can, complete_abox, BuildOptions};
    use crate::tbox::saturate_with;

    fn setup(tbox: &str, abox: &str) -> (SaturatedTBox, ABox) {
        let t = parse_tbox(tbox).unwrap();
        let a = parse_abox(abox).unwrap();
        (
            saturate_with(&t, a.concept_names(), a.role_names()).unwrap(),
            a,
        )
    }

    const PET_T: &str =
        "PetOwner <= some hasPet.top\nhasWingedPet <= hasPet\nPetOwner <= some hasWingedPet.top\n";
    const PET_A: &str = "PetOwner(linda)\nhasWingedPet(linda,blu)\nBird(blu)\n";

    #[test]
    fn single_match_fires_once() {
        let (sat, abox) = setup("A <= some r.A\n", "A(a)\n");
        let step = fire_axioms(&sat, &AtomSet::from_abox(&abox));
        assert_eq!(step.len(), 2);
        assert_eq!(step.atom_count(), 3);
    }

    #[test]
    fn satisfied_kb_is_a_fixpoint() {
        let (sat, abox) = setup("A <= some r.B\n", "A(a)\nr(a,b)\nB(b)\n");
        let atoms = AtomSet::from_abox(&abox);
        assert_eq!(fire_axioms(&sat, &atoms), atoms);
    }

    #[test]
    fn oblivious_chase_of_the_pet_kb_and_its_core() {
        let (sat, abox) = setup(PET_T, PET_A);
        let x = oblivious_chase(&sat, &abox, 20).unwrap();
        assert_eq!(x.len(), 4);
        assert_eq!(x.blank_count(), 2);
        assert_eq!(x.atom_count(), 7);
        let endos = enumerate_endomorphisms(&x, DEFAULT_NODE_BOUND).unwrap();
        let blu = Node::Named("blu".into());
        assert!(endos
            .iter()
            .any(|h| !h.is_embedding() && h.map.values().filter(|v| **v == blu).count() == 3));

        let core = core_of(&x, DEFAULT_NODE_BOUND).unwrap();
        let completed = complete_abox(&sat, &abox).unwrap();
        let can =
            AtomSet::from_interpretation(&build_can(&sat, &completed, BuildOptions::depth(3)));
        assert!(is_isomorphic(&core, &can, DEFAULT_NODE_BOUND).unwrap());
        let endos = enumerate_endomorphisms(&can, DEFAULT_NODE_BOUND).unwrap();
        assert_eq!(endos.len(), 1);
        assert!(endos[0].is_isomorphism());
    }

    #[test]
    fn core_chase_does_not_terminate_on_an_infinite_chain() {
        let (sat, abox) = setup("A <= some r.A\n", "A(a)\n");
        assert_eq!(
            run_core_chase(&sat, &abox, 5, DEFAULT_NODE_BOUND),
            Err(ChaseError::NotTerminated(5))
        );
    }

    #[test]
    fn empty_tbox_chase_returns_the_abox() {
        let (sat, abox) = setup("", "A(a)\nr(a,b)\n");
        assert_eq!(
            run_core_chase(&sat, &abox, 3, DEFAULT_NODE_BOUND).unwrap(),
            AtomSet::from_abox(&abox)
        );
    }

    #[test]
    fn single_node_has_only_the_identity() {
        let mut atoms = AtomSet::new();
        atoms.fresh();
        let endos = enumerate_endomorphisms(&atoms, DEFAULT_NODE_BOUND).unwrap();
        assert_eq!(endos.len(), 1);
        assert!(endos[0].is_isomorphism());
    }

    #[test]
    fn one_atom_difference_breaks_isomorphism() {
        let a = AtomSet::from_abox(&parse_abox("A(a)\nr(a,b)\n").unwrap());
        let b = AtomSet::from_abox(&parse_abox("A(a)\nr(b,a)\n").unwrap());
        assert!(is_isomorphic(&a, &a, DEFAULT_NODE_BOUND).unwrap());
        assert!(!is_isomorphic(&a, &b, DEFAULT_NODE_BOUND).unwrap());
    }

    #[test]
    fn size_guard_refuses_large_inputs() {
        let mut atoms = AtomSet::new();
        for _ in 0..5 {
            atoms.fresh();
        }
        assert!(matches!(
            core_of(&atoms, 4),
            Err(ChaseError::TooLarge { nodes: 5, bound: 4 })
        ));
    }
}
