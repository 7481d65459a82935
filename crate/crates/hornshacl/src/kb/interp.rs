use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{ABox, Concept, Individual, Role, RoleName, TwoType};

/// Dense index of a domain element inside one [`Interpretation`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A domain element. Anonymous words compare positionally.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Node {
    Named(Individual),
    /// `a k1 … kn`: a root individual followed by the 2-types along the path.
    Anon {
        root: Individual,
        word: Vec<TwoType>,
    },
    /// A labelled null produced by a chase.
    Blank(u32),
}

impl Node {
    pub fn is_named(&self) -> bool {
        matches!(self, Node::Named(_))
    }

    pub fn individual(&self) -> Option<&Individual> {
        match self {
            Node::Named(a) => Some(a),
            _ => None,
        }
    }

    /// Number of 2-types in the word; 0 for named individuals and blanks.
    pub fn depth(&self) -> usize {
        match self {
            Node::Anon { word, .. } => word.len(),
            _ => 0,
        }
    }
}

/// A finite interpretation. Role pairs are stored under the base role name
/// and `^r(x,y)` holds iff `r(y,x)` does. Every node mentioned by an
/// extension is in the domain because extensions only take [`NodeId`]s.
#[derive(Clone, Debug, Default)]
pub struct Interpretation {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    labels: Vec<BTreeSet<Concept>>,
    adjacency: Vec<BTreeMap<NodeId, BTreeSet<Role>>>,
    edges: BTreeSet<(RoleName, NodeId, NodeId)>,
    complete: bool,
}

impl Interpretation {
    pub fn new() -> Self {
        Interpretation {
            complete: true,
            ..Self::default()
        }
    }

    /// The canonical interpretation of an ABox: its individuals and atoms.
    pub fn from_abox(abox: &ABox) -> Self {
        let mut out = Interpretation::new();
        for a in abox.individuals() {
            out.add_node(Node::Named(a.clone()));
        }
        for (c, a) in abox.concept_atoms() {
            let x = out.add_node(Node::Named(a.clone()));
            out.add_concept(x, c.clone());
        }
        for (r, a, b) in abox.role_atoms() {
            let x = out.add_node(Node::Named(a.clone()));
            let y = out.add_node(Node::Named(b.clone()));
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

    pub fn add_node(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.index.insert(node.clone(), id);
        self.nodes.push(node);
        self.labels.push(BTreeSet::new());
        self.adjacency.push(BTreeMap::new());
        id
    }

    pub fn add_concept(&mut self, x: NodeId, c: Concept) -> bool {
        self.labels[x.index()].insert(c)
    }

    pub fn add_role(&mut self, r: &Role, x: NodeId, y: NodeId) -> bool {
        let (x, y) = if r.inverted { (y, x) } else { (x, y) };
        let fresh = self.edges.insert((r.name.clone(), x, y));
        let base = Role {
            name: r.name.clone(),
            inverted: false,
        };
        self.adjacency[x.index()]
            .entry(y)
            .or_default()
            .insert(base.clone());
        self.adjacency[y.index()]
            .entry(x)
            .or_default()
            .insert(base.inverse());
        fresh
    }

    pub fn set_complete(&mut self, complete: bool) {
        self.complete = complete;
    }

    /// False when this is a truncated approximation rather than a model.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn node_id(&self, node: &Node) -> Option<NodeId> {
        self.index.get(node).copied()
    }

    pub fn individual_id(&self, a: &Individual) -> Option<NodeId> {
        self.node_id(&Node::Named(a.clone()))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn concepts_of(&self, x: NodeId) -> &BTreeSet<Concept> {
        &self.labels[x.index()]
    }

    pub fn has_concept(&self, x: NodeId, c: &Concept) -> bool {
        self.labels[x.index()].contains(c)
    }

    pub fn concept_ext(&self, c: &Concept) -> BTreeSet<NodeId> {
        self.node_ids()
            .filter(|&x| self.has_concept(x, c))
            .collect()
    }

    pub fn has_role(&self, r: &Role, x: NodeId, y: NodeId) -> bool {
        self.adjacency[x.index()]
            .get(&y)
            .is_some_and(|roles| roles.contains(r))
    }

    /// Roles (with direction) from `x` to each neighbour.
    pub fn neighbours(&self, x: NodeId) -> &BTreeMap<NodeId, BTreeSet<Role>> {
        &self.adjacency[x.index()]
    }

    /// Base-direction role pairs.
    pub fn role_pairs(&self) -> impl Iterator<Item = (&RoleName, NodeId, NodeId)> {
        self.edges.iter().map(|(r, x, y)| (r, *x, *y))
    }

    pub fn role_ext(&self, r: &Role) -> BTreeSet<(NodeId, NodeId)> {
        self.edges
            .iter()
            .filter(|(name, _, _)| *name == r.name)
            .map(|&(_, x, y)| if r.inverted { (y, x) } else { (x, y) })
            .collect()
    }

    pub fn concept_names(&self) -> BTreeSet<Concept> {
        self.labels.iter().flatten().cloned().collect()
    }

    pub fn role_names(&self) -> BTreeSet<RoleName> {
        self.edges.iter().map(|(r, _, _)| r.clone()).collect()
    }

    pub fn atom_count(&self) -> usize {
        self.labels.iter().map(BTreeSet::len).sum::<usize>() + self.edges.len()
    }

    pub fn anonymous_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_named()).count()
    }

    /// Restriction to named individuals, as an ABox.
    pub fn named_part(&self) -> ABox {
        let mut abox = ABox::new();
        for (x, node) in self.nodes() {
            if let Node::Named(a) = node {
                abox.add_individual(a.clone());
                for c in self.concepts_of(x) {
                    abox.add_concept(c.clone(), a.clone());
                }
            }
        }
        for (r, x, y) in self.role_pairs() {
            if let (Node::Named(a), Node::Named(b)) = (self.node(x), self.node(y)) {
                abox.add_role(
                    &Role {
                        name: r.clone(),
                        inverted: false,
                    },
                    a.clone(),
                    b.clone(),
                );
            }
        }
        abox
    }

    /// Table of the distinct 2-types occurring in anonymous words, in sorted
    /// order; node labels refer to it by position.
    pub fn type_table(&self) -> Vec<TwoType> {
        let types: BTreeSet<TwoType> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Anon { word, .. } => Some(word.iter().copied()),
                _ => None,
            })
            .flatten()
            .collect();
        types.into_iter().collect()
    }

    /// Stable printable names: individuals as themselves, anonymous words as
    /// `_:a.k1.k2` with indices into [`Self::type_table`], blanks as `_:bN`.
    pub fn node_labels(&self) -> Vec<String> {
        let table = self.type_table();
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Named(a) => a.to_string(),
                Node::Anon { root, word } => {
                    let mut s = format!("_:{root}");
                    for t in word {
                        let k = table
                            .binary_search(t)
                            .expect("type table covers every word");
                        s.push_str(&format!(".k{k}"));
                    }
                    s
                }
                Node::Blank(i) => format!("_:b{i}"),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_lookup_flips_the_stored_pair() {
        let mut abox = ABox::new();
        abox.add_role(&Role::new("hasPet"), "linda".into(), "blu".into());
        let i = Interpretation::from_abox(&abox);
        let linda = i.individual_id(&"linda".into()).unwrap();
        let blu = i.individual_id(&"blu".into()).unwrap();
        assert!(i.has_role(&Role::new("hasPet"), linda, blu));
        assert!(i.has_role(&Role::inverse_of("hasPet"), blu, linda));
        assert!(!i.has_role(&Role::inverse_of("hasPet"), linda, blu));
        assert_eq!(
            i.role_ext(&Role::inverse_of("hasPet")),
            BTreeSet::from([(blu, linda)])
        );
    }

    #[test]
    fn anonymous_words_compare_positionally() {
        let t1 = TwoType::default();
        let mut t2 = TwoType::default();
        t2.c1.insert(crate::kb::ConceptId(0));
        let w = |word: Vec<TwoType>| Node::Anon {
            root: "a".into(),
            word,
        };
        assert_eq!(w(vec![t1, t2]), w(vec![t1, t2]));
        assert_ne!(w(vec![t1, t2]), w(vec![t2, t1]));
        let mut i = Interpretation::new();
        let x = i.add_node(w(vec![t1, t2]));
        assert_eq!(i.add_node(w(vec![t1, t2])), x);
        assert_eq!(i.node_labels(), vec!["_:a.k0.k1".to_string()]);
    }

    #[test]
    fn named_part_round_trips_an_abox() {
        let mut abox = ABox::new();
        abox.add_concept("A".into(), "a".into());
        abox.add_role(&Role::inverse_of("r"), "a".into(), "b".into());
        abox.add_individual("c".into());
        assert_eq!(Interpretation::from_abox(&abox).named_part(), abox);
    }
}
