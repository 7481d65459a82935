use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::kb::{Axiom, Role, RoleName, TBox};

/// Maps a collapsed role name to the role that replaces it; the target may
/// be inverted when the cycle runs through an inverse.
pub type RoleRenaming = BTreeMap<RoleName, Role>;

pub fn rename_role(renaming: &RoleRenaming, r: &Role) -> Role {
    match renaming.get(&r.name) {
        Some(rep) if r.inverted => rep.inverse(),
        Some(rep) => rep.clone(),
        None => r.clone(),
    }
}

/// Replaces every strongly connected set of mutually included roles by a
/// single representative (the smallest name in the set). Inclusions that
/// become trivial are dropped; a symmetric role keeps `p <= ^p`.
pub fn collapse_role_cycles(tbox: &TBox) -> (TBox, RoleRenaming) {
    let mut graph: DiGraph<Role, ()> = DiGraph::new();
    let mut index = BTreeMap::new();
    let mut node = |graph: &mut DiGraph<Role, ()>, r: &Role| {
        *index
            .entry(r.clone())
            .or_insert_with(|| graph.add_node(r.clone()))
    };
    for axiom in tbox.axioms() {
        if let Axiom::RoleInclusion { sub, sup } = axiom {
            let (a, b) = (node(&mut graph, sub), node(&mut graph, sup));
            graph.add_edge(a, b, ());
            let (a, b) = (
                node(&mut graph, &sub.inverse()),
                node(&mut graph, &sup.inverse()),
            );
            graph.add_edge(a, b, ());
        }
    }

    let mut renaming = RoleRenaming::new();
    for component in tarjan_scc(&graph) {
        if component.len() < 2 {
            continue;
        }
        let members: BTreeSet<Role> = component.iter().map(|&i| graph[i].clone()).collect();
        let rep_name = members
            .iter()
            .map(|r| r.name.clone())
            .min()
            .expect("nonempty");
        let rep_dir = Role {
            name: rep_name.clone(),
            inverted: false,
        };
        // Orient the representative so that it belongs to this component.
        let rep = if members.contains(&rep_dir) {
            rep_dir
        } else {
            rep_dir.inverse()
        };
        for r in &members {
            if r.name == rep.name {
                continue;
            }
            let target = if r.inverted {
                rep.inverse()
            } else {
                rep.clone()
            };
            renaming.insert(r.name.clone(), target);
        }
    }

    let mut out = TBox::new();
    for axiom in tbox.axioms() {
        let renamed = match axiom {
            Axiom::RoleInclusion { sub, sup } => {
                let (sub, sup) = (rename_role(&renaming, sub), rename_role(&renaming, sup));
                if sub == sup {
                    continue;
                }
                Axiom::RoleInclusion { sub, sup }
            }
            Axiom::AtMostOne { a, r, b } => Axiom::AtMostOne {
                a: a.clone(),
                r: rename_role(&renaming, r),
                b: b.clone(),
            },
            Axiom::ValueRestriction { a, r, b } => Axiom::ValueRestriction {
                a: a.clone(),
                r: rename_role(&renaming, r),
                b: b.clone(),
            },
            Axiom::ExistsInclusion { a, r, b } => Axiom::ExistsInclusion {
                a: a.clone(),
                r: rename_role(&renaming, r),
                b: b.clone(),
            },
            other => other.clone(),
        };
        out.insert(renamed);
    }
    (out, renaming)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{Concept, Filler};

    fn incl(sub: Role, sup: Role) -> Axiom {
        Axiom::RoleInclusion { sub, sup }
    }

    #[test]
    fn two_cycle_collapses_to_the_smaller_name() {
        let t = TBox::from_axioms([
            incl(Role::new("r"), Role::new("s")),
            incl(Role::new("s"), Role::new("r")),
        ]);
        let (out, renaming) = collapse_role_cycles(&t);
        assert!(out.is_empty());
        assert_eq!(
            renaming,
            RoleRenaming::from([(RoleName::new("s"), Role::new("r"))])
        );
    }

    #[test]
    fn acyclic_tbox_is_unchanged() {
        let t = TBox::from_axioms([
            incl(Role::new("r"), Role::new("s")),
            Axiom::ExistsInclusion {
                a: "A".into(),
                r: Role::new("r"),
                b: Filler::Top,
            },
        ]);
        let (out, renaming) = collapse_role_cycles(&t);
        assert_eq!(out, t);
        assert!(renaming.is_empty());
    }

    #[test]
    fn three_cycle_rewrites_the_existential() {
        let t = TBox::from_axioms([
            incl(Role::new("r"), Role::new("s")),
            incl(Role::new("s"), Role::new("t")),
            incl(Role::new("t"), Role::new("r")),
            Axiom::ExistsInclusion {
                a: "A".into(),
                r: Role::new("s"),
                b: Filler::Named(Concept::new("B")),
            },
        ]);
        let (out, renaming) = collapse_role_cycles(&t);
        let expected = TBox::from_axioms([Axiom::ExistsInclusion {
            a: "A".into(),
            r: Role::new("r"),
            b: Filler::Named(Concept::new("B")),
        }]);
        assert_eq!(out, expected);
        assert_eq!(
            renaming,
            RoleRenaming::from([
                (RoleName::new("s"), Role::new("r")),
                (RoleName::new("t"), Role::new("r"))
            ])
        );
    }

    #[test]
    fn cycle_through_an_inverse_keeps_direction() {
        let t = TBox::from_axioms([
            incl(Role::new("r"), Role::inverse_of("s")),
            incl(Role::inverse_of("s"), Role::new("r")),
        ]);
        let (out, renaming) = collapse_role_cycles(&t);
        assert!(out.is_empty());
        assert_eq!(
            renaming,
            RoleRenaming::from([(RoleName::new("s"), Role::inverse_of("r"))])
        );
    }

    #[test]
    fn symmetric_role_keeps_its_self_inverse_inclusion() {
        let t = TBox::from_axioms([incl(Role::new("p"), Role::inverse_of("p"))]);
        let (out, renaming) = collapse_role_cycles(&t);
        assert!(renaming.is_empty());
        assert_eq!(out, t);
    }
}
