//! Stratification of constraint sets through the marked dependency graph.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use thiserror::Error;

use super::expr::Constraint;
use super::rules::{NormalConstraint, Rule};
use crate::kb::ShapeName;

/// A body occurrence of `used` in a constraint with head `head`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Dependency {
    pub head: ShapeName,
    pub used: ShapeName,
    pub negative: bool,
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum StrataError {
    #[error("not stratified: negation on the cycle {}", show_cycle(.cycle))]
    NotStratified { cycle: Vec<ShapeName> },
    #[error("invalid stratum assignment: {0}")]
    InvalidAssignment(String),
}

fn show_cycle(cycle: &[ShapeName]) -> String {
    let mut parts: Vec<String> = cycle.iter().map(|s| format!("${s}")).collect();
    if let Some(first) = parts.first().cloned() {
        parts.push(first);
    }
    parts.join(" -> ")
}

/// Strata `C_0..C_k` as a level per shape name. Every shape name gets a
/// level; names that are only used sit at level 0.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Stratification {
    level: BTreeMap<ShapeName, usize>,
}

impl Stratification {
    pub fn level(&self, s: &ShapeName) -> usize {
        self.level.get(s).copied().unwrap_or(0)
    }

    pub fn levels(&self) -> &BTreeMap<ShapeName, usize> {
        &self.level
    }

    pub fn stratum_count(&self) -> usize {
        self.level.values().max().map_or(1, |m| m + 1)
    }

    /// Shape names per stratum, lowest first.
    pub fn strata(&self) -> Vec<BTreeSet<ShapeName>> {
        let mut out = vec![BTreeSet::new(); self.stratum_count()];
        for (s, &l) in &self.level {
            out[l].insert(s.clone());
        }
        out
    }

    /// Accepts a hand-picked assignment after checking both stratum
    /// conditions: positive uses at or below the head, negative uses
    /// strictly below.
    pub fn from_assignment(
        deps: &[Dependency],
        level: BTreeMap<ShapeName, usize>,
    ) -> Result<Stratification, StrataError> {
        let out = Stratification { level };
        for d in deps {
            let (h, u) = (out.level(&d.head), out.level(&d.used));
            if u > h || (d.negative && u == h) {
                return Err(StrataError::InvalidAssignment(format!(
                    "${} at level {u} is used {} by ${} at level {h}",
                    d.used,
                    if d.negative {
                        "negatively"
                    } else {
                        "positively"
                    },
                    d.head
                )));
            }
        }
        Ok(out)
    }
}

/// The least stratification: each shape sits at the longest count of
/// negative edges on any path into it. Fails iff some cycle carries a
/// negative edge.
pub fn stratify(
    names: impl IntoIterator<Item = ShapeName>,
    deps: &[Dependency],
) -> Result<Stratification, StrataError> {
    let mut ids: BTreeMap<ShapeName, usize> = BTreeMap::new();
    let mut names_by_id: Vec<ShapeName> = Vec::new();
    let mut intern = |s: &ShapeName| {
        *ids.entry(s.clone()).or_insert_with(|| {
            names_by_id.push(s.clone());
            names_by_id.len() - 1
        })
    };
    let mut graph = DiGraphMap::<usize, bool>::new();
    for s in names {
        graph.add_node(intern(&s));
    }
    for d in deps {
        let (u, h) = (intern(&d.used), intern(&d.head));
        let neg = d.negative || graph.edge_weight(u, h).copied().unwrap_or(false);
        graph.add_edge(u, h, neg);
    }

    // Tarjan yields components in reverse topological order.
    let sccs = tarjan_scc(&graph);
    let mut comp_of = vec![0; names_by_id.len()];
    for (i, comp) in sccs.iter().enumerate() {
        for &n in comp {
            comp_of[n] = i;
        }
    }
    for comp in &sccs {
        for &n in comp {
            for (_, m, &neg) in graph.edges(n) {
                if neg && comp_of[m] == comp_of[n] {
                    return Err(StrataError::NotStratified {
                        cycle: cycle_through(&graph, m, n, &names_by_id),
                    });
                }
            }
        }
    }
    let mut level = vec![0usize; names_by_id.len()];
    for comp in sccs.iter().rev() {
        // Predecessors live in earlier components, so one pass suffices.
        let base = comp
            .iter()
            .flat_map(|&n| {
                graph
                    .neighbors_directed(n, petgraph::Direction::Incoming)
                    .map(move |p| (p, n))
            })
            .filter(|&(p, _)| comp_of[p] != comp_of[comp[0]])
            .map(|(p, n)| level[p] + usize::from(graph[(p, n)]))
            .max()
            .unwrap_or(0);
        for &n in comp {
            level[n] = base;
        }
    }
    Ok(Stratification {
        level: names_by_id.into_iter().zip(level).collect(),
    })
}

/// A shortest path from `from` to `to` inside the graph, as a name list.
fn cycle_through(
    graph: &DiGraphMap<usize, bool>,
    from: usize,
    to: usize,
    names: &[ShapeName],
) -> Vec<ShapeName> {
    let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
    let mut queue = std::collections::VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(n) = queue.pop_front() {
        if n == to {
            break;
        }
        for m in graph.neighbors(n) {
            if seen.insert(m) {
                prev.insert(m, n);
                queue.push_back(m);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[&cur];
        path.push(cur);
    }
    path.reverse();
    path.into_iter().map(|n| names[n].clone()).collect()
}

pub fn constraint_dependencies(constraints: &[Constraint]) -> Vec<Dependency> {
    constraints
        .iter()
        .flat_map(|c| {
            c.body
                .shape_refs()
                .into_iter()
                .map(|(used, negative)| Dependency {
                    head: c.head.clone(),
                    used,
                    negative,
                })
        })
        .collect()
}

pub fn normal_dependencies(constraints: &[NormalConstraint]) -> Vec<Dependency> {
    constraints
        .iter()
        .flat_map(|c| {
            c.shape_refs()
                .into_iter()
                .map(|(used, negative)| Dependency {
                    head: c.head.clone(),
                    used: used.clone(),
                    negative,
                })
        })
        .collect()
}

pub fn rule_dependencies(rules: &[Rule]) -> Vec<Dependency> {
    rules
        .iter()
        .flat_map(|r| {
            r.shape_refs()
                .into_iter()
                .map(|(used, negative)| Dependency {
                    head: r.head.clone(),
                    used: used.clone(),
                    negative,
                })
        })
        .collect()
}

pub fn stratify_constraints(constraints: &[Constraint]) -> Result<Stratification, StrataError> {
    stratify(
        constraints.iter().map(|c| c.head.clone()),
        &constraint_dependencies(constraints),
    )
}

pub fn stratify_normal(constraints: &[NormalConstraint]) -> Result<Stratification, StrataError> {
    stratify(
        constraints.iter().map(|c| c.head.clone()),
        &normal_dependencies(constraints),
    )
}

pub fn stratify_rules(rules: &[Rule]) -> Result<Stratification, StrataError> {
    stratify(
        rules.iter().map(|r| r.head.clone()),
        &rule_dependencies(rules),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_shapes;

    fn strat(text: &str) -> Result<Stratification, StrataError> {
        stratify_constraints(&parse_shapes(text).unwrap())
    }

    #[test]
    fn negation_lifts_the_head_one_stratum() {
        let s = strat("$sC <- C\n$s1 <- some [p].$sC\n$s2 <- some [p].!$sC\n$s <- $s1 & $s2\n")
            .unwrap();
        assert_eq!(s.level(&"sC".into()), 0);
        assert_eq!(s.level(&"s1".into()), 0);
        assert_eq!(s.level(&"s2".into()), 1);
        assert_eq!(s.level(&"s".into()), 1);
    }

    #[test]
    fn self_negation_is_rejected_with_its_cycle() {
        let err = strat("$s <- !$s\n").unwrap_err();
        assert_eq!(
            err,
            StrataError::NotStratified {
                cycle: vec!["s".into()]
            }
        );
        assert!(err.to_string().contains("$s -> $s"));
        let err = strat("$a <- $b\n$b <- !$a\n").unwrap_err();
        assert!(matches!(err, StrataError::NotStratified { cycle } if cycle.len() == 2));
    }

    #[test]
    fn positive_sets_have_one_stratum() {
        let s = strat("$a <- $b\n$b <- some [r].$a\n$c <- A | $a\n").unwrap();
        assert_eq!(s.stratum_count(), 1);
    }

    #[test]
    fn hand_assignments_are_checked() {
        let c = parse_shapes("$a <- A\n$b <- !$a\n").unwrap();
        let deps = constraint_dependencies(&c);
        let ok = BTreeMap::from([("a".into(), 0), ("b".into(), 2)]);
        assert!(Stratification::from_assignment(&deps, ok).is_ok());
        let bad = BTreeMap::from([("a".into(), 1), ("b".into(), 1)]);
        assert!(Stratification::from_assignment(&deps, bad).is_err());
    }
}
