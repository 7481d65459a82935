//! Thompson automata for regular path expressions. Every automaton has one
//! initial and one final state; `None` labels are ε-moves.

use std::collections::BTreeSet;

use super::expr::Regex;
use crate::kb::{Interpretation, NodeId, Role};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Nfa {
    states: usize,
    initial: usize,
    final_state: usize,
    edges: Vec<(usize, Option<Role>, usize)>,
}

impl Nfa {
    pub fn from_regex(regex: &Regex) -> Nfa {
        let mut nfa = Nfa {
            states: 0,
            initial: 0,
            final_state: 0,
            edges: Vec::new(),
        };
        let (i, f) = nfa.build(regex);
        nfa.initial = i;
        nfa.final_state = f;
        nfa
    }

    fn state(&mut self) -> usize {
        self.states += 1;
        self.states - 1
    }

    fn build(&mut self, regex: &Regex) -> (usize, usize) {
        match regex {
            Regex::Role(r) => {
                let (i, f) = (self.state(), self.state());
                self.edges.push((i, Some(r.clone()), f));
                (i, f)
            }
            Regex::Seq(a, b) => {
                let (ai, af) = self.build(a);
                let (bi, bf) = self.build(b);
                self.edges.push((af, None, bi));
                (ai, bf)
            }
            Regex::Alt(a, b) => {
                let (i, f) = (self.state(), self.state());
                for part in [a, b] {
                    let (pi, pf) = self.build(part);
                    self.edges.push((i, None, pi));
                    self.edges.push((pf, None, f));
                }
                (i, f)
            }
            Regex::Star(a) => {
                let (i, f) = (self.state(), self.state());
                let (ai, af) = self.build(a);
                self.edges
                    .extend([(i, None, ai), (af, None, f), (i, None, f), (af, None, ai)]);
                (i, f)
            }
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn final_state(&self) -> usize {
        self.final_state
    }

    pub fn edges(&self) -> &[(usize, Option<Role>, usize)] {
        &self.edges
    }

    /// The letters on the non-ε edges.
    pub fn alphabet(&self) -> BTreeSet<Role> {
        self.edges
            .iter()
            .filter_map(|(_, r, _)| r.clone())
            .collect()
    }

    fn eps_closure(&self, mut set: BTreeSet<usize>) -> BTreeSet<usize> {
        let mut todo: Vec<usize> = set.iter().copied().collect();
        while let Some(q) = todo.pop() {
            for (p, label, p2) in &self.edges {
                if *p == q && label.is_none() && set.insert(*p2) {
                    todo.push(*p2);
                }
            }
        }
        set
    }

    pub fn accepts(&self, word: &[Role]) -> bool {
        let mut current = self.eps_closure(BTreeSet::from([self.initial]));
        for letter in word {
            let next: BTreeSet<usize> = self
                .edges
                .iter()
                .filter(|(p, label, _)| current.contains(p) && label.as_ref() == Some(letter))
                .map(|(_, _, q)| *q)
                .collect();
            current = self.eps_closure(next);
        }
        current.contains(&self.final_state)
    }

    /// Nodes `y` with `(x, y)` in the path relation, by product reachability.
    pub fn successors(&self, interp: &Interpretation, x: NodeId) -> BTreeSet<NodeId> {
        let mut seen: BTreeSet<(usize, NodeId)> = BTreeSet::from([(self.initial, x)]);
        let mut todo = vec![(self.initial, x)];
        while let Some((q, y)) = todo.pop() {
            for (p, label, p2) in &self.edges {
                if *p != q {
                    continue;
                }
                match label {
                    None => {
                        if seen.insert((*p2, y)) {
                            todo.push((*p2, y));
                        }
                    }
                    Some(r) => {
                        for (z, rs) in interp.neighbours(y) {
                            if rs.contains(r) && seen.insert((*p2, *z)) {
                                todo.push((*p2, *z));
                            }
                        }
                    }
                }
            }
        }
        seen.into_iter()
            .filter(|&(q, _)| q == self.final_state)
            .map(|(_, y)| y)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_regex;

    fn nfa(text: &str) -> Nfa {
        Nfa::from_regex(&parse_regex(text).unwrap())
    }

    fn word(letters: &[&str]) -> Vec<Role> {
        letters
            .iter()
            .map(|l| {
                l.strip_prefix('^')
                    .map_or_else(|| Role::new(l), Role::inverse_of)
            })
            .collect()
    }

    #[test]
    fn single_role_has_two_states() {
        let m = nfa("r");
        assert_eq!(m.states(), 2);
        assert!(m.accepts(&word(&["r"])));
        assert!(!m.accepts(&word(&[])));
        assert!(!m.accepts(&word(&["r", "r"])));
    }

    #[test]
    fn star_of_a_sequence() {
        let m = nfa("(r/t)*");
        assert!(m.accepts(&word(&[])));
        assert!(m.accepts(&word(&["r", "t"])));
        assert!(m.accepts(&word(&["r", "t", "r", "t"])));
        assert!(!m.accepts(&word(&["r"])));
        assert!(!m.accepts(&word(&["t", "r"])));
    }

    #[test]
    fn alternation_with_an_inverse() {
        let m = nfa("r|^r");
        assert!(m.accepts(&word(&["r"])));
        assert!(m.accepts(&word(&["^r"])));
        assert!(!m.accepts(&word(&["r", "^r"])));
        assert_eq!(m.alphabet().len(), 2);
    }
}
