//! Translation of arbitrary constraints into the six normal forms. Fresh
//! shape names share one prefix that no input name starts with.
//!
//! Path existentials run the automaton backwards from the filler; guarded
//! `eq`/`disj` run both automata forwards from the guard, mark nodes where
//! the final states disagree (or agree, for `disj`) and send an error flag
//! back along the alphabet to the guard.

use std::collections::BTreeSet;

use super::expr::{Constraint, Regex, ShapeExpr};
use super::nfa::Nfa;
use super::rules::{NormalBody, NormalConstraint};
use crate::kb::{Individual, ShapeName};

/// Picks `_n`, `__n`, ... until no given name starts with it.
pub fn fresh_prefix<'a>(names: impl IntoIterator<Item = &'a ShapeName>, stem: &str) -> String {
    let names: Vec<&ShapeName> = names.into_iter().collect();
    let mut prefix = format!("_{stem}");
    while names.iter().any(|n| n.as_str().starts_with(&prefix)) {
        prefix.insert(0, '_');
    }
    prefix
}

struct Normalizer {
    prefix: String,
    next: usize,
    out: Vec<NormalConstraint>,
}

impl Normalizer {
    fn fresh(&mut self) -> ShapeName {
        self.next += 1;
        ShapeName::new(format!("{}{}", self.prefix, self.next - 1))
    }

    fn push(&mut self, head: &ShapeName, body: NormalBody) {
        self.out.push(NormalConstraint::new(head.clone(), body));
    }

    /// A shape name whose extension is that of `e`.
    fn name(&mut self, e: &ShapeExpr) -> ShapeName {
        if let ShapeExpr::Shape(s) = e {
            return s.clone();
        }
        let n = self.fresh();
        self.emit(&n, e);
        n
    }

    fn emit(&mut self, head: &ShapeName, e: &ShapeExpr) {
        match e {
            ShapeExpr::Individual(c) => self.push(head, NormalBody::Individual(c.clone())),
            ShapeExpr::Shape(s) => self.push(head, NormalBody::Shape(s.clone())),
            ShapeExpr::NegShape(s) => self.push(head, NormalBody::Not(s.clone())),
            ShapeExpr::Top => self.push(head, NormalBody::Concept(None)),
            ShapeExpr::Concept(a) => self.push(head, NormalBody::Concept(Some(a.clone()))),
            ShapeExpr::Or(a, b) => {
                self.emit(head, a);
                self.emit(head, b);
            }
            ShapeExpr::And(a, b) => {
                let (x, y) = (self.name(a), self.name(b));
                self.push(head, NormalBody::And(x, y));
            }
            ShapeExpr::ExistsRoles(rs, body) => {
                let x = self.name(body);
                self.push(head, NormalBody::Exists(rs.clone(), x));
            }
            ShapeExpr::ExistsPath(regex, body) => self.path(head, regex, body),
            ShapeExpr::GuardedEq(c, a, b) => self.guarded(head, c, a, b, false),
            ShapeExpr::GuardedDisj(c, a, b) => self.guarded(head, c, a, b, true),
        }
    }

    fn states(&mut self, nfa: &Nfa) -> Vec<ShapeName> {
        (0..nfa.states()).map(|_| self.fresh()).collect()
    }

    fn path(&mut self, head: &ShapeName, regex: &Regex, body: &ShapeExpr) {
        let nfa = Nfa::from_regex(regex);
        let target = self.name(body);
        let s = self.states(&nfa);
        self.push(head, NormalBody::Shape(s[nfa.initial()].clone()));
        for (q, label, p) in nfa.edges() {
            match label {
                Some(r) => self.push(
                    &s[*q],
                    NormalBody::Exists(BTreeSet::from([r.clone()]), s[*p].clone()),
                ),
                None => self.push(&s[*q], NormalBody::Shape(s[*p].clone())),
            }
        }
        self.push(&s[nfa.final_state()], NormalBody::Shape(target));
    }

    fn guarded(&mut self, head: &ShapeName, c: &Individual, a: &Regex, b: &Regex, disjoint: bool) {
        let automata = [Nfa::from_regex(a), Nfa::from_regex(b)];
        let states: Vec<Vec<ShapeName>> = automata.iter().map(|m| self.states(m)).collect();
        let (pos, neg, error, no_error) = (self.fresh(), self.fresh(), self.fresh(), self.fresh());
        for (m, s) in automata.iter().zip(&states) {
            self.push(&s[m.initial()], NormalBody::Individual(c.clone()));
            for (q, label, p) in m.edges() {
                match label {
                    Some(r) => self.push(
                        &s[*p],
                        NormalBody::Exists(BTreeSet::from([r.inverse()]), s[*q].clone()),
                    ),
                    None => self.push(&s[*p], NormalBody::Shape(s[*q].clone())),
                }
            }
            let fin = s[m.final_state()].clone();
            self.push(&pos, NormalBody::Shape(fin.clone()));
            self.push(&neg, NormalBody::Not(fin));
        }
        let finals: Vec<ShapeName> = automata
            .iter()
            .zip(&states)
            .map(|(m, s)| s[m.final_state()].clone())
            .collect();
        if disjoint {
            self.push(
                &error,
                NormalBody::And(finals[0].clone(), finals[1].clone()),
            );
        } else {
            self.push(&error, NormalBody::And(pos, neg));
        }
        let alphabet: BTreeSet<_> = automata.iter().flat_map(|m| m.alphabet()).collect();
        for r in alphabet {
            self.push(
                &error,
                NormalBody::Exists(BTreeSet::from([r]), error.clone()),
            );
        }
        self.push(&no_error, NormalBody::Not(error));
        let guard = states[0][automata[0].initial()].clone();
        self.push(head, NormalBody::And(guard, no_error));
    }
}

/// Every shape name of the constraints, heads and references.
pub fn shape_names(constraints: &[Constraint]) -> BTreeSet<ShapeName> {
    constraints
        .iter()
        .flat_map(|c| {
            std::iter::once(c.head.clone()).chain(c.body.shape_refs().into_iter().map(|(s, _)| s))
        })
        .collect()
}

/// Normal-form constraints with the same perfect assignment on every
/// original shape name. Heads of the input are kept.
pub fn normalize(constraints: &[Constraint]) -> Vec<NormalConstraint> {
    let names = shape_names(constraints);
    let mut n = Normalizer {
        prefix: fresh_prefix(&names, "n"),
        next: 0,
        out: Vec::new(),
    };
    for c in constraints {
        n.emit(&c.head, &c.body);
    }
    let mut seen = BTreeSet::new();
    n.out.retain(|c| seen.insert(c.clone()));
    n.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{parse_shapes, print_constraints};

    fn norm(text: &str) -> String {
        print_constraints(&normalize(&parse_shapes(text).unwrap()))
    }

    #[test]
    fn disjunction_splits_into_two_constraints() {
        assert_eq!(norm("$s <- A | @c\n"), "$s <- A\n$s <- @c\n");
    }

    #[test]
    fn single_role_path_uses_the_two_state_automaton() {
        assert_eq!(
            norm("$s <- some <r>.$t\n"),
            "$s <- $_n0\n$_n0 <- some [r].$_n1\n$_n1 <- $t\n"
        );
    }

    #[test]
    fn nested_expressions_get_fresh_names() {
        assert_eq!(
            norm("$s <- A & some [r,^p].(B | $t)\n"),
            "$_n0 <- A\n$_n2 <- B\n$_n2 <- $t\n$_n1 <- some [^p,r].$_n2\n$s <- $_n0 & $_n1\n"
        );
    }

    #[test]
    fn fresh_prefix_avoids_existing_names() {
        let names = [ShapeName::new("_n0"), ShapeName::new("x")];
        assert_eq!(fresh_prefix(&names, "n"), "__n");
    }

    #[test]
    fn output_is_in_normal_form_only() {
        let out =
            normalize(&parse_shapes("$s <- @c & eq(r/t, p*)\n$u <- @c & disj(r, ^p)\n").unwrap());
        assert!(out.iter().any(|c| matches!(c.body, NormalBody::Not(_))));
        assert!(out.iter().any(|c| c.head == ShapeName::new("s")));
        assert!(out.iter().any(|c| c.head == ShapeName::new("u")));
    }
}
