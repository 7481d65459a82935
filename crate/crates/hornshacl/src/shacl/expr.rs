use std::collections::BTreeSet;
use std::fmt;

use crate::kb::{Concept, Individual, Role, ShapeName};

/// Regular path expression over roles and their inverses.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Regex {
    Role(Role),
    Seq(Box<Regex>, Box<Regex>),
    Alt(Box<Regex>, Box<Regex>),
    Star(Box<Regex>),
}

impl Regex {
    pub fn seq(a: Regex, b: Regex) -> Regex {
        Regex::Seq(Box::new(a), Box::new(b))
    }

    pub fn alt(a: Regex, b: Regex) -> Regex {
        Regex::Alt(Box::new(a), Box::new(b))
    }

    pub fn star(a: Regex) -> Regex {
        Regex::Star(Box::new(a))
    }

    pub fn roles(&self) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        self.collect_roles(&mut out);
        out
    }

    fn collect_roles(&self, out: &mut BTreeSet<Role>) {
        match self {
            Regex::Role(r) => {
                out.insert(r.clone());
            }
            Regex::Seq(a, b) | Regex::Alt(a, b) => {
                a.collect_roles(out);
                b.collect_roles(out);
            }
            Regex::Star(a) => a.collect_roles(out),
        }
    }

    pub fn map_roles(&self, f: &impl Fn(&Role) -> Role) -> Regex {
        match self {
            Regex::Role(r) => Regex::Role(f(r)),
            Regex::Seq(a, b) => Regex::seq(a.map_roles(f), b.map_roles(f)),
            Regex::Alt(a, b) => Regex::alt(a.map_roles(f), b.map_roles(f)),
            Regex::Star(a) => Regex::star(a.map_roles(f)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Regex::Alt(..) => 0,
            Regex::Seq(..) => 1,
            Regex::Star(..) | Regex::Role(..) => 2,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Regex::Role(r) => write!(f, "{r}"),
            Regex::Seq(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str("/")?;
                b.fmt_at(f, 2)
            }
            Regex::Alt(a, b) => {
                a.fmt_at(f, 0)?;
                f.write_str("|")?;
                b.fmt_at(f, 1)
            }
            Regex::Star(a) => {
                a.fmt_at(f, 3)?;
                f.write_str("*")
            }
        }
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// Shape expressions of the stratified fragment. Negation sits only on
/// shape references; `Top` and `Concept` together cover `A ∈ N_C ∪ {⊤}`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ShapeExpr {
    Individual(Individual),
    Shape(ShapeName),
    NegShape(ShapeName),
    Top,
    Concept(Concept),
    Or(Box<ShapeExpr>, Box<ShapeExpr>),
    And(Box<ShapeExpr>, Box<ShapeExpr>),
    /// `∃(r1 ⊓ … ⊓ rn).φ`; the role set is nonempty.
    ExistsRoles(BTreeSet<Role>, Box<ShapeExpr>),
    ExistsPath(Regex, Box<ShapeExpr>),
    /// `c ∧ EQ(E, E′)`
    GuardedEq(Individual, Regex, Regex),
    /// `c ∧ disj(E, E′)`
    GuardedDisj(Individual, Regex, Regex),
}

impl ShapeExpr {
    pub fn and(a: ShapeExpr, b: ShapeExpr) -> ShapeExpr {
        ShapeExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: ShapeExpr, b: ShapeExpr) -> ShapeExpr {
        ShapeExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(roles: impl IntoIterator<Item = Role>, body: ShapeExpr) -> ShapeExpr {
        ShapeExpr::ExistsRoles(roles.into_iter().collect(), Box::new(body))
    }

    pub fn path(regex: Regex, body: ShapeExpr) -> ShapeExpr {
        ShapeExpr::ExistsPath(regex, Box::new(body))
    }

    /// Shape names occurring in the expression, with a flag for negative
    /// occurrences.
    pub fn shape_refs(&self) -> Vec<(ShapeName, bool)> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs(&self, out: &mut Vec<(ShapeName, bool)>) {
        match self {
            ShapeExpr::Shape(s) => out.push((s.clone(), false)),
            ShapeExpr::NegShape(s) => out.push((s.clone(), true)),
            ShapeExpr::Or(a, b) | ShapeExpr::And(a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
            ShapeExpr::ExistsRoles(_, a) | ShapeExpr::ExistsPath(_, a) => a.collect_refs(out),
            _ => {}
        }
    }

    pub fn concepts(&self) -> BTreeSet<Concept> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let ShapeExpr::Concept(c) = e {
                out.insert(c.clone());
            }
        });
        out
    }

    pub fn roles(&self) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e {
            ShapeExpr::ExistsRoles(rs, _) => out.extend(rs.iter().cloned()),
            ShapeExpr::ExistsPath(re, _) => out.extend(re.roles()),
            ShapeExpr::GuardedEq(_, a, b) | ShapeExpr::GuardedDisj(_, a, b) => {
                out.extend(a.roles());
                out.extend(b.roles());
            }
            _ => {}
        });
        out
    }

    pub fn individuals(&self) -> BTreeSet<Individual> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e {
            ShapeExpr::Individual(c)
            | ShapeExpr::GuardedEq(c, ..)
            | ShapeExpr::GuardedDisj(c, ..) => {
                out.insert(c.clone());
            }
            _ => {}
        });
        out
    }

    /// Renames every shape reference.
    pub fn map_shapes(&self, f: &impl Fn(&ShapeName) -> ShapeName) -> ShapeExpr {
        match self {
            ShapeExpr::Shape(s) => ShapeExpr::Shape(f(s)),
            ShapeExpr::NegShape(s) => ShapeExpr::NegShape(f(s)),
            ShapeExpr::Or(a, b) => ShapeExpr::or(a.map_shapes(f), b.map_shapes(f)),
            ShapeExpr::And(a, b) => ShapeExpr::and(a.map_shapes(f), b.map_shapes(f)),
            ShapeExpr::ExistsRoles(rs, a) => {
                ShapeExpr::ExistsRoles(rs.clone(), Box::new(a.map_shapes(f)))
            }
            ShapeExpr::ExistsPath(re, a) => ShapeExpr::path(re.clone(), a.map_shapes(f)),
            other => other.clone(),
        }
    }

    /// Renames every role.
    pub fn map_roles(&self, f: &impl Fn(&Role) -> Role) -> ShapeExpr {
        match self {
            ShapeExpr::Or(a, b) => ShapeExpr::or(a.map_roles(f), b.map_roles(f)),
            ShapeExpr::And(a, b) => ShapeExpr::and(a.map_roles(f), b.map_roles(f)),
            ShapeExpr::ExistsRoles(rs, a) => {
                ShapeExpr::ExistsRoles(rs.iter().map(f).collect(), Box::new(a.map_roles(f)))
            }
            ShapeExpr::ExistsPath(re, a) => ShapeExpr::path(re.map_roles(f), a.map_roles(f)),
            ShapeExpr::GuardedEq(c, a, b) => {
                ShapeExpr::GuardedEq(c.clone(), a.map_roles(f), b.map_roles(f))
            }
            ShapeExpr::GuardedDisj(c, a, b) => {
                ShapeExpr::GuardedDisj(c.clone(), a.map_roles(f), b.map_roles(f))
            }
            other => other.clone(),
        }
    }

    fn visit(&self, f: &mut impl FnMut(&ShapeExpr)) {
        f(self);
        match self {
            ShapeExpr::Or(a, b) | ShapeExpr::And(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            ShapeExpr::ExistsRoles(_, a) | ShapeExpr::ExistsPath(_, a) => a.visit(f),
            _ => {}
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            ShapeExpr::Or(..) => 0,
            ShapeExpr::And(..) | ShapeExpr::GuardedEq(..) | ShapeExpr::GuardedDisj(..) => 1,
            _ => 2,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            ShapeExpr::Individual(c) => write!(f, "@{c}"),
            ShapeExpr::Shape(s) => write!(f, "${s}"),
            ShapeExpr::NegShape(s) => write!(f, "!${s}"),
            ShapeExpr::Top => f.write_str("top"),
            ShapeExpr::Concept(c) => write!(f, "{c}"),
            ShapeExpr::Or(a, b) => {
                a.fmt_at(f, 0)?;
                f.write_str(" | ")?;
                b.fmt_at(f, 1)
            }
            ShapeExpr::And(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(" & ")?;
                b.fmt_at(f, 2)
            }
            ShapeExpr::ExistsRoles(rs, body) => {
                let rs: Vec<String> = rs.iter().map(|r| r.to_string()).collect();
                write!(f, "some [{}].", rs.join(","))?;
                body.fmt_at(f, 2)
            }
            ShapeExpr::ExistsPath(re, body) => {
                write!(f, "some <{re}>.")?;
                body.fmt_at(f, 2)
            }
            ShapeExpr::GuardedEq(c, a, b) => write!(f, "@{c} & eq({a}, {b})"),
            ShapeExpr::GuardedDisj(c, a, b) => write!(f, "@{c} & disj({a}, {b})"),
        }
    }
}

impl fmt::Display for ShapeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// `s ⇐ φ`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Constraint {
    pub head: ShapeName,
    pub body: ShapeExpr,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${} <- {}", self.head, self.body)
    }
}

/// A target `s(c)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ShapeAtom {
    pub shape: ShapeName,
    pub node: Individual,
}

impl fmt::Display for ShapeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}(@{})", self.shape, self.node)
    }
}

/// Constraints (several per head allowed) plus targets.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ShapesGraph {
    pub constraints: Vec<Constraint>,
    pub targets: BTreeSet<ShapeAtom>,
}

impl ShapesGraph {
    pub fn new(constraints: Vec<Constraint>, targets: BTreeSet<ShapeAtom>) -> Self {
        ShapesGraph {
            constraints,
            targets,
        }
    }

    pub fn defined_shapes(&self) -> BTreeSet<ShapeName> {
        self.constraints.iter().map(|c| c.head.clone()).collect()
    }

    pub fn concepts(&self) -> BTreeSet<Concept> {
        self.constraints
            .iter()
            .flat_map(|c| c.body.concepts())
            .collect()
    }

    pub fn roles(&self) -> BTreeSet<Role> {
        self.constraints
            .iter()
            .flat_map(|c| c.body.roles())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regex_display_parenthesizes_by_precedence() {
        let r = || Regex::Role(Role::new("r"));
        let t = || Regex::Role(Role::new("t"));
        assert_eq!(Regex::star(Regex::seq(r(), t())).to_string(), "(r/t)*");
        assert_eq!(
            Regex::alt(r(), Regex::Role(Role::inverse_of("r"))).to_string(),
            "r|^r"
        );
        assert_eq!(Regex::seq(Regex::alt(r(), t()), r()).to_string(), "(r|t)/r");
    }

    #[test]
    fn shape_refs_flag_negative_occurrences() {
        let e = ShapeExpr::and(
            ShapeExpr::Shape("a".into()),
            ShapeExpr::exists([Role::new("p")], ShapeExpr::NegShape("b".into())),
        );
        assert_eq!(
            e.shape_refs(),
            vec![("a".into(), false), ("b".into(), true)]
        );
        assert_eq!(e.to_string(), "$a & some [p].!$b");
    }
}
