//! Line-oriented text formats: `.tbox`, `.abox`, `.shacl` and `.targets`.
//! Uppercase-initial names are concepts, lowercase-initial names are roles,
//! `$` marks shapes, `@` marks individuals and `^r` is the inverse of `r`.
//! Everything after `#` on a line is a comment.

mod lexer;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::kb::{
    ABox, Axiom, Concept, Filler, Head, Individual, Interpretation, Role, RoleName, ShapeName,
    Signature, TBox,
};
use crate::shacl::{Constraint, Regex, ShapeAtom, ShapeExpr};
use lexer::{lex_line, Cursor, Tok};

/// Generated shape names start with this prefix; user shapes may not.
pub const RESERVED_PREFIX: &str = "_";

const KEYWORDS: [&str; 7] = ["top", "bot", "some", "only", "max1", "eq", "disj"];

#[derive(Clone, PartialEq, Eq, Debug, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct ShapeParseOptions {
    /// Accept shape names in the reserved namespace, e.g. when re-reading a
    /// printed rewriting.
    pub allow_reserved: bool,
}

fn lines(text: &str) -> impl Iterator<Item = Result<Cursor, ParseError>> + '_ {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = i + 1;
        match lex_line(raw, line) {
            Ok(toks) if toks.is_empty() => None,
            Ok(toks) => Some(Ok(Cursor::new(toks, line, raw.chars().count() + 1))),
            Err(e) => Some(Err(e)),
        }
    })
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

fn starts_lower(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_lowercase())
}

fn concept_name(cur: &mut Cursor) -> Result<Concept, ParseError> {
    let col = cur.col();
    let name = cur.ident()?;
    if !starts_upper(&name) {
        return Err(ParseError {
            col,
            ..cur.error(format!(
                "`{name}` is not a concept name (concepts start uppercase)"
            ))
        });
    }
    Ok(Concept::new(name))
}

fn role(cur: &mut Cursor) -> Result<Role, ParseError> {
    let inverted = cur.eat(&Tok::Caret);
    let col = cur.col();
    let name = cur.ident()?;
    if !starts_lower(&name) || KEYWORDS.contains(&name.as_str()) {
        return Err(ParseError {
            col,
            ..cur.error(format!(
                "`{name}` is not a role name (roles start lowercase)"
            ))
        });
    }
    Ok(Role {
        name: RoleName::new(name),
        inverted,
    })
}

fn individual(cur: &mut Cursor) -> Result<Individual, ParseError> {
    cur.eat(&Tok::At);
    Ok(Individual::new(cur.ident()?))
}

// ---------------------------------------------------------------- TBox

pub fn parse_tbox(text: &str) -> Result<TBox, ParseError> {
    let mut tbox = TBox::new();
    for cur in lines(text) {
        let mut cur = cur?;
        let axiom = tbox_line(&mut cur)?;
        cur.finish()?;
        tbox.insert(axiom);
    }
    Ok(tbox)
}

fn is_role_start(cur: &Cursor) -> bool {
    match cur.peek() {
        Some(Tok::Caret) => true,
        Some(Tok::Ident(s)) => starts_lower(s) && !KEYWORDS.contains(&s.as_str()),
        _ => false,
    }
}

fn tbox_line(cur: &mut Cursor) -> Result<Axiom, ParseError> {
    if is_role_start(cur) {
        let sub = role(cur)?;
        cur.expect(&Tok::Sub)?;
        let sup = role(cur)?;
        return Ok(Axiom::RoleInclusion { sub, sup });
    }
    if cur.is_keyword("top") {
        return Err(cur.error("`top` may not appear on the left of an inclusion"));
    }
    let mut lhs = BTreeSet::from([concept_name(cur)?]);
    while cur.eat(&Tok::Amp) {
        lhs.insert(concept_name(cur)?);
    }
    cur.expect(&Tok::Sub)?;
    let restriction = ["some", "only", "max1"]
        .into_iter()
        .find(|kw| cur.is_keyword(kw));
    let Some(kw) = restriction else {
        let rhs = if cur.is_keyword("top") {
            cur.next();
            Head::Top
        } else if cur.is_keyword("bot") {
            cur.next();
            Head::Bottom
        } else {
            Head::Named(concept_name(cur)?)
        };
        if cur.peek() == Some(&Tok::Amp) {
            return Err(
                cur.error("not in normal form: the right-hand side must be a single concept")
            );
        }
        return Ok(Axiom::ConjInclusion { lhs, rhs });
    };
    if lhs.len() > 1 {
        return Err(cur.error(format!(
            "not in normal form: `{kw}` needs a single concept on the left"
        )));
    }
    let a = lhs.pop_first().expect("nonempty");
    cur.next();
    let r = role(cur)?;
    cur.expect(&Tok::Dot)?;
    let b = if cur.is_keyword("top") {
        cur.next();
        Filler::Top
    } else if matches!(cur.peek(), Some(Tok::Ident(_))) {
        Filler::Named(concept_name(cur)?)
    } else {
        return Err(
            cur.unexpected("not in normal form: the filler must be a concept name or `top`")
        );
    };
    if cur.peek() == Some(&Tok::Amp) {
        return Err(cur.error("not in normal form: the filler must be a single concept"));
    }
    Ok(match kw {
        "some" => Axiom::ExistsInclusion { a, r, b },
        "only" => Axiom::ValueRestriction { a, r, b },
        _ => Axiom::AtMostOne { a, r, b },
    })
}

// ---------------------------------------------------------------- ABox

pub fn parse_abox(text: &str) -> Result<ABox, ParseError> {
    let mut abox = ABox::new();
    for cur in lines(text) {
        let mut cur = cur?;
        if is_role_start(&cur) {
            let r = role(&mut cur)?;
            cur.expect(&Tok::LParen)?;
            let a = individual(&mut cur)?;
            cur.expect(&Tok::Comma)?;
            let b = individual(&mut cur)?;
            cur.expect(&Tok::RParen)?;
            abox.add_role(&r, a, b);
        } else {
            let c = concept_name(&mut cur)?;
            cur.expect(&Tok::LParen)?;
            let a = individual(&mut cur)?;
            cur.expect(&Tok::RParen)?;
            abox.add_concept(c, a);
        }
        cur.finish()?;
    }
    Ok(abox)
}

// ---------------------------------------------------------------- shapes

pub fn parse_shapes(text: &str) -> Result<Vec<Constraint>, ParseError> {
    parse_shapes_with(text, ShapeParseOptions::default())
}

/// Parses constraints. A negation in front of anything but a shape name is
/// desugared into a fresh reserved shape holding the negated expression.
pub fn parse_shapes_with(
    text: &str,
    options: ShapeParseOptions,
) -> Result<Vec<Constraint>, ParseError> {
    let mut parser = ShapeParser {
        options,
        aux: Vec::new(),
        fresh: 0,
    };
    let mut out = Vec::new();
    for cur in lines(text) {
        let mut cur = cur?;
        cur.expect(&Tok::Dollar)?;
        let head = parser.shape_name(&mut cur)?;
        cur.expect(&Tok::Arrow)?;
        let body = parser.or(&mut cur)?;
        cur.finish()?;
        out.push(Constraint { head, body });
    }
    if parser.aux.is_empty() {
        return Ok(out);
    }
    // Pick a prefix for the desugared shapes that no input name starts with.
    let mut used: BTreeSet<ShapeName> = BTreeSet::new();
    for c in &out {
        used.insert(c.head.clone());
        used.extend(c.body.shape_refs().into_iter().map(|(s, _)| s));
    }
    let mut prefix = format!("{RESERVED_PREFIX}not");
    while used.iter().any(|s| s.as_str().starts_with(&prefix)) {
        prefix.insert_str(0, RESERVED_PREFIX);
    }
    let rename = |s: &ShapeName| match s.as_str().strip_prefix(AUX_PLACEHOLDER) {
        Some(k) => ShapeName::new(format!("{prefix}{k}")),
        None => s.clone(),
    };
    out.extend(parser.aux);
    Ok(out
        .into_iter()
        .map(|c| Constraint {
            head: rename(&c.head),
            body: c.body.map_shapes(&rename),
        })
        .collect())
}

/// Temporary name of desugared shapes; never a valid identifier.
const AUX_PLACEHOLDER: &str = "?not";

struct ShapeParser {
    options: ShapeParseOptions,
    aux: Vec<Constraint>,
    fresh: usize,
}

/// An item of a conjunction before guards are attached.
enum Conjunct {
    Expr(ShapeExpr),
    Eq(Regex, Regex, usize),
    Disj(Regex, Regex, usize),
}

impl ShapeParser {
    fn shape_name(&self, cur: &mut Cursor) -> Result<ShapeName, ParseError> {
        let col = cur.col();
        let name = cur.ident()?;
        if name.starts_with(RESERVED_PREFIX) && !self.options.allow_reserved {
            return Err(ParseError {
                col,
                ..cur.error(format!(
                    "shape name `{name}` uses the reserved prefix `{RESERVED_PREFIX}`"
                ))
            });
        }
        Ok(ShapeName::new(name))
    }

    fn or(&mut self, cur: &mut Cursor) -> Result<ShapeExpr, ParseError> {
        let mut e = self.and(cur)?;
        while cur.eat(&Tok::Bar) {
            e = ShapeExpr::or(e, self.and(cur)?);
        }
        Ok(e)
    }

    fn and(&mut self, cur: &mut Cursor) -> Result<ShapeExpr, ParseError> {
        let mut items = vec![self.conjunct(cur)?];
        while cur.eat(&Tok::Amp) {
            items.push(self.conjunct(cur)?);
        }
        let guards: Vec<Individual> = items
            .iter()
            .filter_map(|i| match i {
                Conjunct::Expr(ShapeExpr::Individual(c)) => Some(c.clone()),
                _ => None,
            })
            .collect();
        let guarded = items
            .iter()
            .any(|i| matches!(i, Conjunct::Eq(..) | Conjunct::Disj(..)));
        let mut exprs = Vec::new();
        for item in items {
            let e = match item {
                Conjunct::Expr(e) => e,
                Conjunct::Eq(_, _, col) | Conjunct::Disj(_, _, col) if guards.is_empty() => {
                    return Err(ParseError::new(
                        cur.line(),
                        col,
                        "unguarded eq/disj is not supported: conjoin it with an individual, as in `@c & eq(E, E')`",
                    ));
                }
                Conjunct::Eq(a, b, _) => ShapeExpr::GuardedEq(guards[0].clone(), a, b),
                Conjunct::Disj(a, b, _) => ShapeExpr::GuardedDisj(guards[0].clone(), a, b),
            };
            exprs.push(e);
        }
        // A guard already carried by an eq/disj item of this conjunction is
        // not repeated; nested guarded items keep their own guard.
        if guarded {
            let g = &guards[0];
            let mut dropped = false;
            exprs.retain(|e| {
                if !dropped && matches!(e, ShapeExpr::Individual(c) if c == g) {
                    dropped = true;
                    return false;
                }
                true
            });
        }
        let mut it = exprs.into_iter();
        let first = it.next().expect("at least one conjunct");
        Ok(it.fold(first, ShapeExpr::and))
    }

    fn conjunct(&mut self, cur: &mut Cursor) -> Result<Conjunct, ParseError> {
        for (kw, is_eq) in [("eq", true), ("disj", false)] {
            if cur.is_keyword(kw) && cur.peek_at(1) == Some(&Tok::LParen) {
                let col = cur.col();
                cur.next();
                cur.next();
                let a = regex(cur)?;
                cur.expect(&Tok::Comma)?;
                let b = regex(cur)?;
                cur.expect(&Tok::RParen)?;
                return Ok(if is_eq {
                    Conjunct::Eq(a, b, col)
                } else {
                    Conjunct::Disj(a, b, col)
                });
            }
        }
        Ok(Conjunct::Expr(self.unary(cur)?))
    }

    fn unary(&mut self, cur: &mut Cursor) -> Result<ShapeExpr, ParseError> {
        match cur.peek() {
            Some(Tok::Bang) => {
                cur.next();
                if cur.eat(&Tok::Dollar) {
                    return Ok(ShapeExpr::NegShape(self.shape_name(cur)?));
                }
                let inner = self.unary(cur)?;
                let name = ShapeName::new(format!("{AUX_PLACEHOLDER}{}", self.fresh));
                self.fresh += 1;
                self.aux.push(Constraint {
                    head: name.clone(),
                    body: inner,
                });
                Ok(ShapeExpr::NegShape(name))
            }
            Some(Tok::Dollar) => {
                cur.next();
                Ok(ShapeExpr::Shape(self.shape_name(cur)?))
            }
            Some(Tok::At) => {
                cur.next();
                Ok(ShapeExpr::Individual(Individual::new(cur.ident()?)))
            }
            Some(Tok::LParen) => {
                cur.next();
                let e = self.or(cur)?;
                cur.expect(&Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(s)) if s == "top" => {
                cur.next();
                Ok(ShapeExpr::Top)
            }
            Some(Tok::Ident(s)) if s == "some" => {
                cur.next();
                if cur.eat(&Tok::LBracket) {
                    let mut roles = BTreeSet::from([role(cur)?]);
                    while cur.eat(&Tok::Comma) {
                        roles.insert(role(cur)?);
                    }
                    cur.expect(&Tok::RBracket)?;
                    cur.expect(&Tok::Dot)?;
                    Ok(ShapeExpr::ExistsRoles(roles, Box::new(self.unary(cur)?)))
                } else if cur.eat(&Tok::LAngle) {
                    let re = regex(cur)?;
                    cur.expect(&Tok::RAngle)?;
                    cur.expect(&Tok::Dot)?;
                    Ok(ShapeExpr::path(re, self.unary(cur)?))
                } else {
                    let r = role(cur)?;
                    cur.expect(&Tok::Dot)?;
                    Ok(ShapeExpr::exists([r], self.unary(cur)?))
                }
            }
            Some(Tok::Ident(s)) if s == "eq" || s == "disj" => Err(cur.error(format!(
                "`{s}(..)` must be a direct conjunct next to its guard, as in `@c & {s}(E, E')`"
            ))),
            Some(Tok::Ident(s)) if starts_upper(s) => Ok(ShapeExpr::Concept(concept_name(cur)?)),
            Some(Tok::Ident(s)) => Err(cur.error(format!(
                "`{s}` cannot stand alone in a shape body; did you mean `some [{s}].top`?"
            ))),
            _ => Err(cur.unexpected("expected a shape expression")),
        }
    }
}

fn regex(cur: &mut Cursor) -> Result<Regex, ParseError> {
    let mut e = regex_seq(cur)?;
    while cur.eat(&Tok::Bar) {
        e = Regex::alt(e, regex_seq(cur)?);
    }
    Ok(e)
}

fn regex_seq(cur: &mut Cursor) -> Result<Regex, ParseError> {
    let mut e = regex_post(cur)?;
    while cur.eat(&Tok::Slash) {
        e = Regex::seq(e, regex_post(cur)?);
    }
    Ok(e)
}

fn regex_post(cur: &mut Cursor) -> Result<Regex, ParseError> {
    let mut e = if cur.eat(&Tok::LParen) {
        let e = regex(cur)?;
        cur.expect(&Tok::RParen)?;
        e
    } else {
        Regex::Role(role(cur)?)
    };
    while cur.eat(&Tok::Star) {
        e = Regex::star(e);
    }
    Ok(e)
}

/// Parses a standalone regular path expression.
pub fn parse_regex(text: &str) -> Result<Regex, ParseError> {
    let mut cur = Cursor::new(lex_line(text, 1)?, 1, text.chars().count() + 1);
    let e = regex(&mut cur)?;
    cur.finish()?;
    Ok(e)
}

// ---------------------------------------------------------------- targets

pub fn parse_targets(text: &str) -> Result<BTreeSet<ShapeAtom>, ParseError> {
    let mut out = BTreeSet::new();
    for cur in lines(text) {
        let mut cur = cur?;
        cur.expect(&Tok::Dollar)?;
        let shape = ShapeName::new(cur.ident()?);
        cur.expect(&Tok::LParen)?;
        let node = individual(&mut cur)?;
        cur.expect(&Tok::RParen)?;
        cur.finish()?;
        out.insert(ShapeAtom { shape, node });
    }
    Ok(out)
}

// ---------------------------------------------------------------- printers

pub fn print_constraints<'a, T: std::fmt::Display + 'a>(
    items: impl IntoIterator<Item = &'a T>,
) -> String {
    let mut out = String::new();
    for c in items {
        writeln!(out, "{c}").expect("writing to a string");
    }
    out
}

/// `.abox`-style dump. Anonymous elements are named `_:a.k1.k2` and a
/// comment block lists the 2-type behind each index.
pub fn print_interpretation(interp: &Interpretation, sig: Option<&Signature>) -> String {
    let labels = interp.node_labels();
    let mut out = String::new();
    if let Some(sig) = sig {
        for (k, t) in interp.type_table().iter().enumerate() {
            writeln!(out, "# k{k} = {}", t.show(sig)).expect("writing to a string");
        }
    }
    if !interp.is_complete() {
        writeln!(out, "# truncated approximation").expect("writing to a string");
    }
    let mut atoms = BTreeSet::new();
    for x in interp.node_ids() {
        for c in interp.concepts_of(x) {
            atoms.insert(format!("{c}({})", labels[x.index()]));
        }
    }
    for (r, x, y) in interp.role_pairs() {
        atoms.insert(format!("{r}({},{})", labels[x.index()], labels[y.index()]));
    }
    let isolated = interp
        .node_ids()
        .filter(|&x| interp.concepts_of(x).is_empty() && interp.neighbours(x).is_empty());
    for x in isolated {
        atoms.insert(format!("# node {}", labels[x.index()]));
    }
    for a in atoms {
        writeln!(out, "{a}").expect("writing to a string");
    }
    out
}
