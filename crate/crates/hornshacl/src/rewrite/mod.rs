//! Compilation of an ontology and stratified normal-form constraints into a
//! constraint set `C_T` that gives the same verdicts over the completed ABox
//! `A_T` as the original constraints give over the austere canonical model.
//!
//! A quadruple `(t, P, Q, H)` states that every node with exactly the
//! concepts `π1(t)`, satisfying everything in `P` and nothing in `Q`,
//! satisfies the shape literals `H`. Quadruples are stored per bucket
//! `(t, Q ∩ concept expressions)`, the unit within which they merge, and
//! each bucket keeps one `H` per `(P ∩ shape expressions, Q ∩ shape
//! expressions)`: the union of all derivable ones, which is derivable by
//! merging.

pub mod pure;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::kb::{
    Concept, ConceptId, ConceptSet, Individual, OneHalfType, RoleSet, ShapeName, Signature, TwoType,
};
use crate::model::succ_config;
use crate::shacl::{
    stratify_normal, Atom, Literal, NormalBody, NormalConstraint, Rule, StrataError, Stratification,
};
use crate::tbox::SaturatedTBox;

/// Above this many concepts the eager enumeration of root types is refused.
pub const MAX_EAGER_CONCEPTS: usize = 16;
/// Implied existentials per concept set are kept in a 64-bit mask.
pub const MAX_EXISTENTIALS: usize = 64;

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum RewriteError {
    #[error(transparent)]
    NotStratified(#[from] StrataError),
    #[error("`{0}` is not in the signature of the saturated TBox")]
    UnknownSymbol(String),
    #[error("`${0}` uses an existential without roles, which has no local rewriting")]
    EmptyRoleSet(ShapeName),
    #[error(
        "{count} concepts are too many to enumerate every root type (limit {MAX_EAGER_CONCEPTS})"
    )]
    TooManyConcepts { count: usize },
    #[error(
        "{count} implied existentials for one concept set exceed the limit of {MAX_EXISTENTIALS}"
    )]
    TooManyExistentials { count: usize },
}

/// Which concept sets named nodes may carry.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RootTypes {
    /// Every closed consistent subset of the concepts of `T` and `C`; the
    /// result is then independent of the data.
    All,
    /// Only these sets, intersected with the concepts of `T` and `C`;
    /// enough for ABoxes whose completed 1-types are among them.
    Only(Vec<ConceptSet>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RewriteOptions {
    pub roots: RootTypes,
    /// Keep every stratum's quadruples in readable form.
    pub keep_quadruples: bool,
}

impl Default for RewriteOptions {
    fn default() -> Self {
        RewriteOptions {
            roots: RootTypes::All,
            keep_quadruples: false,
        }
    }
}

/// `(t, P, Q, H)` in readable form. `P` and `Q` hold individual and
/// existential atoms; `H` holds shape literals.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Quadruple {
    pub t: TwoType,
    pub p: BTreeSet<Atom>,
    pub q: BTreeSet<Atom>,
    pub h: BTreeSet<Literal>,
}

impl Quadruple {
    pub fn show(&self, sig: &Signature) -> String {
        let set = |xs: Vec<String>| format!("{{{}}}", xs.join(", "));
        format!(
            "({}, {}, {}, {})",
            self.t.show(sig),
            set(self.p.iter().map(|a| a.to_string()).collect()),
            set(self.q.iter().map(|a| a.to_string()).collect()),
            set(self.h.iter().map(|l| l.to_string()).collect()),
        )
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct RewriteStats {
    pub types: usize,
    pub quadruples: usize,
    pub emitted: usize,
}

#[derive(Clone, Debug)]
pub struct Rewriting {
    /// `C_T`: the input constraints followed by the emitted ones.
    pub rules: Vec<Rule>,
    pub emitted: Vec<Rule>,
    pub stratification: Stratification,
    /// `K_0, …, K_n` when requested.
    pub quadruples: Vec<Vec<Quadruple>>,
    pub stats: RewriteStats,
}

// ---------------------------------------------------------------------------
// Compiled constraints

/// A basic shape expression other than `⊤`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Basic {
    Individual(Individual),
    Exists(RoleSet, usize),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Body {
    Top,
    Concept(ConceptId),
    Basic(usize),
    Shape(usize),
    And(usize, usize),
    Not(usize),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Compiled {
    head: usize,
    body: Body,
    level: usize,
}

struct Program {
    shapes: Vec<ShapeName>,
    basics: Vec<Basic>,
    constraints: Vec<Compiled>,
    /// Basics that are individuals.
    individuals: FixedBitSet,
    universe: ConceptSet,
    strata: usize,
}

impl Program {
    fn compile(
        sat: &SaturatedTBox,
        constraints: &[NormalConstraint],
        strat: &Stratification,
    ) -> Result<Program, RewriteError> {
        let sig = sat.signature();
        let mut shapes: BTreeSet<ShapeName> = BTreeSet::new();
        for c in constraints {
            shapes.insert(c.head.clone());
            shapes.extend(c.shape_refs().into_iter().map(|(s, _)| s.clone()));
        }
        let shapes: Vec<ShapeName> = shapes.into_iter().collect();
        let shape_id = |s: &ShapeName| shapes.binary_search(s).expect("collected above");
        let concept_id = |a: &Concept| {
            sig.concept_id(a)
                .ok_or_else(|| RewriteError::UnknownSymbol(a.to_string()))
        };

        let mut basics: Vec<Basic> = Vec::new();
        let mut basic_id = |b: Basic| match basics.iter().position(|x| *x == b) {
            Some(i) => i,
            None => {
                basics.push(b);
                basics.len() - 1
            }
        };
        let mut universe =
            sig.concept_set(&sat.source().concepts().into_iter().collect::<Vec<_>>());
        let mut compiled = Vec::new();
        for c in constraints {
            let body = match &c.body {
                NormalBody::Individual(a) => Body::Basic(basic_id(Basic::Individual(a.clone()))),
                NormalBody::Shape(s) => Body::Shape(shape_id(s)),
                NormalBody::Concept(None) => Body::Top,
                NormalBody::Concept(Some(a)) => {
                    let id = concept_id(a)?;
                    universe.insert(id);
                    Body::Concept(id)
                }
                NormalBody::And(a, b) => Body::And(shape_id(a), shape_id(b)),
                NormalBody::Exists(roles, s) => {
                    if roles.is_empty() {
                        return Err(RewriteError::EmptyRoleSet(c.head.clone()));
                    }
                    let mut set = RoleSet::EMPTY;
                    for r in roles {
                        set.insert(
                            sig.role_id(r)
                                .ok_or_else(|| RewriteError::UnknownSymbol(r.to_string()))?,
                        );
                    }
                    Body::Basic(basic_id(Basic::Exists(set, shape_id(s))))
                }
                NormalBody::Not(s) => Body::Not(shape_id(s)),
            };
            compiled.push(Compiled {
                head: shape_id(&c.head),
                body,
                level: strat.level(&c.head),
            });
        }
        let mut individuals = FixedBitSet::with_capacity(basics.len());
        for (i, b) in basics.iter().enumerate() {
            individuals.set(i, matches!(b, Basic::Individual(_)));
        }
        Ok(Program {
            shapes,
            basics,
            constraints: compiled,
            individuals,
            universe,
            strata: strat.stratum_count(),
        })
    }

    fn stratum(&self, level: usize) -> impl Iterator<Item = &Compiled> {
        self.constraints.iter().filter(move |c| c.level == level)
    }

    fn up_to(&self, level: usize) -> impl Iterator<Item = &Compiled> {
        self.constraints.iter().filter(move |c| c.level <= level)
    }

    fn shape_bits(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.shapes.len())
    }

    fn basic_bits(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.basics.len())
    }
}

// ---------------------------------------------------------------------------
// Types

struct TypeInfo {
    t: TwoType,
    /// `E(π1(t))`: the maximal implied existentials of the concepts.
    exps: Vec<OneHalfType>,
    /// Indices into `exps` forming `succ_T({t})`.
    succ: u64,
    /// `π2(t) = ∅`: the type of a node seen without a parent edge.
    root: bool,
    /// For each index in `succ`, the type of the child as seen from the
    /// child: `inv((π1(t), R_j, N_j))`.
    child: BTreeMap<usize, usize>,
}

struct Types {
    infos: Vec<TypeInfo>,
    index: BTreeMap<TwoType, usize>,
}

impl Types {
    fn build(sat: &SaturatedTBox, roots: &[ConceptSet]) -> Result<Types, RewriteError> {
        let mut types = Types {
            infos: Vec::new(),
            index: BTreeMap::new(),
        };
        let mut todo: Vec<usize> = Vec::new();
        for &m in roots {
            if let Some(i) = types.intern(sat, TwoType::bare(m))? {
                todo.push(i);
            }
        }
        while let Some(i) = todo.pop() {
            let (c1, exps, succ) = {
                let info = &types.infos[i];
                (info.t.c1, info.exps.clone(), info.succ)
            };
            for (j, e) in exps.iter().enumerate() {
                if succ >> j & 1 == 0 {
                    continue;
                }
                let child = TwoType::new(c1, e.roles, e.concepts).inverse();
                let known = types.index.get(&child).copied();
                let id = match known {
                    Some(id) => id,
                    None => match types.intern(sat, child)? {
                        Some(id) => {
                            todo.push(id);
                            id
                        }
                        None => continue,
                    },
                };
                types.infos[i].child.insert(j, id);
            }
        }
        Ok(types)
    }

    /// Adds a locally consistent type; `None` for inconsistent ones.
    fn intern(&mut self, sat: &SaturatedTBox, t: TwoType) -> Result<Option<usize>, RewriteError> {
        if let Some(&i) = self.index.get(&t) {
            return Ok(Some(i));
        }
        if !sat.is_locally_consistent(&t) {
            return Ok(None);
        }
        let exps = sat.implied_existentials(t.c1);
        if exps.len() > MAX_EXISTENTIALS {
            return Err(RewriteError::TooManyExistentials { count: exps.len() });
        }
        let root = t.roles.is_empty();
        let succ_set: BTreeSet<OneHalfType> = if root {
            exps.iter().copied().collect()
        } else {
            succ_config(sat, &[t]).into_iter().collect()
        };
        let succ = exps
            .iter()
            .enumerate()
            .filter(|(_, e)| succ_set.contains(e))
            .fold(0u64, |m, (j, _)| m | 1 << j);
        self.infos.push(TypeInfo {
            t,
            exps,
            succ,
            root,
            child: BTreeMap::new(),
        });
        self.index.insert(t, self.infos.len() - 1);
        Ok(Some(self.infos.len() - 1))
    }
}

/// Every closed consistent subset of `universe`.
fn closed_subsets(
    sat: &SaturatedTBox,
    universe: ConceptSet,
) -> Result<Vec<ConceptSet>, RewriteError> {
    let ids: Vec<ConceptId> = universe.iter().collect();
    if ids.len() > MAX_EAGER_CONCEPTS {
        return Err(RewriteError::TooManyConcepts { count: ids.len() });
    }
    let mut out = Vec::new();
    for mask in 0u32..1 << ids.len() {
        let m: ConceptSet = ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &c)| c)
            .collect();
        if sat.closure(m) == Some(m) {
            out.push(m);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Quadruple store

#[derive(Clone, PartialEq, Eq, Debug)]
struct Lits {
    pos: FixedBitSet,
    neg: FixedBitSet,
}

impl Lits {
    fn union_with(&mut self, other: &Lits) -> bool {
        let grows = !other.pos.is_subset(&self.pos) || !other.neg.is_subset(&self.neg);
        self.pos.union_with(&other.pos);
        self.neg.union_with(&other.neg);
        grows
    }

    fn is_consistent(&self) -> bool {
        self.pos.is_disjoint(&self.neg)
    }
}

/// `(P ∩ shape expressions, Q ∩ shape expressions)`.
type Assumptions = (FixedBitSet, FixedBitSet);
/// `(type, Q ∩ concept expressions as a mask over the type's existentials)`.
type BucketKey = (usize, u64);
type Store = BTreeMap<BucketKey, BTreeMap<Assumptions, Lits>>;

fn subsumes(small: &Assumptions, big: &Assumptions) -> bool {
    small.0.is_subset(&big.0) && small.1.is_subset(&big.1)
}

fn union(a: &Assumptions, b: &Assumptions) -> Assumptions {
    let mut p = a.0.clone();
    p.union_with(&b.0);
    let mut q = a.1.clone();
    q.union_with(&b.1);
    (p, q)
}

/// Inserts or merges one quadruple; contradictory ones describe no node
/// and are dropped. Returns whether the store grew.
fn add(bucket: &mut BTreeMap<Assumptions, Lits>, key: Assumptions, lits: Lits) -> bool {
    if !key.0.is_disjoint(&key.1) || !lits.is_consistent() {
        return false;
    }
    match bucket.get_mut(&key) {
        Some(have) => {
            let grows = have.union_with(&lits);
            if !have.is_consistent() {
                bucket.remove(&key);
            }
            grows
        }
        None => {
            bucket.insert(key, lits);
            true
        }
    }
}

struct Engine<'a> {
    sig: &'a Signature,
    program: Program,
    types: Types,
}

impl Engine<'_> {
    /// Rule 1: fresh quadruples with every admissible concept part of `Q`.
    fn seed(&self) -> Store {
        let mut store = Store::new();
        let empty = || Lits {
            pos: self.program.shape_bits(),
            neg: self.program.shape_bits(),
        };
        let none = (self.program.basic_bits(), self.program.basic_bits());
        for (i, info) in self.types.infos.iter().enumerate() {
            let qcs: Vec<u64> = if info.root {
                let full = if info.exps.len() == 64 {
                    u64::MAX
                } else {
                    (1u64 << info.exps.len()) - 1
                };
                submasks(full)
            } else {
                vec![info.succ]
            };
            for qc in qcs {
                store
                    .entry((i, qc))
                    .or_default()
                    .insert(none.clone(), empty());
            }
        }
        store
    }

    /// Whether rule 3 may assume `∃R.s′` at a node of this quadruple.
    fn may_assume(&self, ty: usize, qc: u64, roles: RoleSet) -> bool {
        let info = &self.types.infos[ty];
        info.root
            || roles.is_subset(info.t.roles)
            || info
                .exps
                .iter()
                .enumerate()
                .any(|(j, e)| qc >> j & 1 == 0 && roles.is_subset(e.roles))
    }

    /// Rules 3 (for `⊤`, concepts and assumptions already made), 4, 5 and
    /// 7 until nothing changes.
    fn close_locally(&self, level: usize, ty: usize, key: &Assumptions, lits: &mut Lits) -> bool {
        let c1 = self.types.infos[ty].t.c1;
        let mut grew = false;
        loop {
            let mut changed = false;
            for c in self.program.stratum(level) {
                if lits.pos.contains(c.head) {
                    continue;
                }
                let fires = match c.body {
                    Body::Top => true,
                    Body::Concept(a) => c1.contains(a),
                    Body::Basic(b) => key.0.contains(b),
                    Body::Shape(s) => lits.pos.contains(s),
                    Body::And(a, b) => lits.pos.contains(a) && lits.pos.contains(b),
                    Body::Not(s) => lits.neg.contains(s),
                };
                if fires {
                    lits.pos.insert(c.head);
                    changed = true;
                }
            }
            if !changed {
                return grew;
            }
            grew = true;
        }
    }

    /// Rule 6′: whether a child quadruple supports `s′` under the parent
    /// quadruple `(ty, qc, key, lits)` through the child at index `j`.
    fn child_supports(
        &self,
        store: &Store,
        parent: (usize, &Assumptions, &Lits),
        j: usize,
        child_ty: usize,
        target: usize,
    ) -> bool {
        let (ty, key, lits) = parent;
        let child = &self.types.infos[child_ty];
        let down = self.types.infos[ty].exps[j].roles;
        let Some(bucket) = store.get(&(child_ty, child.succ)) else {
            return false;
        };
        bucket.iter().any(|(ckey, clits)| {
            if !clits.pos.contains(target) || !ckey.0.is_disjoint(&self.program.individuals) {
                return false;
            }
            // Assumptions of the child about its parent must hold there.
            let requires = ckey.0.ones().all(|b| match &self.program.basics[b] {
                Basic::Exists(_, s) => lits.pos.contains(*s),
                Basic::Individual(_) => false,
            });
            let excludes = ckey.1.ones().all(|b| match &self.program.basics[b] {
                Basic::Exists(r, s) if r.is_subset(child.t.roles) => lits.neg.contains(*s),
                _ => true,
            });
            // And the parent's exclusions must hold at the child.
            let consistent = key.1.ones().all(|b| match &self.program.basics[b] {
                Basic::Exists(r, s) if r.is_subset(down) => clits.neg.contains(*s),
                _ => true,
            });
            requires && excludes && consistent
        })
    }

    /// `sat_{C_level}`: closure under rules 2, 3, 4, 5, 6′ and 7.
    fn saturate(&self, store: &mut Store, level: usize) {
        let existentials: Vec<(usize, RoleSet, usize)> = self
            .program
            .stratum(level)
            .filter_map(|c| match c.body {
                Body::Basic(b) => match self.program.basics[b] {
                    Basic::Exists(r, s) => Some((c.head, r, s)),
                    Basic::Individual(_) => None,
                },
                _ => None,
            })
            .collect();
        loop {
            let mut changed = false;

            // Local rules in place.
            for (&(ty, _), bucket) in store.iter_mut() {
                for (key, lits) in bucket.iter_mut() {
                    changed |= self.close_locally(level, ty, key, lits);
                }
            }
            let mut dead: Vec<(BucketKey, Assumptions)> = Vec::new();
            for (&bk, bucket) in store.iter() {
                for (key, lits) in bucket {
                    if !lits.is_consistent() {
                        dead.push((bk, key.clone()));
                    }
                }
            }
            for (bk, key) in dead {
                store.get_mut(&bk).expect("present").remove(&key);
            }

            // Rule 6′ against the current store.
            let mut derived: Vec<(BucketKey, Assumptions, usize)> = Vec::new();
            for (&(ty, qc), bucket) in store.iter() {
                let info = &self.types.infos[ty];
                for (key, lits) in bucket {
                    for &(head, roles, s) in &existentials {
                        if lits.pos.contains(head) {
                            continue;
                        }
                        let supported = info.child.iter().any(|(&j, &child_ty)| {
                            qc >> j & 1 == 1
                                && roles.is_subset(info.exps[j].roles)
                                && self.child_supports(store, (ty, key, lits), j, child_ty, s)
                        });
                        if supported {
                            derived.push(((ty, qc), key.clone(), head));
                        }
                    }
                }
            }
            for (bk, key, head) in derived {
                let lits = store
                    .get_mut(&bk)
                    .and_then(|b| b.get_mut(&key))
                    .expect("present");
                changed |= !lits.pos.put(head);
            }

            // Rule 3 for individuals and existentials: new assumptions.
            for (&(ty, qc), bucket) in store.iter_mut() {
                let mut fresh: Vec<(Assumptions, Lits)> = Vec::new();
                for (key, lits) in bucket.iter() {
                    for c in self.program.stratum(level) {
                        let Body::Basic(b) = c.body else { continue };
                        if key.0.contains(b) || key.1.contains(b) {
                            continue;
                        }
                        let allowed = match self.program.basics[b] {
                            Basic::Individual(_) => true,
                            Basic::Exists(r, _) => self.may_assume(ty, qc, r),
                        };
                        if allowed {
                            let mut p = key.0.clone();
                            p.insert(b);
                            let mut l = lits.clone();
                            l.pos.insert(c.head);
                            fresh.push(((p, key.1.clone()), l));
                        }
                    }
                }
                for (key, lits) in fresh {
                    changed |= add(bucket, key, lits);
                }
            }

            // Rule 2: close every bucket under unions, and make `H` grow
            // with the assumptions.
            for bucket in store.values_mut() {
                changed |= close_under_union(bucket);
            }

            if !changed {
                return;
            }
        }
    }

    /// `comp_{C_{≤level}}`: negative literals for every shape of the lower
    /// strata that is not derived, and the bodies of the constraints that
    /// did not fire as exclusions.
    fn complete(&self, store: Store, level: usize) -> Store {
        let mut occurs = self.program.shape_bits();
        for c in self.program.up_to(level) {
            occurs.insert(c.head);
            match c.body {
                Body::Shape(s) | Body::Not(s) => occurs.insert(s),
                Body::And(a, b) => {
                    occurs.insert(a);
                    occurs.insert(b);
                }
                Body::Basic(b) => {
                    if let Basic::Exists(_, s) = self.program.basics[b] {
                        occurs.insert(s);
                    }
                }
                Body::Top | Body::Concept(_) => {}
            }
        }
        let mut out = Store::new();
        for (bk, bucket) in store {
            let target = out.entry(bk).or_default();
            for ((p, q), mut lits) in bucket {
                let mut q = q;
                for c in self.program.up_to(level) {
                    if let Body::Basic(b) = c.body {
                        if !lits.pos.contains(c.head) {
                            q.insert(b);
                        }
                    }
                }
                let mut missing = occurs.clone();
                missing.difference_with(&lits.pos);
                lits.neg.union_with(&missing);
                add(target, (p, q), lits);
            }
        }
        out
    }

    /// Constraint (1) for every quadruple and every head of the stratum,
    /// skipping quadruples whose head already follows from a quadruple
    /// with fewer assumptions in the same bucket.
    fn emit(&self, store: &Store, level: usize, out: &mut BTreeSet<Rule>) {
        let heads: BTreeSet<usize> = self.program.stratum(level).map(|c| c.head).collect();
        for (&(ty, qc), bucket) in store {
            for (key, lits) in bucket {
                for s in lits.pos.ones().filter(|s| heads.contains(s)) {
                    let weaker = bucket
                        .iter()
                        .any(|(k, l)| k != key && subsumes(k, key) && l.pos.contains(s));
                    if weaker {
                        continue;
                    }
                    let rule = Rule::new(self.program.shapes[s].clone(), self.body(ty, qc, key))
                        .canonical();
                    if !rule.is_vacuous() {
                        out.insert(rule);
                    }
                }
            }
        }
    }

    fn body(&self, ty: usize, qc: u64, key: &Assumptions) -> Vec<Literal> {
        let info = &self.types.infos[ty];
        let mut body = Vec::new();
        for a in self.program.universe.iter() {
            let atom = Atom::Concept(self.sig.concept(a).clone());
            body.push(if info.t.c1.contains(a) {
                Literal::pos(atom)
            } else {
                Literal::neg(atom)
            });
        }
        for (j, e) in info.exps.iter().enumerate() {
            let atom = Atom::exists_concepts(
                self.sig.roles_of(e.roles),
                self.sig.concept_names(e.concepts),
            );
            body.push(if qc >> j & 1 == 1 {
                Literal::neg(atom)
            } else {
                Literal::pos(atom)
            });
        }
        for b in key.0.ones() {
            body.push(Literal::pos(self.basic_atom(b)));
        }
        for b in key.1.ones() {
            body.push(Literal::neg(self.basic_atom(b)));
        }
        body
    }

    fn basic_atom(&self, b: usize) -> Atom {
        match &self.program.basics[b] {
            Basic::Individual(c) => Atom::Individual(c.clone()),
            Basic::Exists(r, s) => {
                Atom::exists_shape(self.sig.roles_of(*r), self.program.shapes[*s].clone())
            }
        }
    }

    fn readable(&self, store: &Store) -> Vec<Quadruple> {
        let mut out = Vec::new();
        for (&(ty, qc), bucket) in store {
            let info = &self.types.infos[ty];
            for (key, lits) in bucket {
                let (mut p, mut q) = (BTreeSet::new(), BTreeSet::new());
                for (j, e) in info.exps.iter().enumerate() {
                    let atom = Atom::exists_concepts(
                        self.sig.roles_of(e.roles),
                        self.sig.concept_names(e.concepts),
                    );
                    if qc >> j & 1 == 1 {
                        q.insert(atom);
                    } else {
                        p.insert(atom);
                    }
                }
                p.extend(key.0.ones().map(|b| self.basic_atom(b)));
                q.extend(key.1.ones().map(|b| self.basic_atom(b)));
                let shape = |s: usize| Atom::Shape(self.program.shapes[s].clone());
                let h = lits
                    .pos
                    .ones()
                    .map(|s| Literal::pos(shape(s)))
                    .chain(lits.neg.ones().map(|s| Literal::neg(shape(s))));
                out.push(Quadruple {
                    t: info.t,
                    p,
                    q,
                    h: h.collect(),
                });
            }
        }
        out.sort();
        out
    }
}

fn submasks(full: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut m = full;
    loop {
        out.push(m);
        if m == 0 {
            break;
        }
        m = (m - 1) & full;
    }
    out.reverse();
    out
}

/// Rule 2 on one bucket: adds the union of every pair of quadruples until
/// none is new, then lets every quadruple inherit the literals of those
/// with fewer assumptions.
fn close_under_union(bucket: &mut BTreeMap<Assumptions, Lits>) -> bool {
    let mut changed = false;
    loop {
        let keys: Vec<Assumptions> = bucket.keys().cloned().collect();
        let mut fresh: BTreeMap<Assumptions, Lits> = BTreeMap::new();
        for (i, a) in keys.iter().enumerate() {
            for b in &keys[i + 1..] {
                let u = union(a, b);
                if !u.0.is_disjoint(&u.1) || bucket.contains_key(&u) {
                    continue;
                }
                let mut lits = bucket[a].clone();
                lits.union_with(&bucket[b]);
                match fresh.get_mut(&u) {
                    Some(l) => {
                        l.union_with(&lits);
                    }
                    None => {
                        fresh.insert(u, lits);
                    }
                }
            }
        }
        let mut grew = false;
        for (k, l) in fresh {
            grew |= add(bucket, k, l);
        }
        changed |= grew;
        if !grew {
            break;
        }
    }
    let keys: Vec<Assumptions> = bucket.keys().cloned().collect();
    let mut updates: Vec<(Assumptions, Lits)> = Vec::new();
    for k in &keys {
        let mut lits = bucket[k].clone();
        let mut grew = false;
        for k2 in &keys {
            if k2 != k && subsumes(k2, k) {
                grew |= lits.union_with(&bucket[k2]);
            }
        }
        if grew {
            updates.push((k.clone(), lits));
        }
    }
    for (k, l) in updates {
        changed = true;
        if l.is_consistent() {
            bucket.insert(k, l);
        } else {
            bucket.remove(&k);
        }
    }
    changed
}

/// `C_T` for the normal-form constraints: `K_0 = psat(C_0)`, then
/// `K_i = sat(C_i, comp(C_{≤i-1}, K_{i-1}))`. Each `K_i` contributes the
/// emitted constraints for the heads of stratum `i`, which keeps `C_T`
/// stratified with every emitted constraint in its head's stratum.
pub fn rewrite(
    sat: &SaturatedTBox,
    constraints: &[NormalConstraint],
    options: &RewriteOptions,
) -> Result<Rewriting, RewriteError> {
    let strat = stratify_normal(constraints)?;
    let program = Program::compile(sat, constraints, &strat)?;
    let roots = match &options.roots {
        RootTypes::All => closed_subsets(sat, program.universe)?,
        RootTypes::Only(sets) => {
            let set: BTreeSet<ConceptSet> = sets
                .iter()
                .map(|m| m.intersection(program.universe))
                .collect();
            set.into_iter().collect()
        }
    };
    let types = Types::build(sat, &roots)?;
    let engine = Engine {
        sig: sat.signature(),
        program,
        types,
    };

    let mut emitted = BTreeSet::new();
    let mut kept = Vec::new();
    let mut quadruples = 0;
    let mut store = engine.seed();
    for level in 0..engine.program.strata {
        if level > 0 {
            store = engine.complete(store, level - 1);
        }
        engine.saturate(&mut store, level);
        engine.emit(&store, level, &mut emitted);
        quadruples += store.values().map(BTreeMap::len).sum::<usize>();
        if options.keep_quadruples {
            kept.push(engine.readable(&store));
        }
    }

    let emitted: Vec<Rule> = emitted.into_iter().collect();
    let mut rules: Vec<Rule> = constraints.iter().map(NormalConstraint::to_rule).collect();
    rules.extend(emitted.iter().cloned());
    let stratification = crate::shacl::stratify_rules(&rules)?;
    let stats = RewriteStats {
        types: engine.types.infos.len(),
        quadruples,
        emitted: emitted.len(),
    };
    Ok(Rewriting {
        rules,
        emitted,
        stratification,
        quadruples: kept,
        stats,
    })
}

impl fmt::Display for Rewriting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{parse_abox, parse_shapes, parse_targets, parse_tbox};
    use crate::model::complete_abox;
    use crate::shacl::{normalize, validate};
    use crate::tbox::saturate_with;

    struct Case {
        sat: SaturatedTBox,
        rewriting: Rewriting,
    }

    fn rewrite_text(tbox: &str, shapes: &str) -> Case {
        let tbox = parse_tbox(tbox).unwrap();
        let constraints = normalize(&parse_shapes(shapes).unwrap());
        let concepts: Vec<Concept> = constraints
            .iter()
            .flat_map(|c| c.to_constraint().body.concepts())
            .collect();
        let roles: Vec<_> = constraints
            .iter()
            .flat_map(|c| c.to_constraint().body.roles())
            .map(|r| r.name)
            .collect();
        let sat = saturate_with(&tbox, concepts, roles).unwrap();
        let options = RewriteOptions {
            keep_quadruples: true,
            ..RewriteOptions::default()
        };
        let rewriting = rewrite(&sat, &constraints, &options).unwrap();
        Case { sat, rewriting }
    }

    fn body_of(r: &Rule) -> BTreeSet<String> {
        r.body.iter().map(|l| l.to_string()).collect()
    }

    fn emits(case: &Case, head: &str, body: &[&str]) -> bool {
        let want: BTreeSet<String> = body.iter().map(|s| s.to_string()).collect();
        case.rewriting
            .emitted
            .iter()
            .any(|r| r.head.as_str() == head && body_of(r) == want)
    }

    fn valid_over_completion(case: &Case, abox: &str, targets: &str) -> Vec<bool> {
        let completed = complete_abox(&case.sat, &parse_abox(abox).unwrap()).unwrap();
        let interp = completed.to_interpretation(&case.sat);
        let targets = parse_targets(targets).unwrap();
        let verdicts = validate(
            &interp,
            &case.rewriting.rules,
            &case.rewriting.stratification,
            &targets,
        )
        .unwrap();
        verdicts.into_iter().map(|v| v.valid).collect()
    }

    /// Some quadruple of the stratum shows as `(t, P, Q, H')` with `H ⊆ H'`.
    fn has_quadruple(case: &Case, stratum: usize, tpq: &str, h: &[&str]) -> bool {
        let sig = case.sat.signature();
        case.rewriting.quadruples[stratum].iter().any(|q| {
            let shown: BTreeSet<String> = q.h.iter().map(|l| l.to_string()).collect();
            q.show(sig).starts_with(&format!("{tpq}, {{")) && h.iter().all(|l| shown.contains(*l))
        })
    }

    const POSITIVE_TBOX: &str = "A <= some p.B\nB <= some q.C\n";
    const POSITIVE_SHAPES: &str = "$s <- some [p].$s\n$s <- some [q].$s\n$s <- $s1 & $s2\n\
        $s1 <- some [^p].$s1\n$s1 <- some [^q].$s1\n$s1 <- A\n$s2 <- C\n";

    #[test]
    fn positive_example_derives_the_root_quadruple() {
        let case = rewrite_text(POSITIVE_TBOX, POSITIVE_SHAPES);
        assert!(has_quadruple(
            &case,
            0,
            "(({A},{},{}), {}, {some [p].B}",
            &["$s", "$s1"]
        ));
    }

    #[test]
    fn positive_example_emits_the_expected_constraint() {
        let case = rewrite_text(POSITIVE_TBOX, POSITIVE_SHAPES);
        assert!(emits(&case, "s", &["A", "!B", "!C", "!some [p].B"]));
        assert_eq!(
            valid_over_completion(&case, "A(a)\np(a,b)\n", "$s(@a)\n"),
            vec![true]
        );
    }

    const NEGATIVE_TBOX: &str = "A <= some p.B\n";
    const NEGATIVE_SHAPES: &str =
        "$sC <- C\n$s1 <- some [p].$sC\n$s2 <- some [p].!$sC\n$s <- $s1 & $s2\n";

    #[test]
    fn negative_example_completes_the_lower_stratum() {
        let case = rewrite_text(NEGATIVE_TBOX, NEGATIVE_SHAPES);
        assert!(has_quadruple(
            &case,
            1,
            "(({A},{},{}), {}, {some [p].$sC, some [p].B}",
            &["!$s1", "!$sC"]
        ));
        assert!(has_quadruple(
            &case,
            1,
            "(({B},{^p},{A}), {}, {some [p].$sC}",
            &["!$s1", "!$sC"]
        ));
    }

    #[test]
    fn negative_example_fires_the_negated_existential_at_the_root() {
        let case = rewrite_text(NEGATIVE_TBOX, NEGATIVE_SHAPES);
        assert!(has_quadruple(
            &case,
            1,
            "(({A},{},{}), {some [p].$sC}, {some [p].B}",
            &["$s1", "!$sC", "$s2", "$s"]
        ));
    }

    #[test]
    fn negative_example_emits_the_expected_constraint() {
        let case = rewrite_text(NEGATIVE_TBOX, NEGATIVE_SHAPES);
        assert!(emits(
            &case,
            "s",
            &["A", "!B", "!C", "some [p].$sC", "!some [p].B"]
        ));
        assert_eq!(
            valid_over_completion(&case, "A(a)\np(a,b)\nC(b)\n", "$s(@a)\n"),
            vec![true]
        );
    }

    #[test]
    fn empty_constraint_set_emits_nothing() {
        let case = rewrite_text(POSITIVE_TBOX, "");
        assert!(case.rewriting.rules.is_empty());
        assert!(case.rewriting.quadruples[0].iter().all(|q| q.h.is_empty()));
    }

    #[test]
    fn individual_bodies_need_the_individual() {
        let case = rewrite_text("A <= some r.B\n", "$s <- @a\n$t <- some [^r].$s\n");
        assert_eq!(
            valid_over_completion(&case, "A(a)\n", "$s(@a)\n$t(@a)\n"),
            vec![true, false]
        );
    }

    #[test]
    fn lower_strata_are_not_rederived_above() {
        let case = rewrite_text(
            "A <= some p.B\nB <= C\n",
            "$u <- C\n$v <- !$u\n$w <- some [p].$v\n",
        );
        let levels = case.rewriting.stratification.levels();
        for r in &case.rewriting.emitted {
            let head = levels[&r.head];
            for (s, negated) in r.shape_refs() {
                assert!(levels[s] + usize::from(negated) <= head, "{r}");
            }
        }
    }
}
