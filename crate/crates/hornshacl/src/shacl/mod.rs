//! Shape expressions, normal forms, stratification and evaluation.

pub mod eval;
mod expr;
pub mod nfa;
pub mod normalize;
mod rules;
pub mod strata;

pub use eval::{
    perfect_assignment, validate, EvalError, ShapeAssignment, ShapeRule, TargetVerdict,
};
pub use expr::{Constraint, Regex, ShapeAtom, ShapeExpr, ShapesGraph};
pub use normalize::normalize;
pub use rules::{Atom, Literal, NormalBody, NormalConstraint, Rule};
pub use strata::{
    stratify_constraints, stratify_normal, stratify_rules, StrataError, Stratification,
};
