//! Predicate plans: the AST, its text and JSON forms, and label binding.

mod ast;
mod check;
mod json;
pub(crate) mod parser;

pub use ast::{Anchor, Frame, Predicate, PredicateKind, PredicatePlan, DEFAULT_NEXT_TO_RADIUS};
pub use check::{validate_plan, validate_plan_with_context, CheckedPlan};
pub use json::{plan_from_json, plan_from_value, plan_to_json, plan_to_value, view_from_value, view_to_value, PLAN_SCHEMA};
pub use parser::{parse_plan, print_plan};
