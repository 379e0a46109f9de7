//! PDDL model: parsing domain and problem files into a validated model, and
//! writing sub-instances back out as PDDL text.
//!
//! The accepted language is STRIPS with optional typing: positive conjunctive
//! preconditions and goals, add/delete effects. Anything else is rejected with
//! [`PddlError::UnsupportedFeature`]. Identifiers are case-insensitive and
//! normalized to lowercase.

mod model;
mod parse;
pub mod sexpr;
mod write;

use thiserror::Error;

pub use model::{
    ActionSchema, Atom, Domain, GoalSpec, ObjectMap, Parameter, PredicateDecl, Problem, State,
    TypeHierarchy, ROOT_TYPE,
};
pub use parse::{check_ground_atom, parse_domain, parse_problem, parse_problem_with, ParseOptions};
pub use write::{serialize_domain, serialize_problem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unsupported PDDL feature: {0}")]
    UnsupportedFeature(String),
    #[error("predicate {predicate} expects {expected} arguments, found {found}")]
    ArityMismatch { predicate: String, expected: usize, found: usize },
    #[error("unknown type {0}")]
    UnknownType(String),
    #[error("undeclared object {0}")]
    UndeclaredObject(String),
    #[error("undeclared predicate {0}")]
    UndeclaredPredicate(String),
    #[error("problem names domain {found}, expected {expected}")]
    DomainNameMismatch { expected: String, found: String },
    #[error("duplicate name {0}")]
    DuplicateName(String),
    #[error("variable {variable} is not a parameter of {schema}")]
    UnknownVariable { schema: String, variable: String },
    #[error("{schema} both adds and deletes {atom}")]
    ConflictingEffect { schema: String, atom: String },
    #[error("invalid atom {0}")]
    InvalidAtom(String),
}

impl PddlError {
    pub(crate) fn syntax(pos: sexpr::Pos, message: impl Into<String>) -> Self {
        PddlError::Syntax {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }
}
