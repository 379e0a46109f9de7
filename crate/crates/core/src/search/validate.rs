use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grounding::{render_atoms, GroundAction};
use crate::pddl::{Atom, GoalSpec, State};

/// Verdict of simulating a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Validation {
    Valid,
    InvalidAt { index: usize, action: String, missing: Vec<Atom> },
    GoalUnsatisfied { missing: Vec<Atom> },
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validation::Valid)
    }
}

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Validation::Valid => write!(f, "valid"),
            Validation::InvalidAt { index, action, missing } => {
                write!(f, "step {index} {action}: preconditions unmet: {}", render_atoms(missing))
            }
            Validation::GoalUnsatisfied { missing } => {
                write!(f, "goal not reached, missing {}", render_atoms(missing))
            }
        }
    }
}

/// Applies `plan` step by step from `state` and checks `goal` at the end.
pub fn validate_plan<'a>(
    state: &State,
    goal: &GoalSpec,
    plan: impl IntoIterator<Item = &'a GroundAction>,
) -> Validation {
    let mut current = state.clone();
    for (index, action) in plan.into_iter().enumerate() {
        let missing = current.missing(&action.pre);
        if !missing.is_empty() {
            return Validation::InvalidAt {
                index,
                action: action.to_string(),
                missing,
            };
        }
        for atom in &action.del {
            current.remove(atom);
        }
        for atom in &action.add {
            current.insert(atom.clone());
        }
    }
    let missing = current.missing(goal.iter());
    if missing.is_empty() {
        Validation::Valid
    } else {
        Validation::GoalUnsatisfied { missing }
    }
}
