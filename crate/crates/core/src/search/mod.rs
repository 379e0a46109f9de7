//! Solving single instances `<state, goal, domain>`.
//!
//! The bundled engine is greedy best-first search on `h_add` with a closed
//! list over full states and FIFO tie-breaking. An adapter runs any external
//! planner that reads PDDL files and writes an IPC plan file. Every plan
//! either engine returns has passed [`validate_plan`].

mod bfs;
mod external;
mod gbfs;
mod heuristic;
mod plan_file;
mod validate;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{GroundAction, GroundingIndex};
use crate::pddl::{Domain, GoalSpec, ObjectMap, State};

pub use bfs::{shortest_distance, shortest_plan, BfsOutcome};
pub use external::{solve_external, ExternalPlanner};
pub use gbfs::solve_internal;
pub use heuristic::{h_add, HValue};
pub use plan_file::{parse_plan, write_plan, PlanParseError};
pub use validate::{validate_plan, Validation};

/// An ordered sequence of ground actions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub actions: Vec<GroundAction>,
}

impl Plan {
    pub fn new(actions: Vec<GroundAction>) -> Self {
        Plan { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GroundAction> {
        self.actions.iter()
    }

    pub fn extend(&mut self, other: &Plan) {
        self.actions.extend(other.actions.iter().cloned());
    }
}

impl<'a> IntoIterator for &'a Plan {
    type Item = &'a GroundAction;
    type IntoIter = std::slice::Iter<'a, GroundAction>;

    fn into_iter(self) -> Self::IntoIter {
        self.actions.iter()
    }
}

/// One action per line.
impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.actions {
            writeln!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Search telemetry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub expansions: u64,
    pub generated: u64,
    #[serde(with = "duration_ms")]
    pub elapsed: Duration,
    pub plan_length: Option<usize>,
}

impl SearchStats {
    /// Generated successors per expansion; 0 before the first expansion.
    pub fn branching(&self) -> f64 {
        if self.expansions == 0 {
            0.0
        } else {
            self.generated as f64 / self.expansions as f64
        }
    }

    pub fn accumulate(&mut self, other: &SearchStats) {
        self.expansions += other.expansions;
        self.generated += other.generated;
        self.elapsed += other.elapsed;
    }
}

pub(crate) mod duration_ms {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Solved(Plan, SearchStats),
    Timeout(SearchStats),
    /// Every state reachable without relaxed dead ends was explored.
    ProvedUnsolvable(SearchStats),
}

impl SolveOutcome {
    pub fn stats(&self) -> &SearchStats {
        match self {
            SolveOutcome::Solved(_, s) | SolveOutcome::Timeout(s) | SolveOutcome::ProvedUnsolvable(s) => s,
        }
    }

    pub fn plan(&self) -> Option<&Plan> {
        match self {
            SolveOutcome::Solved(p, _) => Some(p),
            _ => None,
        }
    }

    pub fn into_plan(self) -> Option<Plan> {
        match self {
            SolveOutcome::Solved(p, _) => Some(p),
            _ => None,
        }
    }
}

/// Which planner solves sub-instances.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Engine {
    #[default]
    Internal,
    External(ExternalPlanner),
}

/// A single instance to solve under a wall-clock budget.
///
/// A zero timeout still answers instances whose goal already holds.
#[derive(Debug, Clone, Copy)]
pub struct SolveRequest<'a> {
    pub state: &'a State,
    pub goal: &'a GoalSpec,
    pub domain: &'a Domain,
    pub objects: &'a ObjectMap,
    pub timeout: Duration,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("external planner exited with {code:?}: {stderr}")]
    ExternalFailure { code: Option<i32>, stderr: String },
    #[error(transparent)]
    PlanParse(#[from] PlanParseError),
    #[error("external planner returned an invalid plan: {0}")]
    ExternalInvalidPlan(Validation),
    #[error("external planner I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad external command template: {0}")]
    Template(String),
    #[error("cannot write sub-instance: {0}")]
    Instance(#[from] crate::pddl::PddlError),
}

/// Dispatches on `engine`.
pub fn solve(req: &SolveRequest<'_>, engine: &Engine, index: &GroundingIndex) -> Result<SolveOutcome, SolveError> {
    match engine {
        Engine::Internal => Ok(solve_internal(req, index)),
        Engine::External(planner) => solve_external(req, planner),
    }
}
