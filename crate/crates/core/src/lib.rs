//! A decomposition-based classical planner with language-model assistance.
//!
//! A STRIPS problem is parsed ([`pddl`]), grounded ([`grounding`]) and its
//! goal split into an ordered list of single-atom sub-goals by a dependency
//! graph over goal objects ([`decompose`]). Each sub-goal is handed to a
//! time-limited solver ([`search`]). When a sub-goal cannot be solved in
//! time, the planner asks a language model for help ([`llm`]): either for
//! the next action to take, or for a nearby intermediate state that splits
//! the remaining search in two. [`orchestrator`] runs this loop and
//! [`bench`] runs it over instance suites.
//!
//! ```
//! use subgoal::corpus;
//! use subgoal::orchestrator::{plan, Mode, PlannerConfig};
//! use subgoal::pddl::{parse_domain, parse_problem};
//!
//! let domain = parse_domain(corpus::BLOCKS_DOMAIN)?;
//! let problem = parse_problem(corpus::BLOCKS_P3, &domain)?;
//! let episode = plan(&problem, &domain, &PlannerConfig::with_mode(Mode::DecomposeOnly), None)?;
//! assert_eq!(episode.result.unwrap().len(), 4);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod bench;
pub mod corpus;
pub mod decompose;
pub mod grounding;
pub mod llm;
pub mod orchestrator;
pub mod pddl;
pub mod search;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/pddl.md")]
    pub struct Pddl;
    #[doc = include_str!("../../../book/src/grounding.md")]
    pub struct Grounding;
    #[doc = include_str!("../../../book/src/decomposition.md")]
    pub struct Decomposition;
    #[doc = include_str!("../../../book/src/search.md")]
    pub struct Search;
    #[doc = include_str!("../../../book/src/llm.md")]
    pub struct Llm;
    #[doc = include_str!("../../../book/src/planning-loop.md")]
    pub struct PlanningLoop;
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    pub struct Benchmarks;
}
