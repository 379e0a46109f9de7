//! The planning loop: decompose the goal, solve one sub-goal at a time, and
//! escalate sub-goals the solver cannot handle to the configured LLM mode.

mod record;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::decompose::{decompose_with, DecomposeError, DependencyRule};
use crate::grounding::{apply, apply_plan, ground_all, successors, GroundingIndex};
use crate::llm::{
    inspire_step, predict_step, CallLog, CompletionClient, InspireRequest, PredictContext, PredictRequest, StepError,
};
use crate::pddl::{Atom, Domain, GoalSpec, Problem, State};
use crate::search::{self, validate_plan, Engine, Plan, SolveOutcome, SolveRequest, Validation};

pub use record::{run_episode_metrics, RunOutcome, RunRecord, SubGoalEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// One solve of the whole problem.
    Direct,
    /// Sub-goals in order, no LLM.
    DecomposeOnly,
    Inspire,
    Predict,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Direct, Mode::DecomposeOnly, Mode::Inspire, Mode::Predict];

    pub fn needs_client(self) -> bool {
        matches!(self, Mode::Inspire | Mode::Predict)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Direct => "direct",
            Mode::DecomposeOnly => "decompose",
            Mode::Inspire => "inspire",
            Mode::Predict => "predict",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "direct" => Ok(Mode::Direct),
            "decompose" | "decompose-only" => Ok(Mode::DecomposeOnly),
            "inspire" => Ok(Mode::Inspire),
            "predict" => Ok(Mode::Predict),
            other => Err(format!("unknown mode {other:?} (expected direct, decompose, inspire or predict)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub mode: Mode,
    /// Budget of each sub-instance solve.
    pub sub_solve_timeout: Duration,
    /// Solver wall-clock allowed for the whole episode; LLM latency is not counted.
    pub total_solver_budget: Duration,
    /// LLM escalations allowed per sub-goal.
    pub retry_limit: usize,
    /// Keep earlier sub-goals in the goal of later sub-instances and of
    /// predicted intermediate instances.
    pub protect_achieved: bool,
    /// Budget for solving towards a predicted intermediate state.
    pub predict_timeout: Duration,
    /// Skip the repair solve when the final state misses part of the goal.
    pub strict: bool,
    /// Order cyclic goal components by file order instead of failing.
    pub cycle_fallback: bool,
    pub engine: Engine,
    /// Recorded with each run; the planner itself is deterministic.
    pub seed: u64,
    pub rule: DependencyRule,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            mode: Mode::DecomposeOnly,
            sub_solve_timeout: Duration::from_secs(15),
            total_solver_budget: Duration::from_secs(180),
            retry_limit: 10,
            protect_achieved: false,
            predict_timeout: Duration::from_secs(15),
            strict: false,
            cycle_fallback: false,
            engine: Engine::Internal,
            seed: 0,
            rule: DependencyRule::default(),
        }
    }
}

impl PlannerConfig {
    pub fn with_mode(mode: Mode) -> Self {
        PlannerConfig { mode, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("mode {0} needs an LLM client")]
    MissingClient(Mode),
    #[error("retry limit must be at least 1")]
    ZeroRetryLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Failure {
    #[error("sub-goal {index} ({}) not achieved within the retry limit", .atom.functional())]
    SubGoalExhausted { index: usize, atom: Atom },
    #[error("solver budget exhausted")]
    BudgetExhausted,
    #[error("cyclic goal dependencies through {}", .0.join(", "))]
    GoalCycle(Vec<String>),
    #[error("final plan does not reach the goal: {0}")]
    FinalValidation(Validation),
    #[error("the solver proved the problem unsolvable")]
    Unsolvable,
    #[error("solver error: {0}")]
    Solver(String),
}

/// Result of one planning episode.
#[derive(Debug, Clone)]
pub struct Episode {
    pub result: Result<Plan, Failure>,
    pub record: RunRecord,
    pub transcript: CallLog,
}

impl Episode {
    pub fn is_solved(&self) -> bool {
        self.result.is_ok()
    }
}

struct Runner<'a> {
    problem: &'a Problem,
    domain: &'a Domain,
    cfg: &'a PlannerConfig,
    client: Option<&'a dyn CompletionClient>,
    index: GroundingIndex,
    used: Duration,
    log: CallLog,
}

impl Runner<'_> {
    fn remaining(&self) -> Duration {
        self.cfg.total_solver_budget.saturating_sub(self.used)
    }

    fn solve(
        &mut self,
        state: &State,
        goal: &GoalSpec,
        timeout: Duration,
        entry: &mut SubGoalEntry,
    ) -> Result<SolveOutcome, Failure> {
        let req = SolveRequest {
            state,
            goal,
            domain: self.domain,
            objects: &self.problem.objects,
            timeout: timeout.min(self.remaining()),
        };
        let out = search::solve(&req, &self.cfg.engine, &self.index).map_err(|e| Failure::Solver(e.to_string()))?;
        self.used += out.stats().elapsed;
        entry.stats.accumulate(out.stats());
        Ok(out)
    }

    fn direct(&mut self, entries: &mut Vec<SubGoalEntry>) -> Result<Plan, Failure> {
        let mut entry = SubGoalEntry::new("goal");
        let budget = self.cfg.total_solver_budget;
        let out = self.solve(&self.problem.init, &self.problem.goal, budget, &mut entry);
        let result = match out {
            Ok(SolveOutcome::Solved(plan, _)) => {
                entry.fragments.push(plan.len());
                Ok(plan)
            }
            Ok(SolveOutcome::Timeout(_)) => Err(Failure::BudgetExhausted),
            Ok(SolveOutcome::ProvedUnsolvable(_)) => Err(Failure::Unsolvable),
            Err(e) => Err(e),
        };
        entries.push(entry);
        result
    }

    fn decomposed(&mut self, entries: &mut Vec<SubGoalEntry>) -> Result<Plan, Failure> {
        let sequence = decompose_with(&self.problem.goal, &self.cfg.rule, self.cfg.cycle_fallback)
            .map_err(|DecomposeError::GoalCycle(nodes)| Failure::GoalCycle(nodes))?;
        log::debug!("sub-goal order {sequence}");

        let mut state = self.problem.init.clone();
        let mut plan = Plan::default();
        let mut achieved = GoalSpec::default();
        for (index, atom) in sequence.iter().enumerate() {
            let mut entry = SubGoalEntry::new(atom.functional());
            let single = GoalSpec::new([atom.clone()]);
            let goal = if self.cfg.protect_achieved { achieved.conjoin(&single) } else { single };
            let outcome = self.sub_goal(index, atom, &goal, &achieved, &mut state, &mut plan, &mut entry);
            entries.push(entry);
            outcome?;
            achieved.push(atom.clone());
        }

        if !state.satisfies(&self.problem.goal) && !self.cfg.strict && !self.remaining().is_zero() {
            let mut entry = SubGoalEntry::new("repair");
            let out = self.solve(&state, &self.problem.goal, self.cfg.sub_solve_timeout, &mut entry);
            if let Ok(SolveOutcome::Solved(fragment, _)) = &out {
                entry.fragments.push(fragment.len());
                plan.extend(fragment);
            }
            entries.push(entry);
            out?;
        }
        Ok(plan)
    }

    /// Solves one sub-goal, escalating on failure until the retry limit.
    #[allow(clippy::too_many_arguments)]
    fn sub_goal(
        &mut self,
        index: usize,
        atom: &Atom,
        goal: &GoalSpec,
        achieved: &GoalSpec,
        state: &mut State,
        plan: &mut Plan,
        entry: &mut SubGoalEntry,
    ) -> Result<(), Failure> {
        let mut trajectory = Vec::new();
        loop {
            let out = self.solve(state, goal, self.cfg.sub_solve_timeout, entry)?;
            if let SolveOutcome::Solved(fragment, _) = out {
                *state = apply_plan(state, &fragment).expect("solver plans are valid");
                entry.fragments.push(fragment.len());
                plan.extend(&fragment);
                return Ok(());
            }
            if self.remaining().is_zero() {
                return Err(Failure::BudgetExhausted);
            }
            let exhausted = Failure::SubGoalExhausted { index, atom: atom.clone() };
            let Some(client) = self.client.filter(|_| self.cfg.mode.needs_client()) else {
                return Err(exhausted);
            };
            if entry.attempts >= self.cfg.retry_limit {
                return Err(exhausted);
            }
            entry.attempts += 1;
            let (calls, requeries) = (self.log.calls, self.log.requeries);
            match self.cfg.mode {
                Mode::Inspire => self.inspire_attempt(client, goal, &mut trajectory, state, plan, entry)?,
                Mode::Predict => self.predict_attempt(client, goal, achieved, state, plan, entry)?,
                Mode::Direct | Mode::DecomposeOnly => unreachable!("no client in non-LLM modes"),
            }
            entry.llm_calls += self.log.calls - calls;
            entry.requeries += self.log.requeries - requeries;
        }
    }

    fn inspire_attempt(
        &mut self,
        client: &dyn CompletionClient,
        goal: &GoalSpec,
        trajectory: &mut Vec<crate::grounding::GroundAction>,
        state: &mut State,
        plan: &mut Plan,
        entry: &mut SubGoalEntry,
    ) -> Result<(), Failure> {
        let applicable: Vec<_> = successors(state, &self.index).into_iter().cloned().collect();
        if applicable.is_empty() {
            return Ok(());
        }
        let mut req = InspireRequest {
            state: state.clone(),
            goal: goal.clone(),
            trajectory: std::mem::take(trajectory),
            applicable,
            domain_name: self.domain.name.clone(),
        };
        let outcome = inspire_step(&mut req, client, &mut self.log);
        *trajectory = req.trajectory;
        match outcome {
            Ok(action) => {
                if let Ok(next) = apply(state, &action) {
                    *state = next;
                    entry.fragments.push(1);
                    plan.actions.push(action);
                }
                Ok(())
            }
            Err(StepError::InspireExhausted) => Ok(()),
            Err(e) => Err(Failure::Solver(e.to_string())),
        }
    }

    fn predict_attempt(
        &mut self,
        client: &dyn CompletionClient,
        goal: &GoalSpec,
        achieved: &GoalSpec,
        state: &mut State,
        plan: &mut Plan,
        entry: &mut SubGoalEntry,
    ) -> Result<(), Failure> {
        let req = PredictRequest { state: state.clone(), goal: goal.clone(), domain_name: self.domain.name.clone() };
        let ctx = PredictContext {
            domain: self.domain,
            objects: &self.problem.objects,
            index: &self.index,
            engine: &self.cfg.engine,
            timeout: self.cfg.predict_timeout.min(self.remaining()),
            protect: (self.cfg.protect_achieved && !achieved.is_empty()).then_some(achieved),
        };
        match predict_step(&req, client, &ctx, &mut self.log) {
            Ok(fragment) => {
                self.used += fragment.outcome.stats().elapsed;
                entry.stats.accumulate(fragment.outcome.stats());
                if let Some(p) = fragment.outcome.plan() {
                    if let Ok(next) = apply_plan(state, p) {
                        *state = next;
                        entry.fragments.push(p.len());
                        plan.extend(p);
                    }
                }
                Ok(())
            }
            Err(StepError::PredictExhausted) => Ok(()),
            Err(e) => Err(Failure::Solver(e.to_string())),
        }
    }
}

/// Runs one planning episode on `problem`.
///
/// A returned plan has been validated against the original initial state
/// and goal.
pub fn plan(
    problem: &Problem,
    domain: &Domain,
    cfg: &PlannerConfig,
    client: Option<&dyn CompletionClient>,
) -> Result<Episode, ConfigError> {
    if cfg.retry_limit == 0 {
        return Err(ConfigError::ZeroRetryLimit);
    }
    if cfg.mode.needs_client() && client.is_none() {
        return Err(ConfigError::MissingClient(cfg.mode));
    }
    let mut runner = Runner {
        problem,
        domain,
        cfg,
        client,
        index: ground_all(domain, &problem.objects),
        used: Duration::ZERO,
        log: CallLog::new(),
    };
    let mut entries = Vec::new();
    let result = match cfg.mode {
        Mode::Direct => runner.direct(&mut entries),
        _ => runner.decomposed(&mut entries),
    };
    let result = result.and_then(|p| match validate_plan(&problem.init, &problem.goal, &p) {
        Validation::Valid => Ok(p),
        other => Err(Failure::FinalValidation(other)),
    });
    let record = RunRecord::from_entries(&problem.name, cfg, entries, &result);
    Ok(Episode { result, record, transcript: runner.log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedClient;
    use crate::pddl::{parse_domain, parse_problem};

    fn blocks3() -> (Domain, Problem) {
        let d = parse_domain(include_str!("../../assets/domains/blocks.pddl")).unwrap();
        let p = parse_problem(include_str!("../../assets/instances/blocks-p3.pddl"), &d).unwrap();
        (d, p)
    }

    #[test]
    fn decompose_only_on_three_block_tower() {
        let (d, p) = blocks3();
        let ep = plan(&p, &d, &PlannerConfig::default(), None).unwrap();
        let plan = ep.result.unwrap();
        assert_eq!(plan.len(), 4);
        let labels: Vec<&str> = ep.record.entries.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, ["on(b,c)", "on(a,b)"]);
        let frags: Vec<&[usize]> = ep.record.entries.iter().map(|e| &e.fragments[..]).collect();
        assert_eq!(frags, [&[2][..], &[2][..]]);
        assert_eq!(ep.record.llm_calls, 0);
        assert_eq!(ep.record.plan_length, Some(4));
    }

    #[test]
    fn llm_modes_need_a_client() {
        let (d, p) = blocks3();
        let cfg = PlannerConfig::with_mode(Mode::Predict);
        assert_eq!(plan(&p, &d, &cfg, None).unwrap_err(), ConfigError::MissingClient(Mode::Predict));
        let cfg = PlannerConfig { retry_limit: 0, ..PlannerConfig::default() };
        assert_eq!(plan(&p, &d, &cfg, None).unwrap_err(), ConfigError::ZeroRetryLimit);
    }

    #[test]
    fn useless_inspire_replies_exhaust_after_retry_limit() {
        let (d, p) = blocks3();
        let cfg = PlannerConfig {
            mode: Mode::Inspire,
            sub_solve_timeout: Duration::ZERO,
            ..PlannerConfig::default()
        };
        // legal every time, never helpful: pick up c, put it back, repeat
        let client = crate::llm::FnClient(|prompt: &str| {
            let actions = prompt.lines().find(|l| l.starts_with("The applicable actions:")).unwrap();
            if actions.contains("(pick-up c)") { "(pick-up c)" } else { "(put-down c)" }.to_string()
        });
        let ep = plan(&p, &d, &cfg, Some(&client)).unwrap();
        assert!(matches!(ep.result, Err(Failure::SubGoalExhausted { index: 0, .. })));
        assert_eq!(ep.record.entries[0].attempts, 10);
        assert_eq!(ep.record.llm_calls, 10);

        let client = ScriptedClient::repeating("(pick-up zz)");
        let ep = plan(&p, &d, &cfg, Some(&client)).unwrap();
        assert_eq!(ep.record.entries[0].attempts, 10);
        assert_eq!(ep.record.requeries, 20);
    }
}
