//! Offline clients: canned replies, closures, and a search-backed oracle.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use super::{CompletionClient, LlmError};
use crate::grounding::{apply_plan, ground_all, GroundingIndex};
use crate::pddl::{Atom, Domain, GoalSpec, ObjectMap, State};
use crate::search::{shortest_distance, shortest_plan, solve_internal, BfsOutcome, SolveRequest};

/// Replies from a fixed queue, optionally repeating the last one forever.
#[derive(Debug)]
pub struct ScriptedClient {
    queue: Mutex<VecDeque<String>>,
    repeat_last: bool,
}

impl ScriptedClient {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        ScriptedClient {
            queue: Mutex::new(replies.into_iter().map(Into::into).collect()),
            repeat_last: false,
        }
    }

    /// Always answers `reply`.
    pub fn repeating(reply: impl Into<String>) -> Self {
        ScriptedClient { queue: Mutex::new(VecDeque::from([reply.into()])), repeat_last: true }
    }

    /// Keeps answering with the final reply once the queue is down to it.
    pub fn with_repeat_last(mut self) -> Self {
        self.repeat_last = true;
        self
    }

    /// One reply per line; `\n` inside a line stands for a newline. Empty
    /// lines are skipped.
    pub fn parse_script(text: &str) -> Self {
        Self::new(
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| l.replace("\\n", "\n")),
        )
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse_script(&std::fs::read_to_string(path)?))
    }
}

impl CompletionClient for ScriptedClient {
    fn complete(&self, _prompt: &str) -> Result<String, LlmError> {
        let mut q = self.queue.lock().expect("script lock");
        if self.repeat_last && q.len() == 1 {
            return Ok(q[0].clone());
        }
        q.pop_front().ok_or(LlmError::ScriptExhausted)
    }
}

/// Answers with a closure over the prompt.
pub struct FnClient<F>(pub F);

impl<F: Fn(&str) -> String + Send + Sync> CompletionClient for FnClient<F> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        Ok((self.0)(prompt))
    }
}

/// Answers every prompt kind with exhaustive search on the instance the
/// prompt describes. Only practical at small scale.
///
/// * Inspire: the first action of a shortest plan.
/// * Predict: one or two atoms that hold halfway along a shortest plan and
///   not in the current state.
/// * Direct: a whole shortest plan, one action per line.
#[derive(Debug, Clone)]
pub struct OracleClient {
    domain: Domain,
    objects: ObjectMap,
    index: GroundingIndex,
    /// Cap on distinct states per breadth-first search.
    pub max_states: usize,
    /// Budget for the greedy solves used to rank candidate midpoints.
    pub probe_timeout: Duration,
}

fn atoms_after(line: &str) -> Vec<Atom> {
    let mut atoms = Vec::new();
    let mut rest = line;
    while let Some(open) = rest.find('(') {
        let Some(close) = rest[open..].find(')') else { break };
        let mut words = rest[open + 1..open + close].split_whitespace();
        if let Some(pred) = words.next() {
            atoms.push(Atom::new(pred, words));
        }
        rest = &rest[open + close + 1..];
    }
    atoms
}

fn slot<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
    prompt.lines().find_map(|l| l.strip_prefix(label))
}

impl OracleClient {
    pub fn new(domain: &Domain, objects: &ObjectMap) -> Self {
        OracleClient {
            index: ground_all(domain, objects),
            domain: domain.clone(),
            objects: objects.clone(),
            max_states: 5_000_000,
            probe_timeout: Duration::from_secs(10),
        }
    }

    fn optimal(&self, state: &State, goal: &GoalSpec) -> Option<crate::search::Plan> {
        match shortest_plan(state, goal, &self.index, Some(self.max_states)) {
            BfsOutcome::Found(plan) => Some(plan),
            _ => None,
        }
    }

    fn inspire(&self, state: &State, goal: &GoalSpec) -> String {
        match self.optimal(state, goal).and_then(|p| p.actions.into_iter().next()) {
            Some(a) => a.to_string(),
            None => "(no action)".into(),
        }
    }

    /// Ranks midpoint candidates by whether the planner, solving towards
    /// them, stays on some optimal route to `goal`; further along is better,
    /// then fewer atoms.
    fn predict(&self, state: &State, goal: &GoalSpec) -> String {
        let Some(plan) = self.optimal(state, goal) else {
            return "[]".into();
        };
        let total = plan.len();
        let half = total.div_ceil(2);
        let Ok(mid) = apply_plan(state, &plan.actions[..half]) else {
            return "[]".into();
        };
        let fresh: Vec<&Atom> = mid.iter().filter(|a| !state.contains(a)).collect();
        let goal_set = goal.canonical();
        let held: Vec<Atom> = goal.iter().filter(|a| state.contains(a)).cloned().collect();

        let mut candidates: Vec<Vec<Atom>> = fresh.iter().map(|a| vec![(*a).clone()]).collect();
        for (i, a) in fresh.iter().enumerate() {
            for b in &fresh[i + 1..] {
                candidates.push(vec![(*a).clone(), (*b).clone()]);
            }
        }
        candidates.retain(|c| c.iter().cloned().collect::<BTreeSet<_>>() != goal_set);

        let mut best: Option<((bool, usize), &Vec<Atom>)> = None;
        for c in &candidates {
            let sub_goal = GoalSpec::new(c.iter().cloned().chain(held.iter().cloned()));
            let req = SolveRequest {
                state,
                goal: &sub_goal,
                domain: &self.domain,
                objects: &self.objects,
                timeout: self.probe_timeout,
            };
            let Some(p1) = solve_internal(&req, &self.index).into_plan() else { continue };
            if p1.len() > total {
                continue;
            }
            let Ok(reached) = apply_plan(state, &p1) else { continue };
            let on_route = shortest_distance(&reached, goal, &self.index, total - p1.len())
                .is_some_and(|d| d + p1.len() == total);
            let key = (on_route, if on_route { p1.len() } else { 0 });
            // strictly better only, so singletons and earlier candidates win ties
            if best.as_ref().is_none_or(|(k, _)| key > *k) {
                best = Some((key, c));
            }
        }
        let chosen = best.map(|(_, c)| c).or(candidates.first());
        match chosen {
            Some(c) => {
                let pairs: Vec<(&str, &[String])> = c.iter().map(|a| (a.predicate.as_str(), &a.args[..])).collect();
                serde_json::to_string(&pairs).expect("serializable")
            }
            None => "[]".into(),
        }
    }

    fn direct(&self, state: &State, goal: &GoalSpec) -> String {
        self.optimal(state, goal).map(|p| p.to_string()).unwrap_or_default()
    }
}

impl CompletionClient for OracleClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let goal = slot(prompt, "The goal state: ")
            .ok_or_else(|| LlmError::Config("prompt has no goal state line".into()))?;
        let init = slot(prompt, "The init state: ")
            .ok_or_else(|| LlmError::Config("prompt has no init state line".into()))?;
        let goal = GoalSpec::new(atoms_after(goal));
        let state: State = atoms_after(init).into_iter().collect();
        Ok(if slot(prompt, "The applicable actions: ").is_some() {
            self.inspire(&state, &goal)
        } else if prompt.contains("intermediate state") {
            self.predict(&state, &goal)
        } else {
            self.direct(&state, &goal)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{render_inspire_prompt, render_predict_prompt, InspireRequest, PredictRequest};
    use crate::pddl::{parse_domain, parse_problem};

    #[test]
    fn scripted_queue_and_repeat() {
        let c = ScriptedClient::parse_script("a\n\nb\\nc\n");
        assert_eq!(c.complete("").unwrap(), "a");
        assert_eq!(c.complete("").unwrap(), "b\nc");
        assert_eq!(c.complete(""), Err(LlmError::ScriptExhausted));
        let c = ScriptedClient::new(["x", "y"]).with_repeat_last();
        assert_eq!(c.complete("").unwrap(), "x");
        assert_eq!(c.complete("").unwrap(), "y");
        assert_eq!(c.complete("").unwrap(), "y");
    }

    #[test]
    fn oracle_answers_three_block_tower() {
        let d = parse_domain(include_str!("../../assets/domains/blocks.pddl")).unwrap();
        let p = parse_problem(include_str!("../../assets/instances/blocks-p3.pddl"), &d).unwrap();
        let oracle = OracleClient::new(&d, &p.objects);
        let prompt = render_inspire_prompt(&InspireRequest {
            state: p.init.clone(),
            goal: p.goal.clone(),
            trajectory: vec![],
            applicable: vec![],
            domain_name: d.name.clone(),
        });
        assert_eq!(oracle.complete(&prompt).unwrap(), "(pick-up b)");

        let prompt = render_predict_prompt(&PredictRequest {
            state: p.init.clone(),
            goal: p.goal.clone(),
            domain_name: d.name.clone(),
        });
        assert_eq!(oracle.complete(&prompt).unwrap(), r#"[["on",["b","c"]]]"#);
    }
}
