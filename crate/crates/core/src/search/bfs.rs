//! Exhaustive breadth-first search. Exponential; intended for small
//! instances, where it gives optimal plan lengths for cross-checks and
//! drives the oracle mock clients.

use std::collections::{HashMap, VecDeque};

use super::heuristic::{goal_ids, live_ops};
use super::Plan;
use crate::grounding::{BitState, GroundingIndex};
use crate::pddl::{GoalSpec, State};

#[derive(Debug, Clone, PartialEq)]
pub enum BfsOutcome {
    /// A shortest plan.
    Found(Plan),
    /// The reachable state space holds no goal state.
    Unsolvable,
    /// Gave up after `max_states` distinct states or `max_depth` levels.
    LimitReached,
}

/// Shortest plan from `state` to `goal`, ties broken by index order.
pub fn shortest_plan(
    state: &State,
    goal: &GoalSpec,
    index: &GroundingIndex,
    max_states: Option<usize>,
) -> BfsOutcome {
    search(state, goal, index, max_states, None)
}

/// Optimal distance if it is at most `max_depth`.
pub fn shortest_distance(state: &State, goal: &GoalSpec, index: &GroundingIndex, max_depth: usize) -> Option<usize> {
    match search(state, goal, index, None, Some(max_depth)) {
        BfsOutcome::Found(plan) => Some(plan.len()),
        _ => None,
    }
}

fn search(
    state: &State,
    goal: &GoalSpec,
    index: &GroundingIndex,
    max_states: Option<usize>,
    max_depth: Option<usize>,
) -> BfsOutcome {
    if state.satisfies(goal) {
        return BfsOutcome::Found(Plan::default());
    }
    let Some(goal) = goal_ids(goal, state, index) else {
        return BfsOutcome::Unsolvable;
    };
    if max_depth == Some(0) {
        return BfsOutcome::LimitReached;
    }
    let root = BitState::from_state(state, index);
    let live = live_ops(index, &root);
    let live_list: Vec<u32> = (0..live.len() as u32).filter(|&i| live[i as usize]).collect();
    let ops = index.ops();

    let mut parents: Vec<(u32, u32, u32)> = vec![(u32::MAX, u32::MAX, 0)];
    let mut seen: HashMap<BitState, u32> = HashMap::new();
    seen.insert(root.clone(), 0);
    let mut queue = VecDeque::from([(root, 0u32)]);
    let mut truncated = false;

    while let Some((current, node)) = queue.pop_front() {
        let depth = parents[node as usize].2;
        if max_depth.is_some_and(|d| depth as usize >= d) {
            truncated = true;
            continue;
        }
        for &o in &live_list {
            let op = &ops[o as usize];
            if !current.contains_all(&op.pre) {
                continue;
            }
            let next = current.apply(op);
            if seen.contains_key(&next) {
                continue;
            }
            let id = parents.len() as u32;
            parents.push((node, o, depth + 1));
            if next.contains_all(&goal) {
                let mut actions = Vec::new();
                let mut n = id;
                while n != 0 {
                    let (p, op, _) = parents[n as usize];
                    actions.push(index.all()[op as usize].clone());
                    n = p;
                }
                actions.reverse();
                return BfsOutcome::Found(Plan::new(actions));
            }
            if max_states.is_some_and(|m| seen.len() >= m) {
                return BfsOutcome::LimitReached;
            }
            seen.insert(next.clone(), id);
            queue.push_back((next, id));
        }
    }
    if truncated {
        BfsOutcome::LimitReached
    } else {
        BfsOutcome::Unsolvable
    }
}
