use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use super::heuristic::{goal_ids, live_ops, AddHeuristic, HValue};
use super::{Plan, SearchStats, SolveOutcome, SolveRequest};
use crate::grounding::{BitState, GroundingIndex};

/// Greedy best-first search on `h_add`.
///
/// The goal test runs when a state is generated. States with an infinite
/// estimate are closed without being queued. The clock is checked before
/// every expansion.
pub fn solve_internal(req: &SolveRequest<'_>, index: &GroundingIndex) -> SolveOutcome {
    let start = Instant::now();
    let mut stats = SearchStats::default();
    let finish = |mut stats: SearchStats| {
        stats.elapsed = start.elapsed();
        stats
    };

    if req.state.satisfies(req.goal) {
        stats.plan_length = Some(0);
        return SolveOutcome::Solved(Plan::default(), finish(stats));
    }
    let Some(goal) = goal_ids(req.goal, req.state, index) else {
        return SolveOutcome::ProvedUnsolvable(finish(stats));
    };

    let root = BitState::from_state(req.state, index);
    let live = live_ops(index, &root);
    let live_list: Vec<u32> = (0..live.len() as u32).filter(|&i| live[i as usize]).collect();
    let mut heuristic = AddHeuristic::new(index, &live);
    let root_h = heuristic.eval(&root, &goal);
    if root_h == HValue::Infinite {
        return SolveOutcome::ProvedUnsolvable(finish(stats));
    }

    let ops = index.ops();
    let mut states: Vec<BitState> = vec![root.clone()];
    let mut parents: Vec<(u32, u32)> = vec![(u32::MAX, u32::MAX)];
    let mut seen: HashMap<BitState, u32> = HashMap::new();
    seen.insert(root, 0);
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    open.push(Reverse((root_h, seq, 0u32)));

    let extract = |parents: &[(u32, u32)], mut node: u32| {
        let mut actions = Vec::new();
        while node != 0 {
            let (parent, op) = parents[node as usize];
            actions.push(index.all()[op as usize].clone());
            node = parent;
        }
        actions.reverse();
        Plan::new(actions)
    };

    loop {
        if start.elapsed() >= req.timeout {
            return SolveOutcome::Timeout(finish(stats));
        }
        let Some(Reverse((_, _, node))) = open.pop() else {
            return SolveOutcome::ProvedUnsolvable(finish(stats));
        };
        stats.expansions += 1;
        let current = states[node as usize].clone();
        for &o in &live_list {
            let op = &ops[o as usize];
            if !current.contains_all(&op.pre) {
                continue;
            }
            stats.generated += 1;
            let next = current.apply(op);
            if seen.contains_key(&next) {
                continue;
            }
            let id = states.len() as u32;
            seen.insert(next.clone(), id);
            parents.push((node, o));
            if next.contains_all(&goal) {
                let plan = extract(&parents, id);
                stats.plan_length = Some(plan.len());
                return SolveOutcome::Solved(plan, finish(stats));
            }
            let h = heuristic.eval(&next, &goal);
            states.push(next);
            if h.is_finite() {
                seq += 1;
                open.push(Reverse((h, seq, id)));
            }
        }
    }
}
