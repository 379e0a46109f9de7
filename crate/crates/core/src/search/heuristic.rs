use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grounding::{BitState, GroundingIndex};
use crate::pddl::{GoalSpec, State};

/// Heuristic estimate: a finite cost or "unreachable in the relaxation".
///
/// `Finite` orders before `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HValue {
    Finite(u64),
    Infinite,
}

impl HValue {
    pub fn is_finite(self) -> bool {
        matches!(self, HValue::Finite(_))
    }
}

impl fmt::Display for HValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HValue::Finite(v) => write!(f, "{v}"),
            HValue::Infinite => write!(f, "inf"),
        }
    }
}

const UNREACHED: u64 = u64::MAX;

/// Additive heuristic over the delete relaxation, unit action costs.
///
/// Reuses its buffers; one instance per search.
pub(crate) struct AddHeuristic<'a> {
    index: &'a GroundingIndex,
    live: &'a [bool],
    cost: Vec<u64>,
    remaining: Vec<u32>,
    acc: Vec<u64>,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
    is_goal: Vec<bool>,
}

impl<'a> AddHeuristic<'a> {
    pub fn new(index: &'a GroundingIndex, live: &'a [bool]) -> Self {
        AddHeuristic {
            index,
            live,
            cost: vec![UNREACHED; index.atom_count()],
            remaining: vec![0; index.ops().len()],
            acc: vec![0; index.ops().len()],
            heap: BinaryHeap::new(),
            is_goal: vec![false; index.atom_count()],
        }
    }

    /// `goal` holds interned ids; out-of-index goal atoms are the caller's concern.
    pub fn eval(&mut self, state: &BitState, goal: &[u32]) -> HValue {
        self.cost.fill(UNREACHED);
        self.heap.clear();
        for &g in goal {
            self.is_goal[g as usize] = true;
        }
        let mut open_goals = goal.iter().filter(|&&g| !state.contains(g)).count();
        if open_goals == 0 {
            self.clear_goal(goal);
            return HValue::Finite(0);
        }

        for id in state.ids() {
            self.cost[id as usize] = 0;
            self.heap.push(Reverse((0, id)));
        }
        let ops = self.index.ops();
        for (i, op) in ops.iter().enumerate() {
            self.remaining[i] = op.pre.len() as u32;
            self.acc[i] = 0;
            if self.live[i] && op.pre.is_empty() {
                for &a in op.add.iter() {
                    if 1 < self.cost[a as usize] {
                        self.cost[a as usize] = 1;
                        self.heap.push(Reverse((1, a)));
                    }
                }
            }
        }

        while let Some(Reverse((c, atom))) = self.heap.pop() {
            if c > self.cost[atom as usize] {
                continue;
            }
            if self.is_goal[atom as usize] && c > 0 {
                open_goals -= 1;
                // later pops cannot lower a finalized cost
                self.is_goal[atom as usize] = false;
                if open_goals == 0 {
                    break;
                }
            }
            for &o in self.index.ops_with_precondition(atom) {
                let o = o as usize;
                if !self.live[o] {
                    continue;
                }
                self.remaining[o] -= 1;
                self.acc[o] += c;
                if self.remaining[o] == 0 {
                    let op_cost = self.acc[o] + 1;
                    for &a in ops[o].add.iter() {
                        if op_cost < self.cost[a as usize] {
                            self.cost[a as usize] = op_cost;
                            self.heap.push(Reverse((op_cost, a)));
                        }
                    }
                }
            }
        }
        self.clear_goal(goal);

        let mut total = 0u64;
        for &g in goal {
            match self.cost[g as usize] {
                UNREACHED => return HValue::Infinite,
                c => total += c,
            }
        }
        HValue::Finite(total)
    }

    fn clear_goal(&mut self, goal: &[u32]) {
        for &g in goal {
            self.is_goal[g as usize] = false;
        }
    }
}

/// Ops whose static preconditions hold in `state`. The rest can never fire
/// from any state reachable from it.
pub(crate) fn live_ops(index: &GroundingIndex, state: &BitState) -> Vec<bool> {
    index
        .ops()
        .iter()
        .map(|op| state.contains_all(&op.static_pre))
        .collect()
}

/// Interned goal ids, or `None` when some goal atom is unknown to the index
/// and absent from `state` (nothing can ever add it).
pub(crate) fn goal_ids(goal: &GoalSpec, state: &State, index: &GroundingIndex) -> Option<Vec<u32>> {
    let mut ids = Vec::with_capacity(goal.len());
    for atom in goal.iter() {
        match index.atom_id(atom) {
            Some(id) => ids.push(id),
            None if state.contains(atom) => {}
            None => return None,
        }
    }
    Some(ids)
}

/// `h_add(state, goal)`: 0 for atoms in the state, otherwise the cheapest
/// achiever's `1 + Σ h(pre)`; summed over the goal atoms.
pub fn h_add(state: &State, goal: &GoalSpec, index: &GroundingIndex) -> HValue {
    let Some(goal) = goal_ids(goal, state, index) else {
        return HValue::Infinite;
    };
    let bits = BitState::from_state(state, index);
    let live = live_ops(index, &bits);
    AddHeuristic::new(index, &live).eval(&bits, &goal)
}
