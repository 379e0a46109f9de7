use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Failure, PlannerConfig};
use crate::bench::ReportRow;
use crate::search::{Plan, SearchStats};

/// Work spent on one sub-goal (or on the whole goal in direct mode, or on
/// the final repair solve).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubGoalEntry {
    /// `on(b,c)`, `goal` or `repair`.
    pub label: String,
    /// LLM escalations.
    pub attempts: usize,
    pub llm_calls: u64,
    pub requeries: u64,
    /// Solver effort, including solves towards predicted states.
    pub stats: SearchStats,
    /// Lengths of the plan pieces appended, in order.
    pub fragments: Vec<usize>,
}

impl SubGoalEntry {
    pub fn new(label: impl Into<String>) -> Self {
        SubGoalEntry { label: label.into(), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunOutcome {
    Solved,
    Failed(String),
}

/// Per-episode metrics. The totals are sums over `entries`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub mode: String,
    pub seed: u64,
    pub entries: Vec<SubGoalEntry>,
    pub plan_length: Option<usize>,
    /// Solver wall-clock only.
    #[serde(with = "crate::search::duration_ms")]
    pub solver_time: Duration,
    /// Logical LLM calls.
    pub llm_calls: u64,
    pub requeries: u64,
    pub expansions: u64,
    pub generated: u64,
    pub outcome: RunOutcome,
}

impl RunRecord {
    pub(crate) fn from_entries(
        instance: &str,
        cfg: &PlannerConfig,
        entries: Vec<SubGoalEntry>,
        result: &Result<Plan, Failure>,
    ) -> Self {
        let mut record = RunRecord {
            instance: instance.to_string(),
            mode: cfg.mode.to_string(),
            seed: cfg.seed,
            plan_length: result.as_ref().ok().map(Plan::len),
            solver_time: Duration::ZERO,
            llm_calls: 0,
            requeries: 0,
            expansions: 0,
            generated: 0,
            outcome: match result {
                Ok(_) => RunOutcome::Solved,
                Err(f) => RunOutcome::Failed(f.to_string()),
            },
            entries,
        };
        for e in &record.entries {
            record.solver_time += e.stats.elapsed;
            record.llm_calls += e.llm_calls;
            record.requeries += e.requeries;
            record.expansions += e.stats.expansions;
            record.generated += e.stats.generated;
        }
        record
    }

    pub fn is_solved(&self) -> bool {
        self.outcome == RunOutcome::Solved
    }

    /// Generated successors per expansion over the whole episode.
    pub fn branching(&self) -> f64 {
        if self.expansions == 0 {
            0.0
        } else {
            self.generated as f64 / self.expansions as f64
        }
    }

    /// `key=value` lines, one record per episode:
    ///
    /// ```text
    /// instance=<name>
    /// mode=direct|decompose|inspire|predict
    /// seed=<u64>
    /// outcome=solved | failed: <reason>
    /// plan_length=<n or empty>
    /// solver_ms=<n>
    /// llm_calls=<n>
    /// requeries=<n>
    /// expansions=<n>
    /// generated=<n>
    /// subgoals=<count>
    /// subgoal.<i>.label=<atom>
    /// subgoal.<i>.attempts=<n>
    /// subgoal.<i>.llm_calls=<n>
    /// subgoal.<i>.requeries=<n>
    /// subgoal.<i>.expansions=<n>
    /// subgoal.<i>.generated=<n>
    /// subgoal.<i>.solver_ms=<n>
    /// subgoal.<i>.fragments=<comma-separated lengths>
    /// ```
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("instance", &self.instance);
        kv("mode", &self.mode);
        kv("seed", &self.seed);
        match &self.outcome {
            RunOutcome::Solved => kv("outcome", &"solved"),
            RunOutcome::Failed(reason) => kv("outcome", &format!("failed: {}", reason.replace('\n', " "))),
        }
        kv("plan_length", &self.plan_length.map(|n| n.to_string()).unwrap_or_default());
        kv("solver_ms", &self.solver_time.as_millis());
        kv("llm_calls", &self.llm_calls);
        kv("requeries", &self.requeries);
        kv("expansions", &self.expansions);
        kv("generated", &self.generated);
        kv("subgoals", &self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            let p = format!("subgoal.{i}");
            kv(&format!("{p}.label"), &e.label);
            kv(&format!("{p}.attempts"), &e.attempts);
            kv(&format!("{p}.llm_calls"), &e.llm_calls);
            kv(&format!("{p}.requeries"), &e.requeries);
            kv(&format!("{p}.expansions"), &e.stats.expansions);
            kv(&format!("{p}.generated"), &e.stats.generated);
            kv(&format!("{p}.solver_ms"), &e.stats.elapsed.as_millis());
            let frags: Vec<String> = e.fragments.iter().map(usize::to_string).collect();
            kv(&format!("{p}.fragments"), &frags.join(","));
        }
        out
    }
}

/// One report row for a finished episode.
pub fn run_episode_metrics(record: &RunRecord) -> ReportRow {
    ReportRow {
        instance: record.instance.clone(),
        mode: record.mode.clone(),
        solved: record.is_solved(),
        plan_length: record.plan_length,
        solver_ms: record.solver_time.as_millis() as u64,
        llm_calls: record.llm_calls,
        expansions: record.expansions,
        branching: record.branching(),
        failure: match &record.outcome {
            RunOutcome::Solved => None,
            RunOutcome::Failed(r) => Some(r.clone()),
        },
    }
}
