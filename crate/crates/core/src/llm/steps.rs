use std::time::Duration;

use thiserror::Error;

use super::prompts::{render_inspire_prompt, render_predict_prompt, InspireRequest, PredictRequest};
use super::response::{parse_inspire_response, parse_predict_response, ParsedIntermediate};
use super::{CallLog, CallRecord, CompletionClient, PromptKind};
use crate::grounding::{GroundAction, GroundingIndex};
use crate::pddl::{Domain, GoalSpec, ObjectMap};
use crate::search::{solve, Engine, SolveError, SolveOutcome, SolveRequest};

/// Queries allowed per logical call before giving up.
pub const REQUERY_LIMIT: usize = 3;

#[derive(Debug, Error)]
pub enum StepError {
    #[error("no usable action after {REQUERY_LIMIT} replies")]
    InspireExhausted,
    #[error("no usable intermediate state after {REQUERY_LIMIT} replies")]
    PredictExhausted,
    #[error("inspire query needs at least one applicable action")]
    NoApplicableActions,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Sends `prompt` until `accept` takes a reply, at most [`REQUERY_LIMIT`] times.
fn query<T, E: ToString>(
    kind: PromptKind,
    prompt: &str,
    client: &dyn CompletionClient,
    log: &mut CallLog,
    mut accept: impl FnMut(&str) -> Result<T, E>,
) -> Option<T> {
    log.calls += 1;
    for attempt in 0..REQUERY_LIMIT {
        if attempt > 0 {
            log.requeries += 1;
        }
        let (response, verdict) = match client.complete(prompt) {
            Ok(reply) => {
                let verdict = accept(&reply);
                (reply, verdict.map_err(|e| e.to_string()))
            }
            Err(e) => (String::new(), Err(e.to_string())),
        };
        log.records.push(CallRecord {
            mode: kind,
            prompt: prompt.to_string(),
            response,
            verdict: match &verdict {
                Ok(_) => "accepted".into(),
                Err(e) => e.clone(),
            },
        });
        if let Ok(v) = verdict {
            return Some(v);
        }
    }
    None
}

/// One Inspire call: asks for an action from `req.applicable` and appends it
/// to `req.trajectory`.
pub fn inspire_step(
    req: &mut InspireRequest,
    client: &dyn CompletionClient,
    log: &mut CallLog,
) -> Result<GroundAction, StepError> {
    if req.applicable.is_empty() {
        return Err(StepError::NoApplicableActions);
    }
    let prompt = render_inspire_prompt(req);
    let action = query(PromptKind::Inspire, &prompt, client, log, |reply| {
        parse_inspire_response(reply, &req.applicable)
    })
    .ok_or(StepError::InspireExhausted)?;
    req.trajectory.push(action.clone());
    Ok(action)
}

/// What the solver needs to turn a predicted state into a plan fragment.
#[derive(Debug, Clone, Copy)]
pub struct PredictContext<'a> {
    pub domain: &'a Domain,
    pub objects: &'a ObjectMap,
    pub index: &'a GroundingIndex,
    pub engine: &'a Engine,
    pub timeout: Duration,
    /// Atoms that must also hold at the end of the fragment.
    pub protect: Option<&'a GoalSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictFragment {
    pub intermediate: ParsedIntermediate,
    /// Solving towards the intermediate state. A plan here is the fragment;
    /// anything else is a failed attempt for the caller.
    pub outcome: SolveOutcome,
}

/// One Predict call: obtains an intermediate state and solves towards it.
pub fn predict_step(
    req: &PredictRequest,
    client: &dyn CompletionClient,
    ctx: &PredictContext<'_>,
    log: &mut CallLog,
) -> Result<PredictFragment, StepError> {
    let prompt = render_predict_prompt(req);
    let intermediate = query(PromptKind::Predict, &prompt, client, log, |reply| {
        parse_predict_response(reply, ctx.domain, ctx.objects, &req.state, &req.goal)
    })
    .ok_or(StepError::PredictExhausted)?;

    let goal = match ctx.protect {
        Some(extra) => intermediate.as_goal().conjoin(extra),
        None => intermediate.as_goal(),
    };
    let sub = SolveRequest {
        state: &req.state,
        goal: &goal,
        domain: ctx.domain,
        objects: ctx.objects,
        timeout: ctx.timeout,
    };
    let outcome = solve(&sub, ctx.engine, ctx.index)?;
    Ok(PredictFragment { intermediate, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::{ground_all, successors};
    use crate::llm::ScriptedClient;
    use crate::pddl::{parse_domain, parse_problem, Atom};

    #[test]
    fn inspire_requeries_then_gives_up() {
        let d = parse_domain(include_str!("../../assets/domains/blocks.pddl")).unwrap();
        let p = parse_problem(include_str!("../../assets/instances/blocks-p3.pddl"), &d).unwrap();
        let idx = ground_all(&d, &p.objects);
        let mut req = InspireRequest {
            state: p.init.clone(),
            goal: p.goal.clone(),
            trajectory: vec![],
            applicable: successors(&p.init, &idx).into_iter().cloned().collect(),
            domain_name: d.name.clone(),
        };
        let client = ScriptedClient::new(["garbage", "(stack a b)", "(pick-up c)"]);
        let mut log = CallLog::new();
        let a = inspire_step(&mut req, &client, &mut log).unwrap();
        assert_eq!(a.to_string(), "(pick-up c)");
        assert_eq!(req.trajectory.len(), 1);
        assert_eq!((log.calls, log.requeries, log.records.len()), (1, 2, 3));

        let client = ScriptedClient::repeating("nonsense");
        assert!(matches!(inspire_step(&mut req, &client, &mut log), Err(StepError::InspireExhausted)));
        assert_eq!((log.calls, log.requeries), (2, 4));
    }

    #[test]
    fn predict_one_step_fragment() {
        let d = parse_domain(include_str!("../../assets/domains/blocks.pddl")).unwrap();
        let p = parse_problem(include_str!("../../assets/instances/blocks-p3.pddl"), &d).unwrap();
        let idx = ground_all(&d, &p.objects);
        let req = PredictRequest { state: p.init.clone(), goal: p.goal.clone(), domain_name: d.name.clone() };
        let ctx = PredictContext {
            domain: &d,
            objects: &p.objects,
            index: &idx,
            engine: &Engine::Internal,
            timeout: Duration::from_secs(5),
            protect: None,
        };
        let client = ScriptedClient::new([r#"[["holding", ["b"]]]"#]);
        let mut log = CallLog::new();
        let frag = predict_step(&req, &client, &ctx, &mut log).unwrap();
        assert_eq!(frag.intermediate.atoms, vec![Atom::new("holding", ["b"])]);
        assert_eq!(frag.outcome.plan().map(|p| p.to_string()), Some("(pick-up b)\n".to_string()));
    }
}
