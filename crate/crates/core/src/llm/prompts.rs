//! Prompt templates. The bundled text assets are rendered by plain slot
//! substitution so they stay diffable against their published wording.

use crate::grounding::GroundAction;
use crate::pddl::{GoalSpec, State};

const INSPIRE: &str = include_str!("../../assets/prompts/inspire.txt");
const PREDICT: &str = include_str!("../../assets/prompts/predict.txt");
const DIRECT: &str = include_str!("../../assets/prompts/direct.txt");

/// Input of one Inspire query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InspireRequest {
    pub state: State,
    pub goal: GoalSpec,
    /// Actions taken so far in this sub-goal episode.
    pub trajectory: Vec<GroundAction>,
    pub applicable: Vec<GroundAction>,
    pub domain_name: String,
}

/// Input of one Predict query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictRequest {
    pub state: State,
    pub goal: GoalSpec,
    pub domain_name: String,
}

/// Long and short display names used in the role paragraphs.
///
/// ```
/// assert_eq!(subgoal::llm::domain_labels("BLOCKS"), ("Blocks World".to_string(), "Blocks".to_string()));
/// assert_eq!(subgoal::llm::domain_labels("depot").0, "depot");
/// ```
pub fn domain_labels(domain_name: &str) -> (String, String) {
    match domain_name.to_lowercase().as_str() {
        "blocks" | "blocksworld" | "blocks-world" => ("Blocks World".into(), "Blocks".into()),
        other => (other.to_string(), other.to_string()),
    }
}

fn list<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = items.into_iter().map(|i| i.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn fill(template: &str, domain_name: &str, slots: &[(&str, String)]) -> String {
    let (long, short) = domain_labels(domain_name);
    let mut out = template.replace("{domain_long}", &long).replace("{domain_short}", &short);
    for (key, value) in slots {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

pub fn render_inspire_prompt(req: &InspireRequest) -> String {
    fill(
        INSPIRE,
        &req.domain_name,
        &[
            ("goal", list(req.goal.canonical().iter())),
            ("init", req.state.to_string()),
            ("history", list(&req.trajectory)),
            ("actions", list(&req.applicable)),
        ],
    )
}

pub fn render_predict_prompt(req: &PredictRequest) -> String {
    fill(
        PREDICT,
        &req.domain_name,
        &[("goal", list(req.goal.canonical().iter())), ("init", req.state.to_string())],
    )
}

/// The stand-alone template that asks a model for a complete plan.
pub fn render_direct_prompt(domain_name: &str, state: &State, goal: &GoalSpec) -> String {
    fill(
        DIRECT,
        domain_name,
        &[("goal", list(goal.canonical().iter())), ("init", state.to_string())],
    )
}
