//! IPC plan files: one `(name arg ...)` per line, `;` comments.

use thiserror::Error;

use super::Plan;
use crate::grounding::{instantiate, InstantiateError};
use crate::pddl::{Domain, ObjectMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanParseError {
    #[error("plan line {line}: expected '(name arg ...)', found {text:?}")]
    Malformed { line: usize, text: String },
    #[error("plan line {line}: {source}")]
    Action { line: usize, source: InstantiateError },
}

/// Parses plan text; blank lines and `;` lines (e.g. `; cost = 4`) are skipped.
pub fn parse_plan(text: &str, domain: &Domain, objects: &ObjectMap) -> Result<Plan, PlanParseError> {
    let mut actions = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split(';').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let inner = line
            .strip_prefix('(')
            .and_then(|l| l.strip_suffix(')'))
            .ok_or_else(|| PlanParseError::Malformed { line: line_no, text: raw.to_string() })?;
        let mut words = inner
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase);
        let name = words
            .next()
            .ok_or_else(|| PlanParseError::Malformed { line: line_no, text: raw.to_string() })?;
        let args: Vec<String> = words.collect();
        let action = instantiate(domain, objects, &name, &args)
            .map_err(|source| PlanParseError::Action { line: line_no, source })?;
        actions.push(action);
    }
    Ok(Plan::new(actions))
}

/// Plan text with the unit-cost trailer.
pub fn write_plan(plan: &Plan) -> String {
    format!("{plan}; cost = {} (unit cost)\n", plan.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    #[test]
    fn parses_ipc_plan_files() {
        let d = parse_domain(include_str!("../../assets/domains/blocks.pddl")).unwrap();
        let p = parse_problem(include_str!("../../assets/instances/blocks-p3.pddl"), &d).unwrap();
        let plan = parse_plan(include_str!("../../assets/instances/blocks-p3.plan"), &d, &p.objects).unwrap();
        assert_eq!(plan.len(), 4);
        assert_eq!(write_plan(&plan), include_str!("../../assets/instances/blocks-p3.plan"));

        let plan = parse_plan("; header\n(PICK-UP B)\n\n(stack b c) ; trailing\n", &d, &p.objects).unwrap();
        assert_eq!(plan.len(), 2);
    }

    #[test]
    fn rejects_bad_lines() {
        let d = parse_domain(include_str!("../../assets/domains/blocks.pddl")).unwrap();
        let p = parse_problem(include_str!("../../assets/instances/blocks-p3.pddl"), &d).unwrap();
        assert!(matches!(parse_plan("pick-up b", &d, &p.objects), Err(PlanParseError::Malformed { line: 1, .. })));
        assert!(matches!(
            parse_plan("(fly a)", &d, &p.objects),
            Err(PlanParseError::Action { source: InstantiateError::UnknownSchema(_), .. })
        ));
        assert!(matches!(
            parse_plan("(pick-up z)", &d, &p.objects),
            Err(PlanParseError::Action { source: InstantiateError::UnknownObject(_), .. })
        ));
    }
}
