use std::fmt::Write as _;

use super::model::*;
use super::parse::check_ground_atom;
use super::PddlError;

/// Renders a sub-instance `<state, goal>` as a PDDL problem file.
///
/// Objects, init, and goal atoms are emitted in canonical order, so equal
/// inputs always produce identical bytes.
pub fn serialize_problem(
    state: &State,
    goal: &GoalSpec,
    domain: &Domain,
    objects: &ObjectMap,
    name: &str,
) -> Result<String, PddlError> {
    let goal_atoms = goal.canonical();
    for atom in state.iter().chain(goal_atoms.iter()) {
        if !atom.is_ground() {
            return Err(PddlError::InvalidAtom(atom.to_string()));
        }
        check_ground_atom(atom, domain, objects).map_err(|e| PddlError::InvalidAtom(format!("{atom}: {e}")))?;
    }

    let mut out = String::new();
    writeln!(out, "(define (problem {name})").unwrap();
    writeln!(out, "  (:domain {})", domain.name).unwrap();
    out.push_str("  (:objects");
    for (obj, ty) in objects {
        if ty == ROOT_TYPE {
            write!(out, " {obj}").unwrap();
        } else {
            write!(out, " {obj} - {ty}").unwrap();
        }
    }
    out.push_str(")\n  (:init");
    for atom in state {
        write!(out, " {atom}").unwrap();
    }
    out.push_str(")\n  (:goal (and");
    for atom in &goal_atoms {
        write!(out, " {atom}").unwrap();
    }
    out.push_str(")))\n");
    Ok(out)
}

fn write_params(out: &mut String, params: &[Parameter]) {
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&p.name);
        if p.type_name != ROOT_TYPE {
            write!(out, " - {}", p.type_name).unwrap();
        }
    }
}

/// Renders a domain back to PDDL, for handing sub-instances to an external planner.
pub fn serialize_domain(domain: &Domain) -> String {
    let mut out = String::new();
    writeln!(out, "(define (domain {})", domain.name).unwrap();
    if !domain.requirements.is_empty() {
        let reqs: Vec<&str> = domain.requirements.iter().map(String::as_str).collect();
        writeln!(out, "  (:requirements {})", reqs.join(" ")).unwrap();
    }
    if !domain.types.is_empty() {
        out.push_str("  (:types");
        for (ty, parent) in domain.types.declared() {
            write!(out, " {ty} - {parent}").unwrap();
        }
        out.push_str(")\n");
    }
    out.push_str("  (:predicates");
    for p in &domain.predicates {
        write!(out, " ({}", p.name).unwrap();
        if !p.params.is_empty() {
            out.push(' ');
            write_params(&mut out, &p.params);
        }
        out.push(')');
    }
    out.push_str(")\n");
    for s in &domain.schemas {
        writeln!(out, "  (:action {}", s.name).unwrap();
        out.push_str("    :parameters (");
        write_params(&mut out, &s.params);
        out.push_str(")\n    :precondition (and");
        for a in &s.pre {
            write!(out, " {a}").unwrap();
        }
        out.push_str(")\n    :effect (and");
        for a in &s.add {
            write!(out, " {a}").unwrap();
        }
        for a in &s.del {
            write!(out, " (not {a})").unwrap();
        }
        out.push_str("))\n");
    }
    out.push_str(")\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    const DOMAIN: &str = include_str!("../../assets/domains/blocks.pddl");
    const P3: &str = include_str!("../../assets/instances/blocks-p3.pddl");

    #[test]
    fn renders_expected_sections() {
        let d = parse_domain(DOMAIN).unwrap();
        let p = parse_problem(P3, &d).unwrap();
        let goal = GoalSpec::new([Atom::new("on", ["a", "b"])]);
        let text = serialize_problem(&p.init, &goal, &d, &p.objects, "sub").unwrap();
        assert!(text.contains("(:init (clear a)"), "{text}");
        assert!(text.contains("(:goal (and (on a b)))"), "{text}");
        let text = serialize_problem(&p.init, &GoalSpec::default(), &d, &p.objects, "sub").unwrap();
        assert!(text.contains("(:goal (and))"), "{text}");
    }

    #[test]
    fn rejects_foreign_atoms() {
        let d = parse_domain(DOMAIN).unwrap();
        let p = parse_problem(P3, &d).unwrap();
        let goal = GoalSpec::new([Atom::new("on", ["a", "z"])]);
        assert!(matches!(
            serialize_problem(&p.init, &goal, &d, &p.objects, "x"),
            Err(PddlError::InvalidAtom(_))
        ));
    }

    #[test]
    fn domain_round_trip() {
        for text in [DOMAIN, include_str!("../../assets/domains/depot.pddl")] {
            let d = parse_domain(text).unwrap();
            let again = parse_domain(&serialize_domain(&d)).unwrap();
            assert_eq!(d, again);
        }
    }
}
