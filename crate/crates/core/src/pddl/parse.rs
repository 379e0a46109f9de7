use std::collections::{BTreeMap, BTreeSet};

use super::model::*;
use super::sexpr::{self, Pos, Sexpr};
use super::PddlError;

const SUPPORTED_REQUIREMENTS: [&str; 2] = [":strips", ":typing"];

/// Problem parsing knobs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Treat a `(:domain ...)` name differing from the parsed domain as an error
    /// instead of a logged warning.
    pub strict_domain_name: bool,
}

pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let root = sexpr::read(text)?;
    let items = expect_define(&root, "domain")?;
    let name = items.1;

    let mut domain = Domain {
        name,
        requirements: BTreeSet::new(),
        types: TypeHierarchy::default(),
        predicates: Vec::new(),
        schemas: Vec::new(),
    };
    let mut saw_types = false;

    for section in items.0 {
        let head = section
            .head()
            .ok_or_else(|| PddlError::syntax(section.pos(), "expected a domain section"))?;
        let body = &section.as_list().unwrap()[1..];
        match head {
            ":requirements" => domain.requirements.extend(parse_requirements(body)?),
            ":types" => {
                saw_types = true;
                for (name, parent) in parse_typed_list(body, false)? {
                    if name == ROOT_TYPE {
                        continue;
                    }
                    domain.types.insert(name, parent);
                }
            }
            ":predicates" => {
                for decl in body {
                    domain.predicates.push(parse_predicate_decl(decl)?);
                }
            }
            ":action" => domain.schemas.push(parse_action(section)?),
            other => return Err(PddlError::UnsupportedFeature(other.to_string())),
        }
    }

    if saw_types && !domain.requirements.is_empty() && !domain.requirements.contains(":typing") {
        log::warn!("domain {} declares :types without the :typing requirement", domain.name);
    }
    validate_domain(&domain)?;
    Ok(domain)
}

pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, PddlError> {
    parse_problem_with(text, domain, ParseOptions::default())
}

pub fn parse_problem_with(text: &str, domain: &Domain, opts: ParseOptions) -> Result<Problem, PddlError> {
    let root = sexpr::read(text)?;
    let (sections, name) = expect_define(&root, "problem")?;

    let mut domain_name = None;
    let mut objects = ObjectMap::new();
    let mut init = State::new();
    let mut goal = None;

    for section in sections {
        let head = section
            .head()
            .ok_or_else(|| PddlError::syntax(section.pos(), "expected a problem section"))?;
        let body = &section.as_list().unwrap()[1..];
        match head {
            ":domain" => {
                let d = single_symbol(body, section.pos(), "domain name")?;
                domain_name = Some(d.to_string());
            }
            ":requirements" => {
                parse_requirements(body)?;
            }
            ":objects" => {
                for (obj, ty) in parse_typed_list(body, false)? {
                    if !domain.types.contains(&ty) {
                        return Err(PddlError::UnknownType(ty));
                    }
                    if objects.insert(obj.clone(), ty).is_some() {
                        return Err(PddlError::DuplicateName(obj));
                    }
                }
            }
            ":init" => {
                for fact in body {
                    let atom = parse_atom(fact)?;
                    init.insert(atom);
                }
            }
            ":goal" => {
                let body = match body {
                    [g] => g,
                    _ => return Err(PddlError::syntax(section.pos(), "expected one goal formula")),
                };
                goal = Some(GoalSpec::new(parse_conjunction(body, "goal")?));
            }
            other => return Err(PddlError::UnsupportedFeature(other.to_string())),
        }
    }

    let domain_name =
        domain_name.ok_or_else(|| PddlError::syntax(root.pos(), "missing (:domain ...)"))?;
    if domain_name != domain.name {
        if opts.strict_domain_name {
            return Err(PddlError::DomainNameMismatch {
                expected: domain.name.clone(),
                found: domain_name,
            });
        }
        log::warn!(
            "problem {name} names domain {domain_name}, parsed against {}",
            domain.name
        );
    }
    let goal = goal.ok_or_else(|| PddlError::syntax(root.pos(), "missing (:goal ...)"))?;

    let problem = Problem {
        name,
        domain_name,
        objects,
        init,
        goal,
    };
    for atom in problem.init.iter().chain(problem.goal.iter()) {
        check_ground_atom(atom, domain, &problem.objects)?;
    }
    Ok(problem)
}

/// Checks that `atom` names a declared predicate with the right arity over
/// declared objects.
pub fn check_ground_atom(atom: &Atom, domain: &Domain, objects: &ObjectMap) -> Result<(), PddlError> {
    let decl = domain
        .predicate(&atom.predicate)
        .ok_or_else(|| PddlError::UndeclaredPredicate(atom.predicate.clone()))?;
    if decl.arity() != atom.arity() {
        return Err(PddlError::ArityMismatch {
            predicate: atom.predicate.clone(),
            expected: decl.arity(),
            found: atom.arity(),
        });
    }
    for arg in &atom.args {
        if !objects.contains_key(arg) {
            return Err(PddlError::UndeclaredObject(arg.clone()));
        }
    }
    Ok(())
}

type DefineBody<'a> = (&'a [Sexpr], String);

fn expect_define<'a>(root: &'a Sexpr, kind: &str) -> Result<DefineBody<'a>, PddlError> {
    let items = root
        .as_list()
        .filter(|_| root.head() == Some("define"))
        .ok_or_else(|| PddlError::syntax(root.pos(), "expected (define ...)"))?;
    let header = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(root.pos(), format!("expected ({kind} <name>)")))?;
    match header.as_list() {
        Some([Sexpr::Symbol(k, _), Sexpr::Symbol(name, _)]) if k == kind => {
            Ok((&items[2..], name.clone()))
        }
        _ => Err(PddlError::syntax(header.pos(), format!("expected ({kind} <name>)"))),
    }
}

fn single_symbol<'a>(body: &'a [Sexpr], pos: Pos, what: &str) -> Result<&'a str, PddlError> {
    match body {
        [Sexpr::Symbol(s, _)] => Ok(s),
        _ => Err(PddlError::syntax(pos, format!("expected a single {what}"))),
    }
}

fn parse_requirements(body: &[Sexpr]) -> Result<Vec<String>, PddlError> {
    body.iter()
        .map(|r| {
            let flag = r
                .as_symbol()
                .ok_or_else(|| PddlError::syntax(r.pos(), "expected a requirement flag"))?;
            if SUPPORTED_REQUIREMENTS.contains(&flag) {
                Ok(flag.to_string())
            } else {
                Err(PddlError::UnsupportedFeature(flag.to_string()))
            }
        })
        .collect()
}

/// Parses `a b - t c` groupings. Names without a trailing type get `object`.
fn parse_typed_list(body: &[Sexpr], variables: bool) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut iter = body.iter();
    while let Some(item) = iter.next() {
        let sym = match item {
            Sexpr::Symbol(s, _) => s,
            Sexpr::List(..) if item.head() == Some("either") => {
                return Err(PddlError::UnsupportedFeature("either".into()))
            }
            Sexpr::List(..) => return Err(PddlError::syntax(item.pos(), "expected a name")),
        };
        if sym == "-" {
            let ty = iter
                .next()
                .ok_or_else(|| PddlError::syntax(item.pos(), "expected a type after '-'"))?;
            let ty = match ty {
                Sexpr::Symbol(t, _) => t.clone(),
                Sexpr::List(..) if ty.head() == Some("either") => {
                    return Err(PddlError::UnsupportedFeature("either".into()))
                }
                Sexpr::List(..) => return Err(PddlError::syntax(ty.pos(), "expected a type name")),
            };
            if pending.is_empty() {
                return Err(PddlError::syntax(item.pos(), "type without names"));
            }
            out.extend(pending.drain(..).map(|n| (n, ty.clone())));
        } else {
            if variables != is_variable(sym) {
                let what = if variables { "a ?variable" } else { "a name" };
                return Err(PddlError::syntax(item.pos(), format!("expected {what}, found {sym}")));
            }
            pending.push(sym.clone());
        }
    }
    out.extend(pending.into_iter().map(|n| (n, ROOT_TYPE.to_string())));
    Ok(out)
}

fn parse_parameters(body: &[Sexpr]) -> Result<Vec<Parameter>, PddlError> {
    Ok(parse_typed_list(body, true)?
        .into_iter()
        .map(|(name, type_name)| Parameter { name, type_name })
        .collect())
}

fn parse_predicate_decl(decl: &Sexpr) -> Result<PredicateDecl, PddlError> {
    let items = decl
        .as_list()
        .ok_or_else(|| PddlError::syntax(decl.pos(), "expected a predicate declaration"))?;
    let name = items
        .first()
        .and_then(Sexpr::as_symbol)
        .ok_or_else(|| PddlError::syntax(decl.pos(), "expected a predicate name"))?;
    Ok(PredicateDecl {
        name: name.to_string(),
        params: parse_parameters(&items[1..])?,
    })
}

fn parse_atom(expr: &Sexpr) -> Result<Atom, PddlError> {
    let items = expr
        .as_list()
        .ok_or_else(|| PddlError::syntax(expr.pos(), "expected an atom"))?;
    let mut symbols = Vec::with_capacity(items.len());
    for item in items {
        match item {
            Sexpr::Symbol(s, _) => symbols.push(s.clone()),
            Sexpr::List(..) => return Err(PddlError::syntax(item.pos(), "nested formula in an atom")),
        }
    }
    let (predicate, args) = symbols
        .split_first()
        .ok_or_else(|| PddlError::syntax(expr.pos(), "empty atom"))?;
    if predicate == "=" {
        return Err(PddlError::UnsupportedFeature(":equality".into()));
    }
    Ok(Atom::new(predicate.clone(), args.iter().cloned()))
}

/// A single atom or `(and ...)` of atoms; anything else is unsupported.
fn parse_conjunction(expr: &Sexpr, context: &str) -> Result<Vec<Atom>, PddlError> {
    match expr.head() {
        Some("and") => expr.as_list().unwrap()[1..]
            .iter()
            .map(|e| parse_conjunction(e, context))
            .collect::<Result<Vec<_>, _>>()
            .map(|v| v.into_iter().flatten().collect()),
        Some("not") => Err(PddlError::UnsupportedFeature(format!("negative {context}"))),
        Some(op @ ("or" | "imply" | "forall" | "exists" | "when")) => {
            Err(PddlError::UnsupportedFeature(op.to_string()))
        }
        _ => Ok(vec![parse_atom(expr)?]),
    }
}

fn parse_effect(expr: &Sexpr, add: &mut Vec<Atom>, del: &mut Vec<Atom>) -> Result<(), PddlError> {
    match expr.head() {
        Some("and") => {
            for e in &expr.as_list().unwrap()[1..] {
                parse_effect(e, add, del)?;
            }
            Ok(())
        }
        Some("not") => match expr.as_list().unwrap() {
            [_, inner] => {
                del.push(parse_atom(inner)?);
                Ok(())
            }
            _ => Err(PddlError::syntax(expr.pos(), "(not ...) takes one atom")),
        },
        Some(op @ ("forall" | "when" | "increase" | "decrease" | "assign")) => {
            Err(PddlError::UnsupportedFeature(op.to_string()))
        }
        _ => {
            add.push(parse_atom(expr)?);
            Ok(())
        }
    }
}

fn parse_action(section: &Sexpr) -> Result<ActionSchema, PddlError> {
    let items = section.as_list().unwrap();
    let name = items
        .get(1)
        .and_then(Sexpr::as_symbol)
        .ok_or_else(|| PddlError::syntax(section.pos(), "expected an action name"))?;
    let mut schema = ActionSchema {
        name: name.to_string(),
        params: Vec::new(),
        pre: Vec::new(),
        add: Vec::new(),
        del: Vec::new(),
    };

    let mut rest = items[2..].iter();
    while let Some(key) = rest.next() {
        let key_name = key
            .as_symbol()
            .ok_or_else(|| PddlError::syntax(key.pos(), "expected an action keyword"))?;
        let value = rest
            .next()
            .ok_or_else(|| PddlError::syntax(key.pos(), format!("missing value for {key_name}")))?;
        match key_name {
            ":parameters" => {
                let list = value
                    .as_list()
                    .ok_or_else(|| PddlError::syntax(value.pos(), "expected a parameter list"))?;
                schema.params = parse_parameters(list)?;
            }
            ":precondition" => schema.pre = parse_conjunction(value, "preconditions")?,
            ":effect" => parse_effect(value, &mut schema.add, &mut schema.del)?,
            other => return Err(PddlError::UnsupportedFeature(other.to_string())),
        }
    }
    dedup(&mut schema.pre);
    dedup(&mut schema.add);
    dedup(&mut schema.del);
    Ok(schema)
}

fn dedup(atoms: &mut Vec<Atom>) {
    let mut seen = BTreeSet::new();
    atoms.retain(|a| seen.insert(a.clone()));
}

fn validate_domain(domain: &Domain) -> Result<(), PddlError> {
    for (ty, parent) in domain.types.declared() {
        if !domain.types.contains(parent) {
            return Err(PddlError::UnknownType(parent.to_string()));
        }
        let mut current = ty;
        for _ in 0..=domain.types.declared().count() {
            match domain.types.parent(current) {
                Some(p) => current = p,
                None => break,
            }
        }
        if current != ROOT_TYPE {
            return Err(PddlError::syntax(Pos { line: 1, col: 1 }, format!("cyclic type {ty}")));
        }
    }

    let mut predicate_names = BTreeSet::new();
    for p in &domain.predicates {
        if !predicate_names.insert(p.name.as_str()) {
            return Err(PddlError::DuplicateName(p.name.clone()));
        }
        for param in &p.params {
            if !domain.types.contains(&param.type_name) {
                return Err(PddlError::UnknownType(param.type_name.clone()));
            }
        }
    }
    let arities: BTreeMap<&str, usize> = domain
        .predicates
        .iter()
        .map(|p| (p.name.as_str(), p.arity()))
        .collect();

    let mut schema_names = BTreeSet::new();
    for s in &domain.schemas {
        if !schema_names.insert(s.name.as_str()) {
            return Err(PddlError::DuplicateName(s.name.clone()));
        }
        let mut vars = BTreeSet::new();
        for param in &s.params {
            if !vars.insert(param.name.as_str()) {
                return Err(PddlError::DuplicateName(format!("{} in {}", param.name, s.name)));
            }
            if !domain.types.contains(&param.type_name) {
                return Err(PddlError::UnknownType(param.type_name.clone()));
            }
        }
        for atom in s.pre.iter().chain(&s.add).chain(&s.del) {
            let expected = *arities
                .get(atom.predicate.as_str())
                .ok_or_else(|| PddlError::UndeclaredPredicate(atom.predicate.clone()))?;
            if expected != atom.arity() {
                return Err(PddlError::ArityMismatch {
                    predicate: atom.predicate.clone(),
                    expected,
                    found: atom.arity(),
                });
            }
            for arg in &atom.args {
                if !vars.contains(arg.as_str()) {
                    return Err(PddlError::UnknownVariable {
                        schema: s.name.clone(),
                        variable: arg.clone(),
                    });
                }
            }
        }
        if let Some(atom) = s.add.iter().find(|a| s.del.contains(a)) {
            return Err(PddlError::ConflictingEffect {
                schema: s.name.clone(),
                atom: atom.to_string(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = "(define (domain d) (:requirements :strips) (:predicates (p ?x)))";

    #[test]
    fn minimal_domain() {
        let d = parse_domain(MINI).unwrap();
        assert_eq!(d.name, "d");
        assert!(d.schemas.is_empty());
        assert_eq!(d.predicates.len(), 1);
        assert_eq!(d.predicates[0].params[0].type_name, ROOT_TYPE);
    }

    #[test]
    fn rejects_unsupported_requirements() {
        let err = parse_domain("(define (domain d) (:requirements :adl))").unwrap_err();
        assert_eq!(err, PddlError::UnsupportedFeature(":adl".into()));
        let err = parse_domain(
            "(define (domain d) (:predicates (p ?x)) \
             (:action a :parameters (?x) :precondition (not (p ?x)) :effect (p ?x)))",
        )
        .unwrap_err();
        assert!(matches!(err, PddlError::UnsupportedFeature(_)));
    }

    #[test]
    fn arity_and_type_errors() {
        let err = parse_domain(
            "(define (domain d) (:predicates (p ?x)) \
             (:action a :parameters (?x ?y) :precondition (p ?x ?y) :effect (p ?x)))",
        )
        .unwrap_err();
        assert_eq!(
            err,
            PddlError::ArityMismatch { predicate: "p".into(), expected: 1, found: 2 }
        );
        let err = parse_domain("(define (domain d) (:types a - b) (:predicates (p ?x - a)))").unwrap_err();
        assert_eq!(err, PddlError::UnknownType("b".into()));
        let err = parse_domain("(define (domain d) (:predicates (p ?x - thing)))").unwrap_err();
        assert_eq!(err, PddlError::UnknownType("thing".into()));
    }

    #[test]
    fn conflicting_literal_effects_rejected() {
        let err = parse_domain(
            "(define (domain d) (:predicates (p ?x)) \
             (:action a :parameters (?x) :precondition (and) :effect (and (p ?x) (not (p ?x)))))",
        )
        .unwrap_err();
        assert!(matches!(err, PddlError::ConflictingEffect { .. }));
    }

    #[test]
    fn problem_errors() {
        let d = parse_domain(MINI).unwrap();
        let err = parse_problem(
            "(define (problem q) (:domain d) (:objects a) (:init (p a)) (:goal (p e)))",
            &d,
        )
        .unwrap_err();
        assert_eq!(err, PddlError::UndeclaredObject("e".into()));
        let err = parse_problem(
            "(define (problem q) (:domain d) (:objects a) (:init (r a)) (:goal (and)))",
            &d,
        )
        .unwrap_err();
        assert_eq!(err, PddlError::UndeclaredPredicate("r".into()));
        let text = "(define (problem q) (:domain other) (:objects a) (:init) (:goal (and)))";
        assert!(parse_problem(text, &d).is_ok());
        let strict = ParseOptions { strict_domain_name: true };
        assert!(matches!(
            parse_problem_with(text, &d, strict),
            Err(PddlError::DomainNameMismatch { .. })
        ));
    }

    #[test]
    fn init_atoms_deduplicated_and_typed_objects() {
        let d = parse_domain(
            "(define (domain d) (:requirements :typing) (:types block - object) (:predicates (p ?x - block)))",
        )
        .unwrap();
        let p = parse_problem(
            "(define (problem q) (:domain d) (:objects a b - block c) (:init (p a) (P A)) (:goal (and (p b))))",
            &d,
        )
        .unwrap();
        assert_eq!(p.init.len(), 1);
        assert_eq!(p.objects["a"], "block");
        assert_eq!(p.objects["c"], ROOT_TYPE);
        assert_eq!(p.goal.len(), 1);
    }
}
