//! Parsing model replies into actions and intermediate states.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::grounding::GroundAction;
use crate::pddl::{check_ground_atom, Atom, Domain, GoalSpec, ObjectMap, PddlError, State};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InspireParseError {
    #[error("no parenthesized action in reply")]
    ParseFailure,
    #[error("{0} is not an applicable action")]
    NotInApplicableSet(String),
}

/// Picks the action named by the first parenthesized group of `text`.
///
/// `(stack, b c)`, `(stack b c)` and `(stack, b, c)` all name the same action.
/// Matching is case-insensitive and must hit a member of `applicable`.
pub fn parse_inspire_response(text: &str, applicable: &[GroundAction]) -> Result<GroundAction, InspireParseError> {
    let open = text.find('(').ok_or(InspireParseError::ParseFailure)?;
    let close = text[open..].find(')').ok_or(InspireParseError::ParseFailure)? + open;
    let words: Vec<String> = text[open + 1..close]
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty())
        .map(|w| w.trim_matches(|c| c == '\'' || c == '"').to_lowercase())
        .filter(|w| !w.is_empty())
        .collect();
    let (name, args) = words.split_first().ok_or(InspireParseError::ParseFailure)?;
    applicable
        .iter()
        .find(|a| &a.schema_name == name && a.args == args)
        .cloned()
        .ok_or_else(|| {
            let mut shown = format!("({name}");
            for a in args {
                shown.push(' ');
                shown.push_str(a);
            }
            shown.push(')');
            InspireParseError::NotInApplicableSet(shown)
        })
}

/// A validated intermediate goal of one or two atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedIntermediate {
    pub atoms: Vec<Atom>,
}

impl ParsedIntermediate {
    pub fn as_goal(&self) -> GoalSpec {
        GoalSpec::new(self.atoms.iter().cloned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredictParseError {
    #[error("no JSON array of atoms in reply")]
    ParseFailure,
    #[error("reply names {0} atoms, at most 2 allowed")]
    TooManyAtoms(usize),
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("predicate {predicate} expects {expected} arguments, found {found}")]
    ArityMismatch { predicate: String, expected: usize, found: usize },
    #[error("degenerate intermediate state: {0}")]
    DegenerateState(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    List(Vec<Value>),
}

/// A tolerant reader for the array literals models produce: single or double
/// quotes, bare words, arbitrary whitespace.
struct Reader<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
}

impl Reader<'_> {
    fn skip_ws(&mut self) {
        while self.chars.next_if(|(_, c)| c.is_whitespace()).is_some() {}
    }

    fn value(&mut self) -> Option<Value> {
        self.skip_ws();
        match self.chars.peek()?.1 {
            '[' => {
                self.chars.next();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    if self.chars.next_if(|(_, c)| *c == ']').is_some() {
                        return Some(Value::List(items));
                    }
                    items.push(self.value()?);
                    self.skip_ws();
                    match self.chars.next()?.1 {
                        ',' => continue,
                        ']' => return Some(Value::List(items)),
                        _ => return None,
                    }
                }
            }
            q @ ('\'' | '"') => {
                self.chars.next();
                let mut s = String::new();
                loop {
                    let (_, c) = self.chars.next()?;
                    if c == q {
                        return Some(Value::Str(s));
                    }
                    s.push(c);
                }
            }
            _ => {
                let mut s = String::new();
                while let Some((_, c)) = self.chars.next_if(|(_, c)| c.is_alphanumeric() || "-_".contains(*c)) {
                    s.push(c);
                }
                (!s.is_empty()).then_some(Value::Str(s))
            }
        }
    }
}

fn entry_to_atom(v: &Value) -> Option<Atom> {
    let Value::List(items) = v else { return None };
    let (Value::Str(pred), rest) = items.split_first()? else { return None };
    let args: Vec<String> = match rest {
        // ["on", ["a", "b"]]
        [Value::List(args)] => args
            .iter()
            .map(|a| match a {
                Value::Str(s) => Some(s.clone()),
                Value::List(_) => None,
            })
            .collect::<Option<_>>()?,
        // ["on", "a", "b"]
        flat => flat
            .iter()
            .map(|a| match a {
                Value::Str(s) => Some(s.clone()),
                Value::List(_) => None,
            })
            .collect::<Option<_>>()?,
    };
    Some(Atom::new(pred.trim().to_lowercase(), args.iter().map(|a| a.trim().to_lowercase())))
}

fn first_atom_array(text: &str) -> Option<Vec<Atom>> {
    for (start, _) in text.match_indices('[') {
        let mut reader = Reader { chars: text[start..].char_indices().peekable() };
        let Some(Value::List(items)) = reader.value() else { continue };
        // a lone entry without the outer array
        if matches!(items.first(), Some(Value::Str(_))) {
            if let Some(atom) = entry_to_atom(&Value::List(items)) {
                return Some(vec![atom]);
            }
            continue;
        }
        if let Some(atoms) = items.iter().map(entry_to_atom).collect::<Option<Vec<_>>>() {
            return Some(atoms);
        }
    }
    None
}

/// Reads an intermediate state from a reply and checks that it is usable:
/// one or two well-formed atoms, not already all true in `state`, and not
/// identical to the goal.
pub fn parse_predict_response(
    text: &str,
    domain: &Domain,
    objects: &ObjectMap,
    state: &State,
    goal: &GoalSpec,
) -> Result<ParsedIntermediate, PredictParseError> {
    let atoms = first_atom_array(text).ok_or(PredictParseError::ParseFailure)?;
    let atoms: BTreeSet<Atom> = atoms.into_iter().collect();
    if atoms.is_empty() {
        return Err(PredictParseError::ParseFailure);
    }
    if atoms.len() > 2 {
        return Err(PredictParseError::TooManyAtoms(atoms.len()));
    }
    for atom in &atoms {
        check_ground_atom(atom, domain, objects).map_err(|e| match e {
            PddlError::UndeclaredPredicate(p) => PredictParseError::UnknownPredicate(p),
            PddlError::UndeclaredObject(o) => PredictParseError::UnknownObject(o),
            PddlError::ArityMismatch { predicate, expected, found } => {
                PredictParseError::ArityMismatch { predicate, expected, found }
            }
            _ => PredictParseError::ParseFailure,
        })?;
    }
    if state.is_superset_of(&atoms) {
        return Err(PredictParseError::DegenerateState("already true in the current state".into()));
    }
    if atoms == goal.canonical() {
        return Err(PredictParseError::DegenerateState("identical to the goal".into()));
    }
    Ok(ParsedIntermediate { atoms: atoms.into_iter().collect() })
}
