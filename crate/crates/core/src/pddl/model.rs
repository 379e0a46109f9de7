use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Root of every type hierarchy. Untyped symbols belong to it.
pub const ROOT_TYPE: &str = "object";

/// Object name to declared type.
pub type ObjectMap = BTreeMap<String, String>;

/// A predicate applied to arguments.
///
/// Arguments starting with `?` are variables; an atom without variables is
/// ground. The derived ordering (predicate, then arguments) is the canonical
/// order used for states, goals, and serialization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<P, I, S>(predicate: P, args: I) -> Self
    where
        P: Into<String>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Atom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(|a| is_variable(a))
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Functional notation, `on(a,b)`.
    pub fn functional(&self) -> String {
        format!("{}({})", self.predicate, self.args.join(","))
    }
}

/// PDDL notation, `(on a b)`.
impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn is_variable(symbol: &str) -> bool {
    symbol.starts_with('?')
}

/// A set of ground atoms in canonical order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    atoms: BTreeSet<Atom>,
}

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn insert(&mut self, atom: Atom) -> bool {
        debug_assert!(atom.is_ground(), "state atoms must be ground: {atom}");
        self.atoms.insert(atom)
    }

    pub fn remove(&mut self, atom: &Atom) -> bool {
        self.atoms.remove(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> + '_ {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.atoms
    }

    pub fn is_superset_of<'a>(&self, atoms: impl IntoIterator<Item = &'a Atom>) -> bool {
        atoms.into_iter().all(|a| self.atoms.contains(a))
    }

    pub fn satisfies(&self, goal: &GoalSpec) -> bool {
        self.is_superset_of(goal.iter())
    }

    /// Goal atoms not present in this state, in goal order.
    pub fn missing<'a>(&self, atoms: impl IntoIterator<Item = &'a Atom>) -> Vec<Atom> {
        atoms
            .into_iter()
            .filter(|a| !self.atoms.contains(*a))
            .cloned()
            .collect()
    }
}

impl FromIterator<Atom> for State {
    fn from_iter<T: IntoIterator<Item = Atom>>(iter: T) -> Self {
        State {
            atoms: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a State {
    type Item = &'a Atom;
    type IntoIter = std::collections::btree_set::Iter<'a, Atom>;

    fn into_iter(self) -> Self::IntoIter {
        self.atoms.iter()
    }
}

/// Renders as `[(a), (b), ...]`.
impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom_list(f, self.atoms.iter())
    }
}

fn write_atom_list<'a>(f: &mut fmt::Formatter<'_>, atoms: impl Iterator<Item = &'a Atom>) -> fmt::Result {
    write!(f, "[")?;
    for (i, a) in atoms.enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{a}")?;
    }
    write!(f, "]")
}

/// Conjunction of positive ground atoms.
///
/// Keeps the order in which atoms were declared (duplicates dropped) since the
/// decomposer falls back to it for cyclic goals. Equality is set equality.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GoalSpec {
    atoms: Vec<Atom>,
}

impl GoalSpec {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut goal = GoalSpec::default();
        for a in atoms {
            goal.push(a);
        }
        goal
    }

    pub fn push(&mut self, atom: Atom) {
        debug_assert!(atom.is_ground(), "goal atoms must be ground: {atom}");
        if !self.atoms.contains(&atom) {
            self.atoms.push(atom);
        }
    }

    /// Atoms in declaration order.
    pub fn iter(&self) -> impl Iterator<Item = &Atom> + '_ {
        self.atoms.iter()
    }

    pub fn as_slice(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn canonical(&self) -> BTreeSet<Atom> {
        self.atoms.iter().cloned().collect()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Union with `other`, keeping this goal's atoms first.
    pub fn conjoin(&self, other: &GoalSpec) -> GoalSpec {
        let mut g = self.clone();
        for a in other.iter() {
            g.push(a.clone());
        }
        g
    }
}

impl PartialEq for GoalSpec {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for GoalSpec {}

impl FromIterator<Atom> for GoalSpec {
    fn from_iter<T: IntoIterator<Item = Atom>>(iter: T) -> Self {
        GoalSpec::new(iter)
    }
}

impl fmt::Display for GoalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom_list(f, self.canonical().iter())
    }
}

/// A typed parameter `?x - t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub type_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<Parameter>,
}

impl PredicateDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// Lifted STRIPS action schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Parameter>,
    pub pre: Vec<Atom>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
}

/// Type name to parent type. `object` is implicit and has no parent.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TypeHierarchy {
    parents: BTreeMap<String, String>,
}

impl TypeHierarchy {
    pub fn contains(&self, type_name: &str) -> bool {
        type_name == ROOT_TYPE || self.parents.contains_key(type_name)
    }

    pub(crate) fn insert(&mut self, type_name: String, parent: String) {
        self.parents.insert(type_name, parent);
    }

    pub fn parent(&self, type_name: &str) -> Option<&str> {
        self.parents.get(type_name).map(String::as_str)
    }

    /// Declared types other than the root, with their parents.
    pub fn declared(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.parents.iter().map(|(t, p)| (t.as_str(), p.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    /// Whether `sub` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, sub: &str, ancestor: &str) -> bool {
        if ancestor == ROOT_TYPE {
            return true;
        }
        let mut current = sub;
        // bounded walk; a malformed cyclic map cannot loop forever
        for _ in 0..=self.parents.len() {
            if current == ancestor {
                return true;
            }
            match self.parents.get(current) {
                Some(p) => current = p,
                None => return false,
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub requirements: BTreeSet<String>,
    pub types: TypeHierarchy,
    pub predicates: Vec<PredicateDecl>,
    pub schemas: Vec<ActionSchema>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn schema(&self, name: &str) -> Option<&ActionSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    /// Predicates that no schema adds or deletes.
    pub fn static_predicates(&self) -> BTreeSet<&str> {
        let fluent: BTreeSet<&str> = self
            .schemas
            .iter()
            .flat_map(|s| s.add.iter().chain(&s.del))
            .map(|a| a.predicate.as_str())
            .collect();
        self.predicates
            .iter()
            .map(|p| p.name.as_str())
            .filter(|p| !fluent.contains(p))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub domain_name: String,
    pub objects: ObjectMap,
    pub init: State,
    pub goal: GoalSpec,
}
