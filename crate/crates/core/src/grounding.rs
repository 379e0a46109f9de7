//! Grounding lifted schemas over problem objects, successor generation, and
//! state progression.
//!
//! [`ground_all`] enumerates every type-respecting substitution of every
//! schema, repeated objects included. The resulting [`GroundingIndex`] is
//! immutable and is shared by the search engine, the LLM protocols, and the
//! validator.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{ActionSchema, Atom, Domain, ObjectMap, State};

/// A fully instantiated action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAction {
    pub schema_name: String,
    pub args: Vec<String>,
    pub pre: Vec<Atom>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
}

impl GroundAction {
    pub fn is_applicable(&self, state: &State) -> bool {
        applicable(state, self)
    }
}

/// `(name a b)`
impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.schema_name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundingError {
    #[error("{action} is not applicable: missing {}", render_atoms(.missing))]
    NotApplicable { action: String, missing: Vec<Atom> },
    #[error("step {index}: {action} is not applicable: missing {}", render_atoms(.missing))]
    NotApplicableAt { index: usize, action: String, missing: Vec<Atom> },
}

pub(crate) fn render_atoms(atoms: &[Atom]) -> String {
    atoms.iter().map(Atom::to_string).collect::<Vec<_>>().join(" ")
}

/// Interned view of one ground action.
#[derive(Debug, Clone)]
pub(crate) struct Op {
    pub pre: Box<[u32]>,
    pub add: Box<[u32]>,
    pub del: Box<[u32]>,
    /// Preconditions over predicates no action changes.
    pub static_pre: Box<[u32]>,
}

/// Every ground action of a problem plus lookup structures.
#[derive(Debug, Clone)]
pub struct GroundingIndex {
    all: Vec<GroundAction>,
    by_precondition: BTreeMap<Atom, Vec<usize>>,
    by_display: HashMap<String, usize>,
    atoms: Vec<Atom>,
    atom_ids: HashMap<Atom, u32>,
    ops: Vec<Op>,
    pre_to_ops: Vec<Vec<u32>>,
}

impl GroundingIndex {
    /// Ground actions ordered by (schema name, args).
    pub fn all(&self) -> &[GroundAction] {
        &self.all
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    /// Actions whose preconditions mention `atom`.
    pub fn by_precondition(&self, atom: &Atom) -> impl Iterator<Item = &GroundAction> + '_ {
        self.by_precondition
            .get(atom)
            .into_iter()
            .flatten()
            .map(|&i| &self.all[i])
    }

    pub fn precondition_atoms(&self) -> impl Iterator<Item = &Atom> + '_ {
        self.by_precondition.keys()
    }

    /// Looks an action up by name and arguments (case-insensitive).
    pub fn find(&self, name: &str, args: &[&str]) -> Option<&GroundAction> {
        let mut key = format!("({}", name.to_lowercase());
        for a in args {
            key.push(' ');
            key.push_str(&a.to_lowercase());
        }
        key.push(')');
        self.by_display.get(&key).map(|&i| &self.all[i])
    }

    pub(crate) fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub(crate) fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    #[cfg(test)]
    pub(crate) fn atom(&self, id: u32) -> &Atom {
        &self.atoms[id as usize]
    }

    pub(crate) fn atom_id(&self, atom: &Atom) -> Option<u32> {
        self.atom_ids.get(atom).copied()
    }

    pub(crate) fn ops_with_precondition(&self, atom: u32) -> &[u32] {
        &self.pre_to_ops[atom as usize]
    }
}

fn substitute(atom: &Atom, binding: &HashMap<&str, &str>) -> Atom {
    Atom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|a| binding.get(a.as_str()).map_or_else(|| a.clone(), |o| o.to_string()))
            .collect(),
    }
}

fn ground_schema(schema: &ActionSchema, candidates: &[Vec<&str>], out: &mut Vec<GroundAction>) {
    if candidates.iter().any(Vec::is_empty) {
        return;
    }
    let mut odometer = vec![0usize; candidates.len()];
    loop {
        let binding: HashMap<&str, &str> = schema
            .params
            .iter()
            .zip(&odometer)
            .enumerate()
            .map(|(i, (p, &k))| (p.name.as_str(), candidates[i][k]))
            .collect();
        let set = |atoms: &[Atom]| -> Vec<Atom> {
            atoms
                .iter()
                .map(|a| substitute(a, &binding))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        };
        out.push(GroundAction {
            schema_name: schema.name.clone(),
            args: odometer
                .iter()
                .enumerate()
                .map(|(i, &k)| candidates[i][k].to_string())
                .collect(),
            pre: set(&schema.pre),
            add: set(&schema.add),
            del: set(&schema.del),
        });

        // advance the rightmost digit first so output stays lexicographic
        let mut pos = odometer.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < candidates[pos].len() {
                break;
            }
            odometer[pos] = 0;
        }
    }
}

/// Grounds every schema of `domain` over `objects`.
pub fn ground_all(domain: &Domain, objects: &ObjectMap) -> GroundingIndex {
    let mut schemas: Vec<&ActionSchema> = domain.schemas.iter().collect();
    schemas.sort_by(|a, b| a.name.cmp(&b.name));

    let mut all = Vec::new();
    for schema in schemas {
        let candidates: Vec<Vec<&str>> = schema
            .params
            .iter()
            .map(|p| {
                objects
                    .iter()
                    .filter(|(_, ty)| domain.types.is_subtype(ty, &p.type_name))
                    .map(|(o, _)| o.as_str())
                    .collect()
            })
            .collect();
        ground_schema(schema, &candidates, &mut all);
    }

    let static_preds = domain.static_predicates();
    let mut atoms = Vec::new();
    let mut atom_ids: HashMap<Atom, u32> = HashMap::new();
    let mut intern = |atom: &Atom| -> u32 {
        if let Some(&id) = atom_ids.get(atom) {
            return id;
        }
        let id = atoms.len() as u32;
        atoms.push(atom.clone());
        atom_ids.insert(atom.clone(), id);
        id
    };

    let mut by_precondition: BTreeMap<Atom, Vec<usize>> = BTreeMap::new();
    let mut by_display = HashMap::with_capacity(all.len());
    let mut ops = Vec::with_capacity(all.len());
    for (i, action) in all.iter().enumerate() {
        for atom in &action.pre {
            by_precondition.entry(atom.clone()).or_default().push(i);
        }
        by_display.insert(action.to_string(), i);
        let ids = |atoms: &[Atom], intern: &mut dyn FnMut(&Atom) -> u32| -> Box<[u32]> {
            atoms.iter().map(&mut *intern).collect()
        };
        let pre = ids(&action.pre, &mut intern);
        let static_pre = action
            .pre
            .iter()
            .zip(pre.iter())
            .filter(|(a, _)| static_preds.contains(a.predicate.as_str()))
            .map(|(_, &id)| id)
            .collect();
        ops.push(Op {
            add: ids(&action.add, &mut intern),
            del: ids(&action.del, &mut intern),
            pre,
            static_pre,
        });
    }

    let mut pre_to_ops = vec![Vec::new(); atoms.len()];
    for (i, op) in ops.iter().enumerate() {
        for &p in op.pre.iter() {
            pre_to_ops[p as usize].push(i as u32);
        }
    }

    GroundingIndex {
        all,
        by_precondition,
        by_display,
        atoms,
        atom_ids,
        ops,
        pre_to_ops,
    }
}

/// Instantiates one schema with explicit arguments, checking object types.
///
/// Used to resolve plan files without a full grounding.
pub fn instantiate(
    domain: &Domain,
    objects: &ObjectMap,
    name: &str,
    args: &[String],
) -> Result<GroundAction, InstantiateError> {
    let schema = domain
        .schema(name)
        .ok_or_else(|| InstantiateError::UnknownSchema(name.to_string()))?;
    if schema.params.len() != args.len() {
        return Err(InstantiateError::Arity {
            schema: name.to_string(),
            expected: schema.params.len(),
            found: args.len(),
        });
    }
    for (p, a) in schema.params.iter().zip(args) {
        let ty = objects
            .get(a)
            .ok_or_else(|| InstantiateError::UnknownObject(a.clone()))?;
        if !domain.types.is_subtype(ty, &p.type_name) {
            return Err(InstantiateError::TypeMismatch {
                object: a.clone(),
                expected: p.type_name.clone(),
            });
        }
    }
    let binding: HashMap<&str, &str> = schema
        .params
        .iter()
        .zip(args)
        .map(|(p, a)| (p.name.as_str(), a.as_str()))
        .collect();
    let set = |atoms: &[Atom]| -> Vec<Atom> {
        atoms
            .iter()
            .map(|a| substitute(a, &binding))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    Ok(GroundAction {
        schema_name: schema.name.clone(),
        args: args.to_vec(),
        pre: set(&schema.pre),
        add: set(&schema.add),
        del: set(&schema.del),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstantiateError {
    #[error("unknown action {0}")]
    UnknownSchema(String),
    #[error("{schema} takes {expected} arguments, found {found}")]
    Arity { schema: String, expected: usize, found: usize },
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("object {object} is not of type {expected}")]
    TypeMismatch { object: String, expected: String },
}

/// Whether every precondition of `action` holds in `state`.
pub fn applicable(state: &State, action: &GroundAction) -> bool {
    state.is_superset_of(&action.pre)
}

/// The applicable actions in `state`, in index order.
pub fn successors<'a>(state: &State, index: &'a GroundingIndex) -> Vec<&'a GroundAction> {
    index.all.iter().filter(|a| applicable(state, a)).collect()
}

/// `(state \ del) ∪ add`.
pub fn apply(state: &State, action: &GroundAction) -> Result<State, GroundingError> {
    let missing = state.missing(&action.pre);
    if !missing.is_empty() {
        return Err(GroundingError::NotApplicable {
            action: action.to_string(),
            missing,
        });
    }
    let mut next = state.clone();
    for atom in &action.del {
        next.remove(atom);
    }
    for atom in &action.add {
        next.insert(atom.clone());
    }
    Ok(next)
}

pub fn apply_plan<'a>(
    state: &State,
    plan: impl IntoIterator<Item = &'a GroundAction>,
) -> Result<State, GroundingError> {
    let mut current = state.clone();
    for (index, action) in plan.into_iter().enumerate() {
        current = apply(&current, action).map_err(|e| match e {
            GroundingError::NotApplicable { action, missing } => {
                GroundingError::NotApplicableAt { index, action, missing }
            }
            other => other,
        })?;
    }
    Ok(current)
}

/// Packed state over the index's interned atoms, used inside search.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct BitState(Box<[u64]>);

impl BitState {
    pub fn from_state(state: &State, index: &GroundingIndex) -> Self {
        let mut words = vec![0u64; index.atom_count().div_ceil(64)].into_boxed_slice();
        for atom in state {
            if let Some(id) = index.atom_id(atom) {
                words[id as usize / 64] |= 1 << (id % 64);
            }
        }
        BitState(words)
    }

    #[inline]
    pub fn contains(&self, id: u32) -> bool {
        self.0[id as usize / 64] & (1 << (id % 64)) != 0
    }

    #[inline]
    pub fn contains_all(&self, ids: &[u32]) -> bool {
        ids.iter().all(|&id| self.contains(id))
    }

    pub fn apply(&self, op: &Op) -> BitState {
        let mut next = self.0.clone();
        for &d in op.del.iter() {
            next[d as usize / 64] &= !(1 << (d % 64));
        }
        for &a in op.add.iter() {
            next[a as usize / 64] |= 1 << (a % 64);
        }
        BitState(next)
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64u32).filter(move |b| bits & (1 << b) != 0).map(move |b| w as u32 * 64 + b)
        })
    }

    /// Back to atoms. Atoms of `base` the index does not know are kept as is,
    /// since no action can change them.
    #[cfg(test)]
    pub fn to_state(&self, index: &GroundingIndex, base: &State) -> State {
        base.iter()
            .filter(|a| index.atom_id(a).is_none())
            .cloned()
            .chain(self.ids().map(|id| index.atom(id).clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    fn blocks3() -> (Domain, crate::pddl::Problem) {
        let d = parse_domain(include_str!("../assets/domains/blocks.pddl")).unwrap();
        let p = parse_problem(include_str!("../assets/instances/blocks-p3.pddl"), &d).unwrap();
        (d, p)
    }

    fn names(actions: &[&GroundAction]) -> Vec<String> {
        actions.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn blocks_three_objects_counts() {
        let (d, p) = blocks3();
        let idx = ground_all(&d, &p.objects);
        assert_eq!(idx.len(), 24);
        let count = |n: &str| idx.all().iter().filter(|a| a.schema_name == n).count();
        assert_eq!((count("pick-up"), count("put-down"), count("stack"), count("unstack")), (3, 3, 9, 9));
        // repeated bindings are kept
        assert!(idx.find("stack", &["a", "a"]).is_some());
    }

    #[test]
    fn depot_drive_groundings_respect_types() {
        let d = parse_domain(include_str!("../assets/domains/depot.pddl")).unwrap();
        let objects: ObjectMap = [
            ("t0", "truck"),
            ("t1", "truck"),
            ("dep0", "depot"),
            ("dep1", "depot"),
            ("dist0", "distributor"),
            ("h0", "hoist"),
        ]
        .into_iter()
        .map(|(o, t)| (o.to_string(), t.to_string()))
        .collect();
        let idx = ground_all(&d, &objects);
        assert_eq!(idx.all().iter().filter(|a| a.schema_name == "drive").count(), 18);
    }

    #[test]
    fn zero_objects_keep_only_nullary_schemas() {
        let d = parse_domain(
            "(define (domain z) (:predicates (p) (q ?x)) \
             (:action flip :parameters () :precondition (p) :effect (not (p))) \
             (:action touch :parameters (?x) :precondition (q ?x) :effect (p)))",
        )
        .unwrap();
        let idx = ground_all(&d, &ObjectMap::new());
        assert_eq!(names(&idx.all().iter().collect::<Vec<_>>()), ["(flip)"]);
    }

    #[test]
    fn successors_of_initial_state_and_after_pickup() {
        let (d, p) = blocks3();
        let idx = ground_all(&d, &p.objects);
        let succ = successors(&p.init, &idx);
        assert_eq!(names(&succ), ["(pick-up a)", "(pick-up b)", "(pick-up c)"]);

        let pick_b = idx.find("pick-up", &["b"]).unwrap();
        let s1 = apply(&p.init, pick_b).unwrap();
        assert!(s1.contains(&Atom::new("holding", ["b"])));
        for gone in [Atom::new("ontable", ["b"]), Atom::new("clear", ["b"]), Atom::new("handempty", Vec::<String>::new())] {
            assert!(!s1.contains(&gone));
        }
        assert_eq!(names(&successors(&s1, &idx)), ["(put-down b)", "(stack b a)", "(stack b c)"]);

        let mut stuck = p.init.clone();
        stuck.remove(&Atom::new("handempty", Vec::<String>::new()));
        assert!(successors(&stuck, &idx).is_empty());
    }

    #[test]
    fn apply_errors() {
        let (d, p) = blocks3();
        let idx = ground_all(&d, &p.objects);
        let stack_ab = idx.find("stack", &["a", "b"]).unwrap();
        assert!(!applicable(&p.init, stack_ab));
        assert!(!applicable(&State::new(), stack_ab));
        assert!(matches!(apply(&p.init, stack_ab), Err(GroundingError::NotApplicable { .. })));
        match apply_plan(&p.init, [stack_ab]) {
            Err(GroundingError::NotApplicableAt { index, missing, .. }) => {
                assert_eq!(index, 0);
                assert_eq!(missing, vec![Atom::new("holding", ["a"])]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(apply_plan(&p.init, []).unwrap(), p.init);
    }

    #[test]
    fn bundled_plan_reaches_goal() {
        let (d, p) = blocks3();
        let idx = ground_all(&d, &p.objects);
        let plan: Vec<&GroundAction> = [("pick-up", vec!["b"]), ("stack", vec!["b", "c"]), ("pick-up", vec!["a"]), ("stack", vec!["a", "b"])]
            .iter()
            .map(|(n, a)| idx.find(n, a).unwrap())
            .collect();
        let end = apply_plan(&p.init, plan).unwrap();
        assert!(end.satisfies(&p.goal));
    }

    #[test]
    fn bitstate_round_trip() {
        let (d, p) = blocks3();
        let idx = ground_all(&d, &p.objects);
        let bits = BitState::from_state(&p.init, &idx);
        assert_eq!(bits.to_state(&idx, &p.init), p.init);
    }
}
