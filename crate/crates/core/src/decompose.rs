//! Goal decomposition over directed acyclic dependency graphs.
//!
//! Goal objects become nodes. A binary goal atom becomes an edge labelled
//! with the atom, pointing from the object that has to be settled first to
//! the object that depends on it: `(on a b)` yields `b -> a`. Unary atoms
//! label their object's node. Removing zero in-degree nodes one at a time and
//! emitting their labels gives the sub-goal order.
//!
//! ```
//! use subgoal::decompose::{decompose, DependencyRule};
//! use subgoal::pddl::{Atom, GoalSpec};
//!
//! let goal = GoalSpec::new([
//!     Atom::new("on", ["c", "b"]),
//!     Atom::new("on", ["b", "a"]),
//!     Atom::new("on", ["d", "c"]),
//! ]);
//! let order = decompose(&goal, &DependencyRule::default()).unwrap();
//! assert_eq!(order.display(), "[on(b,a), on(c,b), on(d,c)]");
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::pddl::{Atom, Domain, GoalSpec};

/// How a goal predicate induces an ordering edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRule {
    /// The atom constrains nothing; it is emitted after all graph atoms.
    NoEdge,
    /// Edge from the object at `from` to the object at `to` (argument indices).
    Edge { from: usize, to: usize },
}

/// Per-predicate edge rules plus the fallback for unlisted binary predicates.
///
/// Unlisted unary predicates label their object's node; unlisted predicates of
/// any other arity are order-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyRule {
    pub rules: BTreeMap<String, EdgeRule>,
    pub binary_default: EdgeRule,
}

impl Default for DependencyRule {
    fn default() -> Self {
        DependencyRule {
            rules: BTreeMap::new(),
            binary_default: EdgeRule::Edge { from: 1, to: 0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("rule for undeclared predicate {0}")]
    UnknownPredicate(String),
    #[error("rule for {predicate} uses argument {index}, arity is {arity}")]
    IndexOutOfRange { predicate: String, index: usize, arity: usize },
}

impl DependencyRule {
    /// Checks rule keys and argument indices against `domain`.
    pub fn validate(&self, domain: &Domain) -> Result<(), RuleError> {
        for (pred, rule) in &self.rules {
            let decl = domain
                .predicate(pred)
                .ok_or_else(|| RuleError::UnknownPredicate(pred.clone()))?;
            if let EdgeRule::Edge { from, to } = *rule {
                for index in [from, to] {
                    if index >= decl.arity() {
                        return Err(RuleError::IndexOutOfRange {
                            predicate: pred.clone(),
                            index,
                            arity: decl.arity(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn classify(&self, atom: &Atom) -> Placement {
        let rule = match self.rules.get(&atom.predicate) {
            Some(r) => Some(*r),
            None if atom.arity() == 2 => Some(self.binary_default),
            None => None,
        };
        match rule {
            Some(EdgeRule::Edge { from, to }) if from < atom.arity() && to < atom.arity() => {
                Placement::Edge(atom.args[from].clone(), atom.args[to].clone())
            }
            Some(_) => Placement::Free,
            None if atom.arity() == 1 => Placement::Label(atom.args[0].clone()),
            None => Placement::Free,
        }
    }
}

/// Text format, one rule per line:
///
/// ```text
/// # comment
/// on -> edge 1 0
/// holding -> none
/// default -> edge 1 0
/// ```
///
/// `→` is accepted in place of `->`. The `default` key sets the rule for
/// unlisted binary predicates.
impl FromStr for DependencyRule {
    type Err = RuleError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut rule = DependencyRule::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| RuleError::Parse {
                line: line_no,
                message: message.to_string(),
            };
            let (key, value) = line
                .split_once("->")
                .or_else(|| line.split_once('→'))
                .ok_or_else(|| err("expected '<predicate> -> none | edge <from> <to>'"))?;
            let key = key.trim().to_lowercase();
            let words: Vec<&str> = value.split_whitespace().collect();
            let edge = match words.as_slice() {
                ["none"] => EdgeRule::NoEdge,
                ["edge", from, to] => EdgeRule::Edge {
                    from: from.parse().map_err(|_| err("bad argument index"))?,
                    to: to.parse().map_err(|_| err("bad argument index"))?,
                },
                _ => return Err(err("expected 'none' or 'edge <from> <to>'")),
            };
            if key.is_empty() {
                return Err(err("missing predicate name"));
            }
            if key == "default" {
                rule.binary_default = edge;
            } else {
                rule.rules.insert(key, edge);
            }
        }
        Ok(rule)
    }
}

enum Placement {
    Edge(String, String),
    Label(String),
    Free,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyEdge {
    pub from: String,
    pub to: String,
    pub label: Atom,
}

/// One weakly connected dependency graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dadg {
    pub nodes: BTreeSet<String>,
    pub edges: Vec<DependencyEdge>,
    /// Unary goal atoms attached to their object.
    pub labels: BTreeMap<String, Vec<Atom>>,
}

impl Dadg {
    pub fn in_degree(&self, node: &str) -> usize {
        self.edges.iter().filter(|e| e.to == node).count()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> + '_ {
        self.edges.iter().map(|e| &e.label).chain(self.labels.values().flatten())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecomposeError {
    #[error("goal dependencies form a cycle through {}", .0.join(", "))]
    GoalCycle(Vec<String>),
}

/// Dependency graphs of `goal` plus its order-free atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalGraphs {
    pub graphs: Vec<Dadg>,
    pub order_free: Vec<Atom>,
}

/// Builds one graph per weakly connected component, ordered by smallest node name.
pub fn build_dadgs(goal: &GoalSpec, rule: &DependencyRule) -> GoalGraphs {
    let mut edges = Vec::new();
    let mut labels: BTreeMap<String, Vec<Atom>> = BTreeMap::new();
    let mut order_free = BTreeSet::new();
    let mut nodes = BTreeSet::new();
    for atom in goal.canonical() {
        match rule.classify(&atom) {
            Placement::Edge(from, to) => {
                nodes.insert(from.clone());
                nodes.insert(to.clone());
                edges.push(DependencyEdge { from, to, label: atom });
            }
            Placement::Label(node) => {
                nodes.insert(node.clone());
                labels.entry(node).or_default().push(atom);
            }
            Placement::Free => {
                order_free.insert(atom);
            }
        }
    }

    // union-find over node names
    let names: Vec<&String> = nodes.iter().collect();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..names.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in &edges {
        let (a, b) = (find(&mut parent, index[e.from.as_str()]), find(&mut parent, index[e.to.as_str()]));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }

    // names are sorted, so the root (smallest index) is the smallest node
    let mut components: BTreeMap<usize, Dadg> = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        let root = find(&mut parent, i);
        let g = components.entry(root).or_insert_with(|| Dadg {
            nodes: BTreeSet::new(),
            edges: Vec::new(),
            labels: BTreeMap::new(),
        });
        g.nodes.insert((*name).clone());
        if let Some(l) = labels.remove(name.as_str()) {
            g.labels.insert((*name).clone(), l);
        }
    }
    for e in edges {
        let root = find(&mut parent, index[e.from.as_str()]);
        components.get_mut(&root).unwrap().edges.push(e);
    }

    GoalGraphs {
        graphs: components.into_values().collect(),
        order_free: order_free.into_iter().collect(),
    }
}

/// Kahn-style removal of zero in-degree nodes, smallest name first.
///
/// Each removed node contributes its own labels, then its outgoing edge labels
/// that have not been emitted yet.
pub fn topo_order(graph: &Dadg) -> Result<Vec<Atom>, DecomposeError> {
    let mut in_degree: BTreeMap<&str, usize> = graph.nodes.iter().map(|n| (n.as_str(), 0)).collect();
    for e in &graph.edges {
        *in_degree.get_mut(e.to.as_str()).unwrap() += 1;
    }
    let mut remaining: BTreeSet<&str> = graph.nodes.iter().map(String::as_str).collect();
    let mut emitted: Vec<Atom> = Vec::new();
    let mut seen = BTreeSet::new();

    while !remaining.is_empty() {
        let Some(&x) = remaining.iter().find(|n| in_degree[*n] == 0) else {
            return Err(DecomposeError::GoalCycle(remaining.iter().map(|s| s.to_string()).collect()));
        };
        let own = graph.labels.get(x).into_iter().flatten();
        let mut out: Vec<&DependencyEdge> = graph.edges.iter().filter(|e| e.from == x).collect();
        out.sort_by(|a, b| (&a.to, &a.label).cmp(&(&b.to, &b.label)));
        for atom in own.chain(out.iter().map(|e| &e.label)) {
            if seen.insert(atom.clone()) {
                emitted.push(atom.clone());
            }
        }
        for e in out {
            *in_degree.get_mut(e.to.as_str()).unwrap() -= 1;
        }
        remaining.remove(x);
    }
    Ok(emitted)
}

/// Ordered sub-goals ĝ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubGoalSequence {
    /// Graph-ordered atoms followed by the order-free ones.
    pub atoms: Vec<Atom>,
    /// How many trailing atoms of `atoms` are order-free.
    pub order_free: usize,
}

impl SubGoalSequence {
    pub fn iter(&self) -> impl Iterator<Item = &Atom> + '_ {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `[on(b,c), on(a,b)]`
    pub fn display(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SubGoalSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.atoms.iter().map(Atom::functional).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

pub fn decompose(goal: &GoalSpec, rule: &DependencyRule) -> Result<SubGoalSequence, DecomposeError> {
    decompose_with(goal, rule, false)
}

/// Like [`decompose`]; with `cycle_fallback` a cyclic component keeps the
/// goal's declaration order instead of failing.
pub fn decompose_with(
    goal: &GoalSpec,
    rule: &DependencyRule,
    cycle_fallback: bool,
) -> Result<SubGoalSequence, DecomposeError> {
    let graphs = build_dadgs(goal, rule);
    let mut atoms = Vec::with_capacity(goal.len());
    for g in &graphs.graphs {
        match topo_order(g) {
            Ok(order) => atoms.extend(order),
            Err(DecomposeError::GoalCycle(nodes)) if cycle_fallback => {
                log::warn!("cyclic goal dependencies through {}; keeping file order", nodes.join(", "));
                let members: BTreeSet<&Atom> = g.atoms().collect();
                atoms.extend(goal.iter().filter(|a| members.contains(a)).cloned());
            }
            Err(e) => return Err(e),
        }
    }
    let order_free = graphs.order_free.len();
    atoms.extend(graphs.order_free);
    Ok(SubGoalSequence { atoms, order_free })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on(a: &str, b: &str) -> Atom {
        Atom::new("on", [a, b])
    }

    #[test]
    fn single_chain_component() {
        let g = GoalSpec::new([on("c", "b"), on("b", "a"), on("d", "c")]);
        let graphs = build_dadgs(&g, &DependencyRule::default());
        assert_eq!(graphs.graphs.len(), 1);
        let edges: Vec<(String, String)> = graphs.graphs[0]
            .edges
            .iter()
            .map(|e| (e.from.clone(), e.to.clone()))
            .collect();
        assert!(edges.contains(&("a".into(), "b".into())));
        assert!(edges.contains(&("b".into(), "c".into())));
        assert!(edges.contains(&("c".into(), "d".into())));
        assert_eq!(topo_order(&graphs.graphs[0]).unwrap(), vec![on("b", "a"), on("c", "b"), on("d", "c")]);
    }

    #[test]
    fn disjoint_components_and_empty_goal() {
        let g = GoalSpec::new([on("a", "b"), on("c", "d")]);
        assert_eq!(build_dadgs(&g, &DependencyRule::default()).graphs.len(), 2);
        assert!(build_dadgs(&GoalSpec::default(), &DependencyRule::default()).graphs.is_empty());
    }

    #[test]
    fn three_block_tower_order() {
        let g = GoalSpec::new([on("a", "b"), on("b", "c")]);
        let seq = decompose(&g, &DependencyRule::default()).unwrap();
        assert_eq!(seq.atoms, vec![on("b", "c"), on("a", "b")]);
        assert_eq!(seq.display(), "[on(b,c), on(a,b)]");
    }

    #[test]
    fn cycles_detected_or_fall_back() {
        let g = GoalSpec::new([on("a", "b"), on("b", "a")]);
        assert_eq!(
            decompose(&g, &DependencyRule::default()),
            Err(DecomposeError::GoalCycle(vec!["a".into(), "b".into()]))
        );
        let seq = decompose_with(&g, &DependencyRule::default(), true).unwrap();
        assert_eq!(seq.atoms, vec![on("a", "b"), on("b", "a")]);
    }

    #[test]
    fn unary_and_nullary_atoms() {
        let g = GoalSpec::new([Atom::new("ontable", ["a"])]);
        assert_eq!(decompose(&g, &DependencyRule::default()).unwrap().atoms, vec![Atom::new("ontable", ["a"])]);

        let hand = Atom::new("handempty", Vec::<String>::new());
        let g = GoalSpec::new([hand.clone(), on("a", "b"), Atom::new("ontable", ["b"])]);
        let seq = decompose(&g, &DependencyRule::default()).unwrap();
        assert_eq!(seq.atoms, vec![Atom::new("ontable", ["b"]), on("a", "b"), hand]);
        assert_eq!(seq.order_free, 1);
    }

    #[test]
    fn logistics_goals_are_unconstrained() {
        let g = GoalSpec::new([Atom::new("at", ["p1", "l1"]), Atom::new("at", ["p2", "l2"])]);
        let seq = decompose(&g, &DependencyRule::default()).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.iter().collect::<BTreeSet<_>>(), g.iter().collect::<BTreeSet<_>>());
    }

    #[test]
    fn rule_file_parsing() {
        let rule: DependencyRule = "# blocks\non -> edge 1 0\nholding → none\ndefault -> none\n".parse().unwrap();
        assert_eq!(rule.rules["on"], EdgeRule::Edge { from: 1, to: 0 });
        assert_eq!(rule.rules["holding"], EdgeRule::NoEdge);
        assert_eq!(rule.binary_default, EdgeRule::NoEdge);
        assert!(matches!("on = 1".parse::<DependencyRule>(), Err(RuleError::Parse { line: 1, .. })));

        let d = crate::pddl::parse_domain(include_str!("../assets/domains/blocks.pddl")).unwrap();
        assert!(rule.validate(&d).is_ok());
        let bad: DependencyRule = "on -> edge 0 2".parse().unwrap();
        assert!(matches!(bad.validate(&d), Err(RuleError::IndexOutOfRange { .. })));
        let bad: DependencyRule = "above -> none".parse().unwrap();
        assert!(matches!(bad.validate(&d), Err(RuleError::UnknownPredicate(_))));
    }
}
