//! Bundled domain files, small instances and dependency rules.
//!
//! ```
//! use subgoal::corpus;
//! use subgoal::pddl::{parse_domain, parse_problem};
//!
//! let domain = parse_domain(corpus::BLOCKS_DOMAIN).unwrap();
//! let problem = parse_problem(corpus::BLOCKS_P3, &domain).unwrap();
//! assert_eq!(problem.goal.len(), 2);
//! ```

pub const BLOCKS_DOMAIN: &str = include_str!("../assets/domains/blocks.pddl");
pub const LOGISTICS_DOMAIN: &str = include_str!("../assets/domains/logistics.pddl");
pub const DEPOT_DOMAIN: &str = include_str!("../assets/domains/depot.pddl");
pub const MYSTERY_DOMAIN: &str = include_str!("../assets/domains/mystery.pddl");

/// Three blocks on the table; goal `(on a b) (on b c)`.
pub const BLOCKS_P3: &str = include_str!("../assets/instances/blocks-p3.pddl");
/// Four-step plan for [`BLOCKS_P3`] in plan-file format.
pub const BLOCKS_P3_PLAN: &str = include_str!("../assets/instances/blocks-p3.plan");
/// Goal `(on c b) (on b a) (on d c)`, a single dependency chain.
pub const BLOCKS_P4_CHAIN: &str = include_str!("../assets/instances/blocks-p4-chain.pddl");
pub const LOGISTICS_P1: &str = include_str!("../assets/instances/logistics-p1.pddl");
pub const DEPOT_P1: &str = include_str!("../assets/instances/depot-p1.pddl");
pub const MYSTERY_P1: &str = include_str!("../assets/instances/mystery-p1.pddl");

pub const BLOCKS_RULES: &str = include_str!("../assets/rules/blocks.rules");
pub const DEPOT_RULES: &str = include_str!("../assets/rules/depot.rules");

/// The four bundled domains as `(name, text)`.
pub const DOMAINS: [(&str, &str); 4] = [
    ("blocks", BLOCKS_DOMAIN),
    ("logistics", LOGISTICS_DOMAIN),
    ("depot", DEPOT_DOMAIN),
    ("mystery", MYSTERY_DOMAIN),
];
