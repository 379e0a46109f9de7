//! Seeded random instances for the bundled Blocks and Logistics domains.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random towers: each block goes on the table or on top of an existing
/// tower. Returns `(bottom-to-top towers)`.
fn random_towers(blocks: &[String], rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let mut order = blocks.to_vec();
    order.shuffle(rng);
    let mut towers: Vec<Vec<String>> = Vec::new();
    for b in order {
        let slot = rng.gen_range(0..=towers.len());
        if slot == towers.len() {
            towers.push(vec![b]);
        } else {
            towers[slot].push(b);
        }
    }
    towers.sort();
    towers
}

fn on_atoms(towers: &[Vec<String>]) -> Vec<String> {
    let mut atoms: Vec<String> = towers
        .iter()
        .flat_map(|t| t.windows(2).map(|w| format!("(on {} {})", w[1], w[0])))
        .collect();
    atoms.sort();
    atoms
}

fn wrap(out: &mut String, items: &[String]) {
    for chunk in items.chunks(6) {
        let _ = write!(out, "\n    {}", chunk.join(" "));
    }
}

/// A Blocks problem over `n` blocks `b1..bn`. Initial and goal arrangements
/// are independent random towers; the goal lists every `on` relation of its
/// arrangement and is never already true.
pub fn generate_blocks(n: usize, seed: u64) -> String {
    assert!(n >= 2, "need at least two blocks");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<String> = (1..=n).map(|i| format!("b{i}")).collect();
    let init = random_towers(&blocks, &mut rng);
    let init_on = on_atoms(&init);
    let goal_on = loop {
        let g = on_atoms(&random_towers(&blocks, &mut rng));
        if !g.is_empty() && !g.iter().all(|a| init_on.contains(a)) {
            break g;
        }
    };

    let mut facts = vec!["(handempty)".to_string()];
    for t in &init {
        facts.push(format!("(ontable {})", t[0]));
        facts.push(format!("(clear {})", t[t.len() - 1]));
    }
    facts.extend(init_on);

    let mut out = format!("(define (problem blocks-{n}-{seed})\n  (:domain blocks)\n  (:objects {})\n  (:init", blocks.join(" "));
    wrap(&mut out, &facts);
    out.push_str(")\n  (:goal (and");
    wrap(&mut out, &goal_on);
    out.push_str(")))\n");
    out
}

/// Size of a generated Logistics problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogisticsSize {
    pub cities: usize,
    /// Non-airport locations per city.
    pub locations_per_city: usize,
    pub airplanes: usize,
    pub packages: usize,
}

impl Default for LogisticsSize {
    fn default() -> Self {
        LogisticsSize { cities: 2, locations_per_city: 1, airplanes: 1, packages: 2 }
    }
}

/// A Logistics problem: one truck per city, airplanes at random airports,
/// every package sent to a random location other than its start.
pub fn generate_logistics(size: LogisticsSize, seed: u64) -> String {
    assert!(size.cities >= 1 && size.airplanes >= 1 && size.packages >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objects = Vec::new();
    let mut facts = Vec::new();
    let mut all_locations = Vec::new();
    let mut airports = Vec::new();
    for c in 1..=size.cities {
        let city = format!("c{c}");
        facts.push(format!("(city {city})"));
        objects.push(city.clone());
        let airport = format!("ap{c}");
        let mut here = vec![airport.clone()];
        here.extend((1..=size.locations_per_city).map(|l| format!("l{c}-{l}")));
        for loc in &here {
            objects.push(loc.clone());
            facts.push(format!("(location {loc})"));
            facts.push(format!("(in-city {loc} {city})"));
        }
        facts.push(format!("(airport {airport})"));
        let truck = format!("t{c}");
        objects.push(truck.clone());
        facts.push(format!("(truck {truck})"));
        facts.push(format!("(at {truck} {})", here.choose(&mut rng).unwrap()));
        airports.push(airport);
        all_locations.extend(here);
    }
    for a in 1..=size.airplanes {
        let plane = format!("a{a}");
        objects.push(plane.clone());
        facts.push(format!("(airplane {plane})"));
        facts.push(format!("(at {plane} {})", airports.choose(&mut rng).unwrap()));
    }
    let mut goal = Vec::new();
    for p in 1..=size.packages {
        let pkg = format!("p{p}");
        objects.push(pkg.clone());
        facts.push(format!("(package {pkg})"));
        let start = all_locations.choose(&mut rng).unwrap().clone();
        let dest = loop {
            let d = all_locations.choose(&mut rng).unwrap();
            if *d != start || all_locations.len() == 1 {
                break d.clone();
            }
        };
        facts.push(format!("(at {pkg} {start})"));
        goal.push(format!("(at {pkg} {dest})"));
    }

    let mut out = format!(
        "(define (problem logistics-{}-{}-{seed})\n  (:domain logistics)\n  (:objects",
        size.cities, size.packages
    );
    wrap(&mut out, &objects);
    out.push_str(")\n  (:init");
    wrap(&mut out, &facts);
    out.push_str(")\n  (:goal (and");
    wrap(&mut out, &goal);
    out.push_str(")))\n");
    out
}
