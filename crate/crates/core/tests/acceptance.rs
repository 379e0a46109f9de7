//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subgoal::bench::{generate_blocks, run_suite, InstanceSource, LlmSource, SuiteSpec};
use subgoal::corpus;
use subgoal::decompose::{decompose, DependencyRule};
use subgoal::grounding::{apply, apply_plan, ground_all, successors, GroundAction, GroundingIndex};
use subgoal::llm::{
    parse_predict_response, render_direct_prompt, render_inspire_prompt, render_predict_prompt, CompletionClient,
    FnClient, InspireRequest, OracleClient, PredictRequest, ScriptedClient,
};
use subgoal::orchestrator::{plan, Failure, Mode, PlannerConfig};
use subgoal::pddl::{parse_domain, parse_problem, Atom, Domain, GoalSpec, ObjectMap, Problem, State};
use subgoal::search::{
    parse_plan, shortest_plan, solve_internal, validate_plan, BfsOutcome, Plan, SolveOutcome, SolveRequest,
};

type Check = Result<String, String>;
type Criterion = fn() -> Check;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn blocks() -> Domain {
    parse_domain(corpus::BLOCKS_DOMAIN).unwrap()
}

fn solve(domain: &Domain, problem_objects: &ObjectMap, index: &GroundingIndex, state: &State, goal: &GoalSpec) -> SolveOutcome {
    let req = SolveRequest { state, goal, domain, objects: problem_objects, timeout: Duration::from_secs(30) };
    solve_internal(&req, index)
}

fn median(mut v: Vec<u64>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

// 1 ------------------------------------------------------------------------

fn corpus_counts() -> Check {
    let start = Instant::now();
    let expected = [("blocks", 4, 5), ("logistics", 6, 9), ("depot", 5, 6), ("mystery", 3, 12)];
    let mut seen = Vec::new();
    for ((name, text), (ename, actions, preds)) in corpus::DOMAINS.iter().zip(expected) {
        let d = parse_domain(text).map_err(|e| format!("{name}: {e}"))?;
        ensure(name.contains(ename), || format!("domain order: {name} vs {ename}"))?;
        ensure(d.schemas.len() == actions && d.predicates.len() == preds, || {
            format!("{name}: ({}, {}) expected ({actions}, {preds})", d.schemas.len(), d.predicates.len())
        })?;
        seen.push(format!("{ename}=({actions},{preds})"));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{} in {elapsed:?}", seen.join(" ")))
}

// 2 ------------------------------------------------------------------------

/// Breadth-first search over explicit states, independent of the library's
/// search code.
fn bfs_length(init: &State, goal: &GoalSpec, index: &GroundingIndex) -> Option<usize> {
    let mut seen: HashSet<State> = HashSet::from([init.clone()]);
    let mut queue = VecDeque::from([(init.clone(), 0usize)]);
    while let Some((s, d)) = queue.pop_front() {
        if s.satisfies(goal) {
            return Some(d);
        }
        for a in successors(&s, index) {
            let next = apply(&s, a).unwrap();
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

fn worked_example() -> Check {
    let d = blocks();
    let p = parse_problem(corpus::BLOCKS_P3, &d).map_err(|e| e.to_string())?;
    ensure(p.init.contains(&Atom::new("handempty", Vec::<String>::new())), || "init lacks handempty".into())?;
    let index = ground_all(&d, &p.objects);
    let start = Instant::now();
    let req = SolveRequest { state: &p.init, goal: &p.goal, domain: &d, objects: &p.objects, timeout: Duration::from_secs(1) };
    let out = solve_internal(&req, &index);
    let elapsed = start.elapsed();
    let plan = out.plan().ok_or_else(|| format!("no plan: {out:?}"))?;
    ensure(validate_plan(&p.init, &p.goal, plan).is_valid(), || "own plan invalid".into())?;
    ensure(plan.len() == 4, || format!("plan length {}", plan.len()))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;

    let literal = parse_plan(corpus::BLOCKS_P3_PLAN, &d, &p.objects).map_err(|e| e.to_string())?;
    let v = validate_plan(&p.init, &p.goal, &literal);
    ensure(v.is_valid(), || format!("literal plan: {v}"))?;

    let optimal = bfs_length(&p.init, &p.goal, &index);
    ensure(optimal == Some(4), || format!("BFS optimum {optimal:?}"))?;
    Ok(format!("length 4 in {elapsed:?}; literal plan valid; BFS optimum 4"))
}

// 3 ------------------------------------------------------------------------

fn on(a: &str, b: &str) -> Atom {
    Atom::new("on", [a, b])
}

fn decomposition() -> Check {
    let goal = GoalSpec::new([on("c", "b"), on("b", "a"), on("d", "c")]);
    let seq = decompose(&goal, &DependencyRule::default()).map_err(|e| e.to_string())?;
    ensure(seq.atoms == [on("b", "a"), on("c", "b"), on("d", "c")], || format!("got {seq}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = 0;
    for _ in 0..500 {
        let n = rng.gen_range(2..=12);
        let mut names: Vec<String> = (0..n).map(|i| format!("o{i}")).collect();
        names.shuffle(&mut rng);
        let density = rng.gen_range(0.1..0.6);
        let mut atoms = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(density) {
                    // on(upper, lower): `lower` must be settled first
                    atoms.push(on(&names[j], &names[i]));
                }
            }
        }
        if atoms.is_empty() {
            atoms.push(on(&names[1], &names[0]));
        }
        atoms.shuffle(&mut rng);
        let goal = GoalSpec::new(atoms.clone());
        let Ok(seq) = decompose(&goal, &DependencyRule::default()) else {
            failures += 1;
            continue;
        };
        let got: BTreeSet<&Atom> = seq.atoms.iter().collect();
        let want: BTreeSet<&Atom> = atoms.iter().collect();
        let permutation = seq.atoms.len() == atoms.len() && got == want;
        let pos = |a: &Atom| seq.atoms.iter().position(|x| x == a).unwrap();
        let respects = permutation
            && atoms.iter().all(|below| {
                atoms
                    .iter()
                    .filter(|above| above.args[1] == below.args[0])
                    .all(|above| pos(below) < pos(above))
            });
        if !respects {
            failures += 1;
        }
    }
    ensure(failures == 0, || format!("{failures} of 500 random graphs violated an invariant"))?;
    Ok("chain order exact; 500 random graphs, 0 failures".into())
}

// 4 ------------------------------------------------------------------------

/// Objects for `domain`: 1 to 3 of every declared type (or of `object`).
fn random_objects(domain: &Domain, rng: &mut ChaCha8Rng) -> ObjectMap {
    let mut types: Vec<String> = domain.types.declared().map(|(t, _)| t.to_string()).collect();
    if types.is_empty() {
        types.push("object".into());
    }
    let mut objects = ObjectMap::new();
    for t in types {
        for i in 0..rng.gen_range(1..=3) {
            objects.insert(format!("{t}{i}"), t.clone());
        }
    }
    objects
}

fn random_state(domain: &Domain, objects: &ObjectMap, rng: &mut ChaCha8Rng) -> State {
    let names: Vec<&String> = objects.keys().collect();
    let density = rng.gen_range(0.2..0.7);
    let mut state = State::new();
    for pred in &domain.predicates {
        let k = pred.arity() as u32;
        // every argument tuple, read as a base-n number
        for code in 0..names.len().pow(k) {
            let args: Vec<&str> = (0..k).map(|i| names[code / names.len().pow(i) % names.len()].as_str()).collect();
            if rng.gen_bool(density) {
                state.insert(Atom::new(pred.name.as_str(), args));
            }
        }
    }
    state
}

/// Every substitution of typed objects into every schema whose
/// instantiated preconditions hold in `state`.
fn brute_force_successors(domain: &Domain, objects: &ObjectMap, state: &State) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for schema in &domain.schemas {
        let candidates: Vec<Vec<&String>> = schema
            .params
            .iter()
            .map(|p| objects.iter().filter(|(_, t)| domain.types.is_subtype(t, &p.type_name)).map(|(o, _)| o).collect())
            .collect();
        let mut chosen: Vec<&String> = Vec::new();
        fn rec<'a>(
            i: usize,
            candidates: &[Vec<&'a String>],
            chosen: &mut Vec<&'a String>,
            f: &mut dyn FnMut(&[&'a String]),
        ) {
            if i == candidates.len() {
                f(chosen);
                return;
            }
            for &c in &candidates[i] {
                chosen.push(c);
                rec(i + 1, candidates, chosen, f);
                chosen.pop();
            }
        }
        rec(0, &candidates, &mut chosen, &mut |args| {
            let subst = |a: &Atom| {
                Atom::new(
                    a.predicate.as_str(),
                    a.args.iter().map(|x| match schema.params.iter().position(|p| &p.name == x) {
                        Some(i) => args[i].clone(),
                        None => x.clone(),
                    }),
                )
            };
            if schema.pre.iter().all(|a| state.contains(&subst(a))) {
                let names: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
                out.insert(format!("({} {})", schema.name, names.join(" ")).replace(" )", ")"));
            }
        });
    }
    out
}

fn grounding_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let domains: Vec<Domain> = corpus::DOMAINS.iter().map(|(_, t)| parse_domain(t).unwrap()).collect();
    let mut nonempty = 0;
    for case in 0..200 {
        let d = &domains[case % domains.len()];
        let objects = random_objects(d, &mut rng);
        let state = random_state(d, &objects, &mut rng);
        let index = ground_all(d, &objects);
        let got: BTreeSet<String> = successors(&state, &index).iter().map(|a| a.to_string()).collect();
        let want = brute_force_successors(d, &objects, &state);
        ensure(got == want, || {
            format!(
                "case {case} ({}): library-only {:?}, oracle-only {:?}",
                d.name,
                got.difference(&want).collect::<Vec<_>>(),
                want.difference(&got).collect::<Vec<_>>()
            )
        })?;
        nonempty += usize::from(!want.is_empty());
    }
    Ok(format!("200 states, all equal ({nonempty} with applicable actions)"))
}

// 5 ------------------------------------------------------------------------

struct Split {
    p1: Plan,
    p2: Plan,
    p1_expansions: u64,
    p2_expansions: u64,
}

/// Asks the oracle for a midpoint of `problem`, then solves both halves.
fn oracle_split(d: &Domain, p: &Problem, index: &GroundingIndex) -> Result<Split, String> {
    let oracle = OracleClient::new(d, &p.objects);
    let prompt = render_predict_prompt(&PredictRequest { state: p.init.clone(), goal: p.goal.clone(), domain_name: d.name.clone() });
    let reply = oracle.complete(&prompt).map_err(|e| e.to_string())?;
    let mid = parse_predict_response(&reply, d, &p.objects, &p.init, &p.goal).map_err(|e| format!("{reply}: {e}"))?;
    let first = solve(d, &p.objects, index, &p.init, &mid.as_goal());
    let p1 = first.plan().cloned().ok_or_else(|| format!("P1 unsolved: {first:?}"))?;
    let s1 = apply_plan(&p.init, p1.iter()).map_err(|e| e.to_string())?;
    let second = solve(d, &p.objects, index, &s1, &p.goal);
    let p2 = second.plan().cloned().ok_or_else(|| format!("P2 unsolved: {second:?}"))?;
    Ok(Split { p1_expansions: first.stats().expansions, p2_expansions: second.stats().expansions, p1, p2 })
}

fn concatenation() -> Check {
    let d = blocks();
    let mut checked = 0;
    let mut valid = 0;
    let mut seed = 0u64;
    let mut problems = Vec::new();
    while checked < 200 {
        seed += 1;
        let n = 3 + (seed % 4) as usize;
        let p = parse_problem(&generate_blocks(n, seed), &d).unwrap();
        let index = ground_all(&d, &p.objects);
        // a split needs room for a proper midpoint
        if bfs_length(&p.init, &p.goal, &index).is_none_or(|l| l < 2) {
            continue;
        }
        checked += 1;
        match oracle_split(&d, &p, &index) {
            Ok(split) => {
                let mut whole = split.p1.clone();
                whole.extend(&split.p2);
                if validate_plan(&p.init, &p.goal, &whole).is_valid() {
                    valid += 1;
                } else {
                    problems.push(format!("{}: concatenation invalid", p.name));
                }
            }
            Err(e) => problems.push(format!("{}: {e}", p.name)),
        }
    }
    ensure(valid == checked, || format!("{valid}/{checked} valid; first problem: {}", problems[0]))?;
    Ok(format!("{valid}/{checked} concatenations valid"))
}

// 6 ------------------------------------------------------------------------

fn search_reduction() -> Check {
    let start = Instant::now();
    let d = blocks();
    let mut direct = Vec::new();
    let mut halves = Vec::new();
    let mut seed = 1000u64;
    while direct.len() < 30 {
        seed += 1;
        let p = parse_problem(&generate_blocks(7, seed), &d).unwrap();
        let index = ground_all(&d, &p.objects);
        let optimal = match shortest_plan(&p.init, &p.goal, &index, None) {
            BfsOutcome::Found(plan) => plan.len(),
            other => return Err(format!("{}: BFS {other:?}", p.name)),
        };
        if optimal < 12 {
            continue;
        }
        let whole = solve(&d, &p.objects, &index, &p.init, &p.goal);
        ensure(whole.plan().is_some(), || format!("{}: direct unsolved", p.name))?;
        let split = oracle_split(&d, &p, &index).map_err(|e| format!("{}: {e}", p.name))?;
        direct.push(whole.stats().expansions);
        halves.push(split.p1_expansions + split.p2_expansions);
    }
    let (md, mh) = (median(direct), median(halves));
    let elapsed = start.elapsed();
    ensure(mh <= 0.7 * md, || format!("median split {mh} vs 0.7 x direct {md}"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!("median expansions split {mh} vs direct {md} (ratio {:.2}) in {:.1?}", mh / md, elapsed))
}

// 7 ------------------------------------------------------------------------

fn escalation() -> Check {
    let start = Instant::now();
    let d = blocks();
    let problems: Vec<Problem> = (0..40).map(|s| parse_problem(&generate_blocks(6, 7000 + s), &d).unwrap()).collect();
    let mut cfg = PlannerConfig { sub_solve_timeout: Duration::ZERO, protect_achieved: true, ..PlannerConfig::default() };
    let mut solved = |mode: Mode, budget: Duration| {
        cfg.mode = mode;
        cfg.total_solver_budget = budget;
        problems
            .iter()
            .filter(|p| {
                let oracle = OracleClient::new(&d, &p.objects);
                let client: Option<&dyn CompletionClient> = mode.needs_client().then_some(&oracle);
                let ep = plan(p, &d, &cfg, client).unwrap();
                ep.result.as_ref().is_ok_and(|pl| validate_plan(&p.init, &p.goal, pl).is_valid())
            })
            .count()
    };
    let predict = solved(Mode::Predict, Duration::from_secs(180));
    let inspire = solved(Mode::Inspire, Duration::from_secs(180));
    let direct = solved(Mode::Direct, Duration::ZERO);
    let elapsed = start.elapsed();
    let line = format!("predict {predict}/40, inspire {inspire}/40, direct {direct}/40 in {elapsed:.1?}");
    ensure(predict * 100 >= 95 * 40 && inspire * 100 >= 80 * 40 && direct == 0, || line.clone())?;
    ensure(elapsed < Duration::from_secs(600), || line.clone())?;
    Ok(line)
}

// 8 ------------------------------------------------------------------------

fn retry_bound() -> Check {
    let d = blocks();
    let p = parse_problem(corpus::BLOCKS_P3, &d).unwrap();
    let cfg = |mode| PlannerConfig { mode, sub_solve_timeout: Duration::ZERO, ..PlannerConfig::default() };

    // always the first listed action: legal, but it never builds a tower
    let useless = FnClient(|prompt: &str| {
        let line = prompt.lines().find_map(|l| l.strip_prefix("The applicable actions: [")).unwrap_or("");
        line.split(", ").next().unwrap_or("").trim_end_matches(']').to_string()
    });
    // already true in the initial state
    let degenerate = ScriptedClient::repeating(r#"[["ontable", ["a"]]]"#);

    let mut report = Vec::new();
    for (mode, client) in [(Mode::Inspire, &useless as &dyn CompletionClient), (Mode::Predict, &degenerate)] {
        let ep = plan(&p, &d, &cfg(mode), Some(client)).unwrap();
        let failed = matches!(ep.result, Err(Failure::SubGoalExhausted { index: 0, .. }));
        ensure(failed, || format!("{mode}: {:?}", ep.result))?;
        let attempts: Vec<usize> = ep.record.entries.iter().map(|e| e.attempts).collect();
        ensure(attempts == [10], || format!("{mode}: attempts {attempts:?}"))?;
        report.push(format!("{mode} {} attempts, {} calls", attempts[0], ep.record.llm_calls));
    }
    Ok(report.join("; "))
}

// 9 ------------------------------------------------------------------------

/// Checks that `rendered` is `reference` with each `XXX` replaced by the next
/// of `values`.
fn matches_reference(reference: &str, rendered: &str, values: &[String]) -> Result<(), String> {
    let pieces: Vec<&str> = reference.split("XXX").collect();
    ensure(pieces.len() == values.len() + 1, || format!("{} slots, {} values", pieces.len() - 1, values.len()))?;
    let mut expected = pieces[0].to_string();
    for (value, piece) in values.iter().zip(&pieces[1..]) {
        expected.push_str(value);
        expected.push_str(piece);
    }
    if expected.as_bytes() == rendered.as_bytes() {
        return Ok(());
    }
    let at = expected.bytes().zip(rendered.bytes()).position(|(a, b)| a != b).unwrap_or(expected.len().min(rendered.len()));
    Err(format!("first difference at byte {at}: {:?}", &rendered[at.saturating_sub(20)..(at + 20).min(rendered.len())]))
}

fn prompt_fidelity() -> Check {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/reference_prompts");
    let read = |name: &str| fs::read_to_string(format!("{dir}/{name}")).map_err(|e| format!("{name}: {e}"));
    let d = blocks();
    let p = parse_problem(corpus::BLOCKS_P3, &d).unwrap();
    let index = ground_all(&d, &p.objects);
    let list = |items: Vec<String>| format!("[{}]", items.join(", "));
    let goal = list(p.goal.canonical().iter().map(|a| a.to_string()).collect());
    let init = p.init.to_string();

    let applicable: Vec<GroundAction> = successors(&p.init, &index).into_iter().cloned().collect();
    let history = vec![applicable[0].clone()];
    let req = InspireRequest {
        state: p.init.clone(),
        goal: p.goal.clone(),
        trajectory: history.clone(),
        applicable: applicable.clone(),
        domain_name: d.name.clone(),
    };
    let actions = |v: &[GroundAction]| list(v.iter().map(|a| a.to_string()).collect());
    matches_reference(
        &read("inspire.txt")?,
        &render_inspire_prompt(&req),
        &[goal.clone(), init.clone(), actions(&history), actions(&applicable)],
    )
    .map_err(|e| format!("inspire: {e}"))?;

    let req = PredictRequest { state: p.init.clone(), goal: p.goal.clone(), domain_name: d.name.clone() };
    matches_reference(&read("predict.txt")?, &render_predict_prompt(&req), &[goal.clone(), init.clone()])
        .map_err(|e| format!("predict: {e}"))?;
    matches_reference(&read("direct.txt")?, &render_direct_prompt(&d.name, &p.init, &p.goal), &[goal, init])
        .map_err(|e| format!("direct: {e}"))?;
    Ok("inspire, predict and direct byte-identical outside slots".into())
}

// 10 -----------------------------------------------------------------------

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let domain = dir.path().join("blocks.pddl");
    fs::write(&domain, corpus::BLOCKS_DOMAIN).unwrap();
    let script = dir.path().join("replies.txt");
    fs::write(&script, "(pick-up b1)\n(pick-up b2)\n[[\"holding\", [\"b1\"]]]\n(stack b1 b2)\n[[\"on\", [\"b2\", \"b3\"]]]\n(put-down b1)\n").unwrap();

    let run = |name: &str| -> Result<String, String> {
        let instances = (0..6)
            .map(|s| InstanceSource::Text { name: format!("s{s}"), text: generate_blocks(4 + s as usize % 2, 40 + s) })
            .collect();
        let mut spec = SuiteSpec::new(&domain, instances, Mode::ALL.to_vec());
        spec.base.seed = 11;
        spec.base.sub_solve_timeout = Duration::ZERO;
        spec.base.retry_limit = 3;
        spec.llm = LlmSource::Scripted(script.clone());
        spec.jobs = 3;
        spec.csv = Some(dir.path().join(name));
        run_suite(&spec).map_err(|e| e.to_string())?;
        let text = fs::read_to_string(dir.path().join(name)).map_err(|e| e.to_string())?;
        let header: Vec<&str> = text.lines().next().unwrap_or("").split(',').collect();
        let timing = header.iter().position(|h| *h == "solver_ms").ok_or("no solver_ms column")?;
        Ok(text
            .lines()
            .map(|l| {
                let mut cols: Vec<&str> = l.split(',').collect();
                cols.remove(timing);
                cols.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n"))
    };
    let a = run("a.csv")?;
    let b = run("b.csv")?;
    ensure(a == b, || format!("runs differ:\n{a}\n---\n{b}"))?;
    let rows = a.lines().count() - 1;
    ensure(rows == 24, || format!("{rows} rows"))?;
    Ok(format!("{rows} rows identical apart from timing"))
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("corpus parsing", corpus_counts),
        ("worked example", worked_example),
        ("decomposition", decomposition),
        ("grounding oracle equivalence", grounding_oracle),
        ("plan concatenation", concatenation),
        ("search-space reduction", search_reduction),
        ("escalation with zero sub-solve budget", escalation),
        ("retry bound", retry_bound),
        ("prompt fidelity", prompt_fidelity),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
