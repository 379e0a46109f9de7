use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use subgoal::bench::{
    emit_report, generate_blocks, generate_logistics, run_suite, InstanceSource, LlmSource, LogisticsSize,
    ReportFormat, SuiteSpec,
};
use subgoal::decompose::{decompose_with, DependencyRule};
use subgoal::grounding::{ground_all, successors};
use subgoal::llm::{
    render_direct_prompt, render_inspire_prompt, render_predict_prompt, InspireRequest, LiveConfig, PredictRequest,
};
use subgoal::orchestrator::{plan, Mode, PlannerConfig};
use subgoal::pddl::{parse_domain, parse_problem, Domain, Problem};
use subgoal::search::{parse_plan, validate_plan, write_plan, Engine, ExternalPlanner};

use crate::{Command, Fail, Family, Format, Input, PlannerArgs, PromptChoice, RuleArgs};

pub fn run(command: Command) -> Result<(), Fail> {
    match command {
        Command::Parse { domain, problem } => parse(&domain, &problem),
        Command::Ground { input, all } => ground(&input, all),
        Command::Decompose { input, rules } => {
            let (d, p) = load(&input)?;
            let rule = load_rules(&rules, &d)?;
            let seq = decompose_with(&p.goal, &rule, rules.cycle_fallback).map_err(|e| Fail::Planning(e.into()))?;
            println!("{seq}");
            Ok(())
        }
        Command::Solve { input, planner, plan_out, record_out, transcript } => {
            solve(&input, &planner, plan_out, record_out, transcript)
        }
        Command::Validate { input, plan } => validate(&input, &plan),
        Command::Bench { domain, suite, problem, modes, planner, csv, records, transcript, format, jobs } => {
            let mut instances: Vec<InstanceSource> = Vec::new();
            if let Some(dir) = suite {
                instances.extend(suite_files(&dir, &domain)?.into_iter().map(InstanceSource::File));
            }
            instances.extend(problem.into_iter().map(InstanceSource::File));
            let modes = modes.iter().map(|m| m.parse::<Mode>().map_err(|e| anyhow!(e))).collect::<Result<Vec<_>, _>>()?;
            let domain_text = read(&domain)?;
            let d = parse_domain(&domain_text).with_context(|| format!("cannot parse {}", domain.display()))?;
            let mut spec = SuiteSpec::new(&domain, instances, modes);
            spec.base = planner_config(&planner, &d)?;
            spec.llm = llm_source(&planner)?;
            spec.csv = csv;
            spec.records = records;
            spec.transcript = transcript;
            spec.jobs = jobs;
            let report = run_suite(&spec)?;
            let fmt = match format {
                Format::Table => ReportFormat::Table,
                Format::Csv => ReportFormat::Csv,
            };
            print!("{}", emit_report(&report.rows, fmt));
            eprint!("{}", report.summary());
            Ok(())
        }
        Command::Prompts { input, kind } => prompts(&input, kind),
        Command::Generate { family, size, cities, count, seed, out } => generate(family, size, cities, count, seed, out),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(input: &Input) -> anyhow::Result<(Domain, Problem)> {
    let domain = parse_domain(&read(&input.domain)?).with_context(|| format!("cannot parse {}", input.domain.display()))?;
    let problem = parse_problem(&read(&input.problem)?, &domain)
        .with_context(|| format!("cannot parse {}", input.problem.display()))?;
    Ok((domain, problem))
}

fn load_rules(args: &RuleArgs, domain: &Domain) -> anyhow::Result<DependencyRule> {
    let Some(path) = &args.rules else {
        return Ok(DependencyRule::default());
    };
    let rule: DependencyRule = read(path)?.parse().with_context(|| format!("in {}", path.display()))?;
    rule.validate(domain).with_context(|| format!("in {}", path.display()))?;
    Ok(rule)
}

fn parse(domain: &Path, problems: &[PathBuf]) -> Result<(), Fail> {
    let d = match parse_domain(&read(domain)?) {
        Ok(d) => d,
        Err(e) => return Err(Fail::Planning(anyhow!("{}: {e}", domain.display()))),
    };
    println!("ok {} (domain {}, {} actions)", domain.display(), d.name, d.schemas.len());
    let mut failed = false;
    for p in problems {
        match parse_problem(&read(p)?, &d) {
            Ok(prob) => println!(
                "ok {} (problem {}, {} objects, {} goal atoms)",
                p.display(),
                prob.name,
                prob.objects.len(),
                prob.goal.len()
            ),
            Err(e) => {
                println!("error {}: {e}", p.display());
                failed = true;
            }
        }
    }
    if failed {
        return Err(Fail::Planning(anyhow!("some files failed to parse")));
    }
    Ok(())
}

fn ground(input: &Input, all: bool) -> Result<(), Fail> {
    let (d, p) = load(input)?;
    let index = ground_all(&d, &p.objects);
    if all {
        for a in index.all() {
            println!("{a}");
        }
    } else {
        for a in successors(&p.init, &index) {
            println!("{a}");
        }
    }
    Ok(())
}

fn engine(args: &PlannerArgs) -> anyhow::Result<Engine> {
    if args.engine == "internal" {
        return Ok(Engine::Internal);
    }
    let Some(cmd) = args.engine.strip_prefix("external:") else {
        bail!("--engine must be 'internal' or 'external:<command>', found {:?}", args.engine);
    };
    let mut planner = ExternalPlanner::new(cmd.trim());
    planner.keep_artifacts = args.keep_artifacts;
    Ok(Engine::External(planner))
}

fn planner_config(args: &PlannerArgs, domain: &Domain) -> anyhow::Result<PlannerConfig> {
    Ok(PlannerConfig {
        mode: args.mode.parse().map_err(|e: String| anyhow!(e))?,
        sub_solve_timeout: args.sub_timeout,
        total_solver_budget: args.budget,
        retry_limit: args.retry_limit,
        protect_achieved: args.protect_achieved,
        predict_timeout: args.predict_timeout,
        strict: args.strict,
        cycle_fallback: args.rules.cycle_fallback,
        engine: engine(args)?,
        seed: args.seed,
        rule: load_rules(&args.rules, domain)?,
    })
}

fn llm_source(args: &PlannerArgs) -> anyhow::Result<LlmSource> {
    Ok(match args.llm.as_str() {
        "none" => LlmSource::None,
        "oracle" => LlmSource::Oracle,
        "live" => {
            let env = LiveConfig::from_env();
            let endpoint = args.llm_endpoint.clone().or_else(|| env.as_ref().map(|c| c.endpoint.clone()));
            let model = args.llm_model.clone().or_else(|| env.as_ref().map(|c| c.model.clone()));
            let (Some(endpoint), Some(model)) = (endpoint, model) else {
                bail!(
                    "--llm live needs an endpoint and a model (--llm-endpoint/--llm-model or {} and {})",
                    subgoal::llm::ENDPOINT_ENV,
                    subgoal::llm::MODEL_ENV
                );
            };
            LlmSource::Live(LiveConfig {
                endpoint,
                model,
                api_key_env: subgoal::llm::API_KEY_ENV.into(),
                timeout: std::time::Duration::from_secs(600),
                temperature: 0.0,
            })
        }
        other => match other.strip_prefix("scripted:") {
            Some(path) => LlmSource::Scripted(PathBuf::from(path)),
            None => bail!("--llm must be none, oracle, live or scripted:<file>, found {other:?}"),
        },
    })
}

fn solve(
    input: &Input,
    args: &PlannerArgs,
    plan_out: Option<PathBuf>,
    record_out: Option<PathBuf>,
    transcript: Option<PathBuf>,
) -> Result<(), Fail> {
    let (d, p) = load(input)?;
    let cfg = planner_config(args, &d)?;
    let client = if cfg.mode.needs_client() { llm_source(args)?.client_for(&d, &p)? } else { None };
    let episode = plan(&p, &d, &cfg, client.as_deref())?;

    if let Some(path) = &transcript {
        episode.transcript.append_to(path).with_context(|| format!("cannot write {}", path.display()))?;
    }
    if let Some(path) = &record_out {
        fs::write(path, episode.record.to_key_values()).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let r = &episode.record;
    match &episode.result {
        Ok(plan) => {
            let text = write_plan(plan);
            if let Some(path) = &plan_out {
                fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?;
            }
            print!("{text}");
            eprintln!(
                "solved {} ({}): {} steps, {} ms solver, {} expansions, {} LLM calls",
                r.instance,
                r.mode,
                plan.len(),
                r.solver_time.as_millis(),
                r.expansions,
                r.llm_calls
            );
            Ok(())
        }
        Err(f) => Err(Fail::Planning(anyhow!("failed {} ({}): {f}", r.instance, r.mode))),
    }
}

fn validate(input: &Input, plan_path: &Path) -> Result<(), Fail> {
    let (d, p) = load(input)?;
    let plan = match parse_plan(&read(plan_path)?, &d, &p.objects) {
        Ok(plan) => plan,
        Err(e) => return Err(Fail::Planning(anyhow!("INVALID: {e}"))),
    };
    let v = validate_plan(&p.init, &p.goal, &plan);
    if v.is_valid() {
        println!("VALID ({} steps)", plan.len());
        Ok(())
    } else {
        println!("INVALID: {v}");
        Err(Fail::Planning(anyhow!("plan does not solve {}", p.name)))
    }
}

/// Problem files of a suite directory, sorted, without the domain file.
fn suite_files(dir: &Path, domain: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let domain = fs::canonicalize(domain).with_context(|| format!("cannot read {}", domain.display()))?;
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "pddl") && fs::canonicalize(&path)? != domain {
            if read(&path)?.to_lowercase().contains("(define (domain") {
                continue;
            }
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        bail!("no problem files in {}", dir.display());
    }
    Ok(files)
}

fn prompts(input: &Input, kind: PromptChoice) -> Result<(), Fail> {
    let (d, p) = load(input)?;
    let index = ground_all(&d, &p.objects);
    let want = |k: PromptChoice| kind == PromptChoice::All || kind == k;
    let mut sections = Vec::new();
    if want(PromptChoice::Inspire) {
        let req = InspireRequest {
            state: p.init.clone(),
            goal: p.goal.clone(),
            trajectory: Vec::new(),
            applicable: successors(&p.init, &index).into_iter().cloned().collect(),
            domain_name: d.name.clone(),
        };
        sections.push(("inspire", render_inspire_prompt(&req)));
    }
    if want(PromptChoice::Predict) {
        let req = PredictRequest { state: p.init.clone(), goal: p.goal.clone(), domain_name: d.name.clone() };
        sections.push(("predict", render_predict_prompt(&req)));
    }
    if want(PromptChoice::Direct) {
        sections.push(("direct", render_direct_prompt(&d.name, &p.init, &p.goal)));
    }
    let single = sections.len() == 1;
    for (name, text) in sections {
        if !single {
            println!("===== {name} =====");
        }
        print!("{text}");
        if !text.ends_with('\n') {
            println!();
        }
    }
    Ok(())
}

fn generate(family: Family, size: usize, cities: usize, count: usize, seed: u64, out: Option<PathBuf>) -> Result<(), Fail> {
    let min = match family {
        Family::Blocks => 2,
        Family::Logistics => 1,
    };
    if size < min || count == 0 {
        return Err(anyhow!("--size must be at least {min} and --count at least 1").into());
    }
    if family == Family::Logistics && cities == 0 {
        return Err(anyhow!("--cities must be at least 1").into());
    }
    let text_for = |s: u64| match family {
        Family::Blocks => generate_blocks(size, s),
        Family::Logistics => generate_logistics(LogisticsSize { cities, packages: size, ..LogisticsSize::default() }, s),
    };
    let Some(dir) = out else {
        if count != 1 {
            return Err(anyhow!("--count above 1 needs --out").into());
        }
        print!("{}", text_for(seed));
        return Ok(());
    };
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let prefix = match family {
        Family::Blocks => "blocks",
        Family::Logistics => "logistics",
    };
    for i in 0..count as u64 {
        let s = seed + i;
        let path = dir.join(format!("{prefix}-{size}-{s:03}.pddl"));
        fs::write(&path, text_for(s)).with_context(|| format!("cannot write {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}
