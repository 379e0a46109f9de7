//! Adapter for planners run as a subprocess.

use std::fs;
use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::{parse_plan, validate_plan, SearchStats, SolveError, SolveOutcome, SolveRequest};
use crate::pddl::{serialize_domain, serialize_problem};

const STDERR_EXCERPT: usize = 2000;

/// A command template with `{domain}`, `{problem}` and optionally `{plan}`
/// placeholders, split with shell quoting rules. Without `{plan}` the plan is
/// read from standard output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalPlanner {
    pub command: String,
    /// Keep the temporary directory (its path is logged).
    pub keep_artifacts: bool,
}

impl ExternalPlanner {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalPlanner { command: command.into(), keep_artifacts: false }
    }

    fn argv(&self, domain: &Path, problem: &Path, plan: &Path) -> Result<(Vec<String>, bool), SolveError> {
        let words = shell_words::split(&self.command).map_err(|e| SolveError::Template(e.to_string()))?;
        if words.is_empty() {
            return Err(SolveError::Template("empty command".into()));
        }
        if !words.iter().any(|w| w.contains("{domain}")) || !words.iter().any(|w| w.contains("{problem}")) {
            return Err(SolveError::Template(format!(
                "{:?} must mention both {{domain}} and {{problem}}",
                self.command
            )));
        }
        let uses_plan = words.iter().any(|w| w.contains("{plan}"));
        let argv = words
            .into_iter()
            .map(|w| {
                w.replace("{domain}", &domain.to_string_lossy())
                    .replace("{problem}", &problem.to_string_lossy())
                    .replace("{plan}", &plan.to_string_lossy())
            })
            .collect();
        Ok((argv, uses_plan))
    }
}

fn drain(mut r: impl Read + Send + 'static) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = r.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    })
}

fn excerpt(text: &str) -> String {
    let t = text.trim();
    match t.char_indices().nth(STDERR_EXCERPT) {
        Some((i, _)) => format!("{}...", &t[..i]),
        None => t.to_string(),
    }
}

/// Writes the instance to a fresh temporary directory, runs the planner under
/// `req.timeout`, and validates whatever plan it produced.
pub fn solve_external(req: &SolveRequest<'_>, planner: &ExternalPlanner) -> Result<SolveOutcome, SolveError> {
    let start = Instant::now();
    let stats_at = |start: Instant| SearchStats { elapsed: start.elapsed(), ..SearchStats::default() };

    let dir = tempfile::Builder::new().prefix("subgoal-").tempdir()?;
    let domain_path = dir.path().join("domain.pddl");
    let problem_path = dir.path().join("problem.pddl");
    let plan_path = dir.path().join("plan.txt");
    fs::write(&domain_path, serialize_domain(req.domain))?;
    let problem_text = serialize_problem(req.state, req.goal, req.domain, req.objects, "sub")?;
    fs::write(&problem_path, problem_text)?;

    let (argv, uses_plan) = planner.argv(&domain_path, &problem_path, &plan_path)?;
    log::debug!("running {argv:?}");
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .current_dir(dir.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let out = drain(child.stdout.take().expect("piped stdout"));
    let err = drain(child.stderr.take().expect("piped stderr"));

    let status = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if start.elapsed() >= req.timeout {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        thread::sleep(Duration::from_millis(5));
    };
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();

    let result = match status {
        None => Ok(SolveOutcome::Timeout(stats_at(start))),
        Some(status) if !status.success() => Err(SolveError::ExternalFailure {
            code: status.code(),
            stderr: excerpt(&stderr),
        }),
        Some(_) => {
            let text = if uses_plan { fs::read_to_string(&plan_path)? } else { stdout };
            let plan = parse_plan(&text, req.domain, req.objects)?;
            let verdict = validate_plan(req.state, req.goal, &plan);
            if verdict.is_valid() {
                let mut stats = stats_at(start);
                stats.plan_length = Some(plan.len());
                Ok(SolveOutcome::Solved(plan, stats))
            } else {
                Err(SolveError::ExternalInvalidPlan(verdict))
            }
        }
    };

    if planner.keep_artifacts {
        let kept = dir.keep();
        log::info!("external planner artifacts kept in {}", kept.display());
    }
    result
}
