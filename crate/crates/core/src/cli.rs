//! The `hioaw` command line: validate, run, compose and check scenarios.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::automaton::Scheduler;
use crate::composition::{check_compatible, compose, ComposeError};
use crate::fmt::g9;
use crate::refinement::{
    check_trace_inclusion, confirm_counterexample, simulation_implies_inclusion, FiniteInstance, RefinementError,
    Verdict,
};
use crate::scenario::{CheckDef, CheckKind, Scenario};
use crate::tracefile::{read_trace, sample_at_time, snapshot_name, write_trace};
use crate::value::Value;
use crate::AvSequence;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hioaw", version, about = "Hybrid I/O automata with world variables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the scenario and validate every automaton in it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Execute the run target and write trace.csv plus field snapshots.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Seed for the random scheduler.
        #[arg(long)]
        seed: Option<u64>,
        /// Times at which world fields are written out, e.g. `0,1.5,3`.
        #[arg(long, value_delimiter = ',')]
        snapshot_times: Option<Vec<f64>>,
        /// Automaton to run instead of the one named in [run].
        #[arg(long)]
        target: Option<String>,
    },
    /// Compose two automata and print the composite signature.
    Compose {
        #[arg(long)]
        scenario: PathBuf,
        a: String,
        b: String,
        /// Also write the summary to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every [check] section.
    Check {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the depth of every check.
        #[arg(long)]
        depth: Option<usize>,
        /// Directory for counterexample dumps; printed inline otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_FAIL;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_FAIL
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, String> {
    match cmd {
        Command::Validate { scenario } => cmd_validate(&scenario, out),
        Command::Run { scenario, out: dir, seed, snapshot_times, target } => {
            cmd_run(&scenario, &dir, seed, snapshot_times, target.as_deref(), out)
        }
        Command::Compose { scenario, a, b, out: file } => cmd_compose(&scenario, &a, &b, file.as_deref(), out),
        Command::Check { scenario, depth, out: dir } => cmd_check(&scenario, depth, dir.as_deref(), out),
    }
}

fn io_err(e: std::io::Error) -> String {
    e.to_string()
}

pub fn load(path: &Path) -> Result<Scenario, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Scenario::parse(&text).map_err(|e| format!("{}:{}:{}: {}", path.display(), e.line, e.column, e.message))
}

pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> Result<i32, String> {
    let sc = load(path)?;
    let mut code = EXIT_OK;
    for name in sc.names() {
        let a = match sc.automaton(name) {
            Ok(a) => a,
            Err(e) => {
                writeln!(out, "{name}: error: {e}").map_err(io_err)?;
                code = EXIT_FAIL;
                continue;
            }
        };
        let findings = a.validate();
        let errors = findings.iter().filter(|f| !f.is_warning()).count();
        if errors > 0 {
            code = EXIT_FAIL;
        }
        let status = if errors > 0 { "invalid" } else { "ok" };
        writeln!(out, "{name}: {status}").map_err(io_err)?;
        for f in &findings {
            let tag = if f.is_warning() { "warning" } else { "finding" };
            writeln!(out, "  {tag}: {f}").map_err(io_err)?;
        }
    }
    Ok(code)
}

pub fn cmd_run(
    path: &Path,
    dir: &Path,
    seed: Option<u64>,
    snapshot_times: Option<Vec<f64>>,
    target: Option<&str>,
    out: &mut dyn Write,
) -> Result<i32, String> {
    let sc = load(path)?;
    let run = sc.run.clone();
    let target = target
        .map(str::to_string)
        .or_else(|| run.as_ref().map(|r| r.target.clone()))
        .or_else(|| sc.names().last().map(str::to_string))
        .ok_or("scenario defines no automaton to run")?;
    let mut scheduler = run.as_ref().map(|r| r.scheduler.clone()).unwrap_or(Scheduler::Urgent);
    if let (Scheduler::Random { seed: s, .. }, Some(seed)) = (&mut scheduler, seed) {
        *s = seed;
    }
    let times = snapshot_times.or_else(|| run.as_ref().map(|r| r.snapshot_times.clone())).unwrap_or_default();

    let a = sc.automaton(&target).map_err(|e| e.to_string())?;
    let x0 = a.start_states().first().cloned().ok_or_else(|| format!("{target} has no start state"))?;
    let mut env = sc.environment(&target, &a);
    let seq = a.execute(&x0, env.as_mut(), sc.dt, sc.horizon_steps, &scheduler).map_err(|e| e.to_string())?;
    let snapshots: Vec<(f64, &crate::Valuation)> =
        times.iter().map(|&t| sample_at_time(&seq, t).map(|s| (t, s))).collect::<Result<_, _>>()?;

    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let trace_path = dir.join("trace.csv");
    let file = fs::File::create(&trace_path).map_err(|e| format!("{}: {e}", trace_path.display()))?;
    write_trace(std::io::BufWriter::new(file), &seq, &a.sig().automaton_vars()).map_err(io_err)?;
    let world = a.sig().world_vars();
    let mut written = 0;
    for (t, s) in snapshots {
        for var in &world {
            if let Some(Value::Field(f)) = s.get(var.as_str()) {
                let p = dir.join(snapshot_name(var.as_str(), t));
                let file = fs::File::create(&p).map_err(|e| format!("{}: {e}", p.display()))?;
                f.write_csv(std::io::BufWriter::new(file)).map_err(io_err)?;
                written += 1;
            }
        }
    }
    let actions: Vec<&str> = seq.actions().map(|a| a.as_str()).collect();
    writeln!(
        out,
        "{target}: {} steps to t={}, {} actions{}",
        seq.steps(),
        g9(seq.ltime()),
        actions.len(),
        if actions.is_empty() { String::new() } else { format!(" ({})", actions.join(" ")) }
    )
    .map_err(io_err)?;
    writeln!(out, "wrote {} and {written} snapshots", trace_path.display()).map_err(io_err)?;
    Ok(EXIT_OK)
}

pub fn cmd_compose(path: &Path, a: &str, b: &str, file: Option<&Path>, out: &mut dyn Write) -> Result<i32, String> {
    let sc = load(path)?;
    let a1 = sc.automaton(a).map_err(|e| e.to_string())?;
    let a2 = sc.automaton(b).map_err(|e| e.to_string())?;
    let (text, code) = match compose(&a1, &a2) {
        Ok(c) => {
            let shared = c.shared_outputs();
            let shared: Vec<&str> = shared.iter().map(|v| v.as_str()).collect();
            (format!("composite {}\n{}\nshared world outputs: {{{}}}\n", c.name(), c.sig(), shared.join(", ")), EXIT_OK)
        }
        Err(ComposeError::Incompatible(report)) => (format!("{a} and {b} are incompatible\n{report}"), EXIT_FAIL),
        Err(e) => (format!("cannot compose {a} and {b}: {e}\n"), EXIT_FAIL),
    };
    out.write_all(text.as_bytes()).map_err(io_err)?;
    if let Some(p) = file {
        fs::write(p, &text).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    Ok(code)
}

/// Outcome of one check, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Outcome {
    Pass,
    Inconclusive,
    Fail,
}

fn outcome(v: &Verdict) -> Outcome {
    match v {
        Verdict::Holds => Outcome::Pass,
        Verdict::Inconclusive(_) => Outcome::Inconclusive,
        Verdict::Fails(_) => Outcome::Fail,
    }
}

pub fn cmd_check(path: &Path, depth: Option<usize>, dir: Option<&Path>, out: &mut dyn Write) -> Result<i32, String> {
    let sc = load(path)?;
    if sc.checks.is_empty() {
        return Err("scenario has no [check] sections".into());
    }
    if let Some(d) = dir {
        fs::create_dir_all(d).map_err(|e| format!("{}: {e}", d.display()))?;
    }
    let mut worst = Outcome::Pass;
    for c in &sc.checks {
        let depth = depth.unwrap_or(c.depth);
        let o = run_check(&sc, c, depth, dir, out)?;
        worst = worst.max(o);
    }
    Ok(match worst {
        Outcome::Pass => EXIT_OK,
        Outcome::Inconclusive => EXIT_INCONCLUSIVE,
        Outcome::Fail => EXIT_FAIL,
    })
}

fn run_check(
    sc: &Scenario,
    c: &CheckDef,
    depth: usize,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Outcome, String> {
    let head = format!("check {} ({} {} vs {})", c.name, c.kind, c.a, c.b);
    if c.kind == CheckKind::Compat {
        let a = sc.automaton(&c.a).map_err(|e| e.to_string())?;
        let b = sc.automaton(&c.b).map_err(|e| e.to_string())?;
        let report = check_compatible(&a, &b);
        let o = if report.compatible() { Outcome::Pass } else { Outcome::Fail };
        writeln!(out, "{head}: {}", if report.compatible() { "pass" } else { "fail" }).map_err(io_err)?;
        for cl in report.failing() {
            let names: Vec<&str> = cl.offending.iter().map(|s| s.as_str()).collect();
            writeln!(out, "  clause {} ({}) fails on {}", cl.number, cl.description, names.join(", "))
                .map_err(io_err)?;
        }
        return Ok(o);
    }
    let a = sc.instance(&c.a).map_err(|e| e.to_string())?;
    let b = sc.instance(&c.b).map_err(|e| e.to_string())?;
    let bounded = |r: Result<Verdict, RefinementError>| match r {
        Err(RefinementError::BoundExceeded { what, limit }) => {
            Ok(Verdict::Inconclusive(format!("bound exceeded: more than {limit} {what}")))
        }
        other => other.map_err(|e| e.to_string()),
    };
    let verdicts: Vec<(&str, Verdict)> = match c.kind {
        CheckKind::Inclusion => vec![("inclusion", bounded(check_trace_inclusion(&a, &b, depth))?)],
        _ => {
            let r = sc.relation(c, &a).map_err(|e| e.to_string())?;
            match simulation_implies_inclusion(&a, &b, &r, depth) {
                Ok(rep) => {
                    let mut v = vec![("simulation", rep.simulation)];
                    v.extend(rep.inclusion.map(|i| ("inclusion", i)));
                    v
                }
                Err(e) => vec![("simulation", bounded(Err(e))?)],
            }
        }
    };
    let worst = verdicts.iter().map(|(_, v)| outcome(v)).max().unwrap_or(Outcome::Pass);
    writeln!(out, "{head}, up to depth {depth}: {}", label(worst)).map_err(io_err)?;
    for (what, v) in &verdicts {
        writeln!(out, "  {what}: {v}").map_err(io_err)?;
        let Verdict::Fails(f) = v else { continue };
        if let Some((x, y)) = &f.pair {
            writeln!(out, "  pair: {x} / {y}").map_err(io_err)?;
        }
        if let Some(exec) = &f.execution {
            dump_counterexample(c, &a, &b, exec, depth, *what == "inclusion", dir, out)?;
        }
    }
    Ok(worst)
}

fn label(o: Outcome) -> &'static str {
    match o {
        Outcome::Pass => "pass",
        Outcome::Inconclusive => "inconclusive",
        Outcome::Fail => "fail",
    }
}

#[allow(clippy::too_many_arguments)]
fn dump_counterexample(
    c: &CheckDef,
    a: &FiniteInstance,
    b: &FiniteInstance,
    exec: &AvSequence,
    depth: usize,
    replay: bool,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), String> {
    let text = crate::tracefile::trace_string(exec, &a.automaton.sig().automaton_vars());
    match dir {
        Some(d) => {
            let p = d.join(format!("cex_{}.csv", c.name));
            fs::write(&p, &text).map_err(|e| format!("{}: {e}", p.display()))?;
            writeln!(out, "  counterexample: {}", p.display()).map_err(io_err)?;
        }
        None => {
            writeln!(out, "  counterexample:").map_err(io_err)?;
            for line in text.lines() {
                writeln!(out, "    {line}").map_err(io_err)?;
            }
        }
    }
    if replay {
        let back = read_trace(&text, &a.automaton, a.dt)?;
        let confirmed = match confirm_counterexample(a, b, &back, depth) {
            Ok(true) => "divergence confirmed".to_string(),
            Ok(false) => "NOT confirmed".to_string(),
            Err(e) => format!("not replayable: {e}"),
        };
        writeln!(out, "  replay: {confirmed}").map_err(io_err)?;
    }
    Ok(())
}
