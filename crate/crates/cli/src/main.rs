//! `coclass`: cohomology, orbits, extensions and branch checks from the
//! command line. Reports are JSON with every number as a decimal string.
//!
//! Exit status: 0 on success, 1 when a checked property fails, 2 on usage,
//! validation or unmet-precondition errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{ArgAction, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use coclass::compatible::least_qualifying_level;
use coclass::report::{
    branch_report, cohomology_report, decimal_strings, extend_report, lcs_report, orbits_report, to_json,
    verify_counterexample, CocycleFile,
};
use coclass::scenarios::{load_spec, verify_correspondence, Scenario, ScenarioSpec, DEFAULT_MAX_LEVEL};
use coclass::tree::ShiftParams;
use coclass::Error;

#[derive(Parser, Debug)]
#[command(name = "coclass", version, about = "Cohomology and coclass-tree periodicity checks", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Working precision N of the p-adic coefficients; results are still
    /// rechecked at N + 2
    #[arg(long, global = true, value_name = "N")]
    precision: Option<u32>,

    /// Write the JSON report here instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Worker threads for `run-all`; output does not depend on it
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..=256))]
    jobs: u16,

    /// More log output on stderr (repeatable)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Invariants of H^m(R, T/T_n)
    Cohomology {
        /// Built-in scenario name or path to a scenario JSON file
        #[arg(long)]
        scenario: String,
        #[arg(long = "n")]
        n: usize,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
        degree: u8,
        /// Include representative cocycles of the cyclic generators
        #[arg(long)]
        representatives: bool,
    },
    /// Orbits of the compatible pairs on H^2(R, T/T_n)
    Orbits {
        #[arg(long)]
        scenario: String,
        #[arg(long = "n")]
        n: usize,
    },
    /// Orbit correspondence between levels n and n + d
    Correspondence {
        #[arg(long)]
        scenario: String,
        /// Defaults to the least qualifying level
        #[arg(long = "n", value_parser = clap::value_parser!(u64).range(1..))]
        n: Option<u64>,
    },
    /// Build the extension given by a class or cocycle file
    Extend {
        #[arg(long)]
        scenario: String,
        /// JSON with `level` and exactly one of `class` or `cocycle`
        #[arg(long, value_name = "FILE")]
        cocycle: PathBuf,
    },
    /// The branch B_i of depth k, optionally with its shift to B_(i+d)
    Branch {
        #[arg(long)]
        scenario: String,
        #[arg(long = "i")]
        i: usize,
        #[arg(long = "k")]
        k: usize,
        /// Also build B_(i+d) and the vertex map
        #[arg(long)]
        shift: bool,
        /// Write the branch as DOT
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
    },
    /// Search for an endomorphism that moves the H^2(R, T) summand, then
    /// check the corrected orbit correspondence
    VerifyCounterexample {
        #[arg(long, default_value = "d8_gaussian")]
        scenario: String,
        /// Highest lift k scanned
        #[arg(long, default_value_t = 2)]
        max_lift: u32,
        /// Highest level n scanned
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        max_level: u64,
    },
    /// Check that p^k L is the (1 + k d)-th lower central term
    VerifyLcs {
        #[arg(long, default_value = "d8_gaussian")]
        scenario: String,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        max_m: u64,
    },
    /// Every check on the built-in scenarios
    RunAll,
}

/// How a command ended.
enum Status {
    Pass,
    Fail,
    Precondition,
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Consistency(_) | Error::PrecisionUnstable { .. } => 1,
        _ => 2,
    }
}

fn scenario(name: &str, precision: Option<u32>) -> coclass::Result<Scenario> {
    let spec = load_spec(name)?;
    Scenario::new(ScenarioSpec { precision: precision.or(spec.precision), ..spec })
}

fn emit(text: &str, out: Option<&Path>) -> coclass::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn run(cli: &Cli) -> coclass::Result<(String, Status)> {
    let prec = cli.precision;
    Ok(match &cli.command {
        Command::Cohomology { scenario: name, n, degree, representatives } => {
            let s = scenario(name, prec)?;
            let r = cohomology_report(&s, *n, *degree as usize, *representatives)?;
            (to_json(&r)?, Status::Pass)
        }
        Command::Orbits { scenario: name, n } => {
            let s = scenario(name, prec)?;
            (to_json(&orbits_report(&s, *n)?)?, Status::Pass)
        }
        Command::Correspondence { scenario: name, n } => {
            let s = scenario(name, prec)?;
            let n = match n {
                Some(n) => *n as usize,
                None => least_qualifying_level(s.tower(), 1, max_level(&s))?,
            };
            let r = verify_correspondence(&s, n)?;
            let st = if r.precondition.is_some() { Status::Precondition } else { status(r.ok) };
            (to_json(&r)?, st)
        }
        Command::Extend { scenario: name, cocycle } => {
            let s = scenario(name, prec)?;
            let text = std::fs::read_to_string(cocycle)?;
            let file: CocycleFile = serde_json::from_str(&text)?;
            (to_json(&extend_report(&s, &file)?)?, Status::Pass)
        }
        Command::Branch { scenario: name, i, k, shift, dot } => {
            let s = scenario(name, prec)?;
            if *shift {
                let p = ShiftParams::compute(&s, *i, *k)?;
                if !p.admits(*i) {
                    return Err(Error::Hypothesis(format!(
                        "--shift needs i - l >= v d = {} and a natural split on B_i and B_(i+d) (l = {}, natural: {})",
                        p.v as usize * p.d,
                        p.l,
                        p.natural
                    )));
                }
            }
            let (r, text) = branch_report(&s, *i, *k, *shift)?;
            if let Some(path) = dot {
                std::fs::write(path, text)?;
            }
            (to_json(&r)?, status(r.ok))
        }
        Command::VerifyCounterexample { scenario: name, max_lift, max_level } => {
            let spec = load_spec(name)?;
            let r = verify_counterexample(&spec, prec, 0..=*max_lift, 1..=*max_level as usize)?;
            (to_json(&r)?, status(r.ok))
        }
        Command::VerifyLcs { scenario: name, max_m } => {
            let s = scenario(name, prec)?;
            let r = lcs_report(&s, *max_m as usize)?;
            (to_json(&r)?, status(r.ok))
        }
        Command::RunAll => {
            let (v, ok) = run_all(prec, cli.jobs as usize)?;
            let mut text = serde_json::to_string_pretty(&v)?;
            text.push('\n');
            (text, status(ok))
        }
    })
}

fn max_level(s: &Scenario) -> usize {
    s.spec().max_level.unwrap_or(DEFAULT_MAX_LEVEL) as usize
}

#[derive(Serialize)]
struct Section {
    name: String,
    ok: bool,
    report: Value,
}

type Task = Box<dyn Fn() -> coclass::Result<Section> + Send + Sync>;

fn section<T: Serialize>(name: String, ok: bool, r: &T) -> coclass::Result<Section> {
    Ok(Section { name, ok, report: decimal_strings(serde_json::to_value(r)?) })
}

fn tasks(prec: Option<u32>) -> Vec<Task> {
    let mut out: Vec<Task> = Vec::new();
    for &name in ScenarioSpec::builtin_names() {
        out.push(Box::new(move || {
            let s = scenario(name, prec)?;
            let reports = (1..=4).map(|n| cohomology_report(&s, n, 2, false)).collect::<coclass::Result<Vec<_>>>()?;
            section(format!("cohomology {name}"), true, &reports)
        }));
        out.push(Box::new(move || {
            let s = scenario(name, prec)?;
            let n = least_qualifying_level(s.tower(), 1, max_level(&s))?;
            section(format!("orbits {name}"), true, &orbits_report(&s, n)?)
        }));
        out.push(Box::new(move || {
            let s = scenario(name, prec)?;
            let n = least_qualifying_level(s.tower(), 1, max_level(&s))?;
            let r = verify_correspondence(&s, n)?;
            section(format!("correspondence {name}"), r.ok, &r)
        }));
    }
    out.push(Box::new(move || {
        let s = scenario("dihedral_mainline", prec)?;
        let l = s.mainline_offset()?.unwrap_or(0);
        let i = (l + 1..=l + max_level(&s))
            .find(|&i| ShiftParams::compute(&s, i, 1).map(|p| p.admits(i)).unwrap_or(false))
            .ok_or_else(|| Error::Hypothesis("no admissible branch index".into()))?;
        let (r, _) = branch_report(&s, i, 1, true)?;
        section("branch dihedral_mainline".into(), r.ok, &r)
    }));
    out.push(Box::new(move || {
        let r = verify_counterexample(&ScenarioSpec::d8_gaussian(), prec, 0..=2, 1..=4)?;
        section("counterexample d8_gaussian".into(), r.ok, &r)
    }));
    out.push(Box::new(move || {
        let s = scenario("d8_gaussian", prec)?;
        let r = lcs_report(&s, 3)?;
        section("lcs d8_gaussian".into(), r.ok, &r)
    }));
    out
}

/// Runs every task on `jobs` threads; results keep the task order.
fn run_all(prec: Option<u32>, jobs: usize) -> coclass::Result<(Value, bool)> {
    let tasks = tasks(prec);
    let results: Mutex<Vec<Option<coclass::Result<Section>>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(tasks.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(task) = tasks.get(i) else { break };
                let r = task();
                results.lock().expect("no poisoned lock")[i] = Some(r);
            });
        }
    });
    let sections: Vec<Section> = results
        .into_inner()
        .expect("no poisoned lock")
        .into_iter()
        .map(|r| r.expect("every task ran"))
        .collect::<coclass::Result<_>>()?;
    let ok = sections.iter().all(|s| s.ok);
    let v = serde_json::json!({ "sections": sections, "ok": ok });
    Ok((v, ok))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(&cli) {
        Ok((text, st)) => {
            if let Err(e) = emit(&text, cli.out.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            match st {
                Status::Pass => ExitCode::SUCCESS,
                Status::Fail => {
                    eprintln!("error: a checked property failed; see the report");
                    ExitCode::from(1)
                }
                Status::Precondition => {
                    eprintln!("error: the level does not meet the hypotheses; see `precondition` in the report");
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
