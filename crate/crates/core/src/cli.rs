//! `reoc` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::ca::{bisimilar, to_dot, ConstraintAutomaton, DataDomain, PortName};
use crate::compile::{compile, partition_for, stats_csv, CompileError, StatsRow, Strategy, DEFAULT_BUDGET};
use crate::connector::{gen_family, parse_connector, Connector, Family, FamilySpec};
use crate::runtime::{accepts, bench, bench_csv, run_regional, BenchRow, RunStatus, StimulusScript};
use crate::scan::disabled_transition_scan;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_NOT_EQUIVALENT: i32 = 4;
pub const EXIT_RUNTIME: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "reoc", version, about = "Compile and run constraint-automata protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Stats,
    CaJson,
    Regions,
    Dot,
    C,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the source of a generated family member.
    Gen {
        #[arg(long)]
        family: Family,
        #[arg(short = 'k')]
        k: usize,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Compile a connector and write the requested artifacts.
    Build {
        input: PathBuf,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, required = true)]
        emit: Vec<Emit>,
        /// Output directory (stdout when absent).
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Exit 0 iff both protocols are bisimilar on their boundary.
    Equiv { left: PathBuf, right: PathBuf },
    /// Execute a connector against a script and print the trace.
    Run {
        input: PathBuf,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long)]
        script: PathBuf,
        /// Check the trace against the centralized automaton.
        #[arg(long)]
        validate: bool,
    },
    /// Time repeated runs and write CSV.
    Bench {
        input: PathBuf,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        reps: usize,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Compile a range of family sizes and write statistics CSV.
    Stats {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        k_from: usize,
        #[arg(long)]
        k_to: usize,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Report composed buffer moves that the full product never takes.
    Scan {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

type Outcome = Result<(), Failure>;

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn emit(&mut self, target: Option<&Path>, content: &str) -> Outcome {
        match target {
            Some(path) => {
                fs::write(path, content).map_err(|e| fail(EXIT_INPUT, format!("cannot write {}: {e}", path.display())))
            }
            None => self.out.write_all(content.as_bytes()).map_err(|e| fail(EXIT_INPUT, e.to_string())),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn load_connector(path: &Path) -> Result<Connector, Failure> {
    parse_connector(&read(path)?).map_err(|e| fail(EXIT_INPUT, format!("{}:{e}", path.display())))
}

fn load_script(path: &Path) -> Result<StimulusScript, Failure> {
    StimulusScript::from_json_str(&read(path)?).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn compile_failure(e: CompileError) -> Failure {
    match &e {
        CompileError::BudgetExceeded { log, .. } => {
            let mut msg = e.to_string();
            msg.push_str("\nfold steps:");
            for step in log {
                msg.push_str(&format!("\n  {step}"));
            }
            fail(EXIT_BUDGET, msg)
        }
        _ => fail(EXIT_INPUT, e.to_string()),
    }
}

fn centralized(c: &Connector, d: &DataDomain) -> Result<ConstraintAutomaton, Failure> {
    let mut cp = compile(c, Strategy::Centralized, d, DEFAULT_BUDGET).map_err(compile_failure)?;
    Ok(cp.units.remove(0).automaton)
}

/// Runs the CLI; returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(rendered.as_bytes());
            } else {
                let _ = out.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let mut io = Io { out, err };
    match dispatch(cli.command, &mut io) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(io.err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command, io: &mut Io<'_>) -> Outcome {
    match cmd {
        Command::Gen { family, k, output } => {
            let c = gen_family(FamilySpec::new(family, k)).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            io.emit(output.as_deref(), &c.to_string())
        }
        Command::Build { input, strategy, budget, emit, output } => build(io, &input, strategy, budget, &emit, output),
        Command::Equiv { left, right } => equiv(io, &left, &right),
        Command::Run { input, strategy, script, validate } => run_cmd(io, &input, strategy, &script, validate),
        Command::Bench { input, strategy, script, reps, output } => {
            let c = load_connector(&input)?;
            let script = load_script(&script)?;
            let d = script.domain_for(&c);
            let ep =
                script.resolve(&c.source_ports(), &c.sink_ports(), &d).map_err(|e| fail(EXIT_INPUT, e.to_string()))?;
            let cp = compile(&c, strategy, &d, DEFAULT_BUDGET).map_err(compile_failure)?;
            let summary = bench(&cp, &ep, script.seed, script.step_limit(), reps)
                .map_err(|s| fail(EXIT_RUNTIME, format!("run did not complete: {s:?}")))?;
            let rows: Vec<BenchRow> = BenchRow::new(&cp, &summary, script.seed).into_iter().collect();
            io.emit(output.as_deref(), &bench_csv(&rows))
        }
        Command::Stats { family, k_from, k_to, strategy, budget, output } => {
            if k_from > k_to {
                return Err(fail(EXIT_USAGE, "--k-from must not exceed --k-to"));
            }
            let mut rows = Vec::new();
            for k in k_from..=k_to {
                let c = gen_family(FamilySpec::new(family, k)).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
                rows.push(stats_row(&c, strategy, budget)?.0);
            }
            io.emit(output.as_deref(), &stats_csv(&rows))
        }
        Command::Scan { input, budget } => {
            let c = load_connector(&input)?;
            let report = disabled_transition_scan(&c, None, budget).map_err(compile_failure)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            io.emit(None, &(json + "\n"))
        }
    }
}

fn stats_row(
    c: &Connector,
    s: Strategy,
    budget: usize,
) -> Result<(StatsRow, Result<crate::compile::CompiledProtocol, CompileError>), Failure> {
    let d = c.data_domain();
    let started = Instant::now();
    let result = compile(c, s, &d, budget);
    let elapsed = started.elapsed();
    if let Err(e @ (CompileError::Connector(_) | CompileError::Automaton(_))) = &result {
        return Err(fail(EXIT_INPUT, e.to_string()));
    }
    let partition = partition_for(c, s, &d).ok();
    Ok((StatsRow::new(c, s, budget, &result, partition.as_ref(), elapsed), result))
}

fn build(io: &mut Io<'_>, input: &Path, s: Strategy, budget: usize, emit: &[Emit], output: Option<PathBuf>) -> Outcome {
    if emit.contains(&Emit::C) {
        return Err(fail(EXIT_USAGE, "C emission is not built in this distribution"));
    }
    let c = load_connector(input)?;
    if let Some(dir) = &output {
        fs::create_dir_all(dir).map_err(|e| fail(EXIT_INPUT, format!("cannot create {}: {e}", dir.display())))?;
    }
    let (row, result) = stats_row(&c, s, budget)?;
    let target = |name: String| output.as_ref().map(|d| d.join(name));
    let mut seen = Vec::new();
    for e in emit {
        if seen.contains(e) {
            continue;
        }
        seen.push(*e);
        match e {
            Emit::Stats => io.emit(target("stats.csv".into()).as_deref(), &stats_csv(std::slice::from_ref(&row)))?,
            Emit::Regions => {
                let pt = partition_for(&c, s, &c.data_domain()).map_err(compile_failure)?;
                let json = serde_json::to_string_pretty(&pt.report()).expect("report serializes") + "\n";
                io.emit(target("regions.json".into()).as_deref(), &json)?;
            }
            Emit::CaJson | Emit::Dot => {
                let Ok(cp) = &result else { continue };
                for u in &cp.units {
                    let (name, text) = if *e == Emit::CaJson {
                        (format!("unit_{}.json", u.id), u.automaton.to_json_string() + "\n")
                    } else {
                        (format!("unit_{}.dot", u.id), to_dot(&format!("{}/{}", cp.connector, u.name), &u.automaton))
                    };
                    io.emit(target(name).as_deref(), &text)?;
                }
            }
            Emit::C => unreachable!("rejected above"),
        }
    }
    result.map(|_| ()).map_err(compile_failure)
}

fn boundary_automaton(path: &Path) -> Result<ConstraintAutomaton, Failure> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        return ConstraintAutomaton::from_json_str(&text)
            .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())));
    }
    let c = parse_connector(&text).map_err(|e| fail(EXIT_INPUT, format!("{}:{e}", path.display())))?;
    centralized(&c, &c.data_domain())
}

fn equiv(io: &mut Io<'_>, left: &Path, right: &Path) -> Outcome {
    let a = boundary_automaton(left)?;
    let b = boundary_automaton(right)?;
    if a.ports().len() != b.ports().len() {
        return Err(fail(EXIT_NOT_EQUIVALENT, "not equivalent: boundary sizes differ"));
    }
    if a.domain() != b.domain() {
        return Err(fail(EXIT_NOT_EQUIVALENT, "not equivalent: data domains differ"));
    }
    // ports are kept sorted, so pairing by position pairs sorted external ports
    let map: BTreeMap<PortName, PortName> = b.ports().iter().cloned().zip(a.ports().iter().cloned()).collect();
    let b = b.rename_ports(&map).map_err(|e| fail(EXIT_INPUT, e.to_string()))?;
    match bisimilar(&a, &b) {
        Ok(true) => {
            let _ = writeln!(io.out, "equivalent");
            Ok(())
        }
        Ok(false) => Err(fail(EXIT_NOT_EQUIVALENT, "not equivalent")),
        Err(e) => Err(fail(EXIT_NOT_EQUIVALENT, format!("not equivalent: {e}"))),
    }
}

fn run_cmd(io: &mut Io<'_>, input: &Path, s: Strategy, script_path: &Path, validate: bool) -> Outcome {
    let c = load_connector(input)?;
    let script = load_script(script_path)?;
    let d = script.domain_for(&c);
    let ep = script
        .resolve(&c.source_ports(), &c.sink_ports(), &d)
        .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", script_path.display())))?;
    let cp = compile(&c, s, &d, DEFAULT_BUDGET).map_err(compile_failure)?;
    let run = run_regional(&cp, &ep, script.seed, script.step_limit());
    let json = serde_json::to_string_pretty(&run.outcome.trace).expect("trace serializes") + "\n";
    io.emit(None, &json)?;
    if validate {
        let big = centralized(&c, &d)?;
        if !accepts(&big, &run.outcome.trace) {
            return Err(fail(EXIT_NOT_EQUIVALENT, "trace rejected by the centralized automaton"));
        }
    }
    match run.outcome.status {
        RunStatus::Completed => Ok(()),
        RunStatus::Stuck { pending, states } => {
            let states: Vec<String> = states.iter().map(|(u, q)| format!("{u}@{q}")).collect();
            let pending: Vec<String> = pending.iter().map(|(p, n)| format!("{p}:{n}")).collect();
            Err(fail(
                EXIT_RUNTIME,
                format!("deadlock: pending [{}], unit states [{}]", pending.join(", "), states.join(", ")),
            ))
        }
        RunStatus::StepLimit { steps } => Err(fail(EXIT_RUNTIME, format!("step limit reached after {steps} steps"))),
    }
}
