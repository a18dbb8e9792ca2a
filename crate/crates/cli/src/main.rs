use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cprt_core::error::{AnalysisError, ResourceError};
use cprt_core::mp::{MpFloat, Precision};
use cprt_core::oracles::kleene::{kleene_converge, kleene_iterate, KleeneLimits};
use cprt_core::oracles::simulate::{simulate, SimEstimate, DEFAULT_STEP_CAP};
use cprt_core::parser::parse_program;
use cprt_core::program::{CpProgram, RandomWalkProgram};
use cprt_core::rational::format_rational;
use cprt_core::reduction::{to_random_walk, RdwMap};
use cprt_core::report::AnalysisReport;
use cprt_core::runtime::{analyze_cp, Analysis};
use cprt_core::termination::{Reason, VerdictKind};
use cprt_core::verify::{check_closed_form, CheckOptions};

const DEFAULT_DIGITS: u32 = 50;
const DISPLAY_DIGITS: usize = 6;
const PAPER_DIGITS: usize = 2;

/// `print!` that exits quietly when stdout is closed (e.g. piped to `head`).
macro_rules! out {
    ($($t:tt)*) => { emit(format_args!($($t)*)) };
}

macro_rules! outln {
    ($($t:tt)*) => { emit(format_args!("{}\n", format_args!($($t)*))) };
}

fn emit(args: std::fmt::Arguments) {
    let mut s = std::io::stdout().lock();
    if let Err(e) = std::io::Write::write_fmt(&mut s, args) {
        std::process::exit(if e.kind() == std::io::ErrorKind::BrokenPipe { 0 } else { 3 });
    }
}

#[derive(Parser)]
#[command(name = "cprt", version, about = "Termination and exact expected runtime of constant-probability loops")]
struct Cli {
    /// Working precision in decimal digits [env: CPRT_PRECISION, default 50].
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Largest reduced offset span k + m accepted for analysis.
    #[arg(long, global = true, default_value_t = 64)]
    max_degree: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide termination, bound and solve the expected runtime.
    Analyze {
        path: PathBuf,
        #[arg(long)]
        json: bool,
        /// Also print the reduced random walk.
        #[arg(long)]
        emit_rdw: bool,
        /// Include per-stage wall-clock times (not reproducible).
        #[arg(long)]
        timings: bool,
        /// Two significant digits, as in published tables.
        #[arg(long)]
        paper_format: bool,
    },
    /// Expected runtime at one initial state.
    Eval {
        path: PathBuf,
        #[command(flatten)]
        at: At,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        paper_format: bool,
    },
    /// Monte-Carlo estimate of the expected runtime.
    Simulate {
        path: PathBuf,
        #[command(flatten)]
        at: At,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Step cap per trial.
        #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
        cap: u64,
        #[arg(long)]
        json: bool,
    },
    /// Truncated fixpoint iteration from below.
    Kleene {
        path: PathBuf,
        #[command(flatten)]
        at: At,
        /// Number of iterations (upper limit with --until).
        #[arg(long)]
        depth: Option<usize>,
        /// Iterate until the per-step increment is below this.
        #[arg(long)]
        until: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Run the invariant suite on the computed closed form.
    Check {
        path: PathBuf,
        /// State for the Kleene comparisons (default: x = 1, 5, 25).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        at: Option<Vec<i64>>,
        #[arg(long, default_value_t = 256)]
        depth: usize,
        #[arg(long)]
        json: bool,
        /// Shift the first coefficient before checking.
        #[arg(long, hide = true)]
        perturb: Option<f64>,
    },
}

#[derive(Args)]
struct At {
    /// Initial values, comma separated, one per program variable.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    at: Vec<i64>,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Failure {
            code,
            msg: msg.into(),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let code = match e {
            AnalysisError::NotPast(_) => 1,
            _ => 2,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ResourceError> for Failure {
    fn from(e: ResourceError) -> Self {
        Failure::new(1, e.to_string())
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn precision(flag: Option<u32>) -> Result<Precision> {
    let digits = match flag {
        Some(d) => d,
        None => match std::env::var("CPRT_PRECISION") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::new(1, format!("CPRT_PRECISION: not a digit count: `{v}`")))?,
            Err(_) => DEFAULT_DIGITS,
        },
    };
    if !(16..=10_000).contains(&digits) {
        return Err(Failure::new(1, format!("precision must be 16..=10000 digits, got {digits}")));
    }
    Ok(Precision::new(digits))
}

struct Loaded {
    prog: CpProgram,
    rw: RandomWalkProgram,
    rdw: RdwMap,
}

fn load(path: &Path, max_degree: usize) -> Result<Loaded> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(3, format!("{}: {e}", path.display())))?;
    let prog = parse_program(&src).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))?;
    let (rw, rdw) = to_random_walk(&prog).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))?;
    if rw.k() + rw.m() > max_degree {
        return Err(Failure::new(
            1,
            format!(
                "{}: reduced offsets span {} > --max-degree {max_degree}",
                path.display(),
                rw.k() + rw.m()
            ),
        ));
    }
    Ok(Loaded { prog, rw, rdw })
}

fn check_arity(prog: &CpProgram, at: &[i64]) -> Result<()> {
    if at.len() != prog.arity() {
        return Err(Failure::new(
            1,
            format!("--at has {} values, program has {} variables", at.len(), prog.arity()),
        ));
    }
    Ok(())
}

fn print_json<T: Serialize>(v: &T) {
    outln!("{}", serde_json::to_string_pretty(v).expect("serialisable report"));
}

fn reduced_i64(rdw: &RdwMap, at: &[i64]) -> Result<i64> {
    i64::try_from(rdw.apply(at)).map_err(|_| Failure::new(1, "reduced state out of range"))
}

fn verdict_line(a: &Analysis) -> String {
    let v = &a.verdict;
    match v.reason {
        Reason::Triviality => format!(
            "trivial ({})",
            match v.trivial_case {
                Some(c) => serde_json::to_value(c).ok().and_then(|s| s.as_str().map(str::to_owned)).unwrap_or_default(),
                None => String::new(),
            }
        ),
        Reason::DirectTermination => format!(
            "{} (direct termination with probability {})",
            v.kind,
            format_rational(a.random_walk.direct_prob())
        ),
        Reason::DriftSign => format!("{} (drift {})", v.kind, format_rational(&a.drift)),
    }
}

fn cmd_analyze(cli: &Cli, path: &Path, json: bool, emit_rdw: bool, timings: bool, paper: bool) -> Result<()> {
    let l = load(path, cli.max_degree)?;
    let a = analyze_cp(&l.prog, precision(cli.precision)?)?;
    let report = AnalysisReport::new(&l.prog, &a, emit_rdw, timings);
    if json {
        print_json(&report);
        return Ok(());
    }
    let names = l.prog.var_names();
    let mut out = String::new();
    let _ = writeln!(out, "program  {} (sha256 {})", path.display(), &report.program_digest[..16]);
    let _ = writeln!(out, "reduced  x = {}", l.rdw.expr(names));
    let _ = writeln!(out, "verdict  {}", verdict_line(&a));
    if let Some(b) = &a.bounds {
        let _ = writeln!(out, "bounds   {b}");
    }
    if emit_rdw {
        let _ = writeln!(out, "\n{}\n", a.random_walk);
    }
    if let Some(cf) = a.closed_form() {
        let sig = if paper { PAPER_DIGITS } else { DISPLAY_DIGITS };
        let _ = writeln!(out, "{}", cf.pretty(names, sig));
    }
    if timings {
        for t in &a.timings {
            let _ = writeln!(out, "time     {:<9} {:.3} ms", t.stage, t.ms);
        }
    }
    out!("{out}");
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    at: Vec<i64>,
    x: i64,
    verdict: VerdictKind,
    /// `null` when the runtime is infinite.
    value: Option<f64>,
    /// Full-precision decimal text, or `inf`.
    digits: String,
}

fn cmd_eval(cli: &Cli, path: &Path, at: &[i64], json: bool, paper: bool) -> Result<()> {
    let l = load(path, cli.max_degree)?;
    check_arity(&l.prog, at)?;
    let prec = precision(cli.precision)?;
    let x = reduced_i64(&l.rdw, at)?;
    let a = analyze_cp(&l.prog, prec)?;
    let never_entered = a.verdict.trivial_case == Some(cprt_core::reduction::TrivialCase::NeverEntered);
    let value: Option<MpFloat> = if x <= 0 || never_entered {
        Some(MpFloat::zero(prec))
    } else {
        a.closed_form().map(|cf| cf.evaluate(x as i128))
    };
    let report = EvalReport {
        at: at.to_vec(),
        x,
        verdict: a.verdict.kind,
        value: value.as_ref().map(MpFloat::to_f64),
        digits: value.as_ref().map_or("inf".into(), |v| v.to_decimal_string(prec.digits() as usize)),
    };
    if json {
        print_json(&report);
    } else {
        let sig = if paper { PAPER_DIGITS } else { DISPLAY_DIGITS };
        outln!("{}", value.map_or("inf".into(), |v| v.to_decimal_string(sig)));
    }
    Ok(())
}

#[derive(Serialize)]
struct SimReport {
    at: Vec<i64>,
    #[serde(flatten)]
    estimate: SimEstimate,
}

fn cmd_simulate(cli: &Cli, path: &Path, at: &[i64], trials: u64, seed: u64, cap: u64, json: bool) -> Result<()> {
    let l = load(path, cli.max_degree)?;
    check_arity(&l.prog, at)?;
    if trials == 0 || cap == 0 {
        return Err(Failure::new(1, "--trials and --cap must be positive"));
    }
    let e = simulate(&l.prog, at, trials, cap, seed);
    if json {
        print_json(&SimReport {
            at: at.to_vec(),
            estimate: e,
        });
        return Ok(());
    }
    match (e.mean, e.half_width_95) {
        (Some(m), Some(h)) => outln!("mean {m:.6} +/- {h:.6} (95%)"),
        (Some(m), None) => outln!("mean {m:.6}"),
        _ => outln!("mean undefined"),
    }
    outln!("trials {}, censored {}, seed {}, cap {}", e.trials, e.censored, e.seed, e.step_cap);
    if e.censored > 0 {
        outln!(
            "warning: {} runs hit the step cap; the mean covers terminated runs only",
            e.censored
        );
    }
    Ok(())
}

fn cmd_kleene(cli: &Cli, path: &Path, at: &[i64], depth: Option<usize>, until: Option<f64>, json: bool) -> Result<()> {
    let l = load(path, cli.max_degree)?;
    check_arity(&l.prog, at)?;
    let x = reduced_i64(&l.rdw, at)?;
    let (value, n, extra) = match until {
        Some(tol) => {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Failure::new(1, "--until must be positive"));
            }
            let c = kleene_converge(&l.rw, x, tol, depth.unwrap_or(usize::MAX), KleeneLimits::default())?;
            let v = serde_json::to_value(&c).expect("serialisable");
            (c.value, c.iterations, (v, c.converged))
        }
        None => {
            let n = depth.unwrap_or(100);
            if n == 0 {
                return Err(Failure::new(1, "--depth must be at least 1"));
            }
            let r = kleene_iterate(&l.rw, x, n)?;
            (r.value, n, (serde_json::to_value(&r).expect("serialisable"), true))
        }
    };
    if json {
        let mut v = extra.0;
        v.as_object_mut()
            .expect("object")
            .insert("at".into(), serde_json::to_value(at).expect("serialisable"));
        print_json(&v);
    } else {
        outln!("L^{n} 0 at x = {x}: {value:.9}");
        if !extra.1 {
            outln!("warning: increment still above --until after {n} iterations");
        }
    }
    Ok(())
}

fn cmd_check(cli: &Cli, path: &Path, at: Option<&[i64]>, depth: usize, json: bool, perturb: Option<f64>) -> Result<()> {
    let l = load(path, cli.max_degree)?;
    let a = analyze_cp(&l.prog, precision(cli.precision)?)?;
    let (Some(s), Some(bounds)) = (a.solution.as_ref(), a.bounds.as_ref()) else {
        return Err(Failure::new(
            1,
            format!("check needs a PAST program; verdict is {}", a.verdict.kind),
        ));
    };
    let mut opts = CheckOptions {
        depth: depth.max(1),
        ..CheckOptions::default()
    };
    if let Some(at) = at {
        check_arity(&l.prog, at)?;
        opts.points = vec![reduced_i64(&l.rdw, at)?];
    }
    let cf = match perturb {
        Some(d) => s.closed_form.perturbed(d),
        None => s.closed_form.clone(),
    };
    let report = check_closed_form(&a.random_walk, s.retained.total_multiplicity(), &cf, bounds, &opts)?;
    if json {
        print_json(&report);
    } else {
        for c in &report.checks {
            outln!("{} {:<20} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::new(4, format!("{} of {} checks failed", report.checks.iter().filter(|c| !c.passed).count(), report.checks.len())))
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Analyze {
            path,
            json,
            emit_rdw,
            timings,
            paper_format,
        } => cmd_analyze(cli, path, *json, *emit_rdw, *timings, *paper_format),
        Command::Eval {
            path,
            at,
            json,
            paper_format,
        } => cmd_eval(cli, path, &at.at, *json, *paper_format),
        Command::Simulate {
            path,
            at,
            trials,
            seed,
            cap,
            json,
        } => cmd_simulate(cli, path, &at.at, *trials, *seed, *cap, *json),
        Command::Kleene {
            path,
            at,
            depth,
            until,
            json,
        } => cmd_kleene(cli, path, &at.at, *depth, *until, *json),
        Command::Check {
            path,
            at,
            depth,
            json,
            perturb,
        } => cmd_check(cli, path, at.as_deref(), *depth, *json, *perturb),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
