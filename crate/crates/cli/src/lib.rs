//! Command-line front end for `csf_lab`.
//!
//! [`run`] is the whole program; `main` only wires it to the process streams.
//! Exit codes: `0` success, `1` a requested `--expect` assertion failed,
//! `2` usage, spec-file or evaluation errors.

pub mod report;
pub mod spec_file;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use csf_lab::axioms::AxiomId;
use csf_lab::equilibrium::{comparative_static_b, solve_nash, ContestGame, SolveStatus, SolverConfig};
use csf_lab::{
    check_axiom, decompose_two_level, evaluate, falsify, reproduce_paper_examples, Backend, CsfError, Family,
    Number, SamplingPlan, Scalar, Status, Subset,
};

pub use report::ReportRow;
pub use spec_file::{ContestSpecFile, LoadedSpec};

#[derive(Parser, Debug)]
#[command(name = "csf-lab", version, about = "Contest success functions with luck")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Winning probabilities at one effort profile.
    Eval(EvalArgs),
    /// Sample-check axioms.
    Check(CheckArgs),
    /// Search for a counterexample and shrink it.
    Falsify(CheckArgs),
    /// Secured-win and tie probabilities at one profile.
    Decompose(ProfileArgs),
    /// Pure-strategy equilibrium by damped best response.
    Equilibrium(EquilibriumArgs),
    /// Equilibrium total effort across head starts.
    Sweep(SweepArgs),
    /// Reproduce the exact three-contestant luck example.
    PaperExamples(OutputArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Expect {
    Holds,
    Violated,
    Inapplicable,
    Verified,
    Unverified,
    Monotone,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// JSON contest spec.
    #[arg(long)]
    spec: PathBuf,
    /// Efforts, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    profile: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    base: ProfileArgs,
    /// Sub-contest bitmask (decimal, `0x` or `0b`); bit `k` is contestant `k`.
    #[arg(long, value_parser = parse_mask)]
    subset: Option<u64>,
    /// Scale the profile first.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// JSON contest spec.
    #[arg(long)]
    spec: PathBuf,
    /// Axiom id or `all`.
    #[arg(long, default_value = "all")]
    axiom: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random profiles on top of the deterministic grid.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Use only this scale factor for the scale axioms' random probes.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct EquilibriumArgs {
    /// JSON contest spec.
    #[arg(long)]
    spec: PathBuf,
    /// Prize values, comma separated; all 1 when absent.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// A `symmetric_luck` spec; its `n` and `r` are used, `b_scalar` is replaced by the grid.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3")]
    b_grid: Vec<f64>,
    /// Common prize value.
    #[arg(long, default_value_t = 1.0)]
    values: f64,
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_mask(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let parsed = if let Some(hex) = s.strip_prefix("0x") {
        u64::from_str_radix(hex, 16)
    } else if let Some(bin) = s.strip_prefix("0b") {
        u64::from_str_radix(bin, 2)
    } else {
        s.parse()
    };
    parsed.map_err(|e| format!("bad subset mask {s:?}: {e}"))
}

/// Exit code contract.
const OK: i32 = 0;
const ASSERTION_FAILED: i32 = 1;
const USAGE: i32 = 2;

/// What a command produced: rows for CSV, lines for text, and whether every
/// requested assertion held.
struct Outcome {
    rows: Vec<ReportRow>,
    text: Vec<String>,
    passed: bool,
    errored: bool,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            rows: Vec::new(),
            text: Vec::new(),
            passed: true,
            errored: false,
        }
    }

    fn error(&mut self, row: ReportRow, message: String) {
        self.rows.push(row);
        self.text.push(format!("error: {message}"));
        self.errored = true;
    }
}

/// Run the program on `argv` (program name first).
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return OK;
                }
                _ => USAGE,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    let (result, output) = match cli.command {
        Command::Eval(a) => (eval(&a), a.base.output),
        Command::Check(a) => (check(&a), a.output),
        Command::Falsify(a) => (falsify_cmd(&a), a.output),
        Command::Decompose(a) => (decompose(&a), a.output),
        Command::Equilibrium(a) => (equilibrium(&a), a.output),
        Command::Sweep(a) => (sweep(&a), a.output),
        Command::PaperExamples(a) => (worked_example(), a),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            return USAGE;
        }
    };
    if let Err(e) = emit(&outcome, &output, out) {
        let _ = writeln!(err, "error: cannot write report: {e}");
        return USAGE;
    }
    if outcome.errored {
        for line in outcome.text.iter().filter(|l| l.starts_with("error: ")) {
            let _ = writeln!(err, "{line}");
        }
        USAGE
    } else if outcome.passed {
        OK
    } else {
        let _ = writeln!(err, "expectation not met");
        ASSERTION_FAILED
    }
}

fn emit(outcome: &Outcome, output: &OutputArgs, out: &mut dyn Write) -> std::io::Result<()> {
    let mut buf = Vec::new();
    match output.format {
        Format::Csv => report::write_csv(&outcome.rows, &mut buf)?,
        Format::Text => {
            for line in &outcome.text {
                writeln!(buf, "{line}")?;
            }
        }
    }
    match &output.out {
        Some(path) => std::fs::write(path, buf),
        None => out.write_all(&buf),
    }
}

fn load(path: &std::path::Path) -> Result<LoadedSpec, String> {
    ContestSpecFile::read(path)?.load()
}

fn check_profile(loaded: &LoadedSpec, profile: &[f64]) -> Result<(), String> {
    if profile.len() != loaded.n {
        return Err(format!(
            "profile has {} efforts but the spec has n = {}",
            profile.len(),
            loaded.n
        ));
    }
    if profile.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err("efforts must be finite and non-negative".into());
    }
    Ok(())
}

fn numbers<T: Scalar>(xs: &[T]) -> Vec<Number> {
    xs.iter().map(Number::of).collect()
}

fn eval_in<T: Scalar>(loaded: &LoadedSpec, m: Subset, x: &[f64]) -> csf_lab::Result<Vec<Number>> {
    let x: Vec<T> = x.iter().map(|&v| T::from_f64(v)).collect();
    Ok(numbers(&evaluate(&loaded.spec, m, &x)?))
}

/// Run `body` with `T` bound to the backend's scalar type.
macro_rules! in_backend {
    ($backend:expr, $T:ident => $body:expr) => {
        match $backend {
            Backend::Float64 => {
                type $T = f64;
                $body
            }
            #[cfg(feature = "exact")]
            Backend::ExactRational => {
                type $T = csf_lab::Rational;
                $body
            }
            #[cfg(not(feature = "exact"))]
            Backend::ExactRational => Err(Backend::ExactRational.available().unwrap_err()),
        }
    };
}

fn eval(args: &EvalArgs) -> Result<Outcome, String> {
    let loaded = load(&args.base.spec)?;
    check_profile(&loaded, &args.base.profile)?;
    let mut x = args.base.profile.clone();
    if let Some(lambda) = args.lambda {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(format!("lambda must be positive, got {lambda}"));
        }
        x.iter_mut().for_each(|v| *v *= lambda);
    }
    let m = match args.subset {
        Some(mask) => {
            let m = Subset::from_mask(mask);
            m.validate(loaded.n).map_err(|e| e.to_string())?;
            m
        }
        None => Subset::full(loaded.n),
    };
    let family = loaded.spec.name();
    let mut outcome = Outcome::new();
    let result = in_backend!(loaded.backend, T => eval_in::<T>(&loaded, m, &x));
    match result {
        Ok(p) => {
            for (k, i) in m.members().enumerate() {
                outcome
                    .rows
                    .push(ReportRow::new("eval", family, format!("p_{}", i + 1), "ok").value(&p[k]));
            }
            outcome.text.push(report::join(&p, true));
        }
        Err(e) => outcome.error(
            ReportRow::error("eval", family, "p", &e.to_string()),
            e.to_string(),
        ),
    }
    Ok(outcome)
}

fn plan_for(args: &CheckArgs, loaded: &LoadedSpec) -> Result<SamplingPlan, String> {
    let mut plan = SamplingPlan::with_seed(args.seed)
        .profiles(args.samples)
        .backend(loaded.backend);
    if let Some(lambda) = args.lambda {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(format!("lambda must be positive, got {lambda}"));
        }
        plan.fixed_lambdas = vec![lambda];
        plan.random_lambdas = 0;
    }
    plan.validate().map_err(|e| e.to_string())?;
    Ok(plan)
}

fn axioms(arg: &str) -> Result<Vec<AxiomId>, String> {
    if arg.eq_ignore_ascii_case("all") {
        Ok(AxiomId::ALL.to_vec())
    } else {
        arg.split(',')
            .map(|s| s.parse::<AxiomId>().map_err(|e| e.to_string()))
            .collect()
    }
}

fn expect_status(expect: Option<Expect>) -> Result<Option<Status>, String> {
    match expect {
        None => Ok(None),
        Some(Expect::Holds) => Ok(Some(Status::HoldsOnSamples)),
        Some(Expect::Violated) => Ok(Some(Status::Violated)),
        Some(Expect::Inapplicable) => Ok(Some(Status::Inapplicable)),
        Some(e) => Err(format!("--expect {e:?} does not apply to axiom checks").to_lowercase()),
    }
}

fn check(args: &CheckArgs) -> Result<Outcome, String> {
    let loaded = load(&args.spec)?;
    let plan = plan_for(args, &loaded)?;
    let expect = expect_status(args.expect)?;
    let family = loaded.spec.name();
    let mut outcome = Outcome::new();
    for axiom in axioms(&args.axiom)? {
        match check_axiom(&loaded.spec, axiom, &plan) {
            Ok(v) => {
                outcome.rows.push(ReportRow::verdict("check", &v));
                let mut line = format!(
                    "{:<4} {:<15} samples={} predicates={} unresolved={} max_gap={}",
                    axiom.as_str(),
                    v.status.to_string(),
                    v.stats.samples,
                    v.stats.predicates,
                    v.stats.unresolved,
                    report::sig6(v.stats.max_gap)
                );
                if let Some(w) = &v.witness {
                    line.push_str(&format!("\n     witness: {}", report::describe_witness(w)));
                }
                if let Some(note) = &v.note {
                    line.push_str(&format!("\n     note: {note}"));
                }
                outcome.text.push(line);
                if expect.is_some_and(|s| s != v.status) {
                    outcome.passed = false;
                }
            }
            Err(e) => outcome.error(
                ReportRow::error("check", family, axiom.as_str(), &e.to_string()),
                format!("{axiom}: {e}"),
            ),
        }
    }
    Ok(outcome)
}

fn falsify_cmd(args: &CheckArgs) -> Result<Outcome, String> {
    let loaded = load(&args.spec)?;
    let plan = plan_for(args, &loaded)?;
    let want_found = match args.expect {
        None => None,
        Some(Expect::Violated) => Some(true),
        Some(Expect::Holds) => Some(false),
        Some(e) => return Err(format!("--expect {e:?} does not apply to falsify").to_lowercase()),
    };
    let family = loaded.spec.name();
    let mut outcome = Outcome::new();
    for axiom in axioms(&args.axiom)? {
        match falsify(&loaded.spec, axiom, &plan) {
            Ok(ce) => {
                outcome
                    .rows
                    .push(ReportRow::counterexample(family, axiom, ce.as_ref(), args.seed));
                outcome.text.push(match &ce {
                    Some(c) => format!(
                        "{:<4} counterexample: {}",
                        axiom.as_str(),
                        report::describe_witness(&c.witness)
                    ),
                    None => format!("{:<4} no counterexample", axiom.as_str()),
                });
                if want_found.is_some_and(|w| w != ce.is_some()) {
                    outcome.passed = false;
                }
            }
            Err(e) => outcome.error(
                ReportRow::error("falsify", family, axiom.as_str(), &e.to_string()),
                format!("{axiom}: {e}"),
            ),
        }
    }
    Ok(outcome)
}

fn decompose_in<T: Scalar>(
    loaded: &LoadedSpec,
    x: &[f64],
) -> csf_lab::Result<(Vec<Number>, Number, Option<Vec<Number>>)> {
    let x: Vec<T> = x.iter().map(|&v| T::from_f64(v)).collect();
    let d = decompose_two_level(&loaded.spec, &x)?;
    Ok((
        numbers(&d.mu),
        Number::of(&d.mu_null),
        d.alpha.as_deref().map(numbers),
    ))
}

fn decompose(args: &ProfileArgs) -> Result<Outcome, String> {
    let loaded = load(&args.spec)?;
    check_profile(&loaded, &args.profile)?;
    let family = loaded.spec.name();
    let mut outcome = Outcome::new();
    let result = in_backend!(loaded.backend, T => decompose_in::<T>(&loaded, &args.profile));
    match result {
        Ok((mu, mu_null, alpha)) => {
            for (i, m) in mu.iter().enumerate() {
                outcome
                    .rows
                    .push(ReportRow::new("decompose", family, format!("mu_{}", i + 1), "ok").value(m));
            }
            outcome
                .rows
                .push(ReportRow::new("decompose", family, "mu_null", "ok").value(&mu_null));
            outcome.text.push(format!("mu: {}", report::join(&mu, true)));
            outcome
                .text
                .push(format!("mu_null: {}", report::text_number(&mu_null)));
            if let Some(alpha) = alpha {
                for (i, a) in alpha.iter().enumerate() {
                    outcome
                        .rows
                        .push(ReportRow::new("decompose", family, format!("alpha_{}", i + 1), "ok").value(a));
                }
                outcome
                    .text
                    .push(format!("alpha: {}", report::join(&alpha, true)));
            }
        }
        Err(e) => outcome.error(
            ReportRow::error("decompose", family, "mu", &e.to_string()),
            e.to_string(),
        ),
    }
    Ok(outcome)
}

fn floats(xs: &[f64]) -> Vec<Number> {
    xs.iter().map(Number::of).collect()
}

fn equilibrium(args: &EquilibriumArgs) -> Result<Outcome, String> {
    let loaded = load(&args.spec)?;
    let want_verified = match args.expect {
        None => None,
        Some(Expect::Verified) => Some(true),
        Some(Expect::Unverified) => Some(false),
        Some(e) => return Err(format!("--expect {e:?} does not apply to equilibrium").to_lowercase()),
    };
    let values = if args.values.is_empty() {
        vec![1.0; loaded.n]
    } else {
        args.values.clone()
    };
    if values.len() != loaded.n {
        return Err(format!(
            "{} values given but the spec has n = {}",
            values.len(),
            loaded.n
        ));
    }
    let game = ContestGame::new(loaded.spec.clone(), values).map_err(|e| e.to_string())?;
    let family = loaded.spec.name();
    let mut outcome = Outcome::new();
    let config = SolverConfig::default();
    match solve_nash(&game, &config) {
        Ok(res) => {
            let status = format!("{:?}", res.status);
            for (i, (x, u)) in res.x_star.iter().zip(&res.payoffs).enumerate() {
                let mut row = ReportRow::new("equilibrium", family, format!("x_{}", i + 1), &status)
                    .value(&Number::of(x));
                row.rhs = report::float(*u);
                outcome.rows.push(row);
            }
            let mut audit = ReportRow::new("equilibrium", family, "audit_gain", &status);
            audit.gap = report::float(res.max_gain);
            audit.witness = serde_json::json!({
                "iterations": res.iterations,
                "boundary_flags": res.boundary_flags,
                "existence_warning": res.existence_warning,
            })
            .to_string();
            outcome.rows.push(audit);
            outcome.text.push(format!("status: {status}"));
            outcome
                .text
                .push(format!("x*: {}", report::join(&floats(&res.x_star), true)));
            outcome
                .text
                .push(format!("payoffs: {}", report::join(&floats(&res.payoffs), true)));
            outcome.text.push(format!(
                "iterations: {} audit gain: {}",
                res.iterations,
                report::sig6(res.max_gain)
            ));
            if res.damping != config.damping {
                outcome.text.push(format!(
                    "damping: {} ({} did not settle)",
                    res.damping, config.damping
                ));
            }
            if res.existence_warning {
                outcome
                    .text
                    .push("warning: r > 1, a pure-strategy equilibrium need not exist".into());
            }
            if want_verified.is_some_and(|w| w != (res.status == SolveStatus::Converged)) {
                outcome.passed = false;
            }
        }
        Err(e) => outcome.error(
            ReportRow::error("equilibrium", family, "x", &e.to_string()),
            e.to_string(),
        ),
    }
    Ok(outcome)
}

fn sweep(args: &SweepArgs) -> Result<Outcome, String> {
    let loaded = load(&args.spec)?;
    let Family::SymmetricLuck { r, .. } = loaded.spec.family() else {
        return Err(format!(
            "sweep needs a symmetric_luck spec, got {}",
            loaded.spec.name()
        ));
    };
    let want_monotone = match args.expect {
        None => false,
        Some(Expect::Monotone) => true,
        Some(e) => return Err(format!("--expect {e:?} does not apply to sweep").to_lowercase()),
    };
    let family = loaded.spec.name();
    let mut outcome = Outcome::new();
    match comparative_static_b(loaded.n, *r, args.values, &args.b_grid, &SolverConfig::default()) {
        Ok(table) => {
            outcome.text.push(format!("{:>10} {:>12}  status", "b", "total"));
            for row in &table.rows {
                let status = format!("{:?}", row.status);
                let mut csv =
                    ReportRow::new("sweep", family, "total_effort", &status).value(&Number::of(&row.total));
                csv.witness = serde_json::json!({ "b": row.b, "x_star": row.x_star }).to_string();
                outcome.rows.push(csv);
                outcome.text.push(format!(
                    "{:>10} {:>12}  {status}",
                    report::sig6(row.b),
                    report::sig6(row.total)
                ));
            }
            let flag = |b: bool| if b { "true" } else { "false" };
            outcome
                .rows
                .push(ReportRow::new("sweep", family, "monotone", flag(table.monotone)));
            outcome.rows.push(ReportRow::new(
                "sweep",
                family,
                "all_verified",
                flag(table.all_verified),
            ));
            outcome.text.push(format!(
                "monotone: {} all verified: {}",
                table.monotone, table.all_verified
            ));
            if want_monotone && !(table.monotone && table.all_verified) {
                outcome.passed = false;
            }
        }
        Err(e @ CsfError::InvalidParameter(_)) => return Err(e.to_string()),
        Err(e) => outcome.error(
            ReportRow::error("sweep", family, "total_effort", &e.to_string()),
            e.to_string(),
        ),
    }
    Ok(outcome)
}

fn worked_example() -> Result<Outcome, String> {
    let mut outcome = Outcome::new();
    match reproduce_paper_examples() {
        Ok(report) => {
            for row in &report.rows {
                outcome.rows.push(ReportRow::example(row));
                outcome.text.push(format!(
                    "{}: {} vs {} (expected {} vs {}) {}",
                    row.name,
                    report::text_number(&row.lhs),
                    report::text_number(&row.rhs),
                    row.expected_lhs,
                    row.expected_rhs,
                    if row.pass { "PASS" } else { "FAIL" }
                ));
            }
            outcome
                .text
                .push(if report.pass { "PASS" } else { "FAIL" }.to_string());
            outcome.passed = report.pass;
        }
        Err(e) => outcome.error(
            ReportRow::error("paper-examples", "luck_tullock", "examples", &e.to_string()),
            e.to_string(),
        ),
    }
    Ok(outcome)
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book {}
