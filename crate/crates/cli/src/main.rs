//! Command-line front door: reads paths and tree models, evaluates the
//! inequality family eq1..eq9, and reports results as text, JSON, or CSV.
//!
//! Exit codes: 0 all checks hold, 1 an inequality violation was found,
//! 2 usage error, 3 input validation error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use doob_pathwise::derivation::{chain_llogl, chain_lp, ChainReport};
use doob_pathwise::ineq::{
    eval_ineq1, eval_ineq2, eval_llogl, eval_lp, gap_oracle, hedge_decompose, proof_case,
    HedgeDecomposition, IneqReport, WhichIneq,
};
use doob_pathwise::mc::{
    estimate_sides, estimate_transform, unit_uniform, ExpectationIneq, GeneratorKind,
    GeneratorSpec, McEstimate, SidesEstimate,
};
use doob_pathwise::num::Tol;
use doob_pathwise::path::{parse_path_text, NonnegPath, Path, PositiveStartPath, ValidatedPath};
use doob_pathwise::tree::{
    classify, counterexample_eq8, counterexample_threshold, transform_expectation, verify_ineq3,
    verify_ineq4, verify_ineq8, verify_ineq9, ExpectationReport, TreeError, TreeModel,
};

// ---------------------------------------------------------------------------
// Arguments
// ---------------------------------------------------------------------------

/// Verifier for the pathwise level inequalities (eq1/eq2), their L^p and
/// L log L consequences (eq5, eq6/eq7), and the expectation forms on
/// finite probability trees and Monte Carlo paths (eq3/eq4, eq8/eq9).
#[derive(Debug, Parser)]
#[command(name = "doob-pathwise", version, max_term_width = 100)]
struct Cli {
    /// Blended tolerance scale: sides compare as gap >= -TOL*(1+|lhs|+|rhs|).
    /// Indicator comparisons are always exact, never fuzzed; the tolerance
    /// applies only to aggregate left/right sides.
    #[arg(long, global = true, env = "DOOB_PATHWISE_TOL", default_value_t = 1e-9)]
    tol: f64,

    /// Output format. Text rounds to 6 significant digits; json and csv
    /// carry full precision.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the pathwise inequalities on a path file and print the
    /// reports and hedge decompositions.
    Check(CheckArgs),
    /// Sweep a level grid over a path and emit (lambda, lhs, rhs1, rhs2,
    /// gap, case) rows.
    Sweep(SweepArgs),
    /// Exhaustive small-grid check plus a randomized campaign; exits
    /// nonzero on any pathwise violation.
    Fuzz(FuzzArgs),
    /// Load a tree model, classify it, and verify every applicable
    /// expectation inequality.
    Tree(TreeArgs),
    /// Monte Carlo estimates of the expectation inequalities and the
    /// transform mean.
    Mc(McArgs),
    /// Replay the derivation chains for the L^p and L log L bounds on a
    /// path.
    Derive(DeriveArgs),
    /// Demonstrate the submartingale counterexample to the eq8 form, its
    /// violation threshold, and that eq9 still holds.
    Counterexample(CounterexampleArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct CheckArgs {
    /// Path file: one real per line, or one comma-separated line.
    #[arg(long)]
    path: PathBuf,
    /// Level for eq1/eq2.
    #[arg(long)]
    lambda: Option<f64>,
    /// Exponent for eq5 (requires a nonnegative path).
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    #[arg(long)]
    path: PathBuf,
    /// Number of grid points over [min(x)-1, max(x)+1].
    #[arg(long, default_value_t = 101)]
    points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridSize {
    /// 5^5 paths with entries in {-2..2}, 11 levels.
    Small,
    /// 7^5 paths with entries in {-3..3}, 15 levels.
    Large,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct FuzzArgs {
    #[arg(long, value_enum, default_value_t = GridSize::Small)]
    grid: GridSize,
    /// Random paths in the fuzz campaign.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct TreeArgs {
    /// Tree model JSON file.
    #[arg(long)]
    tree: PathBuf,
    /// Level for eq3/eq4 and the transform expectations.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    SymmetricWalk,
    DriftWalk,
    MultiplicativePositive,
    AbsWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IneqArg {
    #[value(name = "3", alias = "eq3")]
    Eq3,
    #[value(name = "4", alias = "eq4")]
    Eq4,
    #[value(name = "8", alias = "eq8")]
    Eq8,
    #[value(name = "9", alias = "eq9")]
    Eq9,
}

impl From<IneqArg> for ExpectationIneq {
    fn from(a: IneqArg) -> Self {
        match a {
            IneqArg::Eq3 => ExpectationIneq::Eq3,
            IneqArg::Eq4 => ExpectationIneq::Eq4,
            IneqArg::Eq8 => ExpectationIneq::Eq8,
            IneqArg::Eq9 => ExpectationIneq::Eq9,
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct McArgs {
    /// Generator spec as a JSON document (alternative to the inline flags).
    #[arg(long, conflicts_with_all = ["kind", "drift", "log_mean"])]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Steps per path.
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    x0: f64,
    #[arg(long, default_value_t = 1.0)]
    step_scale: f64,
    /// Mean step of a drift walk.
    #[arg(long)]
    drift: Option<f64>,
    /// Log of the factor mean of a multiplicative generator.
    #[arg(long)]
    log_mean: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Level for eq3/eq4 and the transform.
    #[arg(long, default_value_t = 1.5)]
    lambda: f64,
    /// Estimate only this inequality (default: all applicable).
    #[arg(long, value_enum)]
    ineq: Option<IneqArg>,
    /// Estimate the transform mean of eq1 or eq2 (default: both).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    transform: Option<u8>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct DeriveArgs {
    #[arg(long)]
    path: PathBuf,
    /// Exponent for the L^p chain.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
}

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

enum CliError {
    /// Bad flag combination or parameter domain. Exit 2.
    Usage(String),
    /// Unreadable or invalid input data. Exit 3.
    Input(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Input(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !cli.tol.is_finite() || cli.tol <= 0.0 {
        eprintln!("error: --tol must be positive and finite, got {}", cli.tol);
        return ExitCode::from(2);
    }
    let tol = Tol(cli.tol);
    let out = Output { format: cli.format };
    let result = match &cli.command {
        Command::Check(args) => cmd_check(args, tol, &out),
        Command::Sweep(args) => cmd_sweep(args, tol, &out),
        Command::Fuzz(args) => cmd_fuzz(args, tol, &out),
        Command::Tree(args) => cmd_tree(args, tol, &out),
        Command::Mc(args) => cmd_mc(args, &out),
        Command::Derive(args) => cmd_derive(args, &out),
        Command::Counterexample(args) => cmd_counterexample(args, tol, &out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

// ---------------------------------------------------------------------------
// Output rendering
// ---------------------------------------------------------------------------

struct Output {
    format: Format,
}

/// Round to 6 significant digits for text output.
fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..=14).contains(&mag) {
        return format!("{:.5e}", x);
    }
    let decimals = (5 - mag).max(0) as usize;
    let mut s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

fn case_text(report: &IneqReport) -> String {
    match report.case {
        Some(c) => c.to_string(),
        None => "-".to_string(),
    }
}

/// Merge an `"eq"` tag (and extras) into a report's flat JSON object.
fn tagged_json<T: serde::Serialize>(tag: &str, value: &T) -> serde_json::Value {
    let mut v = serde_json::to_value(value).expect("reports serialize");
    v.as_object_mut()
        .expect("reports are objects")
        .insert("eq".to_string(), serde_json::Value::String(tag.to_string()));
    v
}

impl Output {
    fn ineq_report(&self, tag: &str, r: &IneqReport) {
        match self.format {
            Format::Text => {
                let mut line = format!(
                    "{tag} lhs={} rhs={} gap={} case={}",
                    sig6(r.lhs),
                    sig6(r.rhs),
                    sig6(r.gap),
                    case_text(r)
                );
                if let Some(level) = r.level {
                    write!(line, " level={}", sig6(level)).unwrap();
                }
                if let Some(p) = r.exponent {
                    write!(line, " p={}", sig6(p)).unwrap();
                }
                println!("{line}");
            }
            Format::Json => println!("{}", tagged_json(tag, r)),
            Format::Csv => {
                let case = r.case.map(|c| c.name().to_string()).unwrap_or_default();
                let idx = r
                    .case
                    .and_then(|c| c.crossing_index())
                    .map(|j| j.to_string())
                    .unwrap_or_default();
                let level = r.level.map(|l| l.to_string()).unwrap_or_default();
                let p = r.exponent.map(|p| p.to_string()).unwrap_or_default();
                println!(
                    "{tag},{},{},{},{case},{idx},{level},{p}",
                    r.lhs, r.rhs, r.gap
                );
            }
        }
    }

    fn hedge(&self, tag: &str, h: &HedgeDecomposition) {
        match self.format {
            Format::Text => {
                let positions: Vec<String> = h.positions.iter().map(|&x| sig6(x)).collect();
                println!(
                    "{tag}.hedge capital={} gains={} terminal={} payoff={} surplus={} positions=[{}]",
                    sig6(h.initial_capital),
                    sig6(h.gains),
                    sig6(h.terminal_term),
                    sig6(h.payoff),
                    sig6(h.surplus()),
                    positions.join(",")
                );
            }
            Format::Json => {
                let mut v = tagged_json(tag, h);
                let obj = v.as_object_mut().unwrap();
                obj.insert("surplus".into(), h.surplus().into());
                obj.insert("record".into(), "hedge".into());
                println!("{v}");
            }
            Format::Csv => {
                let positions: Vec<String> = h.positions.iter().map(f64::to_string).collect();
                println!(
                    "{tag}.hedge,{},{},{},{},{},{}",
                    h.initial_capital,
                    h.gains,
                    h.terminal_term,
                    h.payoff,
                    h.surplus(),
                    positions.join(";")
                );
            }
        }
    }

    fn expectation_report(&self, tag: &str, r: &ExpectationReport, level: Option<f64>) {
        match self.format {
            Format::Text => {
                let mut line = format!(
                    "{tag} lhs={} rhs={} rhs_classical={} slack={} improvement={}",
                    sig6(r.lhs),
                    sig6(r.rhs),
                    sig6(r.rhs_classical),
                    sig6(r.slack),
                    sig6(r.improvement)
                );
                if let Some(level) = level {
                    write!(line, " level={}", sig6(level)).unwrap();
                }
                println!("{line}");
            }
            Format::Json => {
                let mut v = tagged_json(tag, r);
                if let Some(level) = level {
                    v.as_object_mut()
                        .unwrap()
                        .insert("level".into(), level.into());
                }
                println!("{v}");
            }
            Format::Csv => {
                let level = level.map(|l| l.to_string()).unwrap_or_default();
                println!(
                    "{tag},{},{},{},{},{},{level}",
                    r.lhs, r.rhs, r.rhs_classical, r.slack, r.improvement
                );
            }
        }
    }

    fn chain(&self, tag: &str, r: &ChainReport) {
        match self.format {
            Format::Text => {
                for stage in &r.stages {
                    println!("{tag}.{} value={}", stage.label, sig6(stage.value));
                }
                println!(
                    "{tag}.final_rhs value={} all_ordered={}",
                    sig6(r.final_rhs),
                    r.all_ordered
                );
            }
            Format::Json => println!("{}", tagged_json(tag, r)),
            Format::Csv => {
                println!("# {tag}");
                print!("{}", r.to_csv());
            }
        }
    }

    fn estimate(&self, tag: &str, spec: &GeneratorSpec, level: Option<f64>, e: &SidesEstimate) {
        match self.format {
            Format::Text => {
                println!(
                    "{tag} lhs={}±{} rhs={}±{} pass={} trials={}{}",
                    sig6(e.lhs.mean),
                    sig6(e.lhs.std_err),
                    sig6(e.rhs.mean),
                    sig6(e.rhs.std_err),
                    e.pass,
                    e.lhs.trials,
                    if e.retried { " retried=true" } else { "" }
                );
            }
            Format::Json => {
                let mut v = tagged_json(tag, e);
                let obj = v.as_object_mut().unwrap();
                obj.insert("spec".into(), serde_json::to_value(spec).unwrap());
                if let Some(level) = level {
                    obj.insert("level".into(), level.into());
                }
                println!("{v}");
            }
            Format::Csv => {
                let level = level.map(|l| l.to_string()).unwrap_or_default();
                println!(
                    "{},{},{level},{tag},{},{},{},{},{}",
                    kind_name(&spec.kind),
                    spec.n,
                    e.lhs.mean,
                    e.lhs.std_err,
                    e.rhs.mean,
                    e.rhs.std_err,
                    e.pass
                );
            }
        }
    }

    fn transform_estimate(&self, tag: &str, spec: &GeneratorSpec, level: f64, e: &McEstimate) {
        match self.format {
            Format::Text => {
                println!(
                    "{tag}.transform mean={}±{} trials={}{}",
                    sig6(e.mean),
                    sig6(e.std_err),
                    e.trials,
                    if e.zero_variance {
                        " zero_variance=true"
                    } else {
                        ""
                    }
                );
            }
            Format::Json => {
                let mut v = tagged_json(&format!("{tag}.transform"), e);
                let obj = v.as_object_mut().unwrap();
                obj.insert("spec".into(), serde_json::to_value(spec).unwrap());
                obj.insert("level".into(), level.into());
                println!("{v}");
            }
            Format::Csv => {
                println!(
                    "{},{},{level},{tag}.transform,{},{},,,",
                    kind_name(&spec.kind),
                    spec.n,
                    e.mean,
                    e.std_err
                );
            }
        }
    }
}

fn kind_name(kind: &GeneratorKind) -> &'static str {
    match kind {
        GeneratorKind::SymmetricWalk => "symmetric_walk",
        GeneratorKind::DriftWalk { .. } => "drift_walk",
        GeneratorKind::MultiplicativePositive { .. } => "multiplicative_positive",
        GeneratorKind::AbsWalk => "abs_walk",
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn read_path_file(path: &PathBuf) -> Result<ValidatedPath, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_path_text(&text)
        .map_err(|e| CliError::Input(format!("invalid path file {}: {e}", path.display())))
}

fn cmd_check(args: &CheckArgs, tol: Tol, out: &Output) -> Result<bool, CliError> {
    let validated = read_path_file(&args.path)?;
    let path = validated.as_path();
    let mut reports: Vec<(String, IneqReport)> = Vec::new();
    let mut hedges: Vec<(String, HedgeDecomposition)> = Vec::new();

    if let Some(level) = args.lambda {
        if !level.is_finite() {
            return Err(CliError::Usage(format!(
                "--lambda must be finite, got {level}"
            )));
        }
        reports.push(("eq1".into(), eval_ineq1(path, level)));
        hedges.push(("eq1".into(), hedge_decompose(path, level, WhichIneq::Eq1)));
        reports.push(("eq2".into(), eval_ineq2(path, level)));
        hedges.push(("eq2".into(), hedge_decompose(path, level, WhichIneq::Eq2)));
    }
    if let Some(p) = args.p {
        let nonneg = validated
            .as_nonneg()
            .ok_or_else(|| CliError::Input("--p needs a nonnegative path".to_string()))?;
        let report = eval_lp(nonneg, p).map_err(|e| CliError::Usage(e.to_string()))?;
        reports.push(("eq5".into(), report));
    }
    if let Some(positive) = validated.as_positive_start() {
        let (f6, f7) = eval_llogl(positive);
        reports.push(("eq6".into(), f6));
        reports.push(("eq7".into(), f7));
    }
    if reports.is_empty() {
        return Err(CliError::Usage(
            "nothing to evaluate: pass --lambda and/or --p (eq6/eq7 run automatically on \
             positive-start paths)"
                .to_string(),
        ));
    }

    let mut ok = true;
    for (tag, report) in &reports {
        out.ineq_report(tag, report);
        ok &= report.holds_at(tol);
    }
    for (tag, hedge) in &hedges {
        out.hedge(tag, hedge);
    }
    Ok(ok)
}

fn cmd_sweep(args: &SweepArgs, tol: Tol, out: &Output) -> Result<bool, CliError> {
    if args.points < 2 {
        return Err(CliError::Usage(format!(
            "--points must be >= 2, got {}",
            args.points
        )));
    }
    let validated = read_path_file(&args.path)?;
    let path = validated.as_path();
    let lo = path.values().iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let hi = path.max() + 1.0;
    let mut ok = true;
    if out.format == Format::Csv {
        println!("lambda,lhs,rhs1,rhs2,gap,case");
    }
    for i in 0..args.points {
        let level = lo + (hi - lo) * (i as f64) / ((args.points - 1) as f64);
        let r1 = eval_ineq1(path, level);
        let r2 = eval_ineq2(path, level);
        let gap = gap_oracle(path, level);
        let case = proof_case(path, level);
        ok &= r1.holds_at(tol) && r2.holds_at(tol);
        match out.format {
            Format::Text => println!(
                "sweep level={} lhs={} rhs1={} rhs2={} gap={} case={}",
                sig6(level),
                sig6(r1.lhs),
                sig6(r1.rhs),
                sig6(r2.rhs),
                sig6(gap),
                case
            ),
            Format::Json => println!(
                "{}",
                serde_json::json!({
                    "eq": "eq1eq2",
                    "lambda": level,
                    "lhs": r1.lhs,
                    "rhs1": r1.rhs,
                    "rhs2": r2.rhs,
                    "gap": gap,
                    "case": case.name(),
                    "crossing_index": case.crossing_index(),
                })
            ),
            Format::Csv => {
                println!(
                    "{level},{},{},{},{gap},{}",
                    r1.lhs,
                    r1.rhs,
                    r2.rhs,
                    case.name()
                )
            }
        }
    }
    Ok(ok)
}

struct FuzzViolation {
    what: String,
    values: Vec<f64>,
}

fn check_fuzz_path(values: &[f64], levels: &[f64], exact: bool, tol: Tol) -> Option<FuzzViolation> {
    let path = Path::new(values.to_vec()).expect("fuzz paths are finite");
    for &level in levels {
        let oracle = gap_oracle(&path, level);
        let r1 = eval_ineq1(&path, level);
        let r2 = eval_ineq2(&path, level);
        let bad = |what: String| {
            Some(FuzzViolation {
                what,
                values: values.to_vec(),
            })
        };
        if oracle < 0.0 {
            return bad(format!("gap_oracle {oracle} < 0 at level {level}"));
        }
        if exact {
            if r1.gap != oracle || r2.gap != oracle {
                return bad(format!(
                    "gap mismatch at level {level}: eq1 {} eq2 {} oracle {oracle}",
                    r1.gap, r2.gap
                ));
            }
        } else {
            let t = tol
                .for_pair(r1.lhs, r1.rhs)
                .max(tol.for_pair(r2.lhs, r2.rhs));
            if (r1.gap - oracle).abs() > t || (r2.gap - oracle).abs() > t {
                return bad(format!(
                    "gap mismatch at level {level}: eq1 {} eq2 {} oracle {oracle}",
                    r1.gap, r2.gap
                ));
            }
        }
    }
    None
}

fn cmd_fuzz(args: &FuzzArgs, tol: Tol, out: &Output) -> Result<bool, CliError> {
    let (entries, levels): (Vec<f64>, Vec<f64>) = match args.grid {
        GridSize::Small => (
            vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            (0..11).map(|k| -2.5 + 0.5 * k as f64).collect(),
        ),
        GridSize::Large => (
            (-3..=3).map(|v| v as f64).collect(),
            (0..15).map(|k| -3.5 + 0.5 * k as f64).collect(),
        ),
    };

    // exhaustive grid: every path of 5 entries over the alphabet
    let base = entries.len();
    let path_count = base.pow(5);
    let mut values = [0.0_f64; 5];
    for code in 0..path_count {
        let mut c = code;
        for slot in values.iter_mut() {
            *slot = entries[c % base];
            c /= base;
        }
        if let Some(v) = check_fuzz_path(&values, &levels, true, tol) {
            println!("violation: {}", v.what);
            println!("path: {:?}", v.values);
            return Ok(false);
        }
    }
    let grid_line = format!(
        "fuzz grid: 0 violations / {path_count} paths x {} levels",
        levels.len()
    );

    // randomized campaign over every generator kind
    let mut campaign_violations = 0u64;
    for trial in 0..args.trials {
        let u = |k: u64| unit_uniform(args.seed, trial, k);
        let n = (u(1) * 31.0) as usize;
        let step_scale = 0.1 + 2.0 * u(2);
        let kind = match trial % 4 {
            0 => GeneratorKind::SymmetricWalk,
            1 => GeneratorKind::DriftWalk {
                mu: step_scale * (2.0 * u(3) - 1.0),
            },
            2 => GeneratorKind::MultiplicativePositive {
                log_mean: 0.2 * (2.0 * u(3) - 1.0),
            },
            _ => GeneratorKind::AbsWalk,
        };
        let x0 = match kind {
            GeneratorKind::MultiplicativePositive { .. } => 0.1 + 5.0 * u(4),
            GeneratorKind::AbsWalk => 5.0 * u(4),
            _ => 10.0 * u(4) - 5.0,
        };
        let spec = GeneratorSpec {
            kind,
            n,
            x0,
            step_scale,
            seed: args.seed ^ 0xF0F0,
        };
        spec.validate().expect("campaign specs are in range");
        let path = spec.generate(trial);
        let lo = path.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let span = path.max() - lo + 2.0;
        let levels: Vec<f64> = (0..3)
            .map(|k| lo - 1.0 + span * u(100 + k as u64))
            .collect();
        if let Some(v) = check_fuzz_path(path.values(), &levels, false, tol) {
            println!("violation: {}", v.what);
            println!("path: {:?}", v.values);
            campaign_violations += 1;
        }

        // the consequence inequalities on the applicable path classes
        if let Ok(nonneg) = NonnegPath::new(path.values().to_vec()) {
            let p = 1.1 + 3.0 * u(5);
            let r = eval_lp(&nonneg, p).expect("p > 1");
            if !r.holds_at(tol) {
                println!("violation: eq5 gap {} at p={p}", r.gap);
                println!("path: {:?}", path.values());
                campaign_violations += 1;
            }
            if let Ok(positive) = PositiveStartPath::from_nonneg(nonneg) {
                let (f6, f7) = eval_llogl(&positive);
                if !f6.holds_at(tol)
                    || !f7.holds_at(tol)
                    || (f6.rhs - f7.rhs).abs() > tol.for_pair(f6.rhs, f7.rhs)
                {
                    println!("violation: eq6/eq7 rhs {} vs {}", f6.rhs, f7.rhs);
                    println!("path: {:?}", path.values());
                    campaign_violations += 1;
                }
            }
        }
        if campaign_violations > 10 {
            break;
        }
    }

    let ok = campaign_violations == 0;
    match out.format {
        Format::Json => {
            println!(
                "{}",
                serde_json::json!({
                    "eq": "eq1eq2",
                    "grid_paths": path_count,
                    "grid_levels": levels.len(),
                    "grid_violations": 0,
                    "campaign_paths": args.trials,
                    "campaign_violations": campaign_violations,
                })
            );
        }
        _ => {
            println!("{grid_line}");
            println!(
                "fuzz campaign: {campaign_violations} violations / {} random paths",
                args.trials
            );
        }
    }
    Ok(ok)
}

fn cmd_tree(args: &TreeArgs, tol: Tol, out: &Output) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(&args.tree)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.tree.display())))?;
    let model = TreeModel::from_json_str(&text)
        .map_err(|e| CliError::Input(format!("invalid tree {}: {e}", args.tree.display())))?;

    let class = classify(&model);
    match out.format {
        Format::Text => println!(
            "tree class={} max_defect={} depth={} nodes={}",
            class.kind,
            sig6(class.max_defect),
            model.depth(),
            model.node_count()
        ),
        Format::Json => println!(
            "{}",
            serde_json::json!({
                "eq": "classify",
                "class": class.kind,
                "max_defect": class.max_defect,
                "depth": model.depth(),
                "nodes": model.node_count(),
            })
        ),
        Format::Csv => println!(
            "classify,{},{},{},{}",
            class.kind,
            class.max_defect,
            model.depth(),
            model.node_count()
        ),
    }

    let mut ok = true;
    let mut ran_any = false;
    if let Some(level) = args.lambda {
        if class.kind.admits_supermartingale() {
            let r = verify_ineq3(&model, level).map_err(|e| CliError::Input(e.to_string()))?;
            out.expectation_report("eq3", &r, Some(level));
            ok &= r.holds_at(tol);
            ran_any = true;
        }
        if class.kind.admits_submartingale() {
            let r = verify_ineq4(&model, level).map_err(|e| CliError::Input(e.to_string()))?;
            out.expectation_report("eq4", &r, Some(level));
            ok &= r.holds_at(tol);
            ran_any = true;
        }
        for (tag, which) in [("eq1", WhichIneq::Eq1), ("eq2", WhichIneq::Eq2)] {
            let mean = transform_expectation(&model, level, which);
            match out.format {
                Format::Text => {
                    println!(
                        "{tag}.transform expectation={} level={}",
                        sig6(mean),
                        sig6(level)
                    )
                }
                Format::Json => println!(
                    "{}",
                    serde_json::json!({"eq": format!("{tag}.transform"), "expectation": mean, "level": level})
                ),
                Format::Csv => println!("{tag}.transform,{mean},{level}"),
            }
        }
    }
    match verify_ineq8(&model) {
        Ok(r) => {
            out.expectation_report("eq8", &r, None);
            ok &= r.holds_at(tol);
            ran_any = true;
        }
        Err(TreeError::Classification { .. }) | Err(TreeError::Domain { .. }) => {}
        Err(e) => return Err(CliError::Input(e.to_string())),
    }
    match verify_ineq9(&model) {
        Ok(r) => {
            out.expectation_report("eq9", &r, None);
            ok &= r.holds_at(tol);
            ran_any = true;
        }
        Err(TreeError::Classification { .. }) | Err(TreeError::Domain { .. }) => {}
        Err(e) => return Err(CliError::Input(e.to_string())),
    }
    if !ran_any {
        println!(
            "note: no expectation inequality applies (class {}); pass --lambda for eq3/eq4",
            class.kind
        );
    }
    Ok(ok)
}

fn build_spec(args: &McArgs) -> Result<GeneratorSpec, CliError> {
    if let Some(file) = &args.spec {
        let text = std::fs::read_to_string(file)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", file.display())))?;
        let spec: GeneratorSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("invalid generator spec: {e}")))?;
        spec.validate()
            .map_err(|e| CliError::Input(e.to_string()))?;
        return Ok(spec);
    }
    let kind = match args.kind {
        None => {
            return Err(CliError::Usage(
                "pass --kind (or --spec FILE) to choose a generator".to_string(),
            ))
        }
        Some(KindArg::SymmetricWalk) => GeneratorKind::SymmetricWalk,
        Some(KindArg::DriftWalk) => GeneratorKind::DriftWalk {
            mu: args
                .drift
                .ok_or_else(|| CliError::Usage("--kind drift-walk needs --drift".to_string()))?,
        },
        Some(KindArg::MultiplicativePositive) => GeneratorKind::MultiplicativePositive {
            log_mean: args.log_mean.unwrap_or(0.0),
        },
        Some(KindArg::AbsWalk) => GeneratorKind::AbsWalk,
    };
    let spec = GeneratorSpec {
        kind,
        n: args.steps,
        x0: args.x0,
        step_scale: args.step_scale,
        seed: args.seed,
    };
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

fn cmd_mc(args: &McArgs, out: &Output) -> Result<bool, CliError> {
    let spec = build_spec(args)?;
    if out.format == Format::Csv {
        println!("kind,n,lambda,ineq,lhs,lhs_se,rhs,rhs_se,pass");
    }

    let ineqs: Vec<ExpectationIneq> = match args.ineq {
        Some(choice) => vec![choice.into()],
        None => [
            ExpectationIneq::Eq3,
            ExpectationIneq::Eq4,
            ExpectationIneq::Eq8,
            ExpectationIneq::Eq9,
        ]
        .into_iter()
        .filter(|ineq| ineq.admits(&spec))
        .collect(),
    };

    let mut ok = true;
    for ineq in &ineqs {
        let level = if ineq.uses_level() {
            Some(args.lambda)
        } else {
            None
        };
        let est = estimate_sides(&spec, *ineq, args.lambda, args.trials)
            .map_err(|e| CliError::Input(e.to_string()))?;
        out.estimate(ineq.tag(), &spec, level, &est);
        ok &= est.pass;
    }

    let transforms: Vec<WhichIneq> = match args.transform {
        Some(1) => vec![WhichIneq::Eq1],
        Some(2) => vec![WhichIneq::Eq2],
        Some(_) => unreachable!("clap range"),
        None => vec![WhichIneq::Eq1, WhichIneq::Eq2],
    };
    for which in transforms {
        let est = estimate_transform(&spec, args.lambda, which, args.trials)
            .map_err(|e| CliError::Input(e.to_string()))?;
        out.transform_estimate(which.tag(), &spec, args.lambda, &est);
    }
    Ok(ok)
}

fn cmd_derive(args: &DeriveArgs, out: &Output) -> Result<bool, CliError> {
    let validated = read_path_file(&args.path)?;
    let mut printed = false;
    let mut ok = true;
    if let Some(nonneg) = validated.as_nonneg() {
        let chain = chain_lp(nonneg, args.p).map_err(|e| CliError::Usage(e.to_string()))?;
        ok &= chain.all_ordered;
        out.chain("eq5.chain", &chain);
        printed = true;
    }
    if let Some(positive) = validated.as_positive_start() {
        let chain = chain_llogl(positive);
        ok &= chain.all_ordered;
        out.chain("eq6.chain", &chain);
        printed = true;
    }
    if !printed {
        return Err(CliError::Input(
            "derivation chains need a nonnegative path (and a positive start for the L log L \
             chain)"
                .to_string(),
        ));
    }
    Ok(ok)
}

fn cmd_counterexample(args: &CounterexampleArgs, tol: Tol, out: &Output) -> Result<bool, CliError> {
    let report = counterexample_eq8(args.epsilon).map_err(|e| CliError::Usage(e.to_string()))?;
    let chain = TreeModel::chain(&[args.epsilon, 1.0]).expect("two finite values");
    let eq9 = verify_ineq9(&chain).map_err(|e| CliError::Input(e.to_string()))?;
    let threshold = counterexample_threshold();

    match out.format {
        Format::Text => {
            if report.violated {
                println!(
                    "eq8-form violated at epsilon={}: rhs {} < lhs {}",
                    sig6(report.epsilon),
                    sig6(report.rhs),
                    sig6(report.lhs)
                );
            } else {
                println!(
                    "eq8-form holds at epsilon={}: lhs {} <= rhs {}",
                    sig6(report.epsilon),
                    sig6(report.lhs),
                    sig6(report.rhs)
                );
            }
            println!(
                "eq9 holds on the same chain: {} <= {}",
                sig6(eq9.lhs),
                sig6(eq9.rhs)
            );
            println!("eq8-threshold epsilon_star={}", sig6(threshold));
        }
        Format::Json => {
            let mut v = tagged_json("eq8", &report);
            let obj = v.as_object_mut().unwrap();
            obj.insert("eq9_lhs".into(), eq9.lhs.into());
            obj.insert("eq9_rhs".into(), eq9.rhs.into());
            obj.insert("threshold".into(), threshold.into());
            println!("{v}");
        }
        Format::Csv => {
            println!(
                "eq8,{},{},{},{}",
                report.epsilon, report.lhs, report.rhs, report.violated
            );
            println!("eq9,{},{},{},", report.epsilon, eq9.lhs, eq9.rhs);
            println!("eq8-threshold,{threshold},,,");
        }
    }
    // the eq8-form violation is the expected demonstration; only a failure
    // of eq9 (which must hold) is an inequality violation
    Ok(eq9.holds_at(tol))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
