//! `goldmankit` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::Value;

use goldmankit::exotic::{
    enumerate_specs, enumeration_count, evaluate, invariance_test, validate_spec, EvalConfig, ObservableInstance,
    ObservableSpec,
};
use goldmankit::lie_bases::{build_basis, check_normalization, FamilyTag, GroupFamily};
use goldmankit::matrix::{RMatrix, Tolerance};
use goldmankit::report::VerificationReport;
use goldmankit::suite::{self, SuiteConfig};
use goldmankit::symbolic::{bracket, closure_check, normalize, parse_expr, BracketConfig, ClosureOptions};
use goldmankit::{casimir, goldman, Error};

#[derive(Parser, Debug)]
#[command(
    name = "goldmankit",
    version,
    about = "Goldman bracket identities, G2 observables and their symbolic algebra"
)]
struct Cli {
    /// Absolute tolerance for identity checks that accept one.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol_abs: f64,
    /// Relative tolerance for identity checks that accept one.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_rel: f64,
    /// Emit newline-delimited JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Print only failing reports and the final tally.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run verification suites.
    #[command(subcommand)]
    Verify(Verify),
    /// Work with exotic observable specs.
    #[command(subcommand)]
    Exotic(Exotic),
    /// Symbolic bracket of two expressions.
    Bracket(BracketArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Group {
    Gl,
    U,
    Sl,
    Su,
    Sp,
    So,
    G2,
}

impl From<Group> for FamilyTag {
    fn from(g: Group) -> Self {
        match g {
            Group::Gl => FamilyTag::GL,
            Group::U => FamilyTag::U,
            Group::Sl => FamilyTag::SL,
            Group::Su => FamilyTag::SU,
            Group::Sp => FamilyTag::SP,
            Group::So => FamilyTag::SO,
            Group::G2 => FamilyTag::G2,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct FamilyArgs {
    /// Group family; every family in the standard grid when omitted.
    #[arg(long, value_enum)]
    group: Option<Group>,
    /// Size parameter; every grid size of the family when omitted.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug, Clone, Copy)]
struct TrialArgs {
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Generator normalization.
    Normalization(FamilyArgs),
    /// Casimir tensors against their closed forms.
    Casimir(FamilyArgs),
    /// Gell-Mann tensor lemmas.
    Lemmas {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Trace identities for random group elements.
    Bracket {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        trials: TrialArgs,
    },
    /// Defect identities for SP and SO.
    Defect {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        trials: TrialArgs,
    },
    /// Entry formulas for inverses of symplectic matrices.
    SymplecticInverse {
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        trials: TrialArgs,
    },
    /// Octonion table, operators and G2 sampling.
    Octonion {
        #[command(flatten)]
        trials: TrialArgs,
        /// Sampler draws for the automorphism check.
        #[arg(long, default_value_t = 10_000)]
        draws: u64,
    },
    /// Split-loop harness.
    Split {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exotic observable suite.
    Exotic {
        #[arg(long, default_value_t = 50)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Symbolic engine suite.
    Symbolic {
        #[arg(long, default_value_t = 3)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Every suite.
    All {
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Engine {
    Factorized,
    BruteForce,
}

#[derive(Subcommand, Debug)]
enum Exotic {
    /// Check a spec file against the structural rules.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// List every spec of the given shape.
    Enumerate {
        #[arg(long, default_value_t = 0)]
        r: usize,
        #[arg(long)]
        n1: usize,
        #[arg(long, default_value_t = 0)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        n2: usize,
        #[arg(long)]
        t: usize,
        /// Print only the number of specs.
        #[arg(long)]
        count: bool,
    },
    /// Evaluate an instance file, or a random instance of a spec file.
    Evaluate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Engine::Factorized)]
        engine: Engine,
    },
    /// Gauge invariance of an instance under random G2 conjugation.
    Invariance {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct BracketArgs {
    #[arg(long)]
    lhs: String,
    #[arg(long)]
    rhs: String,
    /// Verify every output term against the observable pattern numerically.
    #[arg(long)]
    check_closure: bool,
    /// Enable the decorated-by-decorated rule for longer words.
    #[arg(long)]
    allow_extended: bool,
    #[arg(long, default_value_t = 8)]
    max_word_len: usize,
    #[arg(long, default_value_t = 5)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure that maps onto an exit code.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Spec(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

struct Output {
    json: bool,
    quiet: bool,
}

impl Output {
    /// Print reports and return whether all passed.
    fn reports(&self, reports: &[VerificationReport]) -> bool {
        for r in reports {
            if self.json {
                println!("{}", serde_json::to_string(r).expect("reports serialize"));
            } else if !self.quiet || !r.pass {
                println!("{}", r.summary());
            }
        }
        let failed = reports.iter().filter(|r| !r.pass).count();
        if !self.json {
            println!("{} checks, {} failed", reports.len(), failed);
        }
        failed == 0
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(v) = std::env::var("GOLDMANKIT_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: GOLDMANKIT_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let tol = Tolerance::new(cli.tol_abs, cli.tol_rel).map_err(|e| Failure::Usage(e.to_string()))?;
    let out = Output {
        json: cli.json,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Verify(v) => run_verify(v, tol, &out),
        Command::Exotic(e) => run_exotic(e, &out),
        Command::Bracket(b) => run_bracket(b, &out),
    }
}

/// Families selected by `--group/--n`, drawn from the standard grid.
fn families(args: FamilyArgs, allowed: &[FamilyTag]) -> Result<Vec<GroupFamily>, Failure> {
    let tag = args.group.map(FamilyTag::from);
    if let Some(t) = tag {
        if !allowed.contains(&t) {
            return Err(Failure::Usage(format!("group {} is not supported here", t.name())));
        }
    }
    if let (Some(t), Some(n)) = (tag, args.n) {
        return GroupFamily::new(t, n)
            .map(|f| vec![f])
            .map_err(|e| Failure::Usage(e.to_string()));
    }
    if tag.is_none() && args.n.is_some() {
        return Err(Failure::Usage("--n needs --group".into()));
    }
    Ok(suite::family_grid()
        .into_iter()
        .filter(|f| allowed.contains(&f.tag) && tag.is_none_or(|t| t == f.tag))
        .collect())
}

fn collect<T>(
    items: impl IntoIterator<Item = T>,
    f: impl Fn(T) -> goldmankit::Result<VerificationReport>,
) -> Result<Vec<VerificationReport>, Failure> {
    items.into_iter().map(|x| f(x).map_err(Failure::from)).collect()
}

fn run_verify(v: Verify, tol: Tolerance, out: &Output) -> Result<bool, Failure> {
    let all = &FamilyTag::ALL[..];
    let reports = match v {
        Verify::Normalization(fa) => collect(families(fa, all)?, |f| Ok(check_normalization(&build_basis(f)?)))?,
        Verify::Casimir(fa) => collect(families(fa, all)?, casimir::verify_closed_form)?,
        Verify::Lemmas { n, seed } => {
            let ns: Vec<usize> = n.map_or((2..=6).collect(), |n| vec![n]);
            collect(ns, |n| casimir::verify_tensor_lemmas(n, seed))?
        }
        Verify::Bracket { family, trials } => collect(families(family, all)?, |f| {
            goldman::verify_bracket(f, trials.trials, trials.seed, tol)
        })?,
        Verify::Defect { family, trials } => {
            let fams: Vec<GroupFamily> = if family.n.is_some() {
                families(family, &[FamilyTag::SP, FamilyTag::SO])?
            } else {
                let sp = (1..=3).map(|n| GroupFamily::new(FamilyTag::SP, n));
                let so = (3..=7).map(|n| GroupFamily::new(FamilyTag::SO, n));
                let wanted = family.group.map(FamilyTag::from);
                if wanted.is_some_and(|t| t != FamilyTag::SP && t != FamilyTag::SO) {
                    return Err(Failure::Usage("defect identities exist only for sp and so".into()));
                }
                sp.chain(so)
                    .map(|f| f.expect("grid sizes are in range"))
                    .filter(|f| wanted.is_none_or(|t| t == f.tag))
                    .collect()
            };
            collect(fams, |f| goldman::verify_defect(f.tag, f.n, trials.trials, trials.seed))?
        }
        Verify::SymplecticInverse { n, trials } => {
            let ns: Vec<usize> = n.map_or((1..=3).collect(), |n| vec![n]);
            collect(ns, |n| {
                goldman::verify_symplectic_inverse(n, trials.trials, trials.seed)
            })?
        }
        Verify::Octonion { trials, draws } => suite::octonion_suite(trials.trials, draws, trials.seed)?,
        Verify::Split { family, seed } => collect(families(family, all)?, |f| goldman::split_harness(f, seed, tol))?,
        Verify::Exotic { trials, seed } => suite::exotic_suite(trials, seed)?,
        Verify::Symbolic { trials, seed } => suite::symbolic_suite(trials, seed)?,
        Verify::All { seed } => {
            let mut cfg = SuiteConfig::new(seed);
            cfg.tol = tol;
            suite::run_all(&cfg)?
        }
    };
    Ok(out.reports(&reports))
}

/// Matrices given as arrays of rows.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    spec: ObservableSpec,
    monodromies: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    alphas: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    betas: Vec<Vec<Vec<f64>>>,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<RMatrix, Failure> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Failure::Usage(format!("{what}: expected a square array of rows")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(RMatrix::from_row_slice(n, n, &flat))
}

fn matrices(list: &[Vec<Vec<f64>>], field: &str) -> Result<Vec<RMatrix>, Failure> {
    list.iter()
        .enumerate()
        .map(|(i, m)| matrix(m, &format!("{field}[{i}]")))
        .collect()
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn from_value<T: for<'de> Deserialize<'de>>(v: Value, path: &Path) -> Result<T, Failure> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let at = e.path().to_string();
        Failure::Usage(format!("{}: at `{at}`: {}", path.display(), e.into_inner()))
    })
}

fn read_spec(path: &Path) -> Result<ObservableSpec, Failure> {
    from_value(read_json(path)?, path)
}

/// An instance file (with a `spec` field) or a bare spec sampled at `seed`.
fn read_instance(path: &Path, seed: u64) -> Result<ObservableInstance, Failure> {
    let v = read_json(path)?;
    if v.get("spec").is_some() {
        let f: InstanceFile = from_value(v, path)?;
        let inst = ObservableInstance::new(
            f.spec,
            matrices(&f.monodromies, "monodromies")?,
            matrices(&f.alphas, "alphas")?,
            matrices(&f.betas, "betas")?,
        )?;
        Ok(inst)
    } else {
        let spec: ObservableSpec = from_value(v, path)?;
        Ok(ObservableInstance::sample(spec, seed)?)
    }
}

fn run_exotic(e: Exotic, out: &Output) -> Result<bool, Failure> {
    match e {
        Exotic::Validate { spec } => {
            let s = read_spec(&spec)?;
            let res = validate_spec(&s);
            let violations = res.as_ref().err().cloned().unwrap_or_default();
            let report = VerificationReport::new("exotic-validate")
                .param("spec", s.to_string())
                .param(
                    "violations",
                    serde_json::to_value(&violations).expect("violations serialize"),
                )
                .seeded(0, 1)
                .errors(violations.len() as f64, violations.len() as f64)
                .verdict(res.is_ok());
            if !out.json {
                for v in &violations {
                    println!("{}: {}", v.field, v.message);
                }
            }
            Ok(out.reports(&[report]))
        }
        Exotic::Enumerate { r, n1, s, n2, t, count } => {
            if count {
                let c = enumeration_count(n1, s, n2, t);
                if out.json {
                    println!(
                        "{}",
                        serde_json::json!({ "r": r, "n1": n1, "s": s, "n2": n2, "t": t, "count": c.to_string() })
                    );
                } else {
                    println!("{c}");
                }
                return Ok(true);
            }
            for spec in enumerate_specs(r, n1, s, n2, t)? {
                if out.json {
                    println!("{}", serde_json::to_string(&spec).expect("specs serialize"));
                } else {
                    println!("{spec}");
                }
            }
            Ok(true)
        }
        Exotic::Evaluate { spec, seed, engine } => {
            let inst = read_instance(&spec, seed)?;
            let cfg = match engine {
                Engine::Factorized => EvalConfig::default(),
                Engine::BruteForce => EvalConfig::brute_force(),
            };
            let value = evaluate(&inst, &cfg)?;
            if out.json {
                println!(
                    "{}",
                    serde_json::json!({ "spec": inst.spec.to_string(), "engine": format!("{engine:?}"), "seed": seed, "value": value })
                );
            } else {
                println!("{value:.17e}");
            }
            Ok(true)
        }
        Exotic::Invariance { spec, trials, seed } => {
            let inst = read_instance(&spec, seed)?;
            let r = invariance_test(&inst, trials, seed, 1e-8)?;
            Ok(out.reports(&[r.report]))
        }
    }
}

fn run_bracket(b: BracketArgs, out: &Output) -> Result<bool, Failure> {
    let lhs = parse_expr(&b.lhs).map_err(|e| Failure::Usage(format!("--lhs: {e}")))?;
    let rhs = parse_expr(&b.rhs).map_err(|e| Failure::Usage(format!("--rhs: {e}")))?;
    let cfg = BracketConfig {
        max_word_len: b.max_word_len,
        allow_extended: b.allow_extended,
    };
    let expr = bracket(&lhs, &rhs, &cfg)?;
    let norm = normalize(&expr);
    if out.json {
        println!("{}", norm.to_json());
    } else if !out.quiet {
        println!("{}", norm.expr);
        for (t, sig) in norm.expr.terms.iter().zip(&norm.signatures) {
            let flags = match (t.extended, t.sign_flagged) {
                (true, true) => " [extended, sign-flagged]",
                (true, false) => " [extended]",
                (false, true) => " [sign-flagged]",
                (false, false) => "",
            };
            match sig {
                Ok(s) => println!("  {t}{flags}\n      signature {}", s.describe()),
                Err(why) => println!("  {t}{flags}\n      unrecognized: {why}"),
            }
        }
    }
    if !b.check_closure {
        return Ok(true);
    }
    let report = closure_check(
        &norm.expr,
        &ClosureOptions {
            trials: b.trials,
            seed: b.seed,
            rel_tol: 1e-7,
        },
    )?;
    if !out.json && !out.quiet {
        for f in report.failures() {
            println!(
                "closure failure: {} ({})",
                f.term,
                f.reason.as_deref().unwrap_or("not invariant")
            );
        }
    }
    Ok(out.reports(&[report.report]))
}
