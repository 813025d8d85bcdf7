//! The `pmax` command line.
//!
//! Exit codes: 0 success, 2 input error (including usage errors), 3 resource
//! guard, 4 invariant violation detected at runtime.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pmax_core::datum::{datum_coefficients, evaluate_solution, perturbation_budget, RationalPoint};
use pmax_core::decomp::{error_term_spectral, fold_separable, main_error_split, spectrum};
use pmax_core::divset::{coupled_q, MeasureMethod, MeasureReport};
use pmax_core::experiment::{
    fit_points, ratio_experiment, Engine, ExperimentConfig, FitResult, RowOutcome,
};
use pmax_core::grid::Residues;
use pmax_core::numtheory::{lattice_pair_count, lattice_pair_count_brute};
use pmax_core::poly::IntPolynomial;
use pmax_core::weyl::{good_set_for, weyl_table, weyl_table_with, BuildMethod};
use pmax_core::{DEFAULT_C, DEFAULT_RHO};
use serde::Serialize;
use serde_json::{json, Value};

use crate::files::{
    balls_meta, coordinate_columns, read_balls, read_rows, write_balls, write_rows, write_table,
    Output,
};
use crate::numfmt::{fmt_f64, num, nums};
use crate::parallel::Parallel;
use crate::polyjson::{parse_polynomial, polynomial_value};
use crate::{exit, selftest, CliError, Header};

/// Largest Parseval defect tolerated before a run is flagged.
pub const PARSEVAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "pmax", version, about = "Periodic maximal-estimate counterexample toolkit")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON object of flag values, e.g. {"s": 0.25, "n-ladder": "1024,...,32768"};
    /// flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate S(b) for every b in F_q^d.
    #[command(args_override_self = true)]
    WeylTable(WeylTableArgs),
    /// Compare max |S(b)| with (k - 1) q^{d/2}.
    #[command(args_override_self = true)]
    VerifyDeligne(VerifyDeligneArgs),
    /// Residues with |S(b)| >= c q^{d/2}.
    #[command(args_override_self = true)]
    GoodSet(GoodSetArgs),
    /// The solution at x = b/q + delta, t = 1/q.
    #[command(args_override_self = true)]
    SolutionEval(PointArgs),
    /// Main term Zhat(0) S(b) and error term at x = b/q + delta, t = 1/q.
    #[command(args_override_self = true)]
    Decompose(PointArgs),
    /// Build the divergence set and write its ball list.
    #[command(args_override_self = true)]
    BuildXn(BuildXnArgs),
    /// Measure a divergence set.
    #[command(args_override_self = true)]
    MeasureXn(MeasureXnArgs),
    /// Run the pipeline over a ladder of N and write rows.csv.
    #[command(args_override_self = true)]
    RatioExperiment(RatioArgs),
    /// Fit the growth exponent of a rows.csv file.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Count pairs with 0 < |b q' - b' q| <= A and compare with 2A.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    LatticeCount(LatticeArgs),
    /// Run the built-in example suite.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// X1^k + ... + Xd^k
    Diagonal,
    /// (X1^2 + ... + Xd^2)^k
    PowerLaplacian,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PolyArgs {
    /// Symbol as inline JSON ({"d":1,"terms":[{"e":[3],"c":1}]}) or a path to a JSON file.
    #[arg(long, conflicts_with = "family")]
    pub poly: Option<String>,
    /// Built-in family instead of --poly; needs --d and --k.
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Dimension; checked against --poly when both are given.
    #[arg(long)]
    pub d: Option<usize>,
    /// Degree (family parameter with --family); checked against --poly.
    #[arg(long)]
    pub k: Option<u32>,
}

impl PolyArgs {
    fn present(&self) -> bool {
        self.poly.is_some() || self.family.is_some()
    }

    pub fn resolve(&self) -> Result<IntPolynomial, CliError> {
        match (&self.poly, self.family) {
            (Some(src), _) => {
                let text = if src.trim_start().starts_with('{') {
                    src.clone()
                } else {
                    fs::read_to_string(src).map_err(|e| CliError::io(src, e))?
                };
                let p = parse_polynomial(&text)?;
                if let Some(d) = self.d.filter(|&d| d != p.dim()) {
                    return Err(CliError::Parse(format!(
                        "--d {d} does not match the polynomial (d = {})",
                        p.dim()
                    )));
                }
                if let Some(k) = self.k.filter(|&k| k != p.degree()) {
                    return Err(CliError::Parse(format!(
                        "--k {k} does not match the polynomial (degree {})",
                        p.degree()
                    )));
                }
                Ok(p)
            }
            (None, Some(fam)) => {
                let (Some(d), Some(k)) = (self.d, self.k) else {
                    return Err(CliError::Parse("--family needs --d and --k".into()));
                };
                Ok(match fam {
                    Family::Diagonal => IntPolynomial::family_diagonal(d, k)?,
                    Family::PowerLaplacian => IntPolynomial::family_power_laplacian(d, k)?,
                })
            }
            (None, None) => Err(CliError::Parse("a symbol is required: --poly or --family".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableMethod {
    /// Inverse DFT of e(P(r)/q).
    Dft,
    /// One complete sum per entry.
    Direct,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WeylTableArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[arg(long)]
    pub q: u64,
    #[arg(long, value_enum, default_value = "dft")]
    pub method: TableMethod,
    /// CSV destination (stdout when absent; the summary then goes to stderr).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyDeligneArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    /// One or more primes, comma separated.
    #[arg(long, value_delimiter = ',', required = true, action = clap::ArgAction::Set)]
    pub q: Vec<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GoodSetArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[arg(long)]
    pub q: u64,
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    /// CSV destination for the members.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PointArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub q: u64,
    /// Residue vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true, action = clap::ArgAction::Set)]
    pub b: Vec<i64>,
    /// Offset from b/q, comma separated (default 0).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, action = clap::ArgAction::Set)]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildXnArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
    /// Ball list destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureChoice {
    /// Exact for d = 1, Monte-Carlo otherwise.
    Auto,
    Exact,
    Mc,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MeasureXnArgs {
    /// Ball list written by build-xn; otherwise the set is built from the symbol.
    #[arg(long, conflicts_with_all = ["poly", "family"])]
    pub balls: Option<PathBuf>,
    #[command(flatten)]
    pub poly: PolyArgs,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MeasureChoice,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RatioArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    /// Sobolev exponent.
    #[arg(long, default_value_t = 0.0)]
    pub s: f64,
    /// Ascending N values; "a,b,...,z" continues the progression set by a, b.
    #[arg(long)]
    pub n_ladder: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
    /// Balls evaluated per row (every ball when J is smaller).
    #[arg(long, default_value_t = 20_000)]
    pub sample_budget: u64,
    /// Monte-Carlo samples per row for d >= 2.
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_samples: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON file with per-row witnesses, bounds and quantiles.
    #[arg(long)]
    pub details: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LatticeArgs {
    pub q: u64,
    pub q_prime: u64,
    pub a: f64,
    /// Enumerate all q q' pairs instead of walking lattice lines.
    #[arg(long)]
    pub brute: bool,
}

/// Expands `"1024,2048,...,32768"`: `...` continues the geometric
/// progression of the two preceding entries when their ratio is an integer,
/// the arithmetic one otherwise, and must land on the entry that follows.
pub fn parse_ladder(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = |msg: String| CliError::Parse(format!("--n-ladder {text:?}: {msg}"));
    let tokens: Vec<&str> = text.split(',').map(str::trim).collect();
    let mut out: Vec<u64> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let tok = tokens[i];
        if tok == "..." {
            let [.., a, b] = out[..] else {
                return Err(bad("'...' needs two entries before it".into()));
            };
            let end: u64 = tokens
                .get(i + 1)
                .ok_or_else(|| bad("'...' needs an entry after it".into()))?
                .parse()
                .map_err(|_| bad("entry after '...' is not an integer".into()))?;
            if b <= a || end <= b {
                return Err(bad("'...' needs an increasing progression".into()));
            }
            let geometric = b % a == 0;
            let mut x = b;
            loop {
                x = if geometric { x * (b / a) } else { x + (b - a) };
                if x >= end {
                    break;
                }
                out.push(x);
            }
            if x != end {
                return Err(bad(format!("progression from {a}, {b} does not reach {end}")));
            }
            i += 1;
            continue;
        }
        out.push(tok.parse().map_err(|_| bad(format!("{tok:?} is not an integer")))?);
        i += 1;
    }
    Ok(out)
}

/// Splices flag values from `--config <file>` in right after the subcommand
/// name, so the explicit flags that follow override them.
fn apply_config_file(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = argv.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let obj: serde_json::Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let mut extra = Vec::new();
    for (key, v) in obj {
        let flag = OsString::from(format!("--{key}"));
        match v {
            Value::Bool(true) => extra.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar_text).collect();
                extra.push(flag);
                extra.push(joined.join(",").into());
            }
            Value::Object(_) if key == "poly" => {
                extra.push(flag);
                extra.push(v.to_string().into());
            }
            other => {
                extra.push(flag);
                extra.push(scalar_text(&other).into());
            }
        }
    }
    let names = [
        "weyl-table", "verify-deligne", "good-set", "solution-eval", "decompose", "build-xn",
        "measure-xn", "ratio-experiment", "fit", "lattice-count", "selftest",
    ];
    let at = argv
        .iter()
        .position(|a| names.contains(&a.to_string_lossy().as_ref()))
        .map_or(argv.len(), |i| i + 1);
    let mut out = argv[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match apply_config_file(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("pmax: error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::INPUT } else { exit::OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pmax: error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Parse("--threads must be positive".into()));
        }
        // a second call (tests in one process) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let threads = rayon::current_num_threads();
    match &cli.command {
        Command::WeylTable(a) => cmd_weyl_table(a, threads),
        Command::VerifyDeligne(a) => cmd_verify_deligne(a),
        Command::GoodSet(a) => cmd_good_set(a, threads),
        Command::SolutionEval(a) => cmd_solution_eval(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::BuildXn(a) => cmd_build_xn(a, threads),
        Command::MeasureXn(a) => cmd_measure_xn(a),
        Command::RatioExperiment(a) => cmd_ratio(a, threads),
        Command::Fit(a) => cmd_fit(a),
        Command::LatticeCount(a) => cmd_lattice(a),
        Command::Selftest => cmd_selftest(),
    }
}

fn print_json(v: &Value) {
    println!("{v}");
}

/// Resolved configuration for a header: the parsed flags plus the canonical
/// symbol and thread count.
fn resolved_config<A: Serialize>(args: &A, poly: Option<&IntPolynomial>, threads: usize) -> Value {
    let mut v = serde_json::to_value(args).expect("plain data");
    if let Value::Object(map) = &mut v {
        if let Some(p) = poly {
            map.insert("poly_resolved".into(), polynomial_value(p));
        }
        map.insert("threads".into(), json!(threads));
    }
    v
}

fn cmd_weyl_table(a: &WeylTableArgs, threads: usize) -> Result<i32, CliError> {
    let p = a.poly.resolve()?;
    let method = match a.method {
        TableMethod::Dft => BuildMethod::Dft,
        TableMethod::Direct => BuildMethod::Direct,
    };
    let table = weyl_table_with(&p, a.q, method)?;
    let defect = pmax_core::weyl::parseval_defect(&table);
    let deligne = pmax_core::weyl::deligne_check(&table, p.degree());
    let header = Header::new("weyl-table", resolved_config(a, Some(&p), threads));
    let mut columns = coordinate_columns(p.dim());
    columns.extend(["re", "im", "modulus"].map(String::from));
    let rows = Residues::new(a.q, p.dim()).zip(table.values()).map(|(b, z)| {
        let mut row: Vec<String> = b.iter().map(u64::to_string).collect();
        row.extend([fmt_f64(z.re), fmt_f64(z.im), fmt_f64(z.norm())]);
        row
    });
    write_table(Output::open(a.out.as_deref())?, &header, &columns, rows)?;
    let summary = json!({
        "q": a.q,
        "d": p.dim(),
        "entries": table.values().len(),
        "parseval_defect": num(defect),
        "max_modulus": num(deligne.max_modulus),
        "bound": num(deligne.bound),
    });
    if a.out.is_some() {
        print_json(&summary);
    } else {
        eprintln!("{summary}");
    }
    Ok(if defect > PARSEVAL_TOLERANCE {
        eprintln!("pmax: Parseval defect {defect:e} exceeds {PARSEVAL_TOLERANCE:e}");
        exit::INVARIANT
    } else {
        exit::OK
    })
}

fn cmd_verify_deligne(a: &VerifyDeligneArgs) -> Result<i32, CliError> {
    let p = a.poly.resolve()?;
    let k = p.degree();
    let mut reports = Vec::new();
    let mut failed = false;
    for &q in &a.q {
        let t = good_set_for(&p, q, DEFAULT_C, k)?;
        let applies = k as u64 % q != 0;
        failed |= applies && !t.deligne.within_product_bound;
        reports.push(json!({
            "q": q,
            "d": p.dim(),
            "k": k,
            "max_modulus": num(t.deligne.max_modulus),
            "bound": num(t.deligne.bound),
            "ok": t.deligne.ok,
            "product_bound": num(t.deligne.product_bound),
            "within_product_bound": t.deligne.within_product_bound,
            "q_divides_k": !applies,
            "parseval_defect": num(t.parseval_defect),
        }));
    }
    if reports.len() == 1 {
        print_json(&reports[0]);
    } else {
        print_json(&Value::Array(reports));
    }
    Ok(if failed { exit::INVARIANT } else { exit::OK })
}

fn cmd_good_set(a: &GoodSetArgs, threads: usize) -> Result<i32, CliError> {
    let p = a.poly.resolve()?;
    let t = good_set_for(&p, a.q, a.c, p.degree())?;
    let g = &t.good;
    if let Some(path) = &a.out {
        let header = Header::new("good-set", resolved_config(a, Some(&p), threads));
        let rows = g.members().map(|b| b.iter().map(u64::to_string).collect());
        write_table(Output::open(Some(path))?, &header, &coordinate_columns(p.dim()), rows)?;
    }
    print_json(&json!({
        "q": a.q,
        "d": p.dim(),
        "k": p.degree(),
        "c": num(a.c),
        "size": g.len(),
        "density": num(g.density()),
        "guaranteed_density": num(g.guaranteed_density()),
        "meets_guarantee": g.meets_guarantee(),
        "deligne_ok": g.deligne_ok(),
        "parseval_defect": num(t.parseval_defect),
    }));
    let broken = g.meets_guarantee() == Some(false) || t.parseval_defect > PARSEVAL_TOLERANCE;
    Ok(if broken { exit::INVARIANT } else { exit::OK })
}

fn point(a: &PointArgs, d: usize) -> Result<RationalPoint, CliError> {
    let delta = if a.delta.is_empty() {
        vec![0.0; d]
    } else {
        a.delta.clone()
    };
    if a.b.len() != d || delta.len() != d {
        return Err(CliError::Parse(format!(
            "--b and --delta need {d} components each"
        )));
    }
    Ok(RationalPoint::new(&a.b, a.q, delta)?)
}

fn cmd_solution_eval(a: &PointArgs) -> Result<i32, CliError> {
    let p = a.poly.resolve()?;
    let pt = point(a, p.dim())?;
    let f = datum_coefficients(a.n, p.dim())?;
    let u = evaluate_solution(&p, &f, &pt)?;
    print_json(&json!({
        "re": num(u.re),
        "im": num(u.im),
        "modulus": num(u.norm()),
        "N": a.n,
        "q": a.q,
        "b": pt.b(),
        "delta": nums(pt.delta()),
        "within_budget": pt.within_budget(a.rho, a.n),
        "budget": num(perturbation_budget(a.rho, p.dim(), a.n)),
    }));
    Ok(exit::OK)
}

/// Above this many `q^{2d}` operations the spectral cross-check is skipped.
const SPECTRAL_CHECK_LIMIT: u64 = 1 << 26;

fn cmd_decompose(a: &PointArgs) -> Result<i32, CliError> {
    let p = a.poly.resolve()?;
    let pt = point(a, p.dim())?;
    let f = datum_coefficients(a.n, p.dim())?;
    let table = weyl_table(&p, a.q)?;
    let me = main_error_split(&p, &f, &pt, &table)?;
    let mut out = json!({
        "M_re": num(me.main.re),
        "M_im": num(me.main.im),
        "E_re": num(me.error.re),
        "E_im": num(me.error.im),
        "ratio": num(me.ratio()),
        "Zhat0_re": num(me.zhat0.re),
        "Zhat0_im": num(me.zhat0.im),
        "solution_re": num(me.solution.re),
        "solution_im": num(me.solution.im),
    });
    let cells = (table.values().len() as u64).saturating_mul(table.values().len() as u64);
    if cells <= SPECTRAL_CHECK_LIMIT {
        let hat = spectrum(&fold_separable(&f, a.q, pt.delta())?);
        let e = error_term_spectral(&hat, &table, pt.b())?;
        let defect = (me.main + e - me.solution).norm() / me.solution.norm();
        out["E_spectral_re"] = num(e.re);
        out["E_spectral_im"] = num(e.im);
        out["spectral_defect"] = num(defect);
    }
    print_json(&out);
    Ok(exit::OK)
}

/// Deligne or Parseval failures among the computed groups, as messages.
/// Only the product bound counts here: the single-factor bound is reported but
/// diagonal forms exceed it honestly once d >= 2.
fn table_violations(set: &pmax_core::divset::DivergenceSet) -> Vec<String> {
    let mut msgs = Vec::new();
    for g in set.groups() {
        if let Some(dr) = g.deligne {
            if !dr.within_product_bound {
                msgs.push(format!(
                    "q = {}: max |S| {} above (k-1)^d q^(d/2) = {}",
                    g.q(),
                    dr.max_modulus,
                    dr.product_bound
                ));
            }
        }
        if let Some(defect) = g.parseval_defect {
            if defect > PARSEVAL_TOLERANCE {
                msgs.push(format!("q = {}: Parseval defect {defect:e}", g.q()));
            }
        }
    }
    msgs
}

fn set_summary(set: &pmax_core::divset::DivergenceSet) -> Value {
    let max_defect = set
        .groups()
        .iter()
        .filter_map(|g| g.parseval_defect)
        .fold(0.0f64, f64::max);
    json!({
        "N": set.n_scale(),
        "d": set.dim(),
        "Q": set.q_param(),
        "band": [set.q_param(), 2 * set.q_param()],
        "primes": set.groups().len(),
        "dropped": set.dropped_primes(),
        "J": set.ball_count(),
        "radius": num(set.radius()),
        "ball_measure": num(set.ball_measure()),
        "upper_bound": num(set.ball_count() as f64 * set.ball_measure()),
        "max_parseval_defect": num(max_defect),
    })
}

fn cmd_build_xn(a: &BuildXnArgs, threads: usize) -> Result<i32, CliError> {
    let p = a.poly.resolve()?;
    let set = Parallel::new().divergence_set(&p, a.n, a.c, a.rho)?;
    if let Some(path) = &a.out {
        let header = Header::new("build-xn", resolved_config(a, Some(&p), threads))
            .with_meta(balls_meta(&set, &p, a.c));
        write_balls(Output::open(Some(path))?, &header, &set)?;
    }
    print_json(&set_summary(&set));
    let violations = table_violations(&set);
    for v in &violations {
        eprintln!("pmax: {v}");
    }
    Ok(if violations.is_empty() { exit::OK } else { exit::INVARIANT })
}

fn measure_json(r: &MeasureReport, q_param: u64) -> Value {
    let (method, samples, seed) = match r.method {
        MeasureMethod::Exact => ("exact", Value::Null, Value::Null),
        MeasureMethod::MonteCarlo { samples, seed } => ("mc", json!(samples), json!(seed)),
    };
    json!({
        "method": method,
        "estimate": num(r.estimate),
        "error": num(r.error),
        "upper_bound": num(r.upper_bound),
        "lower_bound": num(r.lower_bound),
        "J": r.ball_count,
        "overlap_pairs": r.overlap_pairs,
        "low_samples": r.low_samples,
        "samples": samples,
        "seed": seed,
        "measure_log_q": num(r.estimate * (q_param as f64).ln()),
    })
}

fn cmd_measure_xn(a: &MeasureXnArgs) -> Result<i32, CliError> {
    let engine = Parallel::new();
    let set = match (&a.balls, a.poly.present()) {
        (Some(path), _) => read_balls(path)?.1,
        (None, true) => {
            let n = a
                .n
                .ok_or_else(|| CliError::Parse("--n is required with a symbol".into()))?;
            engine.divergence_set(&a.poly.resolve()?, n, a.c, a.rho)?
        }
        (None, false) => {
            return Err(CliError::Parse("give --balls or a symbol with --n".into()));
        }
    };
    let method = match (a.method, set.dim()) {
        (MeasureChoice::Exact, _) | (MeasureChoice::Auto, 1) => MeasureMethod::Exact,
        _ => MeasureMethod::MonteCarlo {
            samples: a.samples,
            seed: a.seed,
        },
    };
    let r = engine.measure(&set, method)?;
    if r.low_samples {
        eprintln!("pmax: warning: fewer than 10^4 Monte-Carlo samples");
    }
    let mut out = measure_json(&r, set.q_param());
    out["N"] = json!(set.n_scale());
    out["d"] = json!(set.dim());
    out["Q"] = json!(set.q_param());
    print_json(&out);
    Ok(exit::OK)
}

fn fit_json(f: &FitResult) -> Value {
    json!({
        "slope": num(f.slope),
        "intercept": num(f.intercept),
        "residual": num(f.residual),
        "n_points": f.n_points,
        "log_corrected_slope": num(f.log_corrected_slope),
        "log_corrected_intercept": num(f.log_corrected_intercept),
    })
}

fn row_details(row: &RowOutcome) -> Value {
    match row {
        Ok(r) => json!({
            "N": r.n_scale,
            "Q": r.q_param,
            "d": r.d,
            "k": r.k,
            "s": num(r.s),
            "J": r.ball_count,
            "measure": measure_json(&r.measure, r.q_param),
            "measure_used": num(r.measure_used),
            "sup_lb": num(r.sup_lb),
            "witness": {
                "q": r.witness.q,
                "b": r.witness.b,
                "delta": nums(&r.witness.delta),
                "t": format!("1/{}", r.witness.q),
                "value": num(r.witness.value),
            },
            "scan": {
                "sampled": r.scan.sampled,
                "total": r.scan.total,
                "max": num(r.scan.max),
                "quantiles": r.scan.quantiles.iter().map(|&(p, v)| json!([num(p), num(v)])).collect::<Vec<_>>(),
            },
            "hs_norm": num(r.hs_norm),
            "ratio": num(r.ratio),
            "wall_ms": num(r.wall_ms),
        }),
        Err(f) => json!({
            "N": f.n_scale,
            "Q": f.q_param,
            "s": num(f.s),
            "error": f.error.to_string(),
        }),
    }
}

fn cmd_ratio(a: &RatioArgs, threads: usize) -> Result<i32, CliError> {
    let p = a.poly.resolve()?;
    let ladder = parse_ladder(&a.n_ladder)?;
    let cfg = ExperimentConfig {
        c: a.c,
        rho: a.rho,
        sample_budget: a.sample_budget,
        mc_samples: a.mc_samples,
        seed: a.seed,
    };
    let rows = ratio_experiment(&Parallel::new(), &p, a.s, &ladder, &cfg)?;
    let q_ladder: Vec<u64> = ladder.iter().map(|&n| coupled_q(n, p.dim())).collect();
    let header = Header::new("ratio-experiment", resolved_config(a, Some(&p), threads)).with_meta(json!({
        "d": p.dim(),
        "k": p.degree(),
        "s": num(a.s),
        "N_ladder": ladder,
        "Q_ladder": q_ladder,
        "measure_in_ratio": if p.dim() == 1 { "exact" } else { "mc_minus_2se" },
    }));
    write_rows(Output::open(Some(&a.out))?, &header, &rows)?;
    if let Some(path) = &a.details {
        let doc = json!({
            "header": header.to_value(),
            "rows": rows.iter().map(row_details).collect::<Vec<_>>(),
        });
        let text = serde_json::to_string_pretty(&doc).expect("plain data");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))?;
    }
    let failed: Vec<Value> = rows
        .iter()
        .filter_map(|r| r.as_ref().err())
        .map(|f| json!({"N": f.n_scale, "error": f.error.to_string()}))
        .collect();
    let fit = pmax_core::experiment::fit_exponent(&rows);
    print_json(&json!({
        "rows": rows.len(),
        "failed": failed,
        "fit": fit.as_ref().map(fit_json).unwrap_or(Value::Null),
        "fit_error": fit.as_ref().err().map(|e| e.to_string()),
    }));
    let invariant = rows
        .iter()
        .any(|r| matches!(r, Err(f) if matches!(f.error, pmax_core::Error::Invariant(_))));
    Ok(if invariant { exit::INVARIANT } else { exit::OK })
}

fn cmd_fit(a: &FitArgs) -> Result<i32, CliError> {
    let (_, points) = read_rows(&a.input)?;
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.succeeded())
        .map(|p| (p.n_scale as f64, p.ratio))
        .collect();
    print_json(&fit_json(&fit_points(&pts)?));
    Ok(exit::OK)
}

fn cmd_lattice(a: &LatticeArgs) -> Result<i32, CliError> {
    let count = if a.brute {
        lattice_pair_count_brute(a.q, a.q_prime, a.a)?
    } else {
        lattice_pair_count(a.q, a.q_prime, a.a)?
    };
    let bound = 2.0 * a.a;
    let ok = count as f64 <= bound;
    print_json(&json!({"count": count, "bound": num(bound), "ok": ok}));
    Ok(if ok { exit::OK } else { exit::INVARIANT })
}

fn cmd_selftest() -> Result<i32, CliError> {
    let checks = selftest::run();
    let failed = checks.iter().filter(|c| !c.ok).count();
    for c in &checks {
        let mark = if c.ok { "ok  " } else { "FAIL" };
        eprintln!("{mark} {}{}", c.name, if c.detail.is_empty() { String::new() } else { format!(": {}", c.detail) });
    }
    print_json(&json!({
        "passed": checks.len() - failed,
        "failed": failed,
        "checks": checks.iter().map(|c| json!({"name": c.name, "ok": c.ok})).collect::<Vec<_>>(),
    }));
    Ok(if failed == 0 { exit::OK } else { exit::INVARIANT })
}
