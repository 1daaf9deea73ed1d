//! The `kendall` command line.
//!
//! Every subcommand renders its result into a string first; the string goes
//! to standard output or to `--out`. Exit codes: 0 success, 1 computation or
//! validation failure, 2 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::asymptotics::{
    convergence_diagnostic, corollary_regime, limit_cdf, limit_pdf, log_grid, norming_sequence, tail_expansion,
    LimitLaw, NormingMethod,
};
use crate::distributions::{DistSpec, FamilySpec, KendallIndex, StepDistribution};
use crate::error::KendallError;
use crate::fdd::{fdd_cdf_dp, fdd_cdf_enum, FddQuery, ENUM_MAX_K};
use crate::harness::constants::{DEFAULT_MC_SAMPLES, QUICK_MC_SAMPLES};
use crate::harness::{run_suite, Budget, Suite};
use crate::kernel::{kernel_cdf, kernel_trunc_moment, KernelQuery};
use crate::simulator::{sample_ensemble, SimConfig};
use crate::williamson::{cdf_n, tail_n};

#[derive(Debug, Parser)]
#[command(name = "kendall", version, about = "Kendall random walks: exact laws, simulation and limit theorems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Emit JSON
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,

    /// Emit CSV
    #[arg(long, global = true)]
    pub csv: bool,

    /// Write the output to this file instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed of every random stream
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistName {
    #[value(alias = "dirac1")]
    Dirac,
    #[value(alias = "pareto_mix")]
    ParetoMix,
    #[value(alias = "lack_of_memory")]
    LackOfMemory,
    #[value(alias = "stable_limit")]
    Stable,
    #[value(alias = "uniform01")]
    Uniform,
    Gamma,
    Generic,
}

/// Step-law selection shared by most subcommands.
#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    /// Step-law family
    #[arg(long, value_enum)]
    pub dist: Option<DistName>,
    /// Kendall index α > 0
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Atom weight of pareto-mix, in (0, 1]
    #[arg(long)]
    pub p: Option<f64>,
    /// Scale of the stable family [default: 1]
    #[arg(long)]
    pub m: Option<f64>,
    /// Gamma shape [default: 1]
    #[arg(long)]
    pub shape: Option<f64>,
    /// Gamma rate [default: 1]
    #[arg(long)]
    pub rate: Option<f64>,
    /// CSV table `x,F` of a generic cdf
    #[arg(long)]
    pub cdf_table: Option<PathBuf>,
    /// Quadrature tolerance of a generic cdf
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// JSON distribution spec, e.g. {"family":"gamma","shape":2,"rate":1,"alpha":1}
    #[arg(long, conflicts_with = "dist")]
    pub dist_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FddMethod {
    Enum,
    Dp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormingArg {
    Auto,
    ClosedForm,
    Numeric,
}

impl From<NormingArg> for NormingMethod {
    fn from(a: NormingArg) -> Self {
        match a {
            NormingArg::Auto => NormingMethod::Auto,
            NormingArg::ClosedForm => NormingMethod::ClosedForm,
            NormingArg::Numeric => NormingMethod::NumericInverse,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate walks; CSV of terminal values (or full paths)
    Sample {
        #[command(flatten)]
        dist: DistArgs,
        /// Number of steps
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 64)]
        streams: usize,
        /// Emit every X_1..X_n instead of X_n only
        #[arg(long)]
        full_paths: bool,
    },
    /// Exact cdf F_n(t) of X_n
    Cdf {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        n: u64,
        /// One or more thresholds, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
    },
    /// Joint cdf P(X_{n_1} <= x_1, ..., X_{n_k} <= x_k)
    Fdd {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        epochs: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        thresholds: Vec<f64>,
        #[arg(long, value_enum, default_value_t = FddMethod::Enum)]
        method: FddMethod,
    },
    /// Transition kernel P_n(x, (0, t])
    Kernel {
        #[command(flatten)]
        dist: DistArgs,
        /// Start point
        #[arg(long)]
        x: f64,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        /// Report the truncated α-moment of the kernel instead
        #[arg(long)]
        moment: bool,
    },
    /// Exact tail of X_n against its two-term expansion
    Tail {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
    },
    /// Limit laws; with --diagnostic, convergence of n^{-1/α}-scaled X_n
    Limit {
        #[command(flatten)]
        dist: DistArgs,
        /// Index of a regularly varying limit (instead of --m)
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        /// Sup-distance table for the step law given by --dist
        #[arg(long)]
        diagnostic: bool,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        ns: Vec<u64>,
        #[arg(long, value_enum, default_value_t = NormingArg::Auto)]
        method: NormingArg,
    },
    /// Norming constants a_n with n H(a_n) / a_n^α = 1
    Norming {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long, value_enum, default_value_t = NormingArg::Auto)]
        method: NormingArg,
    },
    /// Run validation suites
    Validate {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Reduced Monte Carlo budget
        #[arg(long)]
        quick: bool,
        #[arg(long, conflicts_with = "quick")]
        mc_samples: Option<usize>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(KendallError),
}

impl From<KendallError> for CliError {
    fn from(e: KendallError) -> Self {
        match e {
            KendallError::InvalidParameter(_) | KendallError::Size { .. } | KendallError::Parse(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Run(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Table,
    Json,
    Csv,
}

impl Cli {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            Format::Table
        }
    }
}

impl DistArgs {
    fn is_given(&self) -> bool {
        self.dist.is_some() || self.dist_file.is_some()
    }

    fn spec(&self) -> CliResult<DistSpec> {
        if let Some(path) = &self.dist_file {
            let mut spec = DistSpec::from_file(path)?;
            if let Some(a) = self.alpha {
                spec.alpha = a;
            }
            return Ok(spec);
        }
        let Some(name) = self.dist else {
            return usage("a step law is required: pass --dist or --dist-file");
        };
        let Some(alpha) = self.alpha else {
            return usage("--alpha is required");
        };
        let allowed: &[&str] = match name {
            DistName::ParetoMix => &["p"],
            DistName::Stable => &["m"],
            DistName::Gamma => &["shape", "rate"],
            DistName::Generic => &["cdf_table", "quad_tol"],
            _ => &[],
        };
        let given = [
            ("p", self.p.is_some()),
            ("m", self.m.is_some()),
            ("shape", self.shape.is_some()),
            ("rate", self.rate.is_some()),
            ("cdf_table", self.cdf_table.is_some()),
            ("quad_tol", self.quad_tol.is_some()),
        ];
        if let Some((flag, _)) = given.iter().find(|(f, g)| *g && !allowed.contains(f)) {
            return usage(format!("--{} does not apply to this family", flag.replace('_', "-")));
        }
        let family = match name {
            DistName::Dirac => FamilySpec::Dirac,
            DistName::ParetoMix => match self.p {
                Some(p) => FamilySpec::ParetoMix { p },
                None => return usage("pareto-mix needs --p"),
            },
            DistName::LackOfMemory => FamilySpec::LackOfMemory,
            DistName::Stable => FamilySpec::Stable { m: self.m.unwrap_or(1.0) },
            DistName::Uniform => FamilySpec::Uniform,
            DistName::Gamma => FamilySpec::Gamma { shape: self.shape.unwrap_or(1.0), rate: self.rate.unwrap_or(1.0) },
            DistName::Generic => match &self.cdf_table {
                Some(table) => FamilySpec::Generic { table: table.clone(), quad_tol: self.quad_tol },
                None => return usage("generic needs --cdf-table"),
            },
        };
        Ok(DistSpec { family, alpha })
    }

    fn build(&self) -> CliResult<StepDistribution> {
        let spec = self.spec()?;
        // unreadable or malformed inputs are usage errors too
        spec.build().map_err(|e| match e {
            KendallError::Io(io) => CliError::Usage(format!("cannot read cdf table: {io}")),
            other => other.into(),
        })
    }
}

/// Output text and exit code of one command.
fn execute(cli: &Cli) -> CliResult<(String, i32)> {
    let fmt = cli.format();
    let mut s = String::new();
    match &cli.command {
        Command::Sample { dist, n, paths, streams, full_paths } => {
            let d = dist.build()?;
            let mut cfg = SimConfig::new(d, *n, *paths, cli.seed)?.with_streams(*streams)?;
            if *full_paths {
                cfg = cfg.with_paths_kept();
            }
            let e = sample_ensemble(&cfg)?;
            match fmt {
                Format::Json => {
                    let rows: Vec<Vec<f64>> = if *full_paths {
                        (0..e.len()).map(|i| e.path(i).expect("paths kept").to_vec()).collect()
                    } else {
                        Vec::new()
                    };
                    let mut v = json!({ "config": cfg.describe(), "terminal": e.terminal() });
                    if *full_paths {
                        v["paths"] = json!(rows);
                    }
                    s = to_json(&v);
                }
                // a sample is tabular either way
                Format::Table | Format::Csv => {
                    let mut buf = Vec::new();
                    if *full_paths {
                        e.write_paths_csv(&mut buf)?;
                    } else {
                        e.write_terminal_csv(&mut buf)?;
                    }
                    s = String::from_utf8(buf).expect("ascii output");
                }
            }
        }
        Command::Cdf { dist, n, t } => {
            let d = dist.build()?;
            if *n == 0 {
                return usage("--n must be at least 1");
            }
            let values = t.iter().map(|&x| cdf_n(&d, *n, x)).collect::<crate::Result<Vec<_>>>()?;
            match fmt {
                Format::Json => {
                    let pts: Vec<_> = t.iter().zip(&values).map(|(x, v)| json!({ "t": x, "cdf": v })).collect();
                    s = to_json(&json!({ "dist": d.describe(), "n": n, "points": pts }));
                }
                Format::Csv => {
                    s.push_str("t,cdf\n");
                    for (x, v) in t.iter().zip(&values) {
                        let _ = writeln!(s, "{x},{v}");
                    }
                }
                Format::Table if values.len() == 1 => {
                    let _ = writeln!(s, "{}", values[0]);
                }
                Format::Table => {
                    for (x, v) in t.iter().zip(&values) {
                        let _ = writeln!(s, "{x}\t{v}");
                    }
                }
            }
        }
        Command::Fdd { dist, epochs, thresholds, method } => {
            let d = dist.build()?;
            let q = FddQuery::new(epochs.clone(), thresholds.clone()).or_else(|e| usage(e.to_string()))?;
            if *method == FddMethod::Enum && q.k() > ENUM_MAX_K {
                return usage(format!("k = {} exceeds the enumeration guard {ENUM_MAX_K}; use --method dp", q.k()));
            }
            let v = match method {
                FddMethod::Enum => fdd_cdf_enum(&d, &q)?,
                FddMethod::Dp => fdd_cdf_dp(&d, &q)?,
            };
            match fmt {
                Format::Json => s = to_json(&json!(v)),
                Format::Csv => {
                    let _ = writeln!(s, "value,k,terms_evaluated\n{},{},{}", v.value, v.k, v.terms_evaluated);
                }
                Format::Table => {
                    let _ = writeln!(s, "{}", v.value);
                }
            }
        }
        Command::Kernel { dist, x, n, t, moment } => {
            let d = dist.build()?;
            let values = t
                .iter()
                .map(|&th| {
                    let q = KernelQuery::new(*x, *n, th).map_err(|e| CliError::Usage(e.to_string()))?;
                    Ok(if *moment { kernel_trunc_moment(&d, &q)? } else { kernel_cdf(&d, &q)? })
                })
                .collect::<CliResult<Vec<_>>>()?;
            let key = if *moment { "trunc_moment" } else { "cdf" };
            match fmt {
                Format::Json => {
                    let pts: Vec<_> = t.iter().zip(&values).map(|(th, v)| json!({ "t": th, key: v })).collect();
                    s = to_json(&json!({ "dist": d.describe(), "x": x, "n": n, "points": pts }));
                }
                Format::Csv => {
                    let _ = writeln!(s, "t,{key}");
                    for (th, v) in t.iter().zip(&values) {
                        let _ = writeln!(s, "{th},{v}");
                    }
                }
                Format::Table if values.len() == 1 => {
                    let _ = writeln!(s, "{}", values[0]);
                }
                Format::Table => {
                    for (th, v) in t.iter().zip(&values) {
                        let _ = writeln!(s, "{th}\t{v}");
                    }
                }
            }
        }
        Command::Tail { dist, n, x } => {
            let d = dist.build()?;
            if *n == 0 {
                return usage("--n must be at least 1");
            }
            let rows = x
                .iter()
                .map(|&xi| {
                    let exact = tail_n(&d, *n, xi)?;
                    let approx = tail_expansion(&d, *n, xi)?;
                    Ok((xi, exact, approx, exact / approx))
                })
                .collect::<crate::Result<Vec<_>>>()?;
            let regime = corollary_regime(&d).ok();
            match fmt {
                Format::Json => {
                    let r: Vec<_> = rows
                        .iter()
                        .map(|(x, e, a, q)| json!({ "x": x, "tail": e, "expansion": a, "ratio": q }))
                        .collect();
                    s = to_json(&json!({ "dist": d.describe(), "n": n, "regime": regime, "rows": r }));
                }
                Format::Csv => {
                    s.push_str("x,tail,expansion,ratio\n");
                    for (x, e, a, q) in &rows {
                        let _ = writeln!(s, "{x},{e},{a},{q}");
                    }
                }
                Format::Table => {
                    let _ = writeln!(s, "{:>12}  {:>22}  {:>22}  {:>10}", "x", "tail_n", "expansion", "ratio");
                    for (x, e, a, q) in &rows {
                        let _ = writeln!(s, "{x:>12}  {e:>22.15e}  {a:>22.15e}  {q:>10.6}");
                    }
                    if let Some(r) = regime {
                        let _ = writeln!(s, "regime: {}", serde_json::to_string(&r).expect("serializable"));
                    }
                }
            }
        }
        Command::Limit { dist, theta, x, diagnostic, ns, method } => {
            s = limit_command(fmt, dist, *theta, x, *diagnostic, ns, *method)?;
        }
        Command::Norming { dist, n, method } => {
            let d = dist.build()?;
            let a = d.alpha();
            let rows = n
                .iter()
                .map(|&k| {
                    let an = norming_sequence(&d, k, (*method).into())?;
                    let residual = k as f64 * d.trunc_moment(an)? / an.powf(a) - 1.0;
                    Ok((k, an, residual))
                })
                .collect::<crate::Result<Vec<_>>>()?;
            match fmt {
                Format::Json => {
                    let r: Vec<_> =
                        rows.iter().map(|(k, an, res)| json!({ "n": k, "a_n": an, "residual": res })).collect();
                    s = to_json(&json!({ "dist": d.describe(), "method": NormingMethod::from(*method), "rows": r }));
                }
                Format::Csv => {
                    s.push_str("n,a_n,residual\n");
                    for (k, an, res) in &rows {
                        let _ = writeln!(s, "{k},{an},{res}");
                    }
                }
                Format::Table => {
                    for (k, an, res) in &rows {
                        let _ = writeln!(s, "{k}\t{an}\t{res:e}");
                    }
                }
            }
        }
        Command::Validate { suite, quick, mc_samples } => {
            let mc = match (quick, mc_samples) {
                (true, _) => QUICK_MC_SAMPLES,
                (false, Some(0)) => return usage("--mc-samples must be positive"),
                (false, Some(k)) => *k,
                (false, None) => DEFAULT_MC_SAMPLES,
            };
            let report = run_suite(*suite, &Budget { mc_samples: mc, seed: cli.seed })?;
            s = match fmt {
                Format::Json => report.to_json() + "\n",
                Format::Csv => report.to_csv(),
                Format::Table => report.to_table(),
            };
            return Ok((s, if report.pass { 0 } else { 1 }));
        }
    }
    Ok((s, 0))
}

fn limit_command(
    fmt: Format,
    dist: &DistArgs,
    theta: Option<f64>,
    x: &[f64],
    diagnostic: bool,
    ns: &[u64],
    method: NormingArg,
) -> CliResult<String> {
    let mut s = String::new();
    let law = if dist.is_given() {
        if theta.is_some() {
            return usage("--theta is derived from the step law when --dist is given");
        }
        let d = dist.build()?;
        let m = d.alpha_moment();
        if m.is_finite() {
            LimitLaw::finite_moment(m, d.index())?
        } else if let Some(rv) = d.regvar_tail() {
            LimitLaw::regvar(rv.theta(), d.index())?
        } else {
            return Err(CliError::Run(KendallError::Classification(
                "infinite α-moment without a known regularly varying tail".into(),
            )));
        }
    } else {
        if diagnostic {
            return usage("--diagnostic needs a step law (--dist or --dist-file)");
        }
        let Some(alpha) = dist.alpha else {
            return usage("--alpha is required");
        };
        let idx = KendallIndex::new(alpha)?;
        match (dist.m, theta) {
            (Some(m), None) => LimitLaw::finite_moment(m, idx)?,
            (None, Some(th)) => LimitLaw::regvar(th, idx)?,
            _ => return usage("give exactly one of --m (finite moment) or --theta (regular variation)"),
        }
    };
    if diagnostic {
        let d = dist.build()?;
        if ns.is_empty() || ns.contains(&0) {
            return usage("--ns must list positive integers");
        }
        let grid = if x.is_empty() { log_grid(0.01, 100.0, 400) } else { x.to_vec() };
        let table = convergence_diagnostic(&d, ns, &law, &grid, method.into())?;
        match fmt {
            Format::Json => s = to_json(&json!({ "law": law, "table": table })),
            Format::Csv => {
                let mut buf = Vec::new();
                table.write_csv(&mut buf)?;
                s = String::from_utf8(buf).expect("ascii output");
            }
            Format::Table => {
                let _ = writeln!(s, "{:>10}  {:>22}  {:>12}", "n", "a_n", "sup_distance");
                for r in &table.rows {
                    let _ = writeln!(s, "{:>10}  {:>22.15e}  {:>12.4e}", r.n, r.a_n, r.sup_distance);
                }
                let _ = writeln!(s, "decreasing: {}", table.monotone);
            }
        }
        return Ok(s);
    }
    if x.is_empty() {
        return usage("--x is required");
    }
    let rows: Vec<(f64, f64, f64)> = x.iter().map(|&xi| (xi, limit_cdf(&law, xi), limit_pdf(&law, xi))).collect();
    match fmt {
        Format::Json => {
            let r: Vec<_> = rows.iter().map(|(x, c, p)| json!({ "x": x, "cdf": c, "pdf": p })).collect();
            s = to_json(&json!({ "law": law, "points": r }));
        }
        Format::Csv => {
            s.push_str("x,cdf,pdf\n");
            for (x, c, p) in &rows {
                let _ = writeln!(s, "{x},{c},{p}");
            }
        }
        Format::Table => {
            for (x, c, p) in &rows {
                let _ = writeln!(s, "{x}\t{c}\t{p}");
            }
        }
    }
    Ok(s)
}

fn to_json(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// Parses `args` (without the program name), runs the command and returns
/// the exit code with everything that would reach standard output. Messages
/// for standard error are written there directly.
pub fn run_captured<I, T>(args: I) -> (i32, Vec<u8>)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("kendall")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if e.use_stderr() {
                eprint!("{text}");
                return (code, Vec::new());
            }
            return (code, text.into_bytes());
        }
    };
    match execute(&cli) {
        Ok((text, code)) => {
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, text.as_bytes()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return (1, Vec::new());
                }
                (code, Vec::new())
            } else {
                (code, text.into_bytes())
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            (2, Vec::new())
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            (1, Vec::new())
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    use std::io::Write;
    let (code, out) = run_captured(args);
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(&out).and_then(|_| stdout.flush()).is_err() {
        return 1;
    }
    code
}
