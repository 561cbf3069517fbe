mod input;
mod render;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use thinpower::acceptance::run_all;
use thinpower::hessian::{DEFAULT_CELL_BUDGET, HESSIAN_FD_STEP};
use thinpower::reproduce::{binoineq, fail1, fail2};
use thinpower::{
    construct, convolve_all, entropy, entropy_power, entropy_preserving_path, hessian_analytic, hessian_fd,
    inverse_thin, l_functional, lambda_functional, log_grid, phi, poisson_entropy, poisson_entropy_derivative,
    positive_splitting, rel_entropy_poisson, search_with, thin, u_functional, Checker, Conjecture, FamilySpec,
    FinitePmf, InequalityVerdict, PmfDocument, SearchOptions, ToleranceConfig, ToleranceProfile,
};

use input::{load_pmf, load_pmf_list, load_pmfs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] thinpower::Error),
    #[error("io error: {0}")]
    Io(String),
    #[error("malformed JSON input: {0}")]
    Json(String),
    #[error("usage error: {0}")]
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io(_) => "io",
            CliError::Json(_) => "json",
            CliError::Usage(_) => "usage",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_input_error() => 1,
            _ => 2,
        }
    }
}

/// Exact entropy-power computations for discrete distributions under thinning.
///
/// Pmf arguments accept inline JSON (`'{"family":"poisson","lambda":2}'`,
/// `'{"probs":[0.5,0.5]}'`) or a path to a file holding the same.
#[derive(Debug, Parser)]
#[command(name = "thinpower", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Tolerance profile: default, strict or loose.
    #[arg(long, global = true, env = "THINPOWER_TOL_PROFILE", default_value = "default", value_parser = parse_profile)]
    tol_profile: ToleranceProfile,
    /// Override: pmf normalization tolerance (default 1e-10).
    #[arg(long, global = true)]
    tol_norm: Option<f64>,
    /// Override: inequality slack, holds <=> margin >= -tol_ineq (default 1e-9).
    #[arg(long, global = true)]
    tol_ineq: Option<f64>,
    /// Override: root-finding tolerance (default 1e-12).
    #[arg(long, global = true)]
    tol_root: Option<f64>,
    /// Override: Poisson tail truncation mass (default 1e-14).
    #[arg(long, global = true)]
    tail_eps: Option<f64>,
    /// Override: finite-difference step (default 1e-5).
    #[arg(long, global = true)]
    fd_step: Option<f64>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true, env = "THINPOWER_THREADS")]
    threads: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn parse_profile(s: &str) -> Result<ToleranceProfile, String> {
    s.parse().map_err(|e: thinpower::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FunctionalName {
    #[value(name = "L")]
    L,
    #[value(name = "Lambda")]
    Lambda,
    #[value(name = "D")]
    D,
    #[value(name = "U")]
    U,
    #[value(name = "J")]
    J,
    #[value(name = "E")]
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckName {
    Teci,
    Rtepi,
    Epilike,
    Hmon,
    Dsub,
    Lammon,
    Discepilike,
    Firstepi,
    Tepi,
    Tepis,
    Isop,
}

impl CheckName {
    /// False for the refuted conjectures, whose violations are expected.
    fn is_theorem(self) -> bool {
        !matches!(self, CheckName::Firstepi | CheckName::Tepi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Example {
    Fail1,
    Fail2,
    Binoineq,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a pmf from a family spec and print it as a pmf document.
    Construct {
        #[arg(long)]
        spec: String,
    },
    /// Binomial thinning T_alpha.
    Thin {
        #[arg(long)]
        pmf: String,
        #[arg(long)]
        alpha: f64,
    },
    /// Convolution of two or more pmfs.
    Conv {
        #[arg(long, required = true)]
        pmf: Vec<String>,
    },
    /// Inverse thinning; exits 2 if the pmf is not alpha-thinnable.
    Unthin {
        #[arg(long)]
        pmf: String,
        #[arg(long)]
        alpha: f64,
    },
    /// Shannon entropy (nats by default).
    Entropy {
        #[arg(long)]
        pmf: String,
        /// Print bits instead of nats.
        #[arg(long)]
        bits: bool,
        /// Print {"nats", "bits"}.
        #[arg(long, conflicts_with = "bits")]
        both: bool,
    },
    /// Poisson entropy power V.
    Vpower {
        #[arg(long)]
        pmf: String,
    },
    /// A scalar functional: L, Lambda, D, U of a pmf, or J, E at a rate t.
    Functional {
        #[arg(long, value_enum, ignore_case = true)]
        name: FunctionalName,
        #[arg(long, required_unless_present = "t")]
        pmf: Option<String>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Entropy-preserving path T_t X + Pi_f(t) on a log-spaced grid.
    Path {
        #[arg(long)]
        pmf: String,
        /// Number of grid points.
        #[arg(long, default_value_t = 40)]
        grid: usize,
        /// Smallest grid point.
        #[arg(long, default_value_t = 0.02)]
        t_min: f64,
    },
    /// Evaluate one inequality; prints a JSON array of verdicts.
    Check {
        #[arg(long, value_enum)]
        name: CheckName,
        /// Input pmfs, in order (repeatable).
        #[arg(long)]
        pmf: Vec<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Comma-separated simplex weights.
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Evaluate ULC-gated checks on non-ULC inputs (verdict is marked).
        #[arg(long)]
        allow_non_ulc: bool,
    },
    /// Recompute a worked example.
    Reproduce {
        #[arg(long, value_enum)]
        example: Example,
    },
    /// Seeded random search for violations of a conjectured inequality.
    Search {
        /// One of firstepi, tepi, teci, rtepi, hmon, dsub, isop.
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Replace trial 0 with the known counterexample (firstepi, tepi).
        #[arg(long)]
        inject: bool,
        #[arg(long, default_value_t = 4)]
        max_bernoullis: usize,
        #[arg(long, default_value_t = 3.0)]
        max_poisson_rate: f64,
    },
    /// Hessian of alpha -> Lambda(sum T_alpha_i X_i).
    Hessian {
        /// JSON array of pmf specs (inline or file).
        #[arg(long)]
        specs: String,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        /// Also compute a finite-difference Hessian and the max relative error.
        #[arg(long)]
        fd_check: bool,
        /// Maximum number of joint-table cells.
        #[arg(long, default_value_t = DEFAULT_CELL_BUDGET)]
        budget: usize,
    },
    /// Positive splitting witness along the interpolation A_l(t).
    Splitting {
        /// Leave-out index, 1-based.
        #[arg(long)]
        l: usize,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
    },
    /// Run the acceptance suite; exits 0 iff every criterion passes.
    Verify {
        /// Run every criterion (the only mode).
        #[arg(long)]
        all: bool,
    },
}

/// Serialized output plus the exit code it implies.
struct Outcome {
    value: Value,
    table: Option<String>,
    code: u8,
}

impl Outcome {
    fn ok(value: impl Serialize) -> Result<Self, CliError> {
        Ok(Outcome {
            value: to_value(value),
            table: None,
            code: 0,
        })
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable output")
}

fn tolerances(g: &GlobalOpts) -> Result<ToleranceConfig, CliError> {
    let mut tol = ToleranceConfig::profile(g.tol_profile);
    if let Some(v) = g.tol_norm {
        tol.tol_norm = v;
    }
    if let Some(v) = g.tol_ineq {
        tol.tol_ineq = v;
    }
    if let Some(v) = g.tol_root {
        tol.tol_root = v;
    }
    if let Some(v) = g.tail_eps {
        tol.tail_eps = v;
    }
    if let Some(v) = g.fd_step {
        tol.fd_step = v;
    }
    tol.validate()?;
    Ok(tol)
}

fn pmf_doc(p: &FinitePmf) -> PmfDocument {
    PmfDocument::from(p)
}

fn exactly<T>(items: Vec<T>, n: usize, what: &str) -> Result<Vec<T>, CliError> {
    if items.len() == n {
        Ok(items)
    } else {
        Err(CliError::Usage(format!("{what} needs exactly {n} --pmf arguments, got {}", items.len())))
    }
}

fn need(v: Option<f64>, flag: &str, what: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("{what} needs --{flag}")))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let tol = tolerances(&cli.global)?;
    match &cli.command {
        Command::Construct { spec } => {
            let value = input::load_json(spec)?;
            let spec: FamilySpec =
                serde_json::from_value(value).map_err(|e| CliError::Json(format!("{spec}: {e}")))?;
            Outcome::ok(pmf_doc(&construct(&spec, &tol)?))
        }
        Command::Thin { pmf, alpha } => Outcome::ok(pmf_doc(&thin(&load_pmf(pmf, &tol)?, *alpha)?)),
        Command::Conv { pmf } => {
            if pmf.len() < 2 {
                return Err(CliError::Usage("conv needs at least two --pmf arguments".into()));
            }
            Outcome::ok(pmf_doc(&convolve_all(&load_pmfs(pmf, &tol)?)))
        }
        Command::Unthin { pmf, alpha } => {
            Outcome::ok(pmf_doc(&inverse_thin(&load_pmf(pmf, &tol)?, *alpha, &tol)?))
        }
        Command::Entropy { pmf, bits, both } => {
            let e = entropy(&load_pmf(pmf, &tol)?);
            if *both {
                Outcome::ok(e)
            } else if *bits {
                Outcome::ok(e.bits)
            } else {
                Outcome::ok(e.nats)
            }
        }
        Command::Vpower { pmf } => Outcome::ok(entropy_power(&load_pmf(pmf, &tol)?, &tol)),
        Command::Functional { name, pmf, t } => functional(*name, pmf.as_deref(), *t, &tol),
        Command::Path { pmf, grid, t_min } => {
            if *grid < 2 || !(*t_min > 0.0 && *t_min < 1.0) {
                return Err(CliError::Usage("--grid must be >= 2 and --t-min in (0, 1)".into()));
            }
            let x = load_pmf(pmf, &tol)?;
            Outcome::ok(entropy_preserving_path(&x, &log_grid(*t_min, *grid), &tol)?)
        }
        Command::Check {
            name,
            pmf,
            alpha,
            alphas,
            beta,
            gamma,
            allow_non_ulc,
        } => {
            let xs = load_pmfs(pmf, &tol)?;
            let mut checker = Checker::new(tol);
            checker.allow_non_ulc = *allow_non_ulc;
            let verdict = check(*name, &checker, xs, *alpha, alphas, *beta, *gamma)?;
            let unexpected = name.is_theorem() && verdict.within_hypotheses && !verdict.holds;
            Ok(Outcome {
                value: to_value(vec![verdict]),
                table: None,
                code: u8::from(unexpected),
            })
        }
        Command::Reproduce { example } => reproduce(*example, &tol),
        Command::Search {
            name,
            trials,
            seed,
            inject,
            max_bernoullis,
            max_poisson_rate,
        } => {
            let conjecture: Conjecture = name.parse()?;
            let options = SearchOptions {
                max_bernoullis: *max_bernoullis,
                max_poisson_rate: *max_poisson_rate,
                inject_counterexample: *inject,
            };
            let report = search_with(conjecture, *trials, *seed, &tol, &options)?;
            let unexpected = report.expected_to_hold && !report.violations.is_empty();
            Ok(Outcome {
                value: to_value(&report),
                table: None,
                code: u8::from(unexpected),
            })
        }
        Command::Hessian {
            specs,
            alphas,
            fd_check,
            budget,
        } => {
            let xs = load_pmf_list(specs, &tol)?;
            let analytic = hessian_analytic(&xs, alphas, *budget)?;
            let mut out = json!({ "alphas": alphas, "phi": phi(&xs, alphas)?, "hessian": analytic });
            if *fd_check {
                let fd = hessian_fd(&xs, alphas, HESSIAN_FD_STEP)?;
                let mut worst: f64 = 0.0;
                for (ra, rf) in analytic.iter().zip(&fd) {
                    for (a, f) in ra.iter().zip(rf) {
                        worst = worst.max((a - f).abs() / a.abs().max(1e-8));
                    }
                }
                out["fd_step"] = json!(HESSIAN_FD_STEP);
                out["hessian_fd"] = json!(fd);
                out["max_rel_error"] = json!(worst);
            }
            Outcome::ok(out)
        }
        Command::Splitting { l, t, lambdas, alphas } => {
            if *l == 0 || *l > alphas.len() {
                return Err(CliError::Usage(format!("--l must be in 1..={}", alphas.len())));
            }
            let witness = positive_splitting(alphas, l - 1, *t, lambdas)?;
            let mut value = to_value(&witness);
            value["l"] = json!(l);
            Outcome::ok(value)
        }
        Command::Verify { all: _ } => {
            let report = run_all(&tol);
            let lines: String = report.criteria.iter().map(|c| c.line() + "\n").collect();
            Ok(Outcome {
                value: to_value(&report),
                table: Some(lines),
                code: u8::from(!report.all_passed),
            })
        }
    }
}

fn functional(name: FunctionalName, pmf: Option<&str>, t: Option<f64>, tol: &ToleranceConfig) -> Result<Outcome, CliError> {
    use FunctionalName::*;
    match name {
        J | E => {
            let t = need(t, "t", "J and E")?;
            let v = if name == J {
                poisson_entropy_derivative(t, tol)?
            } else {
                poisson_entropy(t, tol)?
            };
            Outcome::ok(v)
        }
        L | Lambda | D | U => {
            let arg = pmf.ok_or_else(|| CliError::Usage("L, Lambda, D and U need --pmf".into()))?;
            let x = load_pmf(arg, tol)?;
            let v = match name {
                L => l_functional(&x)?,
                Lambda => lambda_functional(&x),
                D => rel_entropy_poisson(&x),
                _ => u_functional(&x),
            };
            Outcome::ok(v)
        }
    }
}

fn check(
    name: CheckName,
    checker: &Checker,
    xs: Vec<FinitePmf>,
    alpha: Option<f64>,
    alphas: &[f64],
    beta: Option<f64>,
    gamma: Option<f64>,
) -> Result<InequalityVerdict, CliError> {
    use CheckName::*;
    let id = format!("{name:?}").to_lowercase();
    let verdict = match name {
        Teci | Tepi => {
            let a = need(alpha, "alpha", &id)?;
            let xs = exactly(xs, 2, &id)?;
            if name == Teci {
                checker.teci(&xs[0], &xs[1], a)?
            } else {
                checker.tepi(&xs[0], &xs[1], a)?
            }
        }
        Rtepi => {
            let a = need(alpha, "alpha", &id)?;
            checker.rtepi(&exactly(xs, 1, &id)?[0], a)?
        }
        Epilike => {
            let xs = exactly(xs, 2, &id)?;
            let out = checker.epilike(&xs[0], &xs[1])?;
            let note = format!(
                "alpha {}, heuristic alpha {}, feasible [{}, {}]",
                out.alpha, out.heuristic_alpha, out.feasible.0, out.feasible.1
            );
            out.verdict.with_note(note)
        }
        Hmon | Dsub | Lammon | Discepilike => {
            if alphas.len() != xs.len() {
                return Err(CliError::Usage(format!(
                    "{id} needs one --alphas weight per --pmf ({} weights, {} pmfs)",
                    alphas.len(),
                    xs.len()
                )));
            }
            match name {
                Hmon => checker.hmon(&xs, alphas)?,
                Dsub => checker.dsub(&xs, alphas)?,
                Lammon => checker.lammon(&xs, alphas)?,
                _ => checker.discepilike(&xs, alphas)?,
            }
        }
        Firstepi => {
            let xs = exactly(xs, 2, &id)?;
            checker.v_superadd(&xs[0], &xs[1])
        }
        Tepis => {
            let (b, g) = (need(beta, "beta", &id)?, need(gamma, "gamma", &id)?);
            let xs = exactly(xs, 2, &id)?;
            checker.tepis(&xs[0], &xs[1], b, g)?
        }
        Isop => checker.isop(&exactly(xs, 1, &id)?[0])?,
    };
    Ok(verdict)
}

fn reproduce(example: Example, tol: &ToleranceConfig) -> Result<Outcome, CliError> {
    match example {
        Example::Fail1 => Outcome::ok(fail1(tol)),
        Example::Fail2 => {
            let report = fail2(tol)?;
            let mut table = render::reproduced_table(&report.values);
            table.push_str(&format!(
                "all within tolerance: {}\ntepi holds: {} (margin {:.6e})\n",
                report.all_within_tolerance, report.verdict.holds, report.verdict.margin
            ));
            Ok(Outcome {
                code: u8::from(!report.all_within_tolerance),
                value: to_value(&report),
                table: Some(table),
            })
        }
        Example::Binoineq => {
            let report = binoineq(tol)?;
            Ok(Outcome {
                code: u8::from(!report.violations.is_empty()),
                value: to_value(&report),
                table: None,
            })
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return report_error(&CliError::Usage("--threads must be >= 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => return report_error(&e),
    };
    let is_verify = matches!(cli.command, Command::Verify { .. });
    let text = match (cli.global.format, &outcome.table) {
        (Format::Table, Some(t)) => t.clone(),
        (Format::Table, None) => render::table(&outcome.value),
        (Format::Json, _) => {
            // Human-readable criterion lines (with timings) stay off the JSON channel.
            if let (true, Some(lines)) = (is_verify, &outcome.table) {
                eprint!("{lines}");
            }
            render::json(&outcome.value)
        }
    };
    if let Err(e) = emit(&text, cli.global.out.as_ref()) {
        return report_error(&e);
    }
    ExitCode::from(outcome.code)
}

fn report_error(e: &CliError) -> ExitCode {
    let body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
    print!("{}", render::json(&body));
    eprintln!("thinpower: {e}");
    ExitCode::from(e.exit_code())
}
