//! `escape`: constants, sequence tables, systoles, walks and experiments from the command line.
//!
//! Exit status: 0 when every verdict passes, 1 on a failed verdict or runtime error, 2 on a
//! configuration error, 3 when a bit budget or step budget stopped the run.
//!
//! Environment: `ESCAPE_SEED` replaces the configured master seed and `ESCAPE_THREADS`
//! the worker count; `--set` overrides still win over both.

mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use escape_core::constants::{
    epsilon_p, escape_threshold_sequences, k_is_minimal, record_level_sequences, EpsilonMode,
    RealParam, SequenceTable, DEFAULT_MAX_BITS,
};
use escape_core::experiments::{run_experiment, ExperimentConfig, ExperimentName};
use escape_core::lattice::systole_sq;
use escape_core::laws::{trial_rng, MatrixLawSpec, ScalarLawSpec};
use escape_core::walk::{
    run_exact_walk, run_ledger_walk, write_ledger_csv, write_walk_csv, ExactOptions,
};
use escape_core::{Error, LatticeBasis, RationalMatrix};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Budget(String),
    Io(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Io(_) | CliError::Runtime(_) => 1,
        }
    }

    /// Errors raised while reading inputs are configuration errors.
    fn input(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }

    fn run(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Pass = 0,
    Fail = 1,
    Budget = 3,
}

#[derive(Parser, Debug)]
#[command(
    name = "escape",
    version,
    about = "Escape of mass for random walks on the space of lattices"
)]
struct Cli {
    /// Directory for reports and manifests.
    #[arg(long, short = 'o', global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SequenceChoice {
    /// Rows (j, i_j, a_j).
    Escape,
    /// Rows (j, l_j, i_j).
    Record,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeChoice {
    Empirical,
    PaperFaithful,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum EngineChoice {
    Ledger,
    Exact,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// The constants α, a_p, K and ε_p with their enclosures.
    Constants {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 128)]
        precision: u32,
    },
    /// Sequence tables with their exact verification.
    Sequences {
        #[arg(long, value_enum, default_value_t = SequenceChoice::Escape)]
        kind: SequenceChoice,
        #[arg(long, default_value_t = 5)]
        j_max: u64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.5)]
        p_prime: f64,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 1.0)]
        m_prime: f64,
        /// ε̂ in empirical mode.
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = ModeChoice::Empirical)]
        mode: ModeChoice,
    },
    /// Exact systole of the lattice spanned by the columns of a matrix.
    Systole {
        /// JSON rows of rational strings, e.g. '[["4","1/12"],["0","1/4"]]'.
        #[arg(long)]
        matrix: String,
    },
    /// One seeded walk from Z^d with its trace as CSV.
    Walk {
        #[arg(long, value_enum, default_value_t = EngineChoice::Exact)]
        engine: EngineChoice,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Step law as JSON; defaults to (κ + ν)/2 with ν from exp(t^-2), exponents capped
        /// at 2^10 for the exact engine.
        #[arg(long)]
        law: Option<PathBuf>,
        /// Also run the product in the reverse order (exact engine).
        #[arg(long)]
        both_orders: bool,
    },
    /// A Monte Carlo experiment or walk demo.
    Experiment {
        #[arg(long)]
        name: Option<String>,
        /// JSON config file; missing keys take the experiment's defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `key=value`, applied last; dotted keys reach nested fields.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Constants, sequence tables and every experiment at its defaults.
    VerifyAll {
        /// At most this many trials per experiment.
        #[arg(long)]
        max_trials: Option<u64>,
    },
}

fn print_json(v: &Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v).expect("serializable");
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>, CliError> {
    raw.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.to_string()))
                .filter(|(k, _)| !k.is_empty())
                .ok_or_else(|| CliError::Config(format!("override `{s}` is not key=value")))
        })
        .collect()
}

fn env_overrides() -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (var, key) in [
        ("ESCAPE_SEED", "master_seed"),
        ("ESCAPE_THREADS", "threads"),
    ] {
        if let Ok(v) = std::env::var(var) {
            v.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("{var} = `{v}` is not an integer")))?;
            out.push((key.to_string(), v.trim().to_string()));
        }
    }
    Ok(out)
}

/// Preset of the named experiment, then the file, the environment, then `overrides`.
fn load_config(
    name: Option<&str>,
    path: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig, CliError> {
    let fallback = name
        .map(ExperimentName::parse)
        .transpose()
        .map_err(CliError::input)?;
    let mut file = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            if text.trim().is_empty() {
                json!({})
            } else {
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        }
        None => json!({}),
    };
    if let (Some(n), Value::Object(o)) = (fallback, &mut file) {
        match o.get("name") {
            Some(Value::String(s)) if s != n.as_str() => {
                return Err(CliError::Config(format!(
                    "--name {} disagrees with the config name {s}",
                    n.as_str()
                )))
            }
            _ => {}
        }
    }
    let cfg = ExperimentConfig::from_json(&file, fallback).map_err(CliError::input)?;
    let mut all = env_overrides()?;
    all.extend_from_slice(overrides);
    if all.is_empty() {
        Ok(cfg)
    } else {
        cfg.with_overrides(&all).map_err(CliError::input)
    }
}

fn default_dir(cli: &Cli) -> PathBuf {
    cli.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("escape-reports"))
}

#[allow(clippy::too_many_arguments)]
fn sequence_table(
    kind: SequenceChoice,
    j_max: u64,
    p: f64,
    p_prime: f64,
    m: f64,
    m_prime: f64,
    eps: f64,
    mode: ModeChoice,
) -> Result<SequenceTable, CliError> {
    match kind {
        SequenceChoice::Record => {
            record_level_sequences(&RealParam::from_f64(m), j_max, DEFAULT_MAX_BITS)
                .map_err(CliError::input)
        }
        SequenceChoice::Escape => {
            let (eps, mode) = match mode {
                ModeChoice::Empirical => (RealParam::from_f64(eps), EpsilonMode::Empirical),
                ModeChoice::PaperFaithful => (
                    RealParam::Enclosure(epsilon_p(p, 128).map_err(CliError::input)?.epsilon_p),
                    EpsilonMode::PaperFaithful,
                ),
            };
            escape_threshold_sequences(
                p,
                p_prime,
                &RealParam::from_f64(m),
                &RealParam::from_f64(m_prime),
                &eps,
                mode,
                j_max,
                DEFAULT_MAX_BITS,
            )
            .map_err(CliError::input)
        }
    }
}

fn table_status(t: &SequenceTable) -> Status {
    if t.truncated {
        Status::Budget
    } else if t.all_verified() {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Runs one experiment, writes its files and reports the status.
fn experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<Status, CliError> {
    let mut report = run_experiment(cfg).map_err(CliError::run)?;
    let wall = std::mem::take(&mut report.counters.wall_clock_ms);
    let csv = if report.trials.is_empty() {
        None
    } else {
        let mut buf = Vec::new();
        report.write_trials_csv(&mut buf).map_err(CliError::run)?;
        Some(buf)
    };
    let written = output::write_report(
        dir,
        "experiment",
        cfg.name.as_str(),
        cfg.master_seed,
        &to_value(cfg),
        &to_value(&report),
        csv.as_deref(),
    )?;
    let status = if report.refusal.is_some() || report.counters.budget_aborts > 0 {
        Status::Budget
    } else if report.passed() {
        Status::Pass
    } else {
        Status::Fail
    };
    eprintln!(
        "{}: {:?} in {wall} ms -> {}",
        cfg.name.as_str(),
        status,
        written.report.display()
    );
    for v in &report.verdicts {
        eprintln!(
            "  {} {} (statistic {}, bound {})",
            if v.passed { "PASS" } else { "FAIL" },
            v.claim,
            v.statistic,
            v.bound
        );
    }
    if let Some(r) = &report.refusal {
        eprintln!("  refused: {} (needs n = {})", r.reason, r.required_n);
    }
    Ok(status)
}

fn walk_law(
    engine: EngineChoice,
    dim: usize,
    path: Option<&Path>,
) -> Result<MatrixLawSpec, CliError> {
    let law = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<MatrixLawSpec>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => {
            let scalar = match engine {
                EngineChoice::Ledger => ScalarLawSpec::heavy_record_exp(),
                EngineChoice::Exact => ScalarLawSpec::heavy_record_exp()
                    .with_t_min((1.0 / 1024f64.ln().sqrt()).next_up()),
            };
            MatrixLawSpec::mixed(dim, scalar)
        }
    };
    law.validate().map_err(CliError::input)?;
    Ok(law)
}

fn run(cli: &Cli) -> Result<Status, CliError> {
    match &cli.command {
        Command::Constants { p, precision } => {
            let e = epsilon_p(*p, *precision).map_err(CliError::input)?;
            let minimal = k_is_minimal(&e.alpha, e.k).map_err(CliError::run)?;
            let v = to_value(&e);
            print_json(&v);
            if let Some(dir) = &cli.output_dir {
                let cfg = json!({"p": p, "precision": precision});
                output::write_report(dir, "constants", "constants", 0, &cfg, &v, None)?;
            }
            Ok(if minimal { Status::Pass } else { Status::Fail })
        }
        Command::Sequences {
            kind,
            j_max,
            p,
            p_prime,
            m,
            m_prime,
            eps,
            mode,
        } => {
            let t = sequence_table(*kind, *j_max, *p, *p_prime, *m, *m_prime, *eps, *mode)?;
            let v = to_value(&t);
            print_json(&v);
            if let Some(dir) = &cli.output_dir {
                let cfg = json!({
                    "kind": format!("{kind:?}").to_lowercase(), "j_max": j_max, "p": p,
                    "p_prime": p_prime, "m": m, "m_prime": m_prime, "eps": eps,
                    "mode": format!("{mode:?}"),
                });
                output::write_report(dir, "sequences", "sequences", 0, &cfg, &v, None)?;
            }
            Ok(table_status(&t))
        }
        Command::Systole { matrix } => {
            let m = RationalMatrix::from_json(matrix).map_err(CliError::input)?;
            let b = LatticeBasis::new(m).map_err(CliError::input)?;
            let s = systole_sq(&b).map_err(CliError::run)?;
            let v = to_value(&s);
            print_json(&v);
            if let Some(dir) = &cli.output_dir {
                let cfg = json!({ "matrix": matrix });
                output::write_report(dir, "systole", "systole", 0, &cfg, &v, None)?;
            }
            Ok(Status::Pass)
        }
        Command::Walk {
            engine,
            n,
            seed,
            dim,
            law,
            both_orders,
        } => {
            let spec = walk_law(*engine, *dim, law.as_deref())?;
            let mut rng = trial_rng(*seed, 0);
            let mut csv = Vec::new();
            let (summary, status) = match engine {
                EngineChoice::Ledger => {
                    let t = run_ledger_walk(&spec, *n, &mut rng).map_err(CliError::run)?;
                    write_ledger_csv(&mut csv, &t).map_err(CliError::run)?;
                    let s = json!({
                        "engine": "ledger",
                        "steps": t.len(),
                        "final_certificate": t.final_certificate(),
                    });
                    (s, Status::Pass)
                }
                EngineChoice::Exact => {
                    let opts = ExactOptions {
                        both_orders: *both_orders,
                        ..ExactOptions::default()
                    };
                    let base = LatticeBasis::standard(spec.dim);
                    let t =
                        run_exact_walk(&spec, *n, &base, &mut rng, opts).map_err(CliError::run)?;
                    write_walk_csv(&mut csv, &t).map_err(CliError::run)?;
                    let violations = t.certificate_violations();
                    let status = if t.aborted.is_some() {
                        Status::Budget
                    } else if violations.is_empty() {
                        Status::Pass
                    } else {
                        Status::Fail
                    };
                    let s = json!({
                        "engine": "exact",
                        "steps": t.len(),
                        "aborted": t.aborted,
                        "final_systole": t.systoles.last(),
                        "final_certificate": t.ledger.final_certificate(),
                        "certificate_violations": violations,
                    });
                    (s, status)
                }
            };
            let cfg = json!({
                "engine": format!("{engine:?}").to_lowercase(), "n": n, "seed": seed,
                "law": to_value(&spec), "both_orders": both_orders,
            });
            let written = output::write_report(
                &default_dir(cli),
                "walk",
                "walk",
                *seed,
                &cfg,
                &summary,
                Some(&csv),
            )?;
            print_json(&summary);
            eprintln!(
                "walk trace -> {}",
                written.csv.expect("csv written").display()
            );
            Ok(status)
        }
        Command::Experiment {
            name,
            config,
            overrides,
        } => {
            if name.is_none() && config.is_none() {
                return Err(CliError::Config("give --name or --config".into()));
            }
            let cfg = load_config(
                name.as_deref(),
                config.as_deref(),
                &parse_overrides(overrides)?,
            )?;
            experiment(&cfg, &default_dir(cli))
        }
        Command::VerifyAll { max_trials } => {
            let dir = default_dir(cli);
            let mut worst = Status::Pass;
            let e = epsilon_p(2.0, 128).map_err(CliError::run)?;
            let k_ok = k_is_minimal(&e.alpha, e.k).map_err(CliError::run)?;
            eprintln!("constants: K = {} minimal: {k_ok}", e.k);
            if !k_ok {
                worst = Status::Fail;
            }
            for (kind, label) in [
                (SequenceChoice::Escape, "escape"),
                (SequenceChoice::Record, "record"),
            ] {
                let t = sequence_table(kind, 5, 2.0, 0.5, 1.0, 1.0, 0.05, ModeChoice::Empirical)?;
                let s = table_status(&t);
                eprintln!("sequences ({label}): {s:?}");
                worst = worst.max(s);
            }
            let mut configs: Vec<ExperimentConfig> = Vec::new();
            for name in ExperimentName::ALL {
                let cfg = load_config(Some(name.as_str()), None, &[])?;
                if name == ExperimentName::FullEscape {
                    let exact = cfg
                        .with_overrides(&[
                            ("engine".into(), "exact".into()),
                            ("trials".into(), "20".into()),
                            ("n_grid".into(), "[50]".into()),
                        ])
                        .map_err(CliError::input)?;
                    configs.push(cfg);
                    configs.push(exact);
                } else {
                    configs.push(cfg);
                }
            }
            for mut cfg in configs {
                if let Some(m) = max_trials {
                    cfg.trials = cfg.trials.min(*m).max(1);
                }
                worst = worst.max(experiment(&cfg, &dir)?);
            }
            Ok(worst)
        }
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
    match run(&cli) {
        Ok(s) => ExitCode::from(s as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
