use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deltaform::tower::TowerConfig;
use deltaform_cli::{prepare, run_all, CliError, CliResult, Report, RunConfig, SUITES};

/// Verification suites for arithmetic jets and delta-characters over p-adic towers.
#[derive(Parser)]
#[command(name = "deltaform", version)]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Working precision K (tower precision, or p-adic precision over Z_p).
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Jet or series degree D.
    #[arg(long, global = true)]
    degree: Option<u32>,
    /// Curve label, `catalog#k`, or a label from the catalog file.
    #[arg(long, global = true)]
    curve: Option<String>,
    /// TOML curve catalog with `[[curve]]` entries.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    #[arg(long, global = true)]
    mu: Option<String>,
    #[arg(long, global = true)]
    nu: Option<String>,
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// `pi`, `pi^k`, `c*pi^k` or an integer.
    #[arg(long, global = true)]
    beta: Option<String>,
    /// Tower prime; with `--l` and `--m` replaces the configured tower.
    #[arg(long, global = true)]
    p: Option<u64>,
    #[arg(long, global = true)]
    l: Option<u64>,
    #[arg(long, global = true)]
    m: Option<u32>,
    /// Unramified degree; the least admissible one if omitted.
    #[arg(long, global = true)]
    f: Option<usize>,
    /// Frobenius lifts, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    gammas: Option<Vec<u64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal polynomial of pi, N(pi), Frobenius table and independence check.
    TowerInfo,
    /// Run a verification suite, or `all` to run every suite concurrently.
    Verify { suite: String },
}

fn config(opts: &Opts) -> CliResult<RunConfig> {
    let base = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let tower = match (opts.p, opts.l, opts.m) {
        (Some(p), Some(l), Some(m)) => {
            let k = opts.precision.or(base.tower.as_ref().map(|t| t.k)).unwrap_or(8);
            Some(TowerConfig { p, l, m, f: opts.f, k })
        }
        (None, None, None) => None,
        _ => return Err(CliError::Validation("--p, --l and --m must be given together".into())),
    };
    Ok(base.merge(RunConfig {
        tower,
        gammas: opts.gammas.clone(),
        curve: opts.curve.clone(),
        catalog: opts.catalog.clone(),
        mu: opts.mu.clone(),
        nu: opts.nu.clone(),
        precision: opts.precision,
        degree: opts.degree,
        nmax: opts.nmax,
        seed: opts.seed,
        beta: opts.beta.clone(),
        out: opts.out.clone(),
    }))
}

fn execute(cli: &Cli) -> CliResult<(Vec<Report>, Option<PathBuf>)> {
    let cfg = config(&cli.opts)?;
    let names: Vec<&str> = match &cli.command {
        Command::TowerInfo => vec!["tower-info"],
        Command::Verify { suite } if suite == "all" => SUITES.to_vec(),
        Command::Verify { suite } => vec![suite.as_str()],
    };
    let jobs = names.iter().map(|s| prepare(s, &cfg)).collect::<CliResult<Vec<_>>>()?;
    let reports = run_all(jobs).into_iter().collect::<CliResult<Vec<_>>>()?;
    Ok((reports, cfg.out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (reports, out) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("deltaform: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let text = if reports.len() == 1 {
        reports[0].to_json()
    } else {
        serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n"
    };
    let written = match &out {
        Some(path) => std::fs::write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("deltaform: cannot write report: {e}");
        return ExitCode::from(1);
    }
    let mut ok = true;
    for r in &reports {
        if let Some(name) = &r.first_failure {
            ok = false;
            let c = r.checks.iter().find(|c| &c.name == name).expect("failure is listed");
            eprintln!("deltaform: {} failed at {:?}: {} {}", r.command, name, c.reference, c.details);
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
