//! `sfemctl`: run stochastic optimal control scenarios from TOML configs.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 when a solve
//! fails or stops short of its tolerance.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sfemctl::scenario::{collate_tables, run_scenario, run_sweep, Preset, ResultRow, ScenarioConfig};

/// Environment variable overriding every scenario's output directory.
const OUT_DIR_ENV: &str = "SFEMCTL_OUT_DIR";

#[derive(Parser)]
#[command(name = "sfemctl", version, about = "Stochastic Galerkin and collocation optimal control runner")]
struct Cli {
    /// Output directory; overrides the config and the environment.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Force a discretization preset for every scenario.
    #[arg(long, global = true, value_parser = parse_preset)]
    preset: Option<Preset>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run { config: PathBuf },
    /// Run one scenario per value of its `gamma_sweep`.
    Sweep { config: PathBuf },
    /// Run every `*.toml` in a directory and collate rows by table.
    Tables { dir: PathBuf },
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    match s {
        "paper" => Ok(Preset::Paper),
        "small" => Ok(Preset::Small),
        _ => Err(format!("unknown preset `{s}` (expected paper or small)")),
    }
}

enum Failure {
    Config(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

fn load(path: &Path, cli: &Cli) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::from_path(path).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(p) = cli.preset {
        cfg.preset = p;
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn print_row(r: &ResultRow) {
    let e_u = r.e_u.map_or_else(String::new, |e| format!(" e_u={e:.4e}"));
    println!(
        "{:<28} J={:.4e} tracking={:.4e} std2={:.4e}{e_u} iters={} residual={:.2e} {:.1}s{}",
        r.scenario,
        r.j,
        r.tracking,
        r.std_sq,
        r.iterations,
        r.residual,
        r.seconds,
        if r.converged { "" } else { " NOT CONVERGED" }
    );
}

fn check(rows: &[ResultRow]) -> Result<(), Failure> {
    match rows.iter().find(|r| !r.converged) {
        Some(r) => Err(Failure::Solver(format!(
            "{} stopped at relative residual {:.3e}",
            r.scenario, r.residual
        ))),
        None => Ok(()),
    }
}

fn execute(cfg: &ScenarioConfig) -> Result<Vec<ResultRow>, Failure> {
    let rows = if cfg.gamma_sweep.is_empty() {
        vec![run_scenario(cfg).map_err(|e| Failure::Solver(format!("{}: {e}", cfg.name)))?]
    } else {
        run_sweep(cfg).map_err(|e| Failure::Solver(format!("{}: {e}", cfg.name)))?
    };
    rows.iter().for_each(print_row);
    Ok(rows)
}

fn configs_in(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Config(format!("no *.toml configs in {}", dir.display())));
    }
    Ok(paths)
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run { config } => {
            let mut cfg = load(config, cli)?;
            cfg.gamma_sweep.clear();
            check(&execute(&cfg)?)
        }
        Command::Sweep { config } => {
            let cfg = load(config, cli)?;
            if cfg.gamma_sweep.is_empty() {
                return Err(Failure::Config(format!("{}: gamma_sweep is empty", config.display())));
            }
            check(&execute(&cfg)?)
        }
        Command::Tables { dir } => {
            // validate everything before the first solve
            let cfgs = configs_in(dir)?
                .iter()
                .map(|p| load(p, cli))
                .collect::<Result<Vec<_>, _>>()?;
            let mut rows = Vec::new();
            for cfg in &cfgs {
                rows.extend(execute(cfg)?);
            }
            let out = cli.out.clone().unwrap_or_else(|| cfgs[0].output.dir.clone()).join("tables");
            let written = collate_tables(&rows, &out).map_err(|e| Failure::Solver(e.to_string()))?;
            for p in written {
                println!("wrote {}", p.display());
            }
            check(&rows)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("configuration error: {m}"),
                Failure::Solver(m) => eprintln!("solver failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
