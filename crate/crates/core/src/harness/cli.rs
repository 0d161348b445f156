use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{convergence_sweep, run, validate, write_csv, RunConfig, SweepRow, Vary};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "fracwave", version, about = "Space-time FEM for the time-fractional wave equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one manufactured-solution case and report E1 and E2.
    Solve(RunArgs),
    /// Run a refinement sweep and emit a CSV table with observed orders.
    Sweep(SweepArgs),
    /// Run the built-in property checks.
    Validate,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// Temporal trial degree.
    #[arg(long)]
    m: Option<usize>,
    /// Spatial polynomial degree.
    #[arg(long)]
    n: Option<usize>,
    /// Number of time slabs.
    #[arg(long = "J")]
    slabs: Option<usize>,
    /// Grading exponent of the time grid.
    #[arg(long)]
    sigma: Option<f64>,
    /// Squares per side of the unit square mesh.
    #[arg(long)]
    cells: Option<usize>,
    /// Final time.
    #[arg(long = "T")]
    final_time: Option<f64>,
    /// Relative residual tolerance of the linear solves.
    #[arg(long)]
    tol: Option<f64>,
    /// CSV output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of key=value lines; command line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma separated J values (time) or cells per side (space).
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    vary: Option<VaryArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VaryArg {
    Time,
    Space,
}

#[derive(Debug, Default)]
struct FileConfig {
    run: RunConfig,
    levels: Option<Vec<usize>>,
    vary: Option<Vary>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("config key {key}: cannot parse {value:?}")))
}

fn parse_vary(value: &str) -> Result<Vary> {
    match value {
        "time" => Ok(Vary::Time),
        "space" => Ok(Vary::Space),
        other => Err(Error::InvalidArgument(format!("vary must be time or space, got {other:?}"))),
    }
}

fn read_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key=value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let run = &mut cfg.run;
        match key {
            "gamma" => run.gamma = parse_value(key, value)?,
            "r" => run.r = parse_value(key, value)?,
            "m" => run.m = parse_value(key, value)?,
            "n" => run.n = parse_value(key, value)?,
            "J" => run.slabs = parse_value(key, value)?,
            "sigma" => run.sigma = parse_value(key, value)?,
            "cells" => run.cells = parse_value(key, value)?,
            "T" => run.final_time = parse_value(key, value)?,
            "tol" => run.tol = parse_value(key, value)?,
            "out" => run.out = Some(PathBuf::from(value)),
            "levels" => {
                cfg.levels = Some(value.split(',').map(|v| parse_value(key, v.trim())).collect::<Result<_>>()?)
            }
            "vary" => cfg.vary = Some(parse_vary(value)?),
            other => return Err(Error::InvalidArgument(format!("unknown config key {other:?}"))),
        }
    }
    Ok(cfg)
}

impl RunArgs {
    fn resolve(&self) -> Result<FileConfig> {
        let mut cfg = match &self.config {
            Some(path) => read_config(path)?,
            None => FileConfig::default(),
        };
        let run = &mut cfg.run;
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { run.$field = v; })* };
        }
        take!(gamma, r, m, n, slabs, sigma, cells, final_time, tol);
        if let Some(out) = &self.out {
            run.out = Some(out.clone());
        }
        run.validate()?;
        Ok(cfg)
    }
}

fn emit(rows: &[SweepRow], out: Option<&Path>) -> Result<()> {
    let stdout = io::stdout();
    write_csv(rows, stdout.lock())?;
    if let Some(path) = out {
        let file = fs::File::create(path)?;
        let mut writer = io::BufWriter::new(file);
        write_csv(rows, &mut writer)?;
        writer.flush()?;
    }
    Ok(())
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Solve(args) => {
            let cfg = args.resolve()?.run;
            let report = run(&cfg)?;
            println!("E1 = {:.6e}", report.e1);
            println!("E2 = {:.6e}", report.e2);
            println!("seconds = {:.3}", report.seconds);
            if let Some(path) = &cfg.out {
                let row = SweepRow { level: 0, slabs: cfg.slabs, inv_h: cfg.cells, report, order1: None, order2: None };
                let mut writer = io::BufWriter::new(fs::File::create(path)?);
                write_csv(&[row], &mut writer)?;
                writer.flush()?;
            }
            Ok(true)
        }
        Command::Sweep(args) => {
            let file = args.run.resolve()?;
            let levels = args
                .levels
                .or(file.levels)
                .ok_or_else(|| Error::InvalidArgument("sweep needs --levels".into()))?;
            let vary = match args.vary {
                Some(VaryArg::Time) => Vary::Time,
                Some(VaryArg::Space) => Vary::Space,
                None => file.vary.unwrap_or(Vary::Space),
            };
            let rows = convergence_sweep(&file.run, &levels, vary)?;
            emit(&rows, file.run.out.as_deref())?;
            Ok(true)
        }
        Command::Validate => {
            let checks = validate::run_all();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

/// Runs the command line interface and returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => 2,
                Error::Level { ref source, .. } if matches!(**source, Error::InvalidArgument(_)) => 2,
                _ => 1,
            }
        }
    }
}
