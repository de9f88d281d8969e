use clap::{Parser, Subcommand};
use frisec::control::Policy;
use frisec::harness::output::write_manifest;
use frisec::harness::sweep::{bounds_table, fits_table, sweep_size, sweep_snr, sweep_table, validate_bounds, validate_fits};
use frisec::harness::{with_workers, ExperimentConfig};
use frisec::surface::{build_correlation, MatrixKind};
use frisec::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "frisec", version, about = "Secrecy performance simulator for fluid-RIS assisted downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file; omitted keys take their reference values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo trials per sweep point.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// greedy | fixed-uniform | fixed-random | conventional
    #[arg(long, global = true, value_parser = parse_policy)]
    policy: Option<Policy>,

    /// Output CSV; a `.manifest.json` is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// ASC and SOP against Bob's average SNR (FRIS and conventional curves).
    SweepAsc,
    /// Same table as sweep-asc; named for the SOP figure.
    SweepSop,
    /// ASC and SOP against total surface size at fixed M_ON.
    SweepSize,
    /// Simulated gain statistics against the moment-matched Gamma and Exponential laws.
    ValidateFits,
    /// Closed forms against their quadrature references.
    ValidateBounds,
    /// Writes the surface correlation matrix (and its square root) as CSV.
    DumpCorrelation,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SweepAsc => "sweep-asc",
            Command::SweepSop => "sweep-sop",
            Command::SweepSize => "sweep-size",
            Command::ValidateFits => "validate-fits",
            Command::ValidateBounds => "validate-bounds",
            Command::DumpCorrelation => "dump-correlation",
        }
    }
}

fn parse_policy(s: &str) -> std::result::Result<Policy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(p) = cli.policy {
        cfg.policy = p;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", cli.command.name())));
    let table = with_workers(cfg.workers, || -> Result<_> {
        Ok(Some(match cli.command {
            Command::SweepAsc | Command::SweepSop => sweep_table(&sweep_snr(&cfg)?),
            Command::SweepSize => sweep_table(&sweep_size(&cfg)?),
            Command::ValidateFits => fits_table(&validate_fits(&cfg)?),
            Command::ValidateBounds => bounds_table(&validate_bounds(&cfg)?),
            Command::DumpCorrelation => {
                let c = build_correlation(&cfg.fris_geometry()?)?;
                c.write_csv(std::io::BufWriter::new(std::fs::File::create(&out)?), MatrixKind::Correlation)?;
                let sqrt_path = out.with_extension("sqrt.csv");
                c.write_csv(std::io::BufWriter::new(std::fs::File::create(&sqrt_path)?), MatrixKind::SquareRoot)?;
                eprintln!(
                    "wrote {} and {} (M = {}, rank {}, clamped eigenvalue mass {:e})",
                    out.display(),
                    sqrt_path.display(),
                    c.dim(),
                    c.rank(),
                    c.clamped_mass()
                );
                write_manifest(&out, cli.command.name(), &cfg, c.dim())?;
                return Ok(None);
            }
        }))
    })??;
    if let Some(table) = table {
        table.save(&out)?;
        let manifest = write_manifest(&out, cli.command.name(), &cfg, table.rows.len())?;
        if let Some(col) = table.column("status") {
            let failed = table.rows.iter().filter(|r| !matches!(&r[col], frisec::harness::output::Cell::Text(s) if s == "ok")).count();
            if failed > 0 {
                eprintln!("{failed} of {} rows reported errors; see the status column", table.rows.len());
            }
        }
        eprintln!("wrote {} ({} rows) and {}", out.display(), table.rows.len(), manifest.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
