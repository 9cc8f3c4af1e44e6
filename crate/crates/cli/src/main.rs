mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use treeharm::spectral::SymbolSpec;

use commands::{parse_complex, parse_symbol, Ctx, NormChoice};
use config::{Format, RunConfig, SEED_ENV};
use error::CliError;

/// Spherical functions, multipliers and Strichartz-type checks on homogeneous trees.
#[derive(Debug, Parser)]
#[command(name = "treeharm", version)]
struct Cli {
    /// JSON run configuration; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,

    /// Emit (x, y) series for plotting instead of the regular output.
    #[arg(long, global = true)]
    plot_data: bool,

    /// Worker threads for scenario runs and per-vertex maps.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Branching parameter q.
    #[arg(long, global = true)]
    q: Option<usize>,

    /// Exponent p in [1, 2).
    #[arg(long, global = true)]
    p: Option<f64>,

    /// Output format for tables.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate phi_z(n) for n = 0..=n_max.
    Phi {
        /// Spectral parameter as re,im.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
        z: Complex64,
        /// Last level; defaults to the configured radius.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Sample a multiplier symbol along the boundary line of the strip.
    Symbols {
        #[arg(long, value_parser = parse_symbol)]
        symbol: SymbolSpec,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Maximum and minimum modulus of a symbol on the boundary line.
    Extrema {
        #[arg(long, value_parser = parse_symbol)]
        symbol: SymbolSpec,
    },
    /// Synthesize a finitely supported radial kernel for a symbol.
    Kernel {
        #[arg(long, value_parser = parse_symbol)]
        symbol: SymbolSpec,
        /// Fixed support; adaptive when omitted.
        #[arg(long)]
        support: Option<usize>,
    },
    /// Split a radial profile along eigenvalues of a multiplier.
    Decompose {
        /// CSV with columns index,re,im.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_symbol)]
        symbol: SymbolSpec,
        /// Eigenvalue as re,im; repeat for each.
        #[arg(long = "a", required = true, allow_hyphen_values = true, value_parser = parse_complex)]
        a: Vec<Complex64>,
        /// Multiplicity order N.
        #[arg(long, default_value_t = 1)]
        order: usize,
    },
    /// Run the scenarios of a configuration and write their reports.
    Strichartz {
        /// Scenario file (a run configuration or a bare scenario array).
        path: Option<PathBuf>,
        /// Output directory; overrides the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Norm of a radial profile.
    Norms {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "weak")]
        kind: NormChoice,
        /// Hardy exponent r (inf allowed).
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// Schwartz polynomial weight order.
        #[arg(long, default_value_t = 0)]
        m: usize,
    },
}

fn load_config(cli: &Cli, scenario_path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    let mut cfg = match scenario_path.or(cli.config.as_ref()) {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(q) = cli.q {
        cfg.q = q;
    }
    if let Some(p) = cli.p {
        cfg.p = p;
    }
    cfg.apply_env(std::env::var(SEED_ENV).ok())?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if cli.print_defaults {
        let text = serde_json::to_string_pretty(&RunConfig::default()).map_err(treeharm::Error::from)?;
        writeln!(out, "{text}").map_err(|e| CliError::io("stdout", e))?;
        return Ok(());
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Config { field: "command".into(), message: "no subcommand given (try --help)".into() });
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config { field: "--jobs".into(), message: "must be at least 1".into() });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config { field: "--jobs".into(), message: e.to_string() })?;
    }
    let scenario_path = match command {
        Command::Strichartz { path, .. } => path.as_ref(),
        _ => None,
    };
    let cfg = load_config(&cli, scenario_path)?;
    let format = match cli.format {
        Some(FormatArg::Json) => Format::Json,
        Some(FormatArg::Csv) => Format::Csv,
        None if cfg.wants(Format::Csv) => Format::Csv,
        None => Format::Json,
    };
    let ctx = Ctx { cfg: &cfg, format, plot_data: cli.plot_data };
    match command {
        Command::Phi { z, n_max } => commands::phi(&ctx, *z, n_max.unwrap_or(cfg.radius), &mut out),
        Command::Symbols { symbol, grid } => commands::symbols(&ctx, symbol.clone(), *grid, &mut out),
        Command::Extrema { symbol } => commands::extrema(&ctx, symbol.clone(), &mut out),
        Command::Kernel { symbol, support } => commands::kernel(&ctx, symbol.clone(), *support, &mut out),
        Command::Decompose { input, symbol, a, order } => {
            commands::decompose(&ctx, input, symbol.clone(), a, *order, &mut out)
        }
        Command::Norms { input, kind, r, m } => commands::norms(&ctx, input, *kind, *r, *m, &mut out),
        Command::Strichartz { out: dir, .. } => {
            let dir = dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
            match commands::strichartz(&ctx, &dir, &mut out)? {
                0 => Ok(()),
                n => Err(CliError::Mismatch(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // a closed pipe downstream (`| head`) is not a failure
        Err(CliError::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("treeharm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
