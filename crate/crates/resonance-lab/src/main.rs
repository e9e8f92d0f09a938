use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use resonance_lab::commands::{self, Ctx};
use resonance_lab::{config, AppError};

/// Resonances of 1D semiclassical Schrödinger operators: predictions,
/// certified computations, comparisons, counts, and gap reports.
#[derive(Parser)]
#[command(name = "resonance-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// First-order lattice predictions in the window
    Predict(CommonArgs),
    /// Resonances at the configured tier (certified when tier = shooting)
    Compute(CommonArgs),
    /// Computed resonances paired against predictions, with scaled errors
    Compare(CommonArgs),
    /// Lattice size vs certified count per h
    Count(CommonArgs),
    /// Resonance-free band report plus empirical band top per h
    Gap(CommonArgs),
    /// Certified roots cross-checked against the closed-form constant well
    Oracle(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Override the configured h list (repeatable, descending)
    #[arg(long = "h", value_name = "H")]
    h: Vec<f64>,
    /// Override the band-depth multiplier M
    #[arg(long = "M", value_name = "M")]
    m: Option<f64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_ctx(args: &CommonArgs) -> Result<Ctx, AppError> {
    let mut loaded = config::load(&args.config)?;
    if !args.h.is_empty() {
        loaded.config.run.h_list = args.h.clone();
    }
    if let Some(m) = args.m {
        loaded.config.run.m = Some(m);
    }
    // Overrides go through the same validation as the file contents.
    config::validate(&loaded.config, &loaded.potential)?;
    let config_dir = args
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| commands::out_dir_of(&config_dir, &loaded.config.output.dir));
    Ok(Ctx { loaded, out_dir })
}

fn dispatch(cli: &Cli) -> Result<i32, AppError> {
    let (name, args) = match &cli.cmd {
        Cmd::Predict(a) => ("predict", a),
        Cmd::Compute(a) => ("compute", a),
        Cmd::Compare(a) => ("compare", a),
        Cmd::Count(a) => ("count", a),
        Cmd::Gap(a) => ("gap", a),
        Cmd::Oracle(a) => ("oracle", a),
    };
    let ctx = build_ctx(args)?;
    commands::run(name, &ctx)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
