mod output;
mod presets;
mod run;

use clap::{Args, Parser, Subcommand};
use output::{CliError, Prepared, Report};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "hqbicm", version, about = "Design and evaluation of BICM with hierarchical PAM and deterministic bit multiplexing")]
struct Cli {
    /// Worker threads for parallel sections
    #[arg(long, global = true, env = "HQBICM_JOBS")]
    jobs: Option<usize>,
    /// Exit with status 3 when a numerical-validity warning is raised
    #[arg(long, global = true)]
    strict: bool,
    /// Output file (stdout when omitted); a manifest is written next to it
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Manifest path, overriding `<out>.manifest.json`
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump an HPAM constellation as JSON
    Constellation(ConstellationArgs),
    /// Weight distribution spectrum as CSV
    Spectrum(SpectrumArgs),
    /// Union bound sweep as CSV
    Bound(BoundArgs),
    /// Monte Carlo BER sweep as CSV
    Simulate(SimulateArgs),
    /// Joint multiplexer and constellation design cards as JSON
    Optimize(OptimizeArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstellationArgs {
    /// Constellation order
    #[arg(long = "M", alias = "order", value_name = "M")]
    pub order: usize,
    /// Comma separated alpha_1..alpha_{q-1}; equally spaced when omitted
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alphas: Option<Vec<f64>>,
    /// Accept alphas outside the labelling region
    #[arg(long)]
    pub unchecked: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    /// Octal generators
    #[arg(long, default_value = "5,7")]
    pub code: String,
    /// Pattern such as "1,2,2/1,3,3", "identity", "s", "rmux:<table>" or
    /// "s-punctured:<pattern>"
    #[arg(long, default_value = "identity")]
    pub mux: String,
    /// Number of streams for "identity", "s" and "s-punctured"
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub wmax: u32,
    /// Reproduce the worked two-entry example
    #[arg(long, conflicts_with_all = ["code", "mux", "q", "wmax"])]
    pub example2: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    /// Figure scenario (fig3, fig3-awgn, fig3-fading, fig4, fig6, fig6-awgn,
    /// fig6-fading, fig7, fig8)
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub code: Option<String>,
    #[arg(long)]
    pub mux: Option<String>,
    #[arg(long = "M", alias = "order", value_name = "M")]
    pub order: Option<usize>,
    /// Comma separated alphas, "opt" for the best grid point per SNR, or
    /// "sweep" for the whole grid at one SNR
    #[arg(long, allow_hyphen_values = true)]
    pub alphas: Option<String>,
    /// awgn or nakagami; with a preset, selects its matching curves
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub m: Option<f64>,
    /// SNR grid in dB: "lo:step:hi" or a comma separated list
    #[arg(long)]
    pub snr_db: Option<String>,
    #[arg(long)]
    pub wmax: Option<u32>,
    #[arg(long)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// TOML or JSON simulation description
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub code: Option<String>,
    #[arg(long)]
    pub mux: Option<String>,
    #[arg(long = "M", alias = "order", value_name = "M")]
    pub order: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub snr_db: Option<String>,
    #[arg(long)]
    pub block_len: Option<usize>,
    #[arg(long)]
    pub min_errors: Option<u64>,
    #[arg(long)]
    pub max_blocks: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Uncoded transmission with hard decisions
    #[arg(long)]
    pub uncoded: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimizeArgs {
    /// Figure scenario (fig4, fig4-awgn, fig4-fading, fig5, fig5-awgn,
    /// fig5-fading)
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub code: Option<String>,
    #[arg(long = "M", alias = "order", value_name = "M")]
    pub order: Option<usize>,
    /// Multiplexer period J (defaults to log2 M)
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub snr_db: Option<String>,
    #[arg(long)]
    pub wmax: Option<u32>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Single design for the whole SNR range: smallest SNR whose bound
    /// reaches this target
    #[arg(long)]
    pub target: Option<f64>,
    /// SNR bracket for --target, "lo:hi" in dB
    #[arg(long)]
    pub bracket: Option<String>,
    /// Include the best entry of every pattern
    #[arg(long)]
    pub ranked: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(warnings) => {
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            if cli.strict && !warnings.is_empty() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<String>, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let start = Instant::now();
    let prepared = match &cli.command {
        Command::Constellation(a) => run::constellation(a)?,
        Command::Spectrum(a) => run::spectrum(a)?,
        Command::Bound(a) => run::bound(a)?,
        Command::Simulate(a) => run::simulate(a)?,
        Command::Optimize(a) => run::optimize(a)?,
    };
    let Prepared {
        command,
        config,
        seed,
        run,
    } = prepared;
    let hash = output::config_hash(command, &config);
    let Report { body, warnings } = run(&hash)?;
    let out = cli.out.as_deref();
    output::emit(out, cli.manifest.as_deref(), (command, &config, seed), &hash, &body, start)?;
    Ok(warnings)
}
