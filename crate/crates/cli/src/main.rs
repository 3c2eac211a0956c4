use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cupset_cli::{
    load_noise, parse_dims, parse_lengths, run, CommandKind, OutputFormat, Pipeline, RunConfig,
    VariantArg,
};

/// Generate CUP-set data, simulate estimation protocols, and fit noise
/// models. Exit codes: 0 success, 1 operational error, 2 bound violation.
#[derive(Parser, Debug)]
#[command(name = "cupset", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a CUP-set point cloud and verify its bounds.
    Cupset(CupsetArgs),
    /// Simulate an estimation pipeline over a boundary family.
    Protocol(ProtocolArgs),
    /// Fit the depolarizing deformation between two surface files.
    Fit(FitArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Noise model: inline JSON or a path to a JSON file.
    #[arg(long)]
    noise: Option<String>,
    /// Shots per measured circuit (overrides the noise model).
    #[arg(long)]
    shots: Option<usize>,
    /// Master seed (overrides the noise model).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path, or '-' for stdout.
    #[arg(long, default_value = "-")]
    out: String,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args, Debug)]
struct CupsetArgs {
    #[arg(long, value_enum, default_value_t = VariantArg::Isometric)]
    variant: VariantArg,
    /// Generating family (swap-alpha, cnot-alpha, cnot-ba-cnot-ab,
    /// cnot-rev, two-param-grid, three-param-grid, haar-random,
    /// pauli-hiding).
    #[arg(long, default_value = "haar-random")]
    family: String,
    /// Points per parameter (or cloud size for haar-random).
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Dimensions d_X,d_A,d_B.
    #[arg(long, default_value = "2,2,2")]
    dims: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct ProtocolArgs {
    /// Estimation pipeline.
    #[arg(long, value_enum)]
    pipeline: Pipeline,
    #[arg(long, value_enum, default_value_t = VariantArg::Isometric)]
    variant: VariantArg,
    /// Boundary family (swap-alpha, cnot-alpha, cnot-ba-cnot-ab, cnot-rev)
    /// or 'extremal' for the three extremal points.
    #[arg(long, default_value = "swap-alpha")]
    family: String,
    /// Grid points over alpha in [0, 1].
    #[arg(long, default_value_t = 9)]
    points: usize,
    /// RB sequence lengths, as 'a..b' (inclusive) or a comma list.
    #[arg(long, default_value = "1..10")]
    lengths: String,
    /// Random sequences per length.
    #[arg(long, default_value_t = 10)]
    sequences: usize,
    /// Independent repetitions with fresh sequences.
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    /// Random settings for the spectral pipeline.
    #[arg(long, default_value_t = 100)]
    settings: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// CSV with noisy estimates (u_est/ubar_est or u/ubar columns).
    noisy: String,
    /// CSV with the matching ideal surface.
    ideal: String,
    #[command(flatten)]
    common: CommonArgs,
}

fn to_config(cli: Cli) -> anyhow::Result<RunConfig> {
    Ok(match cli.command {
        Command::Cupset(args) => RunConfig {
            command: CommandKind::Cupset,
            variant: args.variant,
            family: args.family,
            pipeline: None,
            points: args.points,
            dims: parse_dims(&args.dims)?,
            noise: load_noise(
                args.common.noise.as_deref(),
                args.common.shots,
                args.common.seed,
            )?,
            lengths: vec![],
            sequences: 0,
            repetitions: 0,
            settings: 0,
            out: args.common.out,
            format: args.common.format,
            fit_inputs: None,
        },
        Command::Protocol(args) => RunConfig {
            command: CommandKind::Protocol,
            variant: args.variant,
            family: args.family,
            pipeline: Some(args.pipeline),
            points: args.points,
            dims: (2, 2, 2),
            noise: load_noise(
                args.common.noise.as_deref(),
                args.common.shots,
                args.common.seed,
            )?,
            lengths: parse_lengths(&args.lengths)?,
            sequences: args.sequences,
            repetitions: args.repetitions,
            settings: args.settings,
            out: args.common.out,
            format: args.common.format,
            fit_inputs: None,
        },
        Command::Fit(args) => RunConfig {
            command: CommandKind::Fit,
            variant: VariantArg::Isometric,
            family: String::new(),
            pipeline: None,
            points: 0,
            dims: (2, 2, 2),
            noise: load_noise(
                args.common.noise.as_deref(),
                args.common.shots,
                args.common.seed,
            )?,
            lengths: vec![],
            sequences: 0,
            repetitions: 0,
            settings: 0,
            out: args.common.out,
            format: args.common.format,
            fit_inputs: Some((args.noisy, args.ideal)),
        },
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match to_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match run(&config) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
