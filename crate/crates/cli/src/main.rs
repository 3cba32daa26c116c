use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use gibbslab::{
    cmd_bounds3d, cmd_compare, cmd_gibbs, cmd_locate, cmd_phantom, init_threads_from_env, parse_kernels,
    resample_labels_file, resample_scalar_file, target_grid, Bounds3dConfig, CliError, CliResult, ExperimentConfig,
    GibbsConfig, LabelMethod, SignalKind, EXIT_USAGE,
};
use gibbslab_core::{Fov, Kernel};

#[derive(Parser)]
#[command(name = "gibbslab", version, about = "Resampling and ringing experiments on 3-D grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the high-resolution phantom, its analytic coarse version and the segmentation.
    Phantom(ExperimentArgs),
    /// Relative VOI-mean errors for label undersampling vs. image oversampling.
    Compare(ExperimentArgs),
    /// DSSIM, gradient and volume shares at the segmentation border.
    Locate(ExperimentArgs),
    /// One-dimensional bound checks, convergence and ringing profiles.
    Gibbs(GibbsArgs),
    /// Resample a stored volume or label image.
    Resample(ResampleArgs),
    /// Trivariate bound check on a separable step volume.
    Bounds3d(Bounds3dArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = 2)]
    factor: usize,
    #[arg(long, default_value = "linear,gaussian,lanczos2,cubic")]
    kernels: String,
    #[arg(long, default_value_t = 2.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    multilabel_sigma: f64,
    #[arg(long, default_value_t = 3)]
    border_reps: usize,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    include_background: bool,
    /// Cubic field of view as `lo,hi`.
    #[arg(long, default_value = "-1,1")]
    fov: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignalArg {
    Heaviside,
    Sine,
    Constant,
}

#[derive(Args)]
struct GibbsArgs {
    #[arg(long, default_value = "linear,cubic,lanczos2,gaussian")]
    kernels: String,
    #[arg(long, default_value_t = 2.0)]
    epsilon: f64,
    /// Comma list of interval counts.
    #[arg(long, default_value = "16,32,64,128")]
    ns: String,
    #[arg(long, value_enum, default_value_t = SignalArg::Heaviside)]
    signal: SignalArg,
    /// Jump location of the Heaviside signal.
    #[arg(long, default_value_t = 0.5137)]
    xi: f64,
    #[arg(long, default_value_t = 1.0)]
    value: f64,
    #[arg(long, default_value_t = 16)]
    points_per_interval: usize,
    #[arg(long, default_value_t = 0.37)]
    probe_x: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelMethodArg {
    Nearest,
    Multilabel,
}

#[derive(Args)]
struct ResampleArgs {
    /// Input path without the `.json`/`.raw` extension.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, conflicts_with = "factor")]
    size: Option<usize>,
    #[arg(long)]
    factor: Option<usize>,
    #[arg(long, default_value = "cubic")]
    kernel: String,
    #[arg(long, default_value_t = 2.0)]
    epsilon: f64,
    /// Treat the input as labels and use this method.
    #[arg(long, value_enum)]
    labels: Option<LabelMethodArg>,
    #[arg(long, default_value_t = 0.5)]
    multilabel_sigma: f64,
}

#[derive(Args)]
struct Bounds3dArgs {
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long, default_value = "cubic")]
    kernel: String,
    #[arg(long, default_value_t = 2.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    points: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.5137)]
    xi: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_fov(s: &str) -> CliResult<Fov> {
    let parts: Vec<&str> = s.split(',').collect();
    let parsed: Vec<f64> = parts.iter().filter_map(|p| p.trim().parse().ok()).collect();
    match parsed[..] {
        [lo, hi] if parts.len() == 2 => Fov::cube(lo, hi).map_err(|e| CliError::Usage(e.to_string())),
        _ => Err(CliError::Usage(format!("--fov expects 'lo,hi', got '{s}'"))),
    }
}

fn parse_list(s: &str) -> CliResult<Vec<usize>> {
    s.split(',').map(|p| p.trim().parse().map_err(|_| CliError::Usage(format!("not a count: '{p}'")))).collect()
}

fn single_kernel(name: &str, epsilon: f64) -> CliResult<Kernel> {
    let mut ks = parse_kernels(name, epsilon)?;
    if ks.len() != 1 {
        return Err(CliError::Usage(format!("expected one kernel, got '{name}'")));
    }
    Ok(ks.remove(0))
}

fn experiment(args: ExperimentArgs) -> CliResult<ExperimentConfig> {
    let config = ExperimentConfig {
        size: args.size,
        factor: args.factor,
        kernels: parse_kernels(&args.kernels, args.epsilon)?,
        multilabel_sigma: args.multilabel_sigma,
        border_reps: args.border_reps,
        out: args.out,
        include_background: args.include_background,
        fov: parse_fov(&args.fov)?,
    };
    config.validate()?;
    Ok(config)
}

fn run(command: Command) -> CliResult<()> {
    init_threads_from_env()?;
    match command {
        Command::Phantom(args) => {
            let set = cmd_phantom(&experiment(args)?)?;
            eprintln!(
                "phantom: {:?} reference, {:?} functional, {} labels",
                set.reference.grid().counts(),
                set.functional.grid().counts(),
                set.labels.n_labels()
            );
        }
        Command::Compare(args) => {
            for row in cmd_compare(&experiment(args)?)? {
                eprintln!("{} {}: {:?}", row.sampling.name(), row.method, row.rel_err);
            }
        }
        Command::Locate(args) => {
            for row in cmd_locate(&experiment(args)?)? {
                eprintln!("{}: dssim {:.6} border {:.6}", row.kernel, row.dssim, row.dssim_border);
            }
        }
        Command::Gibbs(args) => {
            let signal = match args.signal {
                SignalArg::Heaviside => SignalKind::Heaviside { xi: args.xi },
                SignalArg::Sine => SignalKind::Sine,
                SignalArg::Constant => SignalKind::Constant(args.value),
            };
            let config = GibbsConfig {
                kernels: parse_kernels(&args.kernels, args.epsilon)?,
                ns: parse_list(&args.ns)?,
                signal,
                points_per_interval: args.points_per_interval,
                probe_x: args.probe_x,
            };
            let out = cmd_gibbs(&config, &args.out)?;
            eprintln!("gibbs: {} points, 0 violations", out.points.rows.len());
        }
        Command::Resample(args) => {
            let (size, factor) = (args.size, args.factor);
            let target = |g: &gibbslab_core::Grid3| target_grid(g, size, factor);
            match args.labels {
                Some(m) => {
                    let method = match m {
                        LabelMethodArg::Nearest => LabelMethod::Nearest,
                        LabelMethodArg::Multilabel => LabelMethod::Multilabel,
                    };
                    resample_labels_file(&args.input, &args.output, target, method, args.multilabel_sigma)?;
                }
                None => {
                    let kernel = single_kernel(&args.kernel, args.epsilon)?;
                    resample_scalar_file(&args.input, &args.output, target, &kernel)?;
                }
            }
        }
        Command::Bounds3d(args) => {
            let config = Bounds3dConfig {
                size: args.size,
                kernel: single_kernel(&args.kernel, args.epsilon)?,
                points: args.points,
                seed: args.seed,
                xi: args.xi,
            };
            let reports = cmd_bounds3d(&config, &args.out)?;
            eprintln!("bounds3d: {} points, 0 violations", reports.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
