mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rgfp::response::ResponseKind;
use rgfp::trees::TypeConstraints;

use commands::{Context, FitTarget};
use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "rgfp", version, about = "Fixed-point exponents, propagators and response functions")]
#[command(allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args, Debug, Default)]
struct GlobalArgs {
    /// Configuration file with [model], [quadrature], [windows] and [output] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    d: Option<u32>,
    #[arg(long = "N", global = true)]
    n: Option<u32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Gevrey order of the cutoff.
    #[arg(long, global = true)]
    s: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_panels: Option<usize>,
    /// Grid points per decade.
    #[arg(long, global = true)]
    grid_density: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    h_min: Option<i32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    h_max: Option<i32>,
    #[arg(long, global = true)]
    x_min: Option<f64>,
    #[arg(long, global = true)]
    x_max: Option<f64>,
    #[arg(long, global = true)]
    fit_min: Option<f64>,
    #[arg(long, global = true)]
    fit_max: Option<f64>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    output: Option<String>,
    /// Significant digits.
    #[arg(long, global = true)]
    precision: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true, env = "RGFP_THREADS")]
    threads: Option<usize>,
    /// One JSON record per line.
    #[arg(long, global = true)]
    stream: bool,
    /// Print the merged configuration and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for η₂ and report the exponents.
    Exponents,
    /// Sample a multi-scale propagator on the x grid.
    Propagator {
        /// full, single:H, below:H, above:H or range:A:B.
        #[arg(long, default_value = "single:0")]
        band: String,
    },
    /// Response function on the x grid with its leading power law.
    Response {
        #[arg(long, value_enum, default_value_t = KindArg::ScaleSumG)]
        kind: KindArg,
    },
    /// Discrete scale covariance of the scale sums.
    ScaleCheck,
    /// Enumerate tree shapes; JSON output adds the bound constants.
    Trees {
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ConstraintArg::None)]
        constraint: ConstraintArg,
    },
    /// Stretched-exponential fit of a propagator band or of the E1 correction.
    DecayFit {
        #[arg(long, value_enum, default_value_t = TargetArg::Propagator)]
        target: TargetArg,
        #[arg(long, default_value = "single:0")]
        band: String,
        /// Fix the stretch exponent instead of fitting it.
        #[arg(long, allow_hyphen_values = true)]
        sigma: Option<f64>,
    },
    /// Trimming identities and norm bounds on the test battery.
    TrimCheck,
    /// Zero-mode residuals at the free point.
    Zeta1Check,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KindArg {
    FreeG,
    FreeF,
    ScaleSumG,
    ScaleSumF,
    E1,
    E2,
}

impl From<KindArg> for ResponseKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::FreeG => Self::FreeG,
            KindArg::FreeF => Self::FreeF,
            KindArg::ScaleSumG => Self::ScaleSumG,
            KindArg::ScaleSumF => Self::ScaleSumF,
            KindArg::E1 => Self::E1,
            KindArg::E2 => Self::E2,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ConstraintArg {
    None,
    TwoPhi,
    TwoJ,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TargetArg {
    Propagator,
    E1,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Exponents => "exponents",
            Self::Propagator { .. } => "propagator",
            Self::Response { .. } => "response",
            Self::ScaleCheck => "scale-check",
            Self::Trees { .. } => "trees",
            Self::DecayFit { .. } => "decay-fit",
            Self::TrimCheck => "trim-check",
            Self::Zeta1Check => "zeta1-check",
        }
    }
}

fn overrides(g: &GlobalArgs) -> Overrides {
    Overrides {
        d: g.d,
        n: g.n,
        eps: g.eps,
        gamma: g.gamma,
        s: g.s,
        tol: g.tol,
        max_panels: g.max_panels,
        grid_density: g.grid_density,
        h_min: g.h_min,
        h_max: g.h_max,
        x_min: g.x_min,
        x_max: g.x_max,
        fit_min: g.fit_min,
        fit_max: g.fit_max,
        format: g.format.clone(),
        output: g.output.clone(),
        precision: g.precision,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    config.apply(&overrides(&cli.global))?;
    if cli.global.dump_config {
        print!("{}", config.dump());
        return Ok(());
    }
    let command = cli.command.ok_or_else(|| CliError::Config("no subcommand given; see --help".into()))?;
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let ctx = Context::new(config)?;
    let table = match &command {
        Command::Exponents => commands::exponents(&ctx)?,
        Command::Propagator { band } => commands::propagator(&ctx, commands::parse_band(band)?)?,
        Command::Response { kind } => commands::response(&ctx, (*kind).into())?,
        Command::ScaleCheck => commands::scale_check(&ctx)?,
        Command::Trees { k, constraint } => {
            let c = match constraint {
                ConstraintArg::None => TypeConstraints::default(),
                ConstraintArg::TwoPhi => TypeConstraints::two_phi(),
                ConstraintArg::TwoJ => TypeConstraints::two_j(),
            };
            commands::trees(&ctx, *k, c)?
        }
        Command::DecayFit { target, band, sigma } => {
            let t = match target {
                TargetArg::Propagator => FitTarget::Propagator(commands::parse_band(band)?),
                TargetArg::E1 => FitTarget::E1,
            };
            commands::decay_fit(&ctx, t, *sigma)?
        }
        Command::TrimCheck => commands::trim_check(&ctx)?,
        Command::Zeta1Check => commands::zeta1_check(&ctx)?,
    };
    let head = output::header(&ctx.config, &ctx.profile.id(), command.name());
    output::emit(&ctx.config, &head, &table.render(&ctx.config, cli.global.stream))
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rgfp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
