use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Paul trap dynamics, QND variables and restricted path integrals.
#[derive(Debug, Parser)]
#[command(name = "paultrap", version, args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Trap configuration file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory receiving the artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads for sweeps; 0 lets rayon decide.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Overrides the `steps` entry of the config file.
    #[arg(long, global = true)]
    pub steps: Option<usize>,

    /// Initial position of the reference trajectory.
    #[arg(long, global = true, default_value_t = -1.0, allow_negative_numbers = true)]
    pub x0: f64,

    /// Initial velocity of the reference trajectory.
    #[arg(long, global = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub v0: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the reference trajectory and write `trajectory.csv`.
    Trajectory,

    /// Floquet stability chart over a (U, V) grid, written to `stability.csv`.
    Stability(StabilityArgs),

    /// QND samples and the Riccati residual report.
    QndCheck,

    /// Closed-form readout densities over a resolution sweep.
    Probability(ProbabilityArgs),

    /// Lattice Gaussian integral next to the closed-form density.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// `start:end` range of U.
    #[arg(long, allow_hyphen_values = true)]
    pub u_range: String,

    /// `start:end` range of V.
    #[arg(long, allow_hyphen_values = true)]
    pub v_range: String,

    /// Grid points as `NUxNV`.
    #[arg(long, default_value = "41x41")]
    pub resolution: String,

    /// RK4 steps across one drive period.
    #[arg(long, default_value_t = 2000)]
    pub steps_per_period: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    /// The readout density formula.
    Density,
    /// Squared modulus of the propagator formula.
    AmplitudeSquared,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    /// Record generator: `zero`, `constant:<v>`, `sine:<amp>,<freq>,<phase>`, `matched:<x0>,<v0>`.
    #[arg(long, default_value = "zero", allow_hyphen_values = true)]
    pub record: String,

    /// Resolutions Δa, comma separated.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub delta_a: Vec<f64>,

    /// Measurement duration T; defaults to the window length.
    #[arg(long)]
    pub duration_t: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ProbabilityArgs {
    #[command(flatten)]
    pub record: RecordArgs,

    /// Second record; adds the log-ratio table.
    #[arg(long, allow_hyphen_values = true)]
    pub record_b: Option<String>,

    #[arg(long, value_enum, default_value_t = SourceArg::Density)]
    pub source: SourceArg,

    /// Attach the lattice comparison for every Δa.
    #[arg(long)]
    pub oracle: bool,

    #[command(flatten)]
    pub endpoints: Endpoints,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub record: RecordArgs,

    #[command(flatten)]
    pub endpoints: Endpoints,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Endpoints {
    /// Lattice path start q′.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub q_start: f64,

    /// Lattice path end q″.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub q_end: f64,
}
