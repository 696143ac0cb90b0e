//! Command-line driver: fit and forecast accelerometer axes, run rolling
//! cross-validation, authenticate windows against activity profiles and
//! replay scenarios with energy accounting.
//!
//! Exit codes: 0 success, 1 input error, 2 computation error.

mod commands;
pub mod config;
mod output;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use periodauth::Activity;

use crate::config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input, bad flags or configuration.
    #[error("{0}")]
    Input(String),
    /// The inputs were fine but the computation could not complete.
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Compute(_) => 2,
        }
    }
}

impl From<periodauth::Error> for CliError {
    fn from(e: periodauth::Error) -> Self {
        use periodauth::Error as E;
        let msg = e.to_string();
        match e {
            E::Io(_)
            | E::Json(_)
            | E::Parse { .. }
            | E::Schema(_)
            | E::InvalidArgument(_)
            | E::InvalidSeries(_)
            | E::LengthMismatch(_)
            | E::ProfileMismatch(_) => CliError::Input(msg),
            _ => CliError::Compute(msg),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "periodauth", version, about = "Activity forecasting and continuous authentication")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Nominal level of the prediction band.
    #[arg(long, global = true)]
    pub level: Option<f64>,
    /// Minimum per-axis coverage for acceptance.
    #[arg(long = "te-threshold", global = true)]
    pub te_threshold: Option<f64>,
    /// Forecast steps for `predict`.
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Output file (a directory for `fit` and `crossval`); standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Which recording of a CSV file to use.
#[derive(Debug, Args, Clone)]
pub struct Selection {
    /// Canonical CSV: subject_id,label,seq,ax,ay,az.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub activity: Option<Activity>,
    #[arg(long)]
    pub subject: Option<String>,
    /// First sample used.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Samples used; to the end of the recording when absent.
    #[arg(long)]
    pub len: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one forecast model per axis.
    Fit {
        #[command(flatten)]
        data: Selection,
    },
    /// Forecast from a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
    },
    /// Rolling-origin cross-validation.
    Crossval {
        #[command(flatten)]
        data: Selection,
    },
    /// Judge the windows of a recording against a profile.
    Auth {
        #[arg(long)]
        profile: PathBuf,
        #[command(flatten)]
        data: Selection,
        /// Time of the first selected sample, in samples; continues the
        /// profile's training timeline when absent.
        #[arg(long)]
        t0: Option<f64>,
        /// Judge the windows without their recording label.
        #[arg(long)]
        unlabeled: bool,
    },
    /// Replay a scenario through authentication and the scanning policy.
    Simulate {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Average current of the scanning schedules.
    Energy {
        /// Sensor name; the configured sensor when absent.
        #[arg(long)]
        sensor: Option<String>,
        /// Extra schedule with this fraction of each frame in normal mode.
        #[arg(long)]
        duty: Option<f64>,
    },
    /// Create, update and inspect activity profiles.
    #[command(subcommand)]
    Profile(ProfileCommand),
}

#[derive(Debug, Subcommand)]
pub enum ProfileCommand {
    /// Enroll an activity, creating the profile file when needed.
    Init {
        #[arg(long)]
        user: Option<String>,
        /// Existing profile to extend.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[command(flatten)]
        data: Selection,
    },
    /// Authenticate one window and, if accepted, fold it into the profile.
    Update {
        #[arg(long)]
        profile: PathBuf,
        #[command(flatten)]
        data: Selection,
        #[arg(long)]
        t0: Option<f64>,
    },
    /// Summarize a profile.
    Show {
        #[arg(long)]
        profile: PathBuf,
    },
}

/// Parse `args` (program name first) and run. Help and version requests
/// succeed; any other argument error is an input error.
pub fn run_args<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Input(e.to_string().trim_end().to_string())),
    };
    run(cli)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let overrides = Overrides {
        seed: g.seed,
        level: g.level,
        te_threshold: g.te_threshold,
        horizon: g.horizon,
    };
    let cfg = RunConfig::resolve(g.config.as_deref(), &overrides)?;
    let out = g.out.as_deref();
    match &cli.command {
        Command::Fit { data } => commands::fit(&cfg, data, out),
        Command::Predict { model } => commands::predict(&cfg, model, out),
        Command::Crossval { data } => commands::crossval(&cfg, data, out),
        Command::Auth {
            profile,
            data,
            t0,
            unlabeled,
        } => commands::auth(&cfg, profile, data, *t0, *unlabeled, out),
        Command::Simulate { profile, scenario } => commands::simulate(&cfg, profile, scenario, out),
        Command::Energy { sensor, duty } => commands::energy(&cfg, sensor.as_deref(), *duty, out),
        Command::Profile(p) => match p {
            ProfileCommand::Init { user, profile, data } => {
                commands::profile_init(&cfg, user.as_deref(), profile.as_deref(), data, out)
            }
            ProfileCommand::Update { profile, data, t0 } => commands::profile_update(&cfg, profile, data, *t0, out),
            ProfileCommand::Show { profile } => commands::profile_show(&cfg, profile, out),
        },
    }
}
