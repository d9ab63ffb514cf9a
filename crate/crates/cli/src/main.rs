//! `tforge`: tensegrity form-finding, analysis and scaffold fabrication.
//!
//! Exit status 0 on success, 1 when a pipeline stage fails, 2 for a bad
//! configuration.

mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use stages::Stage;

#[derive(Parser, Debug)]
#[command(
    name = "tforge",
    version,
    about = "Tensegrity design-to-fabrication pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true, default_value = "tforge.json")]
    config: PathBuf,

    #[command(flatten)]
    overrides: Overrides,
}

/// Command-line values that take precedence over the config file.
#[derive(clap::Args, Debug, Default, Clone)]
pub struct Overrides {
    /// Output directory [fallbacks: config `out_dir`, $TFORGE_OUT, ./tforge-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for every random choice (form-finding restarts, post search).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Vertex labels held fixed for the sag check, e.g. `1,2,3`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub supports: Option<Vec<usize>>,

    /// Strut clearance threshold, inches.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,

    /// Roll the structure about its long axis to the lowest height.
    #[arg(long, global = true)]
    pub roll_scan: bool,

    /// Largest 3^n still searched exhaustively for post placement.
    #[arg(long, global = true)]
    pub exhaustive_budget: Option<u64>,

    /// Springs carry no compression.
    #[arg(long, global = true)]
    pub tension_only: bool,

    /// Mode to animate (1-based); defaults to the first elastic mode.
    #[arg(long, global = true)]
    pub mode: Option<usize>,

    /// Peak vertex displacement of the animation, inches.
    #[arg(long, global = true)]
    pub amplitude: Option<f64>,

    /// Animation frames per period.
    #[arg(long, global = true)]
    pub frames: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Find the equilibrium shape (writes equilibrium.json).
    Formfind,
    /// Static sag and natural frequencies (writes sag.json, modal.json).
    Analyze,
    /// Mode-shape animation frames (writes modes.csv).
    Modes,
    /// Strut-to-strut distances (writes clearance.csv).
    Clearance,
    /// Reorientation, strut angles and post layout (writes plan.json, report.txt).
    Scaffold,
    /// Cut files and post list (writes base.dxf, strut.dxf, posts.csv).
    Export,
    /// Every stage in order.
    All,
}

impl Command {
    fn stages(self) -> &'static [Stage] {
        match self {
            Command::Formfind => &[Stage::FormFind],
            Command::Analyze => &[Stage::Analyze],
            Command::Modes => &[Stage::Modes],
            Command::Clearance => &[Stage::Clearance],
            Command::Scaffold => &[Stage::Scaffold],
            Command::Export => &[Stage::Export],
            Command::All => &Stage::PIPELINE,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let cfg = match RunConfig::load(&cli.config, &cli.overrides) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("tforge: configuration error: {msg}");
            return ExitCode::from(2);
        }
    };
    for stage in cli.command.stages() {
        if let Err(e) = stage.run(&cfg) {
            eprintln!("tforge: {} failed: {e:#}", stage.name());
            return ExitCode::from(1);
        }
    }
    ExitCode::SUCCESS
}
