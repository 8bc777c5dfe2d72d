//! `moire` command-line driver: parses a TOML run configuration, applies
//! per-command flag overrides and dispatches to the simulation pipeline.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! computation or file operation fails.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use moire_core::geometry::LatticeKind;

use crate::config::{parse_config, ConfigError, RunConfig};
use crate::output::{Meta, Sink};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] moire_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "moire", version, about = "Moiré quantum-dot qubit simulations")]
pub struct Cli {
    /// TOML run configuration; defaults apply to every missing key.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides output.directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Monte-Carlo seed (overrides protocol.readout.seed).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LatticeArg {
    Square,
    Triangular,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moiré period for a twist angle.
    Geometry {
        /// Twist angle, degrees.
        #[arg(long)]
        angle: Option<f64>,
        /// Monolayer lattice constant, nm.
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, value_enum)]
        lattice: Option<LatticeArg>,
    },
    /// Continuum band structure at one twist angle.
    Bands {
        /// Twist angle, degrees.
        #[arg(long)]
        angle: Option<f64>,
        /// Grid points along x.
        #[arg(long)]
        nx: Option<usize>,
        /// Bands to compute.
        #[arg(long)]
        n_bands: Option<usize>,
    },
    /// Tight-binding bands, self-consistent when interactions are set.
    TbBands {
        /// Twist angle, degrees.
        #[arg(long)]
        angle: Option<f64>,
        /// Nearest-neighbour hopping, meV.
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        /// Electrons per site and orbital.
        #[arg(long)]
        filling: Option<f64>,
    },
    /// Lifetime budget, linewidth and thermal escape probability.
    Lifetime {
        /// Temperature, K.
        #[arg(long)]
        temperature: Option<f64>,
        /// Phonon-limited lifetime, s.
        #[arg(long)]
        tau_ep: Option<f64>,
        /// Barrier, meV.
        #[arg(long)]
        barrier: Option<f64>,
    },
    /// Driven single-qubit evolution.
    Qubit {
        /// Rabi frequency, rad/ps.
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<f64>,
        /// Detuning, rad/ps.
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        /// Magnetic field, T.
        #[arg(long)]
        b: Option<f64>,
        /// Evolution time, ps.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Coupled pair of qubits on neighbouring dots.
    TwoQubit {
        /// Inter-qubit distance, nm.
        #[arg(long)]
        r: Option<f64>,
        /// Twist angle, degrees.
        #[arg(long)]
        angle: Option<f64>,
        /// Evolution time, ps.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Optical pumping and single-shot readout.
    Protocol {
        /// Readout Monte-Carlo trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Magnetic field, T.
        #[arg(long)]
        b: Option<f64>,
    },
    /// Filter and rank candidate materials from a CSV table.
    Screen {
        /// Dataset; the bundled sample when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Bandwidth decay over several twist angles plus the downstream budget.
    Sweep {
        /// Comma-separated twist angles in degrees.
        #[arg(long, value_delimiter = ',')]
        angles: Option<Vec<f64>>,
        /// Grid points along x.
        #[arg(long)]
        nx: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Geometry { .. } => "geometry",
            Command::Bands { .. } => "bands",
            Command::TbBands { .. } => "tb-bands",
            Command::Lifetime { .. } => "lifetime",
            Command::Qubit { .. } => "qubit",
            Command::TwoQubit { .. } => "two-qubit",
            Command::Protocol { .. } => "protocol",
            Command::Screen { .. } => "screen",
            Command::Sweep { .. } => "sweep",
        }
    }

    /// Writes the flag overrides into the config.
    pub fn apply(&self, cfg: &mut RunConfig) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        match self {
            Command::Geometry { angle, a, lattice } => {
                set(&mut cfg.sweep.angle, angle);
                set(&mut cfg.material.a, a);
                if let Some(l) = lattice {
                    cfg.material.lattice = match l {
                        LatticeArg::Square => LatticeKind::Square,
                        LatticeArg::Triangular => LatticeKind::Triangular,
                    };
                }
            }
            Command::Bands { angle, nx, n_bands } => {
                set(&mut cfg.sweep.angle, angle);
                set(&mut cfg.solver.nx, nx);
                set(&mut cfg.solver.n_bands, n_bands);
            }
            Command::TbBands { angle, t, filling } => {
                set(&mut cfg.sweep.angle, angle);
                set(&mut cfg.tightbinding.t, t);
                set(&mut cfg.tightbinding.filling, filling);
            }
            Command::Lifetime { temperature, tau_ep, barrier } => {
                set(&mut cfg.decoherence.temperature, temperature);
                if tau_ep.is_some() {
                    cfg.decoherence.tau_ep = *tau_ep;
                }
                set(&mut cfg.decoherence.barrier, barrier);
            }
            Command::Qubit { omega, delta, b, duration } => {
                set(&mut cfg.qubit.omega, omega);
                set(&mut cfg.qubit.delta, delta);
                set(&mut cfg.qubit.b, b);
                if duration.is_some() {
                    cfg.qubit.duration = *duration;
                }
            }
            Command::TwoQubit { r, angle, duration } => {
                if r.is_some() {
                    cfg.qubit.r = *r;
                }
                if angle.is_some() {
                    cfg.qubit.angle = *angle;
                }
                if duration.is_some() {
                    cfg.qubit.duration = *duration;
                }
            }
            Command::Protocol { trials, b } => {
                set(&mut cfg.protocol.readout.trials, trials);
                set(&mut cfg.qubit.b, b);
            }
            Command::Screen { input } => {
                if input.is_some() {
                    cfg.screen.input = input.clone();
                }
            }
            Command::Sweep { angles, nx } => {
                set(&mut cfg.sweep.angles, angles);
                set(&mut cfg.solver.nx, nx);
            }
        }
    }
}

/// Loads the config named by `--config` (or the defaults) and applies the
/// global and per-command overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    cli.command.apply(&mut cfg);
    if let Some(seed) = cli.seed {
        cfg.protocol.readout.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.directory = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one parsed command; returns the summary line.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let cfg = resolve_config(cli)?;
    let meta = Meta::new(cli.command.name(), cfg.hash());
    let mut sink = Sink::new(&cfg.output.directory, &cfg.output, meta);
    match &cli.command {
        Command::Geometry { .. } => commands::geometry(&cfg, &mut sink),
        Command::Bands { .. } => commands::bands(&cfg, &mut sink),
        Command::TbBands { .. } => commands::tb_bands(&cfg, &mut sink),
        Command::Lifetime { .. } => commands::lifetime(&cfg, &mut sink),
        Command::Qubit { .. } => commands::qubit(&cfg, &mut sink),
        Command::TwoQubit { .. } => commands::two_qubit(&cfg, &mut sink),
        Command::Protocol { .. } => commands::protocol(&cfg, &mut sink),
        Command::Screen { .. } => commands::screen_cmd(&cfg, &mut sink),
        Command::Sweep { .. } => commands::sweep(&cfg, &mut sink),
    }
}

/// Full entry point: parses `args` (program name first), runs, prints the
/// summary or the error, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
