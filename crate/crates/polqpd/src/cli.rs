use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::config::{
    parse_complex, CharFunction, Command, HighlightSpec, RunConfig, SettingsSpec, StateSpec,
    Surface,
};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "polqpd",
    version,
    about = "Polarization quasi-probability distributions and tomography"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Evaluate a characteristic function on a (u2, u3) grid.
    Charfn(Flags),
    /// Closed-form and regularized PQPD surfaces.
    Pqpd(Flags),
    /// Photocount-difference tomograms, exact (shots = 0) or sampled.
    Simulate(Flags),
    /// Reconstruct a PQPD grid from tomograms.
    Reconstruct(Flags),
    /// Negative volume of the highlighted squeezed single photon over r and eps2.
    Negativity(Flags),
    /// Write the data behind the standard figures with pinned parameters.
    Figures(Flags),
}

impl Sub {
    pub fn split(self) -> (Command, Flags) {
        match self {
            Sub::Charfn(f) => (Command::Charfn, f),
            Sub::Pqpd(f) => (Command::Pqpd, f),
            Sub::Simulate(f) => (Command::Simulate, f),
            Sub::Reconstruct(f) => (Command::Reconstruct, f),
            Sub::Negativity(f) => (Command::Negativity, f),
            Sub::Figures(f) => (Command::Figures, f),
        }
    }
}

/// Overrides for [`RunConfig`] fields.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $POLQPD_OUTPUT_DIR, then ./polqpd-out).
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shots per setting; 0 gives exact distributions.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// vacuum | fock:N | coherent:RE,IM | squeezed-vacuum:R | squeezed-fock1:R | poissonian:MEAN | mixture:P0,P1,..
    #[arg(long, allow_hyphen_values = true)]
    pub state: Option<StateSpec>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Highlighting amplitude before loss, RE or RE,IM.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub alpha0: Option<Complex64>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_count: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_slice: Option<f64>,
    #[arg(long)]
    pub fourier_n: Option<usize>,
    #[arg(long)]
    pub du: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub lambda_count: Option<usize>,
    /// phi-scan:COUNT | lattice:N_THETA,N_PHI | single:THETA,PHI
    #[arg(long)]
    pub settings: Option<SettingsSpec>,
    #[arg(long, value_enum)]
    pub function: Option<CharFunction>,
    #[arg(long, value_enum)]
    pub surface: Option<Surface>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long)]
    pub eps2: Option<f64>,
    /// Quadrature tolerance for charfn and negativity.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub sweep_r: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sweep_eps2: Vec<f64>,
    /// Tomogram file for `reconstruct` (repeatable).
    #[arg(long = "input")]
    pub inputs: Vec<PathBuf>,
}

macro_rules! set {
    ($flag:expr => $field:expr) => {
        if let Some(v) = $flag {
            $field = v;
        }
    };
}

impl Flags {
    /// Config file (or defaults) with every given flag applied on top.
    pub fn resolve(self, command: Command) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(other) = c.command {
            if other != command {
                return Err(CliError::Config(format!(
                    "config file is for `{other:?}` but `{command:?}` was requested"
                )));
            }
        }
        c.command = Some(command);
        if self.output_dir.is_some() {
            c.output_dir = self.output_dir;
        }
        set!(self.seed => c.seed);
        set!(self.shots => c.shots);
        set!(self.gamma => c.gamma);
        set!(self.state => c.state);
        set!(self.eta => c.detector.eta);
        set!(self.sigma => c.detector.sigma);
        if let Some(a) = self.alpha0 {
            c.highlight = Some(HighlightSpec { alpha0: a });
        }
        set!(self.grid_min => c.grid.min);
        set!(self.grid_max => c.grid.max);
        set!(self.grid_count => c.grid.count);
        set!(self.grid_slice => c.grid.slice);
        set!(self.fourier_n => c.fourier.n);
        set!(self.du => c.fourier.du);
        set!(self.lambda_max => c.fourier.lambda_max);
        set!(self.lambda_count => c.fourier.lambda_count);
        set!(self.settings => c.settings);
        set!(self.function => c.charfn.function);
        set!(self.surface => c.pqpd.surface);
        set!(self.m => c.pqpd.m);
        set!(self.r => c.pqpd.r);
        if self.eps2.is_some() {
            c.pqpd.eps2 = self.eps2;
        }
        if let Some(t) = self.tolerance {
            c.charfn.tolerance = t;
            c.negativity.tolerance = t;
        }
        if !self.sweep_r.is_empty() {
            c.negativity.r = self.sweep_r;
        }
        if !self.sweep_eps2.is_empty() {
            c.negativity.eps2 = self.sweep_eps2;
        }
        if !self.inputs.is_empty() {
            c.reconstruct.inputs = self.inputs;
        }
        c.resolve_output_dir();
        c.validate()?;
        Ok(c)
    }
}
