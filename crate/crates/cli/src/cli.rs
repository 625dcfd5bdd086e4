//! Argument parsing.

use clap::{Args, Parser, Subcommand};

use crate::config::{CommandKind, CommonArgs, RunConfig};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "keldysh", version, about = "Spectra, response and fluctuations of a dissipative bosonic mode")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Include the O(1/N) fluctuation correction
    #[arg(long)]
    pub fluct: bool,
    /// Also locate the transition coupling by bisection
    #[arg(long)]
    pub check_transition: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mode frequencies against coupling
    Spectrum(SpectrumArgs),
    /// Spectral response surface A(ω, γ)
    Response(CommonArgs),
    /// Keldysh correlator surface iG^K(ω, γ)
    Correlation(CommonArgs),
    /// Occupation against coupling with exponent fits
    Density(CommonArgs),
    /// Effective temperature against coupling
    Teff(CommonArgs),
    /// Same as `spectrum --fluct`
    Fluct(SpectrumArgs),
    /// Lindblad and Lyapunov reference solutions
    Oracle(CommonArgs),
    /// Run all consistency checks; exits 1 if any fails
    Validate(CommonArgs),
}

impl Command {
    pub fn resolve(&self) -> Result<RunConfig> {
        let (kind, common, spectrum) = match self {
            Command::Spectrum(a) => (CommandKind::Spectrum, &a.common, Some(a)),
            Command::Fluct(a) => (CommandKind::Fluct, &a.common, Some(a)),
            Command::Response(c) => (CommandKind::Response, c, None),
            Command::Correlation(c) => (CommandKind::Correlation, c, None),
            Command::Density(c) => (CommandKind::Density, c, None),
            Command::Teff(c) => (CommandKind::Teff, c, None),
            Command::Oracle(c) => (CommandKind::Oracle, c, None),
            Command::Validate(c) => (CommandKind::Validate, c, None),
        };
        let mut cfg = RunConfig::resolve(kind, common)?;
        if let Some(a) = spectrum {
            cfg.fluct |= a.fluct;
            cfg.check_transition |= a.check_transition;
        }
        Ok(cfg)
    }
}
