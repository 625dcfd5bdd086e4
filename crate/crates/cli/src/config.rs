//! Run configuration: per-command defaults, JSON config files and flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use keldysh_core::bath::{BathSpec, CutoffFamily, SelfEnergyFn};
use keldysh_core::greens::CoupledSystem;
use keldysh_core::model::{bosonize, BosonModel, SpinModelParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Spectrum,
    Response,
    Correlation,
    Density,
    Teff,
    Fluct,
    Oracle,
    Validate,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Spectrum => "spectrum",
            CommandKind::Response => "response",
            CommandKind::Correlation => "correlation",
            CommandKind::Density => "density",
            CommandKind::Teff => "teff",
            CommandKind::Fluct => "fluct",
            CommandKind::Oracle => "oracle",
            CommandKind::Validate => "validate",
        }
    }
}

/// Model parameters, given either for the spin model or for the boson.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coupling {
    Boson { omega0: f64, lambda: f64 },
    Spin { j: f64, delta: f64 },
}

/// `lo:hi:n`, n points inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub const fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let ok = self.lo.is_finite()
            && self.hi.is_finite()
            && self.n >= 1
            && (self.lo < self.hi || (self.n == 1 && self.lo == self.hi));
        if ok {
            Ok(())
        } else {
            Err(CliError::Input(format!("{name} {self} must have lo < hi and n >= 1 (or lo = hi with n = 1)")))
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| if i + 1 == self.n { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:n, got `{s}`"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
        let n = parts[2].trim().parse::<usize>().map_err(|e| format!("`{}`: {e}", parts[2]))?;
        Ok(Grid::new(num(parts[0])?, num(parts[1])?, n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub coupling: Coupling,
    /// Number of spins N.
    pub n: u64,
    /// Markovian decay rates; most commands loop over them.
    pub k: Vec<f64>,
    /// Single bath coupling γ; replaces `gamma_grid` when set.
    pub gamma: Option<f64>,
    /// Couplings in units of γ₀ (absolute γ for `teff`).
    pub gamma_grid: Grid,
    /// Frequencies in units of Ω, or absolute with `absolute_units`.
    pub omega_grid: Grid,
    pub bath: Vec<CutoffFamily>,
    pub s: f64,
    /// Bath cutoffs Ω.
    pub omega_c: Vec<f64>,
    pub fluct: bool,
    pub check_transition: bool,
    pub absolute_units: bool,
    pub out: PathBuf,
    pub seed: u64,
    /// Bath modes of the Lyapunov oracle.
    pub modes: usize,
    /// Bath-mode damping of the Lyapunov oracle, in units of Ω.
    pub epsilon: f64,
    pub fock_cutoff: usize,
    pub fit_points: usize,
    /// Multiplies Σ everywhere; 1 except to check that validation catches
    /// a perturbed self-energy.
    pub sigma_prefactor: f64,
}

impl RunConfig {
    /// Defaults reproducing the corresponding figure.
    pub fn defaults(command: CommandKind) -> Self {
        let mut cfg = RunConfig {
            command,
            coupling: Coupling::Boson {
                omega0: 1.0,
                lambda: 0.3,
            },
            n: 100,
            k: vec![0.3],
            gamma: None,
            gamma_grid: Grid::new(0.0, 1.0, 101),
            omega_grid: Grid::new(-2.0, 2.0, 401),
            bath: vec![CutoffFamily::DrudeLorentz],
            s: 1.0,
            omega_c: vec![1.0],
            fluct: false,
            check_transition: false,
            absolute_units: false,
            out: PathBuf::from("out"),
            seed: 2024,
            modes: 800,
            epsilon: 1e-6,
            fock_cutoff: 20,
            fit_points: 24,
            sigma_prefactor: 1.0,
        };
        match command {
            CommandKind::Spectrum | CommandKind::Fluct => {
                cfg.coupling = Coupling::Boson {
                    omega0: 0.4,
                    lambda: 0.3,
                };
                cfg.k = vec![0.0, 0.3, 1.0];
                cfg.gamma_grid = Grid::new(0.0, 1.2, 241);
                cfg.fluct = command == CommandKind::Fluct;
            }
            CommandKind::Response | CommandKind::Correlation => {}
            CommandKind::Density => {
                cfg.k = vec![0.01, 0.03, 0.1, 0.3, 1.0];
                cfg.gamma_grid = Grid::new(0.0, 0.995, 200);
            }
            CommandKind::Teff => {
                cfg.k = vec![0.0, 0.3, 1.0];
                cfg.gamma_grid = Grid::new(0.0, 0.3, 7);
                cfg.bath = vec![CutoffFamily::DrudeLorentz, CutoffFamily::Exponential];
                cfg.omega_c = vec![1.0, 10.0, 100.0];
            }
            CommandKind::Oracle => {
                cfg.coupling = Coupling::Boson {
                    omega0: 1.0,
                    lambda: 0.0,
                };
                cfg.gamma_grid = Grid::new(0.2, 0.8, 3);
            }
            CommandKind::Validate => {
                cfg.gamma_grid = Grid::new(0.5, 0.5, 1);
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(CliError::Input(msg.to_string()));
        match self.coupling {
            Coupling::Boson { omega0, lambda } if !(omega0.is_finite() && lambda.is_finite()) => {
                return bad("omega0 and lambda must be finite");
            }
            Coupling::Spin { j, delta } if !(j.is_finite() && delta.is_finite()) => {
                return bad("J and Delta must be finite");
            }
            _ => {}
        }
        if self.n == 0 {
            return bad("N must be >= 1");
        }
        if self.k.is_empty() || self.k.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            return bad("decay rates k must be finite and >= 0");
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g >= 0.0) {
                return bad("gamma must be finite and >= 0");
            }
        }
        self.gamma_grid.validate("gamma grid")?;
        self.omega_grid.validate("omega grid")?;
        if self.bath.is_empty() {
            return bad("at least one bath family is required");
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return bad("bath exponent s must be > 0");
        }
        if self.omega_c.is_empty() || self.omega_c.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("cutoffs Omega must be finite and > 0");
        }
        if self.modes == 0 || self.fock_cutoff < 2 || self.fit_points < 8 {
            return bad("need modes >= 1, fock cutoff >= 2 and fit points >= 8");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be > 0");
        }
        if !(self.sigma_prefactor.is_finite()) {
            return bad("sigma prefactor must be finite");
        }
        Ok(())
    }

    /// The boson model for decay rate `k`.
    pub fn model(&self, k: f64) -> Result<BosonModel> {
        let model = match self.coupling {
            Coupling::Boson { omega0, lambda } => BosonModel::new(omega0, lambda, self.n, k)?,
            Coupling::Spin { j, delta } => bosonize(&SpinModelParams::new(j, delta, self.n, k)?),
        };
        Ok(model)
    }

    pub fn bath_spec(&self, family: CutoffFamily, omega_c: f64, gamma: f64) -> Result<BathSpec> {
        Ok(BathSpec::new(family, self.s, omega_c, gamma)?)
    }

    /// System with the first bath family and cutoff at coupling γ.
    pub fn system(&self, model: &BosonModel, gamma: f64) -> Result<CoupledSystem> {
        self.system_with(model, self.bath[0], self.omega_c[0], gamma)
    }

    pub fn system_with(&self, model: &BosonModel, family: CutoffFamily, omega_c: f64, gamma: f64) -> Result<CoupledSystem> {
        let sigma = SelfEnergyFn::new(&self.bath_spec(family, omega_c, gamma)?)?.with_prefactor(self.sigma_prefactor);
        Ok(CoupledSystem::with_sigma(model, sigma))
    }

    /// Couplings in units of γ₀.
    pub fn gamma_ratios(&self, gamma0: f64) -> Vec<f64> {
        match self.gamma {
            Some(g) => vec![g / gamma0],
            None => self.gamma_grid.values(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    /// Defaults for `command`, overlaid with a (possibly partial) JSON file
    /// and then with explicit flags.
    pub fn resolve(command: CommandKind, flags: &CommonArgs) -> Result<Self> {
        let mut value = serde_json::to_value(Self::defaults(command)).expect("config serializes");
        if let Some(path) = &flags.config {
            let overlay = read_json(path)?;
            let serde_json::Value::Object(fields) = overlay else {
                return Err(CliError::Input(format!("{}: expected a JSON object", path.display())));
            };
            let target = value.as_object_mut().expect("config is an object");
            for (key, v) in fields {
                if key != "command" {
                    target.insert(key, v);
                }
            }
        }
        let mut cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| CliError::Input(format!("config: {e}")))?;
        flags.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_family(s: &str) -> std::result::Result<CutoffFamily, String> {
    s.parse().map_err(|e: keldysh_core::Error| e.to_string())
}

/// Flags shared by all subcommands. Unset flags keep the configured value.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Spin exchange J (with --Delta)
    #[arg(long = "J", requires = "delta", conflicts_with_all = ["omega0", "lambda"], allow_hyphen_values = true)]
    pub j: Option<f64>,
    /// Spin anisotropy Δ (with --J)
    #[arg(long = "Delta", requires = "j", allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Mode frequency ω₀
    #[arg(long, allow_hyphen_values = true)]
    pub omega0: Option<f64>,
    /// Interaction λ
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Decay rate(s) k, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Option<Vec<f64>>,
    /// Number of spins N
    #[arg(long = "N")]
    pub n: Option<u64>,
    /// Single bath coupling γ
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Coupling grid lo:hi:n in units of γ₀ (absolute γ for teff)
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_grid: Option<Grid>,
    /// Frequency grid lo:hi:n in units of Ω (absolute with --absolute-units)
    #[arg(long, allow_hyphen_values = true)]
    pub omega_grid: Option<Grid>,
    /// Bath cutoff family: drude|exp (comma separated for teff)
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    pub bath: Option<Vec<CutoffFamily>>,
    /// Spectral exponent s
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// Bath cutoff(s) Ω, comma separated
    #[arg(long = "Omega", value_delimiter = ',', allow_hyphen_values = true)]
    pub omega_c: Option<Vec<f64>>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report frequencies in absolute units instead of ω/Ω
    #[arg(long)]
    pub absolute_units: bool,
    /// Seed for randomized checks
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bath modes of the Lyapunov oracle
    #[arg(long)]
    pub modes: Option<usize>,
    /// Bath-mode damping of the Lyapunov oracle, in units of Ω
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Initial Fock cutoff of the Lindblad oracle
    #[arg(long)]
    pub fock_cutoff: Option<usize>,
    /// Samples per exponent fit
    #[arg(long)]
    pub fit_points: Option<usize>,
    #[arg(long, hide = true, allow_hyphen_values = true)]
    pub sigma_prefactor: Option<f64>,
}

impl CommonArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let (Some(j), Some(delta)) = (self.j, self.delta) {
            cfg.coupling = Coupling::Spin { j, delta };
        }
        if self.omega0.is_some() || self.lambda.is_some() {
            let (w0, lam) = match cfg.coupling {
                Coupling::Boson { omega0, lambda } => (omega0, lambda),
                Coupling::Spin { .. } => {
                    return Err(CliError::Input(
                        "--omega0/--lambda cannot be combined with spin parameters from the config".into(),
                    ))
                }
            };
            cfg.coupling = Coupling::Boson {
                omega0: self.omega0.unwrap_or(w0),
                lambda: self.lambda.unwrap_or(lam),
            };
        }
        macro_rules! set {
            ($field:ident, $value:expr) => {
                if let Some(v) = $value.clone() {
                    cfg.$field = v;
                }
            };
        }
        set!(k, self.k);
        set!(n, self.n);
        set!(gamma_grid, self.gamma_grid);
        set!(omega_grid, self.omega_grid);
        set!(bath, self.bath);
        set!(s, self.s);
        set!(omega_c, self.omega_c);
        set!(out, self.out);
        set!(seed, self.seed);
        set!(modes, self.modes);
        set!(epsilon, self.epsilon);
        set!(fock_cutoff, self.fock_cutoff);
        set!(fit_points, self.fit_points);
        set!(sigma_prefactor, self.sigma_prefactor);
        if self.gamma.is_some() {
            cfg.gamma = self.gamma;
        }
        if self.absolute_units {
            cfg.absolute_units = true;
        }
        Ok(())
    }
}
