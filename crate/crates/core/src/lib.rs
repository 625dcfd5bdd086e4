//! Keldysh field theory of a driven-dissipative collective spin coupled to a
//! bosonic bath: Green's functions, mode spectra, steady-state observables and
//! independent oracles.

pub mod bath;
pub mod error;
pub mod export;
pub mod greens;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod poly;
pub mod quadrature;
pub mod spectrum;

pub use bath::{BathSpec, CutoffFamily, SelfEnergyFn};
pub use error::{Error, Result};
pub use greens::{CoupledSystem, FreqGrid, FreqUnits, NambuMatrix};
pub use model::{BosonModel, MeanField, SpinModelParams};
pub use spectrum::{ModeSet, RootClass};
pub use observables::{ExponentFit, SweepResult};
