//! Keldysh–Nambu Green's functions of the dissipative mode.
//!
//! With `a = ω − ω₀ + ik` and `b = −ω − ω₀ − ik` the retarded inverse is
//!
//! ```text
//! [G^R]⁻¹(ω) = | a + Σ(ω)   Σ(ω)     |
//!              | Σ(ω)       b + Σ(ω) |
//! ```
//!
//! for the real, even self-energy Σ. The Keldysh block of the inverse is
//! `2ik·I`, so `iG^K = 2k G^R (G^R)†`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, SelfEnergyFn};
use crate::error::{domain, Error, Result};
use crate::model::{BosonModel, MeanField};
use crate::quadrature::Tolerance;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// A 2×2 complex matrix in (particle, hole) space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NambuMatrix(pub [[Complex64; 2]; 2]);

impl NambuMatrix {
    pub fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Self([[a11, a12], [a21, a22]])
    }

    pub fn identity() -> Self {
        Self::new(re(1.0), re(0.0), re(0.0), re(1.0))
    }

    pub fn sigma_x() -> Self {
        Self::new(re(0.0), re(1.0), re(1.0), re(0.0))
    }

    pub fn sigma_z() -> Self {
        Self::new(re(1.0), re(0.0), re(0.0), re(-1.0))
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if det.norm() == 0.0 || !det.is_finite() {
            return Err(Error::SingularIntegrand("Nambu matrix is not invertible".into()));
        }
        let [[a, b], [c, d]] = self.0;
        Ok(Self::new(d / det, -b / det, -c / det, a / det))
    }

    pub fn adjoint(&self) -> Self {
        let [[a, b], [c, d]] = self.0;
        Self::new(a.conj(), c.conj(), b.conj(), d.conj())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let [[a, b], [c, d]] = self.0;
        Self::new(a * factor, b * factor, c * factor, d * factor)
    }

    /// Both eigenvalues, from the characteristic polynomial.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_tr = self.trace() * 0.5;
        let disc = (half_tr * half_tr - self.det()).sqrt();
        [half_tr + disc, half_tr - disc]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }
}

impl Mul for NambuMatrix {
    type Output = NambuMatrix;
    fn mul(self, rhs: NambuMatrix) -> NambuMatrix {
        let mut out = [[re(0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = self.0[r][0] * rhs.0[0][c] + self.0[r][1] * rhs.0[1][c];
            }
        }
        NambuMatrix(out)
    }
}

impl Add for NambuMatrix {
    type Output = NambuMatrix;
    fn add(self, rhs: NambuMatrix) -> NambuMatrix {
        let mut out = self.0;
        for (r, row) in out.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry += rhs.0[r][c];
            }
        }
        NambuMatrix(out)
    }
}

impl Sub for NambuMatrix {
    type Output = NambuMatrix;
    fn sub(self, rhs: NambuMatrix) -> NambuMatrix {
        self + rhs.scale(re(-1.0))
    }
}

/// Whether grid values are in units of the bath cutoff Ω or absolute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreqUnits {
    /// ω̃ = ω/Ω
    #[default]
    Scaled,
    Absolute,
}

/// A strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqGrid {
    values: Vec<f64>,
    pub units: FreqUnits,
}

impl FreqGrid {
    pub fn new(values: Vec<f64>, units: FreqUnits) -> Result<Self> {
        if values.len() < 2 {
            return domain("frequency grid needs at least two points");
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
            return domain("frequency grid must be finite and strictly increasing");
        }
        Ok(Self { values, units })
    }

    pub fn linspace(min: f64, max: f64, count: usize, units: FreqUnits) -> Result<Self> {
        if count < 2 {
            return domain("frequency grid needs at least two points");
        }
        let step = (max - min) / (count - 1) as f64;
        let values = (0..count)
            .map(|i| if i + 1 == count { max } else { min + step * i as f64 })
            .collect();
        Self::new(values, units)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Absolute frequencies for a bath with cutoff `omega_c`.
    pub fn absolute(&self, omega_c: f64) -> Vec<f64> {
        match self.units {
            FreqUnits::Scaled => self.values.iter().map(|w| w * omega_c).collect(),
            FreqUnits::Absolute => self.values.clone(),
        }
    }
}

/// The mode together with its bath self-energy; all Green's-function
/// quantities are methods on this.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledSystem {
    pub model: BosonModel,
    pub sigma: SelfEnergyFn,
}

impl CoupledSystem {
    pub fn new(model: &BosonModel, bath: &BathSpec) -> Result<Self> {
        Ok(Self {
            model: *model,
            sigma: SelfEnergyFn::new(bath)?,
        })
    }

    pub fn with_sigma(model: &BosonModel, sigma: SelfEnergyFn) -> Self {
        Self { model: *model, sigma }
    }

    pub fn bath(&self) -> &BathSpec {
        &self.sigma.bath
    }

    /// Same system at a different coupling γ.
    pub fn at_gamma(&self, gamma: f64) -> Self {
        let mut out = *self;
        out.sigma.bath = self.sigma.bath.with_gamma(gamma);
        out
    }

    /// `det [G^R]⁻¹(0) = k² + ω₀² − 2ω₀Σ(0)`; positive in the stable normal phase.
    pub fn zero_frequency_det(&self) -> Result<f64> {
        let m = &self.model;
        Ok(m.k * m.k + m.omega0 * m.omega0 - 2.0 * m.omega0 * self.sigma.at_zero()?)
    }

    /// Coupling where `det [G^R]⁻¹(0)` vanishes, from the linearity of Σ in γ.
    pub fn transition_coupling(&self) -> Result<f64> {
        self.model.require_positive_omega0()?;
        let per_gamma = self.sigma.zero_frequency_per_coupling()?;
        let m = &self.model;
        Ok((m.omega0 * m.omega0 + m.k * m.k) / (2.0 * m.omega0 * per_gamma))
    }

    pub fn gr_inverse(&self, omega: f64) -> Result<NambuMatrix> {
        let s = re(self.sigma.eval(omega)?);
        let m = &self.model;
        Ok(NambuMatrix::new(
            re(omega - m.omega0) + I * m.k + s,
            s,
            s,
            re(-omega - m.omega0) - I * m.k + s,
        ))
    }

    pub fn retarded(&self, omega: f64) -> Result<NambuMatrix> {
        self.gr_inverse(omega)?.inverse()
    }

    // |det [G^R]⁻¹|² and Σ at ω
    fn denominator(&self, omega: f64) -> Result<(f64, f64)> {
        let m = &self.model;
        let s = self.sigma.eval(omega)?;
        let p = omega * omega - m.k * m.k - m.omega0 * m.omega0 + 2.0 * m.omega0 * s;
        Ok((p * p + 4.0 * omega * omega * m.k * m.k, s))
    }

    /// `A(ω) = −2 Im G^R₁₁(ω)`.
    pub fn spectral_response(&self, omega: f64) -> Result<f64> {
        let m = &self.model;
        if m.k == 0.0 {
            return Err(Error::DistributionalLimit("spectral response A(ω)"));
        }
        let (den, s) = self.denominator(omega)?;
        let k = m.k;
        let num = (omega * omega + k * k + m.omega0 * m.omega0 + 2.0 * omega * m.omega0) * k
            - 2.0 * k * (m.omega0 + omega) * s;
        Ok(2.0 * num / den)
    }

    /// `iG^K₁₁(ω)`.
    pub fn keldysh_correlator(&self, omega: f64) -> Result<f64> {
        let m = &self.model;
        if m.k == 0.0 {
            return Err(Error::DistributionalLimit("Keldysh correlator iG^K(ω)"));
        }
        let (den, s) = self.denominator(omega)?;
        let shifted = omega + m.omega0 - s;
        Ok(2.0 * m.k * (shifted * shifted + m.k * m.k + s * s) / den)
    }

    /// `iG^K = 2k G^R (G^R)†` as a full Nambu matrix.
    pub fn keldysh_matrix(&self, omega: f64) -> Result<NambuMatrix> {
        let gr = self.retarded(omega)?;
        Ok((gr * gr.adjoint()).scale(re(2.0 * self.model.k)))
    }

    /// `iG^K` rebuilt from the distribution matrix, `i(G^R F − F G^A)`.
    pub fn keldysh_from_distribution(&self, omega: f64) -> Result<NambuMatrix> {
        let gr = self.retarded(omega)?;
        let f = self.distribution_matrix(omega, None)?;
        Ok((gr * f - f * gr.adjoint()).scale(I))
    }

    /// Coefficient `c(ω)` of `σ^x` in `F(ω) = σ^z + c σ^x`.
    fn distribution_offdiag(&self, omega: f64, fluct: Option<&MeanField>) -> Result<f64> {
        Ok((self.sigma.eval(omega)? - self.fluctuation_shift(fluct)) / omega)
    }

    /// `F(ω) = σ^z + (1/ω)[Σ(ω) − (λ/4N)(φ₀² + φ̄₀²)] σ^x`; the bracket
    /// reduces to Σ(ω) without a mean field.
    pub fn distribution_matrix(&self, omega: f64, fluct: Option<&MeanField>) -> Result<NambuMatrix> {
        if omega == 0.0 {
            return domain("distribution matrix is singular at omega = 0");
        }
        let c = re(self.distribution_offdiag(omega, fluct)?);
        Ok(NambuMatrix::sigma_z() + NambuMatrix::sigma_x().scale(c))
    }

    /// `T_eff = ½ lim_{ω→0⁺} ω λ₊(ω)` where `λ₊ = √(1 + c²)` is the positive
    /// eigenvalue of F.
    ///
    /// `ω c(ω)` is continuous at 0, so the limit is `½|ω c(ω)|` at `ω = 0`.
    /// A Richardson table of `ω²λ₊²` in powers of ω² on
    /// `ω_n = 10⁻² min(ω₀, Ω) 2⁻ⁿ` (8 levels) must agree with it.
    pub fn effective_temperature(&self, fluct: Option<&MeanField>) -> Result<f64> {
        Ok(self.teff_estimate(fluct)?.value)
    }

    pub fn teff_estimate(&self, fluct: Option<&MeanField>) -> Result<TeffEstimate> {
        const LEVELS: usize = 8;
        let mut sys = *self;
        sys.sigma = sys
            .sigma
            .with_tolerance(Tolerance::new(1e-15, 1e-13).with_max_intervals(10_000));
        let limit = sys.sigma.at_zero()? - sys.fluctuation_shift(fluct);
        let value = 0.5 * limit.abs();

        let om = self.sigma.bath.omega_c;
        let w0 = self.model.omega0.abs();
        let start = 1e-2 * if w0 > 0.0 { w0.min(om) } else { om };
        let mut table: Vec<Vec<f64>> = Vec::with_capacity(LEVELS);
        for n in 0..LEVELS {
            let w = start * 0.5f64.powi(n as i32);
            let wc = w * sys.distribution_offdiag(w, fluct)?;
            let mut row = vec![w * w + wc * wc];
            for j in 1..=n {
                let factor = 4f64.powi(j as i32);
                let prev = table[n - 1][j - 1];
                row.push(row[j - 1] + (row[j - 1] - prev) / (factor - 1.0));
            }
            table.push(row);
        }
        let extrapolated = 0.5 * table[LEVELS - 1][LEVELS - 1].max(0.0).sqrt();
        let scale = value.max(1e-300);
        if !extrapolated.is_finite() || (extrapolated - value).abs() > 1e-6 * scale {
            return Err(Error::ExtrapolationDivergence {
                extrapolated,
                limit: value,
            });
        }
        Ok(TeffEstimate {
            value,
            extrapolated,
            smallest_omega: start * 0.5f64.powi(LEVELS as i32 - 1),
        })
    }

    fn fluctuation_shift(&self, fluct: Option<&MeanField>) -> f64 {
        match fluct {
            Some(mf) => {
                let phi2 = mf.phi0 * mf.phi0;
                (phi2 + phi2.conj()).re * self.model.lambda / (4.0 * self.model.n as f64)
            }
            None => 0.0,
        }
    }
}

/// Effective temperature with the Richardson value used to check it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeffEstimate {
    pub value: f64,
    pub extrapolated: f64,
    pub smallest_omega: f64,
}

pub fn gr_inverse(model: &BosonModel, bath: &BathSpec, omega: f64) -> Result<NambuMatrix> {
    CoupledSystem::new(model, bath)?.gr_inverse(omega)
}

pub fn spectral_response(model: &BosonModel, bath: &BathSpec, omega: f64) -> Result<f64> {
    CoupledSystem::new(model, bath)?.spectral_response(omega)
}

pub fn keldysh_correlator(model: &BosonModel, bath: &BathSpec, omega: f64) -> Result<f64> {
    CoupledSystem::new(model, bath)?.keldysh_correlator(omega)
}

pub fn distribution_matrix(
    model: &BosonModel,
    bath: &BathSpec,
    omega: f64,
    fluct: Option<&MeanField>,
) -> Result<NambuMatrix> {
    CoupledSystem::new(model, bath)?.distribution_matrix(omega, fluct)
}

pub fn effective_temperature(model: &BosonModel, bath: &BathSpec, fluct: Option<&MeanField>) -> Result<f64> {
    CoupledSystem::new(model, bath)?.effective_temperature(fluct)
}
