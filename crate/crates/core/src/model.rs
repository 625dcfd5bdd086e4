//! The infinite-range Heisenberg spin model, its Holstein–Primakoff boson
//! form, and the saddle-point mean field.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, SelfEnergyFn};
use crate::error::{domain, Error, Result};

/// Microscopic spin-model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinModelParams {
    /// Exchange coupling J > 0.
    pub j: f64,
    /// Anisotropy Δ ≥ 0.
    pub delta: f64,
    /// Number of spin-1/2 particles.
    pub n: u64,
    /// Spin-flip (decay) rate.
    pub k: f64,
}

impl SpinModelParams {
    pub fn new(j: f64, delta: f64, n: u64, k: f64) -> Result<Self> {
        if !(j > 0.0 && j.is_finite()) {
            return domain(format!("exchange coupling J must be > 0, got {j}"));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return domain(format!("anisotropy Delta must be >= 0, got {delta}"));
        }
        if n == 0 {
            return domain("particle number N must be >= 1");
        }
        check_decay(k)?;
        Ok(Self { j, delta, n, k })
    }
}

fn check_decay(k: f64) -> Result<()> {
    if !(k >= 0.0 && k.is_finite()) {
        return domain(format!("decay rate k must be >= 0, got {k}"));
    }
    Ok(())
}

/// Self-interacting bosonic mode `ω₀ a†a + (λ/N)(a†a)²` with decay `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BosonModel {
    pub omega0: f64,
    pub lambda: f64,
    pub n: u64,
    pub k: f64,
}

impl BosonModel {
    pub fn new(omega0: f64, lambda: f64, n: u64, k: f64) -> Result<Self> {
        if !omega0.is_finite() || !lambda.is_finite() {
            return domain("omega0 and lambda must be finite");
        }
        if n == 0 {
            return domain("particle number N must be >= 1");
        }
        check_decay(k)?;
        Ok(Self { omega0, lambda, n, k })
    }

    pub fn with_k(&self, k: f64) -> Self {
        Self { k, ..*self }
    }

    pub fn with_n(&self, n: u64) -> Self {
        Self { n, ..*self }
    }

    /// Non-empty when ω₀ or λ is not positive; the mean-field formulas need
    /// both to be positive.
    pub fn sign_warning(&self) -> Option<String> {
        let mut problems = Vec::new();
        if self.omega0 <= 0.0 {
            problems.push(format!("omega0 = {} <= 0", self.omega0));
        }
        if self.lambda <= 0.0 {
            problems.push(format!("lambda = {} <= 0", self.lambda));
        }
        (!problems.is_empty()).then(|| {
            format!(
                "{}; mean-field operations will reject this model",
                problems.join(", ")
            )
        })
    }

    pub(crate) fn require_positive_omega0(&self) -> Result<()> {
        if self.omega0 <= 0.0 {
            return domain(format!("requires omega0 > 0, got {}", self.omega0));
        }
        Ok(())
    }

    pub(crate) fn require_positive_lambda(&self) -> Result<()> {
        if self.lambda <= 0.0 {
            return domain(format!("requires lambda > 0, got {}", self.lambda));
        }
        Ok(())
    }
}

/// Maps the spin model onto the bosonic mode: `ω₀ = J(1−2Δ)`, `λ = J(Δ−1)`.
///
/// Non-positive ω₀ or λ is logged, not rejected.
pub fn bosonize(params: &SpinModelParams) -> BosonModel {
    let model = BosonModel {
        omega0: params.j * (1.0 - 2.0 * params.delta),
        lambda: params.j * (params.delta - 1.0),
        n: params.n,
        k: params.k,
    };
    if let Some(w) = model.sign_warning() {
        log::warn!("bosonize(J = {}, Delta = {}): {w}", params.j, params.delta);
    }
    model
}

/// γ₀ = (ω₀² + k²) / (π ω₀).
pub fn critical_coupling(model: &BosonModel) -> Result<f64> {
    model.require_positive_omega0()?;
    Ok((model.omega0 * model.omega0 + model.k * model.k) / (PI * model.omega0))
}

/// Condensate amplitude at one coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanField {
    pub phi0: Complex64,
    pub broken: bool,
    pub gamma: f64,
}

impl MeanField {
    pub fn normal(gamma: f64) -> Self {
        Self {
            phi0: Complex64::new(0.0, 0.0),
            broken: false,
            gamma,
        }
    }

    pub fn from_phi(phi0: Complex64, gamma: f64) -> Self {
        Self {
            phi0,
            broken: phi0.norm() > 0.0,
            gamma,
        }
    }
}

/// `|φ₀| = √(Nπ/λ) (γ₀ − γ)^{1/2}` below γ₀, zero above.
///
/// The amplitude is reported as a non-negative real number.
pub fn mean_field_amplitude(model: &BosonModel, gamma: f64) -> Result<MeanField> {
    model.require_positive_omega0()?;
    model.require_positive_lambda()?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return domain(format!("coupling gamma must be >= 0, got {gamma}"));
    }
    let gamma0 = critical_coupling(model)?;
    if gamma >= gamma0 {
        return Ok(MeanField::normal(gamma));
    }
    let amplitude = (model.n as f64 * PI / model.lambda).sqrt() * (gamma0 - gamma).sqrt();
    Ok(MeanField::from_phi(Complex64::new(amplitude, 0.0), gamma))
}

fn residual_with(model: &BosonModel, sigma0: f64, phi: Complex64) -> Complex64 {
    let c = model.lambda / (2.0 * model.n as f64);
    Complex64::new(-model.omega0, model.k) * phi + phi * (c * phi.norm_sqr()) + (phi.conj() + phi) * sigma0
}

/// Left-hand side of the first saddle-point equation after eliminating the
/// bath: `(−ω₀ + ik)φ₀ + (λ/2N)|φ₀|²φ₀ + Σ(0)(φ̄₀ + φ₀)`.
pub fn saddle_residual(model: &BosonModel, bath: &BathSpec, phi0: Complex64) -> Result<Complex64> {
    let sigma0 = SelfEnergyFn::new(bath)?.at_zero()?;
    Ok(residual_with(model, sigma0, phi0))
}

/// A root of [`saddle_residual`] found by Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleSolution {
    pub phi0: Complex64,
    /// `arg φ₀` in radians.
    pub phase: f64,
    pub residual: f64,
    pub iterations: usize,
    /// `| |φ₀| − |φ₀,mf| | / |φ₀,mf|` against [`mean_field_amplitude`], when
    /// that is defined and nonzero.
    pub deviation_from_amplitude: Option<f64>,
}

/// Solves `saddle_residual = 0` for complex φ₀ by damped 2D Newton iteration
/// on (Re φ₀, Im φ₀), starting from `seed`.
pub fn solve_saddle(model: &BosonModel, bath: &BathSpec, seed: Complex64) -> Result<SaddleSolution> {
    let sigma0 = SelfEnergyFn::new(bath)?.at_zero()?;
    let c = model.lambda / (2.0 * model.n as f64);
    let (w0, k) = (model.omega0, model.k);
    let mut phi = seed;
    let mut res = residual_with(model, sigma0, phi);
    let scale = 1.0 + seed.norm();
    let mut iterations = 0;
    while iterations < 200 {
        if res.norm() <= 1e-13 * scale * (w0.abs() + k + sigma0.abs() + 1.0) {
            break;
        }
        iterations += 1;
        let (x, y) = (phi.re, phi.im);
        // ∂(Re R, Im R)/∂(x, y)
        let a11 = -w0 + c * (3.0 * x * x + y * y) + 2.0 * sigma0;
        let a12 = -k + 2.0 * c * x * y;
        let a21 = k + 2.0 * c * x * y;
        let a22 = -w0 + c * (x * x + 3.0 * y * y);
        let det = a11 * a22 - a12 * a21;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::RootPolish {
                root: format!("{phi}"),
                residual: res.norm(),
            });
        }
        let dx = (a22 * res.re - a12 * res.im) / det;
        let dy = (-a21 * res.re + a11 * res.im) / det;
        let mut step = 1.0;
        loop {
            let trial = Complex64::new(x - step * dx, y - step * dy);
            let trial_res = residual_with(model, sigma0, trial);
            if trial_res.norm() < res.norm() || step < 1e-6 {
                phi = trial;
                res = trial_res;
                break;
            }
            step *= 0.5;
        }
    }
    let residual = res.norm();
    if residual > 1e-9 * scale * scale * scale {
        return Err(Error::RootPolish {
            root: format!("{phi}"),
            residual,
        });
    }
    let deviation_from_amplitude = mean_field_amplitude(model, bath.gamma)
        .ok()
        .filter(|mf| mf.broken)
        .map(|mf| (phi.norm() - mf.phi0.norm()).abs() / mf.phi0.norm());
    Ok(SaddleSolution {
        phi0: phi,
        phase: phi.arg(),
        residual,
        iterations,
        deviation_from_amplitude,
    })
}
