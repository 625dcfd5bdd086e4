//! Bath spectral densities and the real self-energy Σ(ω) they induce.
//!
//! The Ohmic Drude–Lorentz bath uses the closed form
//! `Σ(ω) = (π/2) γ Ω² / (ω² + Ω²)`. Every other bath is evaluated from the
//! principal-value integral
//!
//! ```text
//! Σ(ω) = -(C/2) PV ∫₀^∞ dω' J(ω') ω' / (ω² - ω'²)
//! ```
//!
//! where the single calibration constant `C` is fixed so that the integral
//! reproduces the closed form at `s = 1, ω = 0` (it evaluates to `1/π`).

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};

/// High-frequency cutoff shape of the spectral density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffFamily {
    DrudeLorentz,
    Exponential,
}

impl fmt::Display for CutoffFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutoffFamily::DrudeLorentz => write!(f, "drude"),
            CutoffFamily::Exponential => write!(f, "exp"),
        }
    }
}

impl std::str::FromStr for CutoffFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "drude" | "drude_lorentz" | "drude-lorentz" | "dl" => Ok(CutoffFamily::DrudeLorentz),
            "exp" | "exponential" => Ok(CutoffFamily::Exponential),
            other => domain(format!("unknown bath family `{other}` (expected drude|exp)")),
        }
    }
}

/// A bath spectral density `J(ω) = 2πγ ω (ω/Ω)^{s-1} × cutoff(ω/Ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub family: CutoffFamily,
    /// Ohmicity exponent; 1 is Ohmic, below 1 sub-Ohmic, above 1 super-Ohmic.
    pub s: f64,
    /// Cutoff frequency Ω.
    pub omega_c: f64,
    /// Effective system–bath coupling γ.
    pub gamma: f64,
}

impl BathSpec {
    pub fn new(family: CutoffFamily, s: f64, omega_c: f64, gamma: f64) -> Result<Self> {
        let spec = Self {
            family,
            s,
            omega_c,
            gamma,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Ohmic bath with Drude–Lorentz cutoff.
    pub fn ohmic(omega_c: f64, gamma: f64) -> Result<Self> {
        Self::new(CutoffFamily::DrudeLorentz, 1.0, omega_c, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s.is_finite()) {
            return domain(format!("Ohmicity exponent s must be > 0, got {}", self.s));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return domain(format!("cutoff frequency must be > 0, got {}", self.omega_c));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return domain(format!("coupling gamma must be >= 0, got {}", self.gamma));
        }
        Ok(())
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }

    /// Ohmic Drude–Lorentz: the case with a closed-form self-energy.
    pub fn is_canonical(&self) -> bool {
        self.family == CutoffFamily::DrudeLorentz && self.s == 1.0
    }

    fn density(&self, x: f64) -> f64 {
        if x <= 0.0 || self.gamma == 0.0 {
            return 0.0;
        }
        let om = self.omega_c;
        let power = if self.s == 1.0 { 1.0 } else { (x / om).powf(self.s - 1.0) };
        let shape = match self.family {
            CutoffFamily::DrudeLorentz => om / (x * x + om * om),
            CutoffFamily::Exponential => (-x / om).exp(),
        };
        2.0 * PI * self.gamma * x * power * shape
    }

    // Analytic continuation of the density off the positive real axis
    // (principal branch of the power).
    fn density_complex(&self, z: Complex64) -> Complex64 {
        let om = self.omega_c;
        let power = if self.s == 1.0 {
            Complex64::new(1.0, 0.0)
        } else {
            (z / om).powf(self.s - 1.0)
        };
        let shape = match self.family {
            CutoffFamily::DrudeLorentz => om / (z * z + om * om),
            CutoffFamily::Exponential => (-z / om).exp(),
        };
        z * power * shape * (2.0 * PI * self.gamma)
    }
}

/// Spectral density `J(ω)` for `ω > 0`.
pub fn spectral_density(bath: &BathSpec, omega: f64) -> Result<f64> {
    bath.validate()?;
    if !(omega > 0.0) {
        return domain(format!("spectral density is defined for omega > 0, got {omega}"));
    }
    Ok(bath.density(omega))
}

/// How a [`SelfEnergyFn`] evaluates Σ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfEnergyMethod {
    ClosedForm,
    PrincipalValue,
}

fn raw_zero_frequency(bath: &BathSpec, tol: Tolerance) -> Result<f64> {
    // (1/2) ∫ J(x)/x dx
    let est = integrate_to_infinity(|x: f64| bath.density(x) / x, 0.0, bath.omega_c, tol)?;
    Ok(0.5 * est.value)
}

/// The calibration constant `C` mapping the principal-value integral onto
/// the closed-form Ohmic self-energy. Computed once.
pub fn calibration_constant() -> f64 {
    static CONSTANT: OnceLock<f64> = OnceLock::new();
    *CONSTANT.get_or_init(|| {
        let reference = BathSpec {
            family: CutoffFamily::DrudeLorentz,
            s: 1.0,
            omega_c: 1.0,
            gamma: 1.0,
        };
        let raw = raw_zero_frequency(&reference, Tolerance::new(1e-15, 1e-14))
            .expect("reference Ohmic integral converges");
        0.5 * PI / raw
    })
}

/// Evaluator for the real self-energy of one bath.
///
/// Immutable after construction and `Sync`, so sweeps can share one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfEnergyFn {
    pub bath: BathSpec,
    pub method: SelfEnergyMethod,
    pub calibration: f64,
    pub tolerance: Tolerance,
    /// Extra multiplicative factor; 1 except when deliberately perturbing Σ.
    pub prefactor: f64,
}

impl SelfEnergyFn {
    /// Closed form for Ohmic Drude–Lorentz, principal value otherwise.
    pub fn new(bath: &BathSpec) -> Result<Self> {
        bath.validate()?;
        let method = if bath.is_canonical() {
            SelfEnergyMethod::ClosedForm
        } else {
            SelfEnergyMethod::PrincipalValue
        };
        Ok(Self {
            bath: *bath,
            method,
            calibration: calibration_constant(),
            tolerance: Tolerance::default(),
            prefactor: 1.0,
        })
    }

    /// Forces the principal-value path, even where a closed form exists.
    pub fn numeric(bath: &BathSpec) -> Result<Self> {
        let mut sigma = Self::new(bath)?;
        sigma.method = SelfEnergyMethod::PrincipalValue;
        Ok(sigma)
    }

    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_prefactor(mut self, prefactor: f64) -> Self {
        self.prefactor = prefactor;
        self
    }

    /// Σ(ω) for real ω.
    pub fn eval(&self, omega: f64) -> Result<f64> {
        let value = match self.method {
            SelfEnergyMethod::ClosedForm => {
                let om2 = self.bath.omega_c * self.bath.omega_c;
                0.5 * PI * self.bath.gamma * om2 / (omega * omega + om2)
            }
            SelfEnergyMethod::PrincipalValue => self.calibration * self.raw_principal_value(omega)?,
        };
        Ok(self.prefactor * value)
    }

    /// Σ(0).
    pub fn at_zero(&self) -> Result<f64> {
        self.eval(0.0)
    }

    /// `Σ(ω)/γ` at `ω = 0`; Σ is linear in γ.
    pub fn zero_frequency_per_coupling(&self) -> Result<f64> {
        let unit = Self {
            bath: self.bath.with_gamma(1.0),
            ..*self
        };
        unit.at_zero()
    }

    fn raw_principal_value(&self, omega: f64) -> Result<f64> {
        let bath = &self.bath;
        if bath.gamma == 0.0 {
            return Ok(0.0);
        }
        let w = omega.abs();
        if w == 0.0 {
            return raw_zero_frequency(bath, self.tolerance);
        }
        // J(x) x / (x² - w²) = f(x) / (x - w)
        let f = |x: f64| bath.density(x) * x / (x + w);
        let near = integrate(
            |u: f64| (f(w + u) - f(w - u)) / u,
            0.0,
            w,
            self.tolerance,
        )?;
        let far = integrate_to_infinity(|x: f64| f(x) / (x - w), 2.0 * w, bath.omega_c, self.tolerance)?;
        Ok(0.5 * (near.value + far.value))
    }

    /// Σ continued to complex frequency.
    ///
    /// The continuation is the one that is real on the real axis (the
    /// principal-value function), extended as an even function of ω. For the
    /// Ohmic Drude–Lorentz bath it coincides with the closed form evaluated
    /// at complex ω.
    pub fn eval_complex(&self, omega: Complex64) -> Result<Complex64> {
        let value = match self.method {
            SelfEnergyMethod::ClosedForm => {
                let om2 = self.bath.omega_c * self.bath.omega_c;
                (om2 * 0.5 * PI * self.bath.gamma) / (omega * omega + om2)
            }
            SelfEnergyMethod::PrincipalValue => self.raw_complex(omega)? * self.calibration,
        };
        Ok(value * self.prefactor)
    }

    fn raw_complex(&self, omega: Complex64) -> Result<Complex64> {
        let bath = &self.bath;
        if bath.gamma == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let z = if omega.re < 0.0 { -omega } else { omega };
        if z.norm() == 0.0 {
            return Ok(Complex64::new(raw_zero_frequency(bath, self.tolerance)?, 0.0));
        }
        let tol = self.tolerance;
        let big = 2.0 * z.norm() + bath.omega_c;
        let jz = bath.density_complex(z);
        let c = |x: f64| Complex64::new(x, 0.0);
        // ∫₀^L [J(x) - J(z)] / (x - z) dx + J(z) Log((L - z)/z) + ∫_L^∞ J(x)/(x - z) dx
        let subtracted = integrate(|x: f64| (c(bath.density(x)) - jz) / (c(x) - z), 0.0, big, tol)?;
        let log_term = jz * ((c(big) - z) / z).ln();
        let tail = integrate_to_infinity(|x: f64| c(bath.density(x)) / (c(x) - z), big, bath.omega_c, tol)?;
        let minus = subtracted.value + log_term + tail.value;
        let plus = integrate_to_infinity(|x: f64| c(bath.density(x)) / (c(x) + z), 0.0, bath.omega_c, tol)?;
        Ok((minus + plus.value) * 0.25)
    }
}

/// Σ(ω) for real ω with default tolerances.
pub fn self_energy(bath: &BathSpec, omega: f64) -> Result<f64> {
    SelfEnergyFn::new(bath)?.eval(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ohmic(gamma: f64, omega_c: f64) -> BathSpec {
        BathSpec::ohmic(omega_c, gamma).unwrap()
    }

    #[test]
    fn density_at_cutoff_is_pi_gamma() {
        let b = ohmic(0.37, 2.5);
        assert_relative_eq!(spectral_density(&b, 2.5).unwrap(), PI * 0.37, max_relative = 1e-14);
    }

    #[test]
    fn density_vanishes_without_coupling() {
        for family in [CutoffFamily::DrudeLorentz, CutoffFamily::Exponential] {
            let b = BathSpec::new(family, 0.7, 1.0, 0.0).unwrap();
            for w in [1e-3, 0.5, 4.0, 100.0] {
                assert_eq!(spectral_density(&b, w).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn ohmic_density_peaks_at_cutoff() {
        let b = ohmic(1.0, 3.0);
        let h = 1e-5;
        let d = (spectral_density(&b, 3.0 + h).unwrap() - spectral_density(&b, 3.0 - h).unwrap()) / (2.0 * h);
        assert!(d.abs() < 1e-8);
        // 2πγΩ/ω tail
        let w = 3e4;
        assert_relative_eq!(spectral_density(&b, w).unwrap(), 2.0 * PI * 3.0 / w, max_relative = 1e-7);
    }

    #[test]
    fn density_rejects_non_positive_frequency() {
        assert!(spectral_density(&ohmic(1.0, 1.0), 0.0).is_err());
        assert!(spectral_density(&ohmic(1.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(BathSpec::new(CutoffFamily::DrudeLorentz, 0.0, 1.0, 1.0).is_err());
        assert!(BathSpec::new(CutoffFamily::DrudeLorentz, 1.0, 0.0, 1.0).is_err());
        assert!(BathSpec::new(CutoffFamily::DrudeLorentz, 1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn closed_form_values() {
        let b = ohmic(0.8, 2.0);
        assert_relative_eq!(self_energy(&b, 0.0).unwrap(), 0.5 * PI * 0.8, max_relative = 1e-15);
        assert_relative_eq!(self_energy(&b, 2.0).unwrap(), 0.25 * PI * 0.8, max_relative = 1e-15);
    }

    #[test]
    fn calibration_constant_is_inverse_pi() {
        assert_relative_eq!(calibration_constant(), 1.0 / PI, max_relative = 1e-12);
    }

    #[test]
    fn principal_value_matches_closed_form() {
        let b = ohmic(0.6, 1.7);
        let exact = SelfEnergyFn::new(&b).unwrap();
        let numeric = SelfEnergyFn::numeric(&b).unwrap();
        for i in 0..=50 {
            let w = 5.0 * b.omega_c * i as f64 / 50.0;
            let e = exact.eval(w).unwrap();
            let n = numeric.eval(w).unwrap();
            assert!(((n - e) / e).abs() < 1e-6, "w = {w}: {n} vs {e}");
        }
    }

    #[test]
    fn principal_value_stable_under_refinement() {
        for family in [CutoffFamily::DrudeLorentz, CutoffFamily::Exponential] {
            let b = BathSpec::new(family, 1.3, 1.0, 0.4).unwrap();
            let coarse = SelfEnergyFn::numeric(&b).unwrap();
            let fine = coarse.with_tolerance(Tolerance::new(1e-14, 1e-12).with_max_intervals(8000));
            for w in [0.0, 0.1, 0.9, 2.5] {
                let a = coarse.eval(w).unwrap();
                let c = fine.eval(w).unwrap();
                assert!(((a - c) / c).abs() < 1e-8, "{family:?} w = {w}");
            }
        }
    }

    #[test]
    fn zero_frequency_is_cutoff_independent_for_drude_only() {
        let dl: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&om| SelfEnergyFn::numeric(&ohmic(0.2, om)).unwrap().at_zero().unwrap())
            .collect();
        assert!((dl[0] - dl[2]).abs() / dl[0] < 1e-8);
        // exponential: Σ(0) = γΩ for s = 1
        for om in [1.0, 10.0, 100.0] {
            let b = BathSpec::new(CutoffFamily::Exponential, 1.0, om, 0.2).unwrap();
            assert_relative_eq!(self_energy(&b, 0.0).unwrap(), 0.2 * om, max_relative = 1e-8);
        }
    }

    #[test]
    fn sub_ohmic_zero_frequency_converges() {
        // ∫₀ x^{s-1} is integrable at the origin for any s > 0.
        let b = BathSpec::new(CutoffFamily::DrudeLorentz, 0.5, 1.0, 1.0).unwrap();
        let v = self_energy(&b, 0.0).unwrap();
        // (C/2) 2π ∫ x^{-1/2}/(x²+1) dx = ∫ x^{-1/2}/(x²+1) dx = π/√2
        assert_relative_eq!(v, PI / 2f64.sqrt(), max_relative = 1e-7);
    }

    #[test]
    fn strongly_super_ohmic_drude_diverges() {
        let b = BathSpec::new(CutoffFamily::DrudeLorentz, 2.5, 1.0, 1.0).unwrap();
        assert!(matches!(self_energy(&b, 0.0), Err(Error::Quadrature { .. })));
        assert!(matches!(self_energy(&b, 0.5), Err(Error::Quadrature { .. })));
    }

    #[test]
    fn complex_continuation_matches_closed_form() {
        let b = ohmic(0.45, 1.3);
        let exact = SelfEnergyFn::new(&b).unwrap();
        let numeric = SelfEnergyFn::numeric(&b).unwrap();
        for z in [
            Complex64::new(0.4, -0.3),
            Complex64::new(1.1, 0.2),
            Complex64::new(-0.7, -0.9),
            Complex64::new(0.0, -0.5),
            Complex64::new(2.0, 0.0),
        ] {
            let e = exact.eval_complex(z).unwrap();
            let n = numeric.eval_complex(z).unwrap();
            assert!((n - e).norm() < 1e-8 * e.norm(), "z = {z}: {n} vs {e}");
        }
    }

    #[test]
    fn complex_continuation_agrees_with_real_path_on_axis() {
        let b = BathSpec::new(CutoffFamily::Exponential, 1.0, 2.0, 0.3).unwrap();
        let sigma = SelfEnergyFn::new(&b).unwrap();
        for w in [0.05, 0.8, 3.0] {
            let real = sigma.eval(w).unwrap();
            let cplx = sigma.eval_complex(Complex64::new(w, 0.0)).unwrap();
            assert!((cplx.re - real).abs() < 1e-8 * real.abs());
            assert!(cplx.im.abs() < 1e-8 * real.abs());
        }
    }

    #[test]
    fn family_parses() {
        assert_eq!("drude".parse::<CutoffFamily>().unwrap(), CutoffFamily::DrudeLorentz);
        assert_eq!("exp".parse::<CutoffFamily>().unwrap(), CutoffFamily::Exponential);
        assert!("lorentz".parse::<CutoffFamily>().is_err());
    }
}
