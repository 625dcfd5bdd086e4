//! Steady-state occupation, divergence exponent and response surfaces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::BathSpec;
use crate::error::{domain, Error, Result};
use crate::export::RunMetadata;
use crate::greens::{CoupledSystem, FreqGrid, FreqUnits};
use crate::model::BosonModel;
use crate::quadrature::{integrate_breaks, Tolerance};

/// Default half-width of the frequency window in units of `max(ω₀, k, Ω)`.
pub const WINDOW_FACTOR: f64 = 1e3;

/// `C = ∫ dω/2π iG^K(ω)` over `[−W, W]` plus the `2k/ω²` tail beyond,
/// with `W = window_factor · max(|ω₀|, k, Ω)`.
pub fn correlation_integral(sys: &CoupledSystem, window_factor: f64) -> Result<f64> {
    let m = &sys.model;
    if m.k == 0.0 {
        return Err(Error::DistributionalLimit("steady density"));
    }
    if !(window_factor > 1.0) {
        return domain("window factor must exceed 1");
    }
    let det0 = sys.zero_frequency_det()?;
    if !(det0 > 0.0) {
        return Err(Error::SingularIntegrand(format!(
            "det [G^R]^-1(0) = {det0:.3e}; the normal state is not stable at gamma = {}",
            sys.bath().gamma
        )));
    }
    let om = sys.bath().omega_c;
    let w0 = m.omega0.abs();
    let width = window_factor * w0.max(m.k).max(om);
    // the ω = 0 peak narrows to det0/(2k) near the transition
    let peak = det0 / (2.0 * m.k);
    let mut points = vec![-width, width, 0.0];
    for p in [w0, om, m.k, peak, 10.0 * peak] {
        if p > 0.0 && p < width {
            points.push(p);
            points.push(-p);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let tol = Tolerance::new(1e-12, 1e-11).with_max_intervals(20_000);
    let integrand = |w: f64| sys.keldysh_correlator(w).unwrap_or(f64::NAN);
    let est = integrate_breaks(integrand, &points, tol)?;
    let tail = 2.0 * m.k / (std::f64::consts::PI * width);
    Ok(est.value / (2.0 * std::f64::consts::PI) + tail)
}

/// `⟨a†a⟩ = (C − 1)/2`.
pub fn density(sys: &CoupledSystem) -> Result<f64> {
    Ok(0.5 * (correlation_integral(sys, WINDOW_FACTOR)? - 1.0))
}

pub fn steady_density(model: &BosonModel, bath: &BathSpec) -> Result<f64> {
    density(&CoupledSystem::new(model, bath)?)
}

/// Fit of `2⟨a†a⟩ + 1 ∼ (γ₀ − γ)^{−α}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub alpha: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub gamma0: f64,
    pub std_error: f64,
    pub r_squared: f64,
    /// `(γ, C)` samples used in the fit.
    pub samples: Vec<(f64, f64)>,
}

impl ExponentFit {
    /// Whether two fits agree within their combined standard errors.
    pub fn agrees_with(&self, other: &ExponentFit) -> bool {
        let combined = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        (self.alpha - other.alpha).abs() <= combined
    }
}

/// Default window `[0.9γ₀, 0.999γ₀]` and sample count.
pub const DEFAULT_WINDOW: [f64; 2] = [0.9, 0.999];
pub const DEFAULT_FIT_POINTS: usize = 24;

/// Least-squares slope of `ln C` against `−ln(γ₀ − γ)` on a geometric grid
/// in `γ₀ − γ` spanning `window = [γ_lo, γ_hi]` (absolute couplings).
pub fn fit_divergence_exponent(
    model: &BosonModel,
    bath: &BathSpec,
    window: [f64; 2],
    points: usize,
) -> Result<ExponentFit> {
    fit_system(&CoupledSystem::new(model, bath)?, window, points)
}

pub fn fit_system(sys: &CoupledSystem, window: [f64; 2], points: usize) -> Result<ExponentFit> {
    let gamma0 = sys.transition_coupling()?;
    let [lo, hi] = window;
    if !(lo > 0.0 && lo < hi && hi < gamma0) {
        return domain(format!("fit window [{lo}, {hi}] must lie inside (0, {gamma0})"));
    }
    if points < 8 {
        return domain("exponent fit needs at least 8 points");
    }
    let (d_far, d_near) = ((gamma0 - lo).ln(), (gamma0 - hi).ln());
    let gammas: Vec<f64> = (0..points)
        .map(|i| gamma0 - (d_near + (d_far - d_near) * i as f64 / (points - 1) as f64).exp())
        .collect();
    let values: Vec<f64> = gammas
        .par_iter()
        .map(|&g| correlation_integral(&sys.at_gamma(g), WINDOW_FACTOR))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = gammas.iter().map(|g| -(gamma0 - g).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|c| c.ln()).collect();
    let line = least_squares(&xs, &ys);
    if !(line.r_squared >= 0.9) {
        return Err(Error::FitDegenerate {
            r_squared: line.r_squared,
        });
    }
    Ok(ExponentFit {
        alpha: line.slope,
        gamma_lo: lo,
        gamma_hi: hi,
        gamma0,
        std_error: line.slope_error,
        r_squared: line.r_squared,
        samples: gammas.into_iter().zip(values).collect(),
    })
}

/// Fits over `[0.9, 0.99]γ₀` and `[0.99, 0.999]γ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSensitivity {
    pub outer: ExponentFit,
    pub inner: ExponentFit,
    pub consistent: bool,
}

pub fn window_sensitivity(sys: &CoupledSystem, points: usize) -> Result<WindowSensitivity> {
    let g0 = sys.transition_coupling()?;
    let outer = fit_system(sys, [0.9 * g0, 0.99 * g0], points)?;
    let inner = fit_system(sys, [0.99 * g0, 0.999 * g0], points)?;
    let consistent = outer.agrees_with(&inner);
    Ok(WindowSensitivity {
        outer,
        inner,
        consistent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_error: f64,
    pub r_squared: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - ssr / syy).clamp(0.0, 1.0) } else { 0.0 };
    let slope_error = if xs.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LineFit {
        slope,
        intercept,
        slope_error,
        r_squared,
    }
}

/// `A` and `iG^K` on a (γ/γ₀) × ω grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub gamma_ratio: Vec<f64>,
    pub omega: FreqGrid,
    /// Row-major, `gamma_ratio.len()` rows of `omega.len()` values.
    pub spectral: Vec<f64>,
    pub correlator: Vec<f64>,
    /// Frequency of the maximum of `A` on each row, in the grid's units.
    pub peak_track: Vec<f64>,
    pub metadata: RunMetadata,
}

impl SweepResult {
    pub fn row(&self, i: usize) -> (&[f64], &[f64]) {
        let n = self.omega.len();
        (&self.spectral[i * n..(i + 1) * n], &self.correlator[i * n..(i + 1) * n])
    }
}

pub(crate) fn check_ratio_grid(ratios: &[f64]) -> Result<()> {
    if ratios.is_empty() {
        return domain("coupling grid is empty");
    }
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || ratios.windows(2).any(|w| w[1] <= w[0]) {
        return domain("coupling grid must be non-negative and strictly increasing");
    }
    Ok(())
}

/// Response surfaces at `γ = r γ₀` for each ratio `r`; `bath.gamma` is ignored.
pub fn sweep_response(
    model: &BosonModel,
    bath: &BathSpec,
    gamma_ratio: &[f64],
    omega: &FreqGrid,
) -> Result<SweepResult> {
    sweep_system(&CoupledSystem::new(model, bath)?, gamma_ratio, omega)
}

/// [`sweep_response`] for an already assembled system, keeping its
/// self-energy settings.
pub fn sweep_system(base: &CoupledSystem, gamma_ratio: &[f64], omega: &FreqGrid) -> Result<SweepResult> {
    let (model, bath) = (&base.model, base.bath());
    if model.k == 0.0 {
        return Err(Error::DistributionalLimit("response surface"));
    }
    check_ratio_grid(gamma_ratio)?;
    let gamma0 = base.transition_coupling()?;
    let absolute = omega.absolute(bath.omega_c);
    let n = absolute.len();
    let values: Vec<(f64, f64)> = (0..gamma_ratio.len() * n)
        .into_par_iter()
        .map(|idx| {
            let sys = base.at_gamma(gamma_ratio[idx / n] * gamma0);
            let w = absolute[idx % n];
            Ok((sys.spectral_response(w)?, sys.keldysh_correlator(w)?))
        })
        .collect::<Result<_>>()?;
    let (spectral, correlator): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
    let peak_track = spectral
        .chunks(n)
        .map(|row| {
            let best = row
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_finite())
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(j, _)| j);
            best.map_or(f64::NAN, |j| omega.values()[j])
        })
        .collect();
    let mut metadata = RunMetadata::new("response", model, bath);
    metadata.gamma0 = Some(gamma0);
    metadata.units = omega.units;
    Ok(SweepResult {
        gamma_ratio: gamma_ratio.to_vec(),
        omega: omega.clone(),
        spectral,
        correlator,
        peak_track,
        metadata,
    })
}

/// Grid helper: `count` points from `lo` to `hi` inclusive.
pub fn ratio_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    Ok(FreqGrid::linspace(lo, hi, count, FreqUnits::Absolute)?.values().to_vec())
}
