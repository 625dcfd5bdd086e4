//! Complex mode frequencies of the dissipative mode.
//!
//! The characteristic function is
//!
//! ```text
//! F(ω) = (ω + ik)² − ω₀² + μω + κ Σ(ω),   κ = 2ω₀ + β
//! ```
//!
//! with `μ = β = 0` at mean-field level and `μ = (λ/N)|φ₀|²`,
//! `β = (λ/2N)(φ₀ − φ̄₀)²` with fluctuations. For the Ohmic Drude–Lorentz
//! bath, `Σ = Σ(0)Ω²/(ω² + Ω²)` and clearing the denominator gives a quartic.
//! Other baths use Newton iteration on F seeded from that quartic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, SelfEnergyFn, SelfEnergyMethod};
use crate::error::{domain, Error, Result};
use crate::greens::CoupledSystem;
use crate::model::{BosonModel, MeanField};
use crate::poly;
use crate::quadrature::Tolerance;

const ROOT_TOL: f64 = 1e-9;
const NEWTON_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootClass {
    /// `Re ω ≠ 0`, `Im ω ≤ 0`
    Propagating,
    /// `Re ω = 0`, `Im ω < 0`
    Overdamped,
    /// `|ω| < 10⁻⁹ Ω`
    Marginal,
    /// `Im ω > 10⁻⁹ Ω`
    Unstable,
}

impl RootClass {
    pub fn classify(omega: Complex64, omega_c: f64) -> Self {
        let tol = ROOT_TOL * omega_c;
        if omega.norm() < tol {
            RootClass::Marginal
        } else if omega.im > tol {
            RootClass::Unstable
        } else if omega.re.abs() <= ROOT_TOL * omega_c.max(omega.norm()) {
            RootClass::Overdamped
        } else {
            RootClass::Propagating
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: Complex64,
    pub class: RootClass,
    /// `|F(ω)|` of the uncleared characteristic function.
    pub residual: f64,
}

/// A seed whose refinement did not reach the residual tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootFailure {
    pub seed: Complex64,
    pub last: Complex64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub gamma: f64,
    pub modes: Vec<Mode>,
    /// Roots of the cleared polynomial that do not solve `F(ω) = 0`.
    pub rejected: Vec<Complex64>,
    pub failures: Vec<RootFailure>,
}

impl ModeSet {
    pub fn roots(&self) -> Vec<Complex64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.modes.iter().map(|m| m.omega.im).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Root of smallest modulus.
    pub fn smallest(&self) -> Option<Complex64> {
        self.modes.iter().map(|m| m.omega).min_by(|a, b| a.norm().total_cmp(&b.norm()))
    }

    pub fn count(&self, class: RootClass) -> usize {
        self.modes.iter().filter(|m| m.class == class).count()
    }

    /// Largest distance from `−conj(ω)` to the nearest root, over all roots.
    pub fn pairing_defect(&self) -> f64 {
        let roots = self.roots();
        roots
            .iter()
            .map(|z| {
                let mirror = -z.conj();
                roots.iter().map(|w| (w - mirror).norm()).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}

/// Parameters of `F(ω)` for one system.
#[derive(Debug, Clone, Copy)]
struct Dispersion {
    omega0: f64,
    k: f64,
    mu: f64,
    kappa: f64,
    sigma: SelfEnergyFn,
    sigma0: f64,
}

impl Dispersion {
    fn new(sys: &CoupledSystem, fluct: Option<&MeanField>) -> Result<Self> {
        let m = &sys.model;
        let (mu, beta) = match fluct {
            Some(mf) => {
                let n = m.n as f64;
                let diff = mf.phi0 - mf.phi0.conj();
                (m.lambda * mf.phi0.norm_sqr() / n, (diff * diff).re * m.lambda / (2.0 * n))
            }
            None => (0.0, 0.0),
        };
        let sigma = sys
            .sigma
            .with_tolerance(Tolerance::new(1e-14, 1e-12).with_max_intervals(10_000));
        Ok(Self {
            omega0: m.omega0,
            k: m.k,
            mu,
            kappa: 2.0 * m.omega0 + beta,
            sigma,
            sigma0: sigma.at_zero()?,
        })
    }

    fn omega_c(&self) -> f64 {
        self.sigma.bath.omega_c
    }

    fn closed_form(&self) -> bool {
        self.sigma.method == SelfEnergyMethod::ClosedForm
    }

    fn sigma_at(&self, w: Complex64) -> Result<Complex64> {
        if self.closed_form() || self.sigma.bath.gamma == 0.0 {
            let om = Complex64::new(0.0, self.omega_c());
            // (ω − iΩ)(ω + iΩ) keeps accuracy near the poles
            let om2 = self.omega_c() * self.omega_c();
            Ok(self.sigma0 * om2 / ((w - om) * (w + om)))
        } else {
            self.sigma.eval_complex(w)
        }
    }

    fn eval(&self, w: Complex64) -> Result<Complex64> {
        let shifted = w + Complex64::new(0.0, self.k);
        Ok(shifted * shifted - self.omega0 * self.omega0 + w * self.mu + self.sigma_at(w)? * self.kappa)
    }

    /// Coefficients of the cleared quartic in ω, ascending, using the
    /// Drude–Lorentz form of Σ with the same Σ(0) and Ω.
    fn quartic(&self) -> [Complex64; 5] {
        let om2 = self.omega_c() * self.omega_c();
        let c = self.k * self.k + self.omega0 * self.omega0;
        let lin = Complex64::new(self.mu, 2.0 * self.k);
        [
            Complex64::new((self.kappa * self.sigma0 - c) * om2, 0.0),
            lin * om2,
            Complex64::new(om2 - c, 0.0),
            lin,
            Complex64::new(1.0, 0.0),
        ]
    }

    /// Quartic roots. Without the linear term the substitution ω = iz gives
    /// real coefficients, so the ω ↦ −ω̄ pairing is exact.
    fn quartic_roots(&self) -> Result<Vec<Complex64>> {
        if self.mu == 0.0 {
            let om2 = self.omega_c() * self.omega_c();
            let c = self.k * self.k + self.omega0 * self.omega0;
            let z = poly::real_roots(&[
                (self.kappa * self.sigma0 - c) * om2,
                -2.0 * self.k * om2,
                c - om2,
                2.0 * self.k,
                1.0,
            ])?;
            Ok(z.into_iter().map(|z| Complex64::new(-z.im, z.re)).collect())
        } else {
            poly::roots(&self.quartic())
        }
    }

    fn accepts(&self, w: Complex64, residual: f64) -> bool {
        residual.is_finite() && residual < ROOT_TOL * w.norm().powi(4).max(1.0)
    }

    fn newton(&self, seed: Complex64) -> Result<std::result::Result<(Complex64, f64), RootFailure>> {
        let mut w = seed;
        let mut f = self.eval(w)?;
        for _ in 0..NEWTON_ITERATIONS {
            if self.accepts(w, f.norm()) {
                return Ok(Ok((w, f.norm())));
            }
            let h = 1e-5 * w.norm().max(self.omega_c());
            let hc = Complex64::new(h, 0.0);
            let ds = (self.sigma_at(w + hc)? - self.sigma_at(w - hc)?) / (2.0 * h);
            let df = (w + Complex64::new(0.0, self.k)) * 2.0 + self.mu + ds * self.kappa;
            if df.norm() == 0.0 || !df.is_finite() {
                break;
            }
            w -= f / df;
            f = match self.eval(w) {
                Ok(v) if v.is_finite() => v,
                _ => break,
            };
        }
        let residual = f.norm();
        if self.accepts(w, residual) {
            Ok(Ok((w, residual)))
        } else {
            Ok(Err(RootFailure {
                seed,
                last: w,
                residual,
            }))
        }
    }

    fn solve(&self) -> Result<ModeSet> {
        let seeds = self.quartic_roots()?;
        let mut out = ModeSet {
            gamma: self.sigma.bath.gamma,
            modes: Vec::new(),
            rejected: Vec::new(),
            failures: Vec::new(),
        };
        let omega_c = self.omega_c();
        if self.closed_form() || self.sigma.bath.gamma == 0.0 {
            for w in seeds {
                let residual = match self.eval(w) {
                    Ok(f) => f.norm(),
                    Err(_) => f64::NAN,
                };
                if self.accepts(w, residual) {
                    out.modes.push(Mode {
                        omega: w,
                        class: RootClass::classify(w, omega_c),
                        residual,
                    });
                } else {
                    out.rejected.push(w);
                }
            }
        } else {
            for seed in seeds {
                match self.newton(seed)? {
                    Ok((w, residual)) => {
                        let duplicate = out
                            .modes
                            .iter()
                            .any(|m| (m.omega - w).norm() <= 1e-8 * w.norm().max(omega_c));
                        if duplicate {
                            out.rejected.push(w);
                        } else {
                            out.modes.push(Mode {
                                omega: w,
                                class: RootClass::classify(w, omega_c),
                                residual,
                            });
                        }
                    }
                    Err(failure) => out.failures.push(failure),
                }
            }
        }
        out.modes
            .sort_by(|a, b| a.omega.re.total_cmp(&b.omega.re).then(a.omega.im.total_cmp(&b.omega.im)));
        Ok(out)
    }
}

/// Modes of `sys`, with the fluctuation correction if `fluct` is given.
pub fn modes(sys: &CoupledSystem, fluct: Option<&MeanField>) -> Result<ModeSet> {
    Dispersion::new(sys, fluct)?.solve()
}

/// `|F(ω)|` for the mean-field (`None`) or fluctuation characteristic function.
pub fn characteristic_residual(sys: &CoupledSystem, fluct: Option<&MeanField>, omega: Complex64) -> Result<f64> {
    Ok(Dispersion::new(sys, fluct)?.eval(omega)?.norm())
}

/// Mean-field mode frequencies.
pub fn characteristic_roots(model: &BosonModel, bath: &BathSpec) -> Result<ModeSet> {
    modes(&CoupledSystem::new(model, bath)?, None)
}

/// Mode frequencies including the O(1/N) correction from the mean field `mf`.
pub fn fluctuation_roots(model: &BosonModel, bath: &BathSpec, mf: &MeanField) -> Result<ModeSet> {
    modes(&CoupledSystem::new(model, bath)?, Some(mf))
}

/// Result of the transition search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionPoint {
    pub gamma: f64,
    /// Smallest root modulus at `gamma`.
    pub root_modulus: f64,
    pub bisections: usize,
}

/// Coupling at which a mode frequency reaches zero.
pub fn find_transition(model: &BosonModel, bath: &BathSpec) -> Result<f64> {
    Ok(locate_transition(&CoupledSystem::new(model, bath)?)?.gamma)
}

/// Bisection on γ ∈ [0, 4γ₀] for the sign change of the product of the
/// quartic roots (Drude–Lorentz) or of `F(0)` (other baths). Either vanishes
/// exactly when ω = 0 is a root.
pub fn locate_transition(sys: &CoupledSystem) -> Result<TransitionPoint> {
    sys.model.require_positive_omega0()?;
    let estimate = sys.transition_coupling()?;
    if !estimate.is_finite() || estimate <= 0.0 {
        return domain("transition estimate is not a positive coupling");
    }
    let indicator = |gamma: f64| -> Result<f64> {
        let d = Dispersion::new(&sys.at_gamma(gamma), None)?;
        if d.closed_form() {
            let product = d
                .quartic_roots()?
                .into_iter()
                .fold(Complex64::new(1.0, 0.0), |acc, z| acc * z);
            Ok(product.re)
        } else {
            Ok(d.eval(Complex64::new(0.0, 0.0))?.re)
        }
    };
    let (mut lo, mut hi) = (0.0, 4.0 * estimate);
    let (f_lo, f_hi) = (indicator(lo)?, indicator(hi)?);
    if f_lo.signum() == f_hi.signum() || f_lo == 0.0 {
        return Err(Error::NoBracket(format!(
            "no root crosses zero for gamma in [0, {hi:.6e}]"
        )));
    }
    let mut bisections = 0;
    while hi - lo > 4.0 * f64::EPSILON * hi && bisections < 200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = indicator(mid)?;
        bisections += 1;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma = 0.5 * (lo + hi);
    let set = modes(&sys.at_gamma(gamma), None)?;
    let root_modulus = set.smallest().map(|z| z.norm()).unwrap_or(f64::INFINITY);
    Ok(TransitionPoint {
        gamma,
        root_modulus,
        bisections,
    })
}

/// Root trajectories along a sweep: `branches[b][i]` is the root of branch `b`
/// at sweep point `i`, matched to the previous point by minimal total
/// displacement.
pub fn track_branches(sets: &[ModeSet]) -> Vec<Vec<Option<Complex64>>> {
    let mut branches: Vec<Vec<Option<Complex64>>> = Vec::new();
    let mut last: Vec<Option<Complex64>> = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        let roots = set.roots();
        while branches.len() < roots.len() {
            branches.push(vec![None; i]);
            last.push(None);
        }
        let slots = branches.len();
        // assignment[r] = branch of root r
        let mut best: Option<(f64, Vec<usize>)> = None;
        for perm in permutations(slots) {
            let cost: f64 = roots
                .iter()
                .zip(&perm)
                .map(|(r, &b)| match last[b] {
                    Some(prev) => (r - prev).norm(),
                    None => 1e6,
                })
                .sum();
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, perm[..roots.len()].to_vec()));
            }
        }
        let assignment = best.map(|(_, p)| p).unwrap_or_default();
        let mut column = vec![None; slots];
        for (r, &b) in roots.iter().zip(&assignment) {
            column[b] = Some(*r);
            last[b] = Some(*r);
        }
        for (branch, value) in branches.iter_mut().zip(column) {
            branch.push(value);
        }
    }
    branches
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::CutoffFamily;
    use crate::model::{critical_coupling, mean_field_amplitude};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn model(w0: f64, k: f64) -> BosonModel {
        BosonModel::new(w0, 0.3, 100, k).unwrap()
    }

    #[test]
    fn decoupled_roots_and_spurious_filter() {
        let set = characteristic_roots(&model(0.4, 0.3), &BathSpec::ohmic(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(set.modes.len(), 2);
        assert_eq!(set.rejected.len(), 2);
        let roots = set.roots();
        assert!((roots[0] - c(-0.4, -0.3)).norm() < 1e-14);
        assert!((roots[1] - c(0.4, -0.3)).norm() < 1e-14);
        for r in &set.rejected {
            assert!((r.norm() - 1.0).abs() < 1e-12 && r.re.abs() < 1e-12);
        }
        assert_eq!(set.count(RootClass::Propagating), 2);
    }

    #[test]
    fn zero_mode_at_transition() {
        for (w0, k) in [(1.0, 0.3), (0.4, 1.0), (0.4, 0.3)] {
            let m = model(w0, k);
            let set = characteristic_roots(&m, &BathSpec::ohmic(1.0, critical_coupling(&m).unwrap()).unwrap()).unwrap();
            assert!(set.smallest().unwrap().norm() < 1e-12, "{:?}", set.roots());
            assert_eq!(set.count(RootClass::Marginal), 1);
        }
    }

    #[test]
    fn residuals_and_pairing() {
        for gamma_ratio in [0.1, 0.5, 0.9, 1.3] {
            let m = model(0.4, 0.3);
            let b = BathSpec::ohmic(1.0, gamma_ratio * critical_coupling(&m).unwrap()).unwrap();
            let set = characteristic_roots(&m, &b).unwrap();
            assert_eq!(set.modes.len(), 4);
            assert_eq!(set.pairing_defect(), 0.0);
            for mode in &set.modes {
                assert!(mode.residual < 1e-9);
            }
        }
    }

    #[test]
    fn unstable_above_transition() {
        let m = model(1.0, 0.3);
        let g0 = critical_coupling(&m).unwrap();
        let above = characteristic_roots(&m, &BathSpec::ohmic(1.0, 1.2 * g0).unwrap()).unwrap();
        assert!(above.count(RootClass::Unstable) >= 1);
    }

    #[test]
    fn k_zero_collision_is_real_then_imaginary() {
        // at k = 0 the low pair satisfies ω² = ω₀² − 2ω₀Σ(ω)
        let m = model(0.4, 0.0);
        let g0 = critical_coupling(&m).unwrap();
        let low = |ratio: f64| {
            let set = characteristic_roots(&m, &BathSpec::ohmic(1.0, ratio * g0).unwrap()).unwrap();
            let mut r = set.roots();
            r.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
            (r[0], r[1])
        };
        let (a, b) = low(0.5);
        assert!(a.im.abs() < 1e-12 && b.im.abs() < 1e-12);
        assert_relative_eq!(a.re, -b.re, max_relative = 1e-12);
        let (a, b) = low(1.05);
        assert!(a.re.abs() < 1e-12 && b.re.abs() < 1e-12);
        assert_relative_eq!(a.im, -b.im, max_relative = 1e-10);
    }

    #[test]
    fn transition_matches_closed_form() {
        let b = BathSpec::ohmic(1.0, 0.0).unwrap();
        let cases = [(1.0, 0.0, 1.0 / PI), (1.0, 0.3, 1.09 / PI), (0.4, 1.0, 1.16 / (0.4 * PI))];
        for (w0, k, expect) in cases {
            let g = find_transition(&model(w0, k), &b).unwrap();
            assert!((g - expect).abs() < 1e-8 * expect, "{g} vs {expect}");
        }
        let sys = CoupledSystem::new(&model(1.0, 0.3), &b).unwrap();
        assert!(locate_transition(&sys).unwrap().root_modulus < 1e-9);
        let neg = BosonModel::new(-0.4, -0.3, 100, 0.3).unwrap();
        assert!(find_transition(&neg, &b).is_err());
    }

    #[test]
    fn general_bath_newton_matches_closed_form_on_drude() {
        let m = model(0.4, 0.3);
        let b = BathSpec::ohmic(1.0, 0.5 * critical_coupling(&m).unwrap()).unwrap();
        let closed = characteristic_roots(&m, &b).unwrap();
        let sys = CoupledSystem::with_sigma(&m, SelfEnergyFn::numeric(&b).unwrap());
        let numeric = modes(&sys, None).unwrap();
        assert!(numeric.failures.is_empty(), "{:?}", numeric.failures);
        assert_eq!(numeric.modes.len(), closed.modes.len());
        for (a, b) in numeric.roots().iter().zip(closed.roots()) {
            assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn exponential_bath_transition() {
        let m = model(1.0, 0.3);
        let b = BathSpec::new(CutoffFamily::Exponential, 1.0, 2.0, 0.0).unwrap();
        let g = find_transition(&m, &b).unwrap();
        // Σ(0) = γΩ for the exponential cutoff
        assert_relative_eq!(g, 1.09 / (2.0 * 2.0), max_relative = 1e-6);
        let set = characteristic_roots(&m, &b.with_gamma(0.5 * g)).unwrap();
        assert!(!set.modes.is_empty());
        for mode in &set.modes {
            assert!(mode.residual < 1e-9 * mode.omega.norm().powi(4).max(1.0));
        }
    }

    #[test]
    fn fluctuation_reduces_to_mean_field() {
        let m = model(0.4, 0.3);
        let g = 0.5 * critical_coupling(&m).unwrap();
        let b = BathSpec::ohmic(1.0, g).unwrap();
        let normal = MeanField::normal(g);
        let plain = characteristic_roots(&m, &b).unwrap().roots();
        let fl = fluctuation_roots(&m, &b, &normal).unwrap().roots();
        assert_eq!(plain, fl);
        let mf = mean_field_amplitude(&m, g).unwrap();
        let shifted = fluctuation_roots(&m, &b, &mf).unwrap();
        assert_eq!(shifted.modes.len(), 4);
        for mode in &shifted.modes {
            assert!(mode.residual < 1e-9);
        }
    }

    #[test]
    fn branches_follow_continuation() {
        let m = model(0.4, 0.3);
        let g0 = critical_coupling(&m).unwrap();
        let sets: Vec<ModeSet> = (0..=40)
            .map(|i| characteristic_roots(&m, &BathSpec::ohmic(1.0, g0 * i as f64 / 40.0).unwrap()).unwrap())
            .collect();
        let branches = track_branches(&sets);
        assert_eq!(branches.len(), 4);
        for branch in &branches {
            assert_eq!(branch.len(), sets.len());
            let pts: Vec<Complex64> = branch.iter().flatten().copied().collect();
            for w in pts.windows(2) {
                assert!((w[1] - w[0]).norm() < 0.2, "jump {} -> {}", w[0], w[1]);
            }
        }
    }
}
