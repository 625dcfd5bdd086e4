//! Lindblad master equation of the isolated mode on a truncated Fock space.
//!
//! `dρ/dt = −i[H, ρ] + k(2aρa† − a†aρ − ρa†a)` with
//! `H = ω₀ a†a + (λ/N)(a†a)²`. H is diagonal, so the superoperator only
//! couples `ρ_{mn}` to `ρ_{m+1,n+1}` and is block diagonal in the coherence
//! order `q = n − m`.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::BosonModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockTruncation {
    /// Initial cutoff; doubled until the tail is below threshold.
    pub n_max: usize,
    pub tail_threshold: f64,
    pub max_n_max: usize,
}

impl Default for FockTruncation {
    fn default() -> Self {
        Self {
            n_max: 20,
            tail_threshold: 1e-8,
            max_n_max: 320,
        }
    }
}

impl FockTruncation {
    pub fn new(n_max: usize) -> Result<Self> {
        let t = Self {
            n_max,
            ..Self::default()
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 {
            return domain("Fock cutoff n_max must be >= 2");
        }
        if self.max_n_max < self.n_max {
            return domain("max_n_max must be >= n_max");
        }
        if !(self.tail_threshold > 0.0) {
            return domain("tail threshold must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindbladSteadyState {
    pub occupation: f64,
    /// Slowest nonzero decay rate of the populations (q = 0 block).
    pub population_decay_rate: f64,
    /// Slowest nonzero decay rate over all coherence blocks.
    pub slowest_decay_rate: f64,
    /// `⟨0|ρ|0⟩`
    pub vacuum_fidelity: f64,
    pub purity: f64,
    /// Population of the highest retained level.
    pub tail_population: f64,
    pub n_max: usize,
    pub converged: bool,
    /// Steady-state populations `ρ_{mm}`.
    pub populations: Vec<f64>,
}

fn energy(model: &BosonModel, m: usize) -> f64 {
    let m = m as f64;
    model.omega0 * m + model.lambda / model.n as f64 * m * m
}

/// Full `(n_max+1)² × (n_max+1)²` superoperator on `vec(ρ)`, index `m(n_max+1) + n`.
pub fn superoperator(model: &BosonModel, n_max: usize) -> Mat<Complex64> {
    let d = n_max + 1;
    let k = model.k;
    let mut l = Mat::<Complex64>::zeros(d * d, d * d);
    for m in 0..d {
        for n in 0..d {
            let row = m * d + n;
            l[(row, row)] = Complex64::new(-k * (m + n) as f64, -(energy(model, m) - energy(model, n)));
            if m + 1 < d && n + 1 < d {
                let col = (m + 1) * d + n + 1;
                l[(row, col)] = Complex64::new(2.0 * k * (((m + 1) * (n + 1)) as f64).sqrt(), 0.0);
            }
        }
    }
    l
}

/// Block of coherence order `q = n − m`, basis `ρ_{m, m+q}` for `q ≥ 0` or
/// `ρ_{m−q, m}` for `q < 0`, ordered by increasing m.
pub fn coherence_block(model: &BosonModel, n_max: usize, q: isize) -> Mat<Complex64> {
    let d = n_max + 1;
    let shift = q.unsigned_abs();
    let size = d - shift;
    let k = model.k;
    let index = |i: usize| if q >= 0 { (i, i + shift) } else { (i + shift, i) };
    Mat::<Complex64>::from_fn(size, size, |r, c| {
        let (m, n) = index(r);
        if r == c {
            Complex64::new(-k * (m + n) as f64, -(energy(model, m) - energy(model, n)))
        } else if c == r + 1 {
            Complex64::new(2.0 * k * (((m + 1) * (n + 1)) as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Largest `|L_ij|` between entries of different coherence order.
pub fn cross_block_coupling(l: &Mat<Complex64>, n_max: usize) -> f64 {
    let d = n_max + 1;
    let order = |i: usize| (i % d) as isize - (i / d) as isize;
    let mut worst: f64 = 0.0;
    for i in 0..l.nrows() {
        for j in 0..l.ncols() {
            if order(i) != order(j) {
                worst = worst.max(l[(i, j)].norm());
            }
        }
    }
    worst
}

fn slowest_rate(block: &Mat<Complex64>, scale: f64) -> Result<f64> {
    let eig = block
        .eigenvalues()
        .map_err(|e| Error::LinearAlgebra(format!("Liouvillian eigenvalues: {e:?}")))?;
    Ok(eig
        .iter()
        .filter(|z| z.norm() > 1e-10 * scale)
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min))
}

fn solve_at(model: &BosonModel, n_max: usize, tail_threshold: f64) -> Result<LindbladSteadyState> {
    let d = n_max + 1;
    let pop = coherence_block(model, n_max, 0);
    // replace the first equation by the trace condition
    let a = Mat::<f64>::from_fn(d, d, |r, c| if r == 0 { 1.0 } else { pop[(r, c)].re });
    let mut rhs = Mat::<f64>::zeros(d, 1);
    rhs[(0, 0)] = 1.0;
    let p = a.partial_piv_lu().solve(&rhs);
    let populations: Vec<f64> = (0..d).map(|i| p[(i, 0)]).collect();
    if populations.iter().any(|x| !x.is_finite()) {
        return Err(Error::LinearAlgebra("steady-state solve produced non-finite populations".into()));
    }
    let scale = model.k.max(model.omega0.abs()).max(1e-300);
    let population_decay_rate = slowest_rate(&pop, scale)?;
    let mut slowest_decay_rate = population_decay_rate;
    for q in 1..=n_max as isize {
        for sign in [1, -1] {
            slowest_decay_rate = slowest_decay_rate.min(slowest_rate(&coherence_block(model, n_max, sign * q), scale)?);
        }
    }
    let tail_population = populations[n_max].abs();
    Ok(LindbladSteadyState {
        occupation: populations.iter().enumerate().map(|(m, p)| m as f64 * p).sum(),
        population_decay_rate,
        slowest_decay_rate,
        vacuum_fidelity: populations[0],
        purity: populations.iter().map(|p| p * p).sum(),
        tail_population,
        n_max,
        converged: tail_population < tail_threshold,
        populations,
    })
}

/// Steady state of the isolated mode (`γ = 0`); requires `k > 0`.
pub fn lindblad_steady_state(model: &BosonModel, trunc: &FockTruncation) -> Result<LindbladSteadyState> {
    trunc.validate()?;
    if !(model.k > 0.0) {
        return domain("the Lindblad steady state is unique only for k > 0");
    }
    let mut n_max = trunc.n_max;
    loop {
        let state = solve_at(model, n_max, trunc.tail_threshold)?;
        if state.converged {
            return Ok(state);
        }
        if n_max * 2 > trunc.max_n_max {
            return Err(Error::TruncationNotConverged {
                n_max,
                tail: state.tail_population,
            });
        }
        n_max *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_steady_state() {
        let m = BosonModel::new(0.4, 0.3, 100, 0.3).unwrap();
        let s = lindblad_steady_state(&m, &FockTruncation::default()).unwrap();
        assert!(s.occupation.abs() < 1e-12);
        assert!(s.vacuum_fidelity > 1.0 - 1e-8);
        assert!((s.purity - 1.0).abs() < 1e-12);
        assert!(s.converged);
    }

    #[test]
    fn decay_rates() {
        let m = BosonModel::new(1.0, 0.0, 10, 0.25).unwrap();
        let s = lindblad_steady_state(&m, &FockTruncation::new(8).unwrap()).unwrap();
        assert!((s.population_decay_rate - 0.5).abs() < 1e-10);
        assert!((s.slowest_decay_rate - 0.25).abs() < 1e-10);
    }

    #[test]
    fn blocks_match_full_superoperator() {
        let m = BosonModel::new(0.7, 0.5, 3, 0.2).unwrap();
        let n_max = 5;
        let d = n_max + 1;
        let full = superoperator(&m, n_max);
        assert_eq!(cross_block_coupling(&full, n_max), 0.0);
        for q in -(n_max as isize)..=n_max as isize {
            let block = coherence_block(&m, n_max, q);
            let s = q.unsigned_abs();
            let flat = |i: usize| if q >= 0 { i * d + i + s } else { (i + s) * d + i };
            for r in 0..block.nrows() {
                for c in 0..block.ncols() {
                    assert_eq!(block[(r, c)], full[(flat(r), flat(c))]);
                }
            }
        }
    }

    #[test]
    fn populations_relax_like_damped_mode() {
        // single excitation: d⟨n⟩/dt = −2k⟨n⟩
        let m = BosonModel::new(1.0, 0.0, 1, 0.3).unwrap();
        let block = coherence_block(&m, 4, 0);
        let rate: f64 = (0..5).map(|r| block[(r, 1)].re * r as f64).sum();
        assert!((rate + 0.6).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        let m = BosonModel::new(1.0, 0.3, 10, 0.0).unwrap();
        assert!(lindblad_steady_state(&m, &FockTruncation::default()).is_err());
        assert!(FockTruncation::new(1).is_err());
    }
}
