//! Quadratic mode coupled to a discretized bath, solved exactly through the
//! steady-state Lyapunov equation for the quadrature covariance.
//!
//! Quadratures `X = (x_a, p_a, x_1, p_1, ...)` with `x = (a + a†)/√2` obey
//! `dX/dt = A X + noise`, and the steady covariance solves
//! `A V + V Aᵀ + D = 0`. The mode decays at rate k, each bath mode at a
//! small rate ε; both see vacuum noise.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{calibration_constant, spectral_density, BathSpec};
use crate::error::{domain, Error, Result};
use crate::model::BosonModel;

/// Bath modes on a logarithmic grid with midpoint-rule couplings
/// `g_j² = C J(ω_j) Δω_j`, where C is the self-energy calibration constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedBath {
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
    pub omega_c: f64,
}

impl DiscretizedBath {
    /// `modes` cells between `lo Ω` and `hi Ω`, one mode at the geometric
    /// centre of each.
    pub fn logarithmic(bath: &BathSpec, modes: usize, lo: f64, hi: f64) -> Result<Self> {
        bath.validate()?;
        if modes == 0 {
            return domain("discretized bath needs at least one mode");
        }
        if !(lo > 0.0 && lo < hi) {
            return domain("bath grid needs 0 < lo < hi");
        }
        let om = bath.omega_c;
        let (l0, l1) = ((lo * om).ln(), (hi * om).ln());
        let edges: Vec<f64> = (0..=modes)
            .map(|i| (l0 + (l1 - l0) * i as f64 / modes as f64).exp())
            .collect();
        let c = calibration_constant();
        let mut frequencies = Vec::with_capacity(modes);
        let mut couplings = Vec::with_capacity(modes);
        for e in edges.windows(2) {
            let w = (e[0] * e[1]).sqrt();
            frequencies.push(w);
            couplings.push((c * spectral_density(bath, w)? * (e[1] - e[0])).sqrt());
        }
        Ok(Self {
            frequencies,
            couplings,
            omega_c: om,
        })
    }

    /// Grid on `[10⁻³Ω, 50Ω]`.
    pub fn standard(bath: &BathSpec, modes: usize) -> Result<Self> {
        Self::logarithmic(bath, modes, 1e-3, 50.0)
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Discrete analogue of Σ(ω): `½ Σ_j g_j² ω_j / (ω_j² − ω²)`.
    pub fn self_energy(&self, omega: f64) -> f64 {
        0.5 * self
            .frequencies
            .iter()
            .zip(&self.couplings)
            .map(|(w, g)| g * g * w / (w * w - omega * omega))
            .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSolution {
    pub occupation: f64,
    /// Largest real part of the drift eigenvalues.
    pub max_drift_real: f64,
    /// `max |A V + V Aᵀ + D|`
    pub residual: f64,
    pub epsilon: f64,
    pub modes: usize,
}

/// Drift matrix A and noise matrix D.
pub fn drift_and_noise(model: &BosonModel, bath: &DiscretizedBath, epsilon: f64) -> (Mat<f64>, Mat<f64>) {
    let n = 2 * (bath.len() + 1);
    let (w0, k) = (model.omega0, model.k);
    let mut a = Mat::<f64>::zeros(n, n);
    let mut d = Mat::<f64>::zeros(n, n);
    a[(0, 0)] = -k;
    a[(0, 1)] = w0;
    a[(1, 0)] = -w0;
    a[(1, 1)] = -k;
    d[(0, 0)] = k;
    d[(1, 1)] = k;
    for (j, (&w, &g)) in bath.frequencies.iter().zip(&bath.couplings).enumerate() {
        let x = 2 + 2 * j;
        let p = x + 1;
        a[(x, x)] = -epsilon;
        a[(x, p)] = w;
        a[(p, x)] = -w;
        a[(p, p)] = -epsilon;
        d[(x, x)] = epsilon;
        d[(p, p)] = epsilon;
        // H ⊃ g x_a x_j
        a[(1, x)] = -g;
        a[(p, 0)] = -g;
    }
    (a, d)
}

/// Solves `A V + V Aᵀ + D = 0` for diagonalizable, strictly stable A.
/// Returns V and the largest real part of A's spectrum.
pub fn solve_lyapunov(a: &Mat<f64>, d: &Mat<f64>) -> Result<(Mat<f64>, f64)> {
    let n = a.nrows();
    let eig = a
        .eigen()
        .map_err(|e| Error::LinearAlgebra(format!("drift eigendecomposition: {e:?}")))?;
    let s: Vec<Complex64> = eig.S().column_vector().iter().copied().collect();
    let max_real = s.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if max_real >= 0.0 {
        return Err(Error::Unstable { max_real });
    }
    let u = eig.U().to_owned();
    let lu = u.partial_piv_lu();
    let dc = Mat::<Complex64>::from_fn(n, n, |i, j| Complex64::new(d[(i, j)], 0.0));
    // W = U⁻¹ D U⁻ᵀ
    let half = lu.solve(&dc);
    let w = lu.solve(half.transpose().to_owned());
    let y = Mat::<Complex64>::from_fn(n, n, |i, j| -w[(i, j)] / (s[i] + s[j]));
    let x = &u * &y * u.transpose();
    let v = Mat::<f64>::from_fn(n, n, |i, j| x[(i, j)].re);
    if v.norm_max().is_nan() {
        return Err(Error::LinearAlgebra("Lyapunov solution is not finite".into()));
    }
    Ok((v, max_real))
}

/// Steady covariance and occupation of the mode.
pub fn lyapunov_solution(model: &BosonModel, bath: &DiscretizedBath, epsilon: f64) -> Result<LyapunovSolution> {
    if model.lambda != 0.0 {
        return domain("the Lyapunov oracle covers the quadratic sector only (lambda = 0)");
    }
    if !(model.k > 0.0) {
        return domain("the Lyapunov oracle needs k > 0");
    }
    if !(epsilon > 0.0) {
        return domain("bath-mode regularization epsilon must be positive");
    }
    let (a, d) = drift_and_noise(model, bath, epsilon);
    let (v, max_drift_real) = solve_lyapunov(&a, &d)?;
    let r = &a * &v + &v * a.transpose() + &d;
    Ok(LyapunovSolution {
        occupation: 0.5 * (v[(0, 0)] + v[(1, 1)] - 1.0),
        max_drift_real,
        residual: r.norm_max(),
        epsilon,
        modes: bath.len(),
    })
}

/// `⟨a†a⟩` of the mode coupled to `bath`, with bath damping `ε`.
pub fn lyapunov_density(model: &BosonModel, bath: &DiscretizedBath, epsilon: f64) -> Result<f64> {
    Ok(lyapunov_solution(model, bath, epsilon)?.occupation)
}

/// Smallest eigenvalue of the Hermitian matrix `V + (i/2) J`, with J the
/// symplectic form; non-negative for a physical Gaussian state.
pub fn uncertainty_margin(v: &Mat<f64>) -> Result<f64> {
    let n = v.nrows();
    let h = Mat::<Complex64>::from_fn(n, n, |i, j| {
        let sym = if i / 2 == j / 2 && i != j {
            if i % 2 == 0 { 0.5 } else { -0.5 }
        } else {
            0.0
        };
        Complex64::new(0.5 * (v[(i, j)] + v[(j, i)]), sym)
    });
    let eig = h
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("covariance eigenvalues: {e:?}")))?;
    Ok(eig.into_iter().fold(f64::INFINITY, f64::min))
}
