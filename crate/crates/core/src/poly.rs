//! Polynomial roots from companion-matrix eigenvalues, polished by Newton.
//!
//! Coefficients are in ascending order: `c[0] + c[1] z + ... + c[n] z^n`.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_POLISH: usize = 50;

/// Value and derivative at `z` by Horner's rule.
pub fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn eval_real(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn trim<T: Copy>(coeffs: &[T], is_zero: impl Fn(T) -> bool) -> Result<&[T]> {
    let degree = coeffs
        .iter()
        .rposition(|&c| !is_zero(c))
        .ok_or_else(|| Error::Domain("zero polynomial has no isolated roots".into()))?;
    Ok(&coeffs[..=degree])
}

/// Newton iteration from `z`; keeps the best iterate.
pub fn polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let mut best = z;
    let mut best_res = eval_with_derivative(coeffs, z).0.norm();
    for _ in 0..MAX_POLISH {
        let (p, dp) = eval_with_derivative(coeffs, z);
        if p.norm() == 0.0 || dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        z -= step;
        let res = eval_with_derivative(coeffs, z).0.norm();
        if res < best_res {
            best = z;
            best_res = res;
        }
        if step.norm() <= 1e-16 * z.norm() {
            break;
        }
    }
    best
}

fn polish_real(coeffs: &[f64], mut x: f64) -> f64 {
    let mut best = x;
    let mut best_res = eval_real(coeffs, x).0.abs();
    for _ in 0..MAX_POLISH {
        let (p, dp) = eval_real(coeffs, x);
        if p == 0.0 || dp == 0.0 {
            break;
        }
        let step = p / dp;
        x -= step;
        let res = eval_real(coeffs, x).0.abs();
        if res < best_res {
            best = x;
            best_res = res;
        }
        if step.abs() <= 1e-16 * x.abs() {
            break;
        }
    }
    best
}

/// All roots of a complex polynomial.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let coeffs = trim(coeffs, |c: Complex64| c.norm() == 0.0)?;
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    let companion = Mat::<Complex64>::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -coeffs[i] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let eig = companion
        .eigenvalues()
        .map_err(|e| Error::LinearAlgebra(format!("companion eigenvalues: {e:?}")))?;
    Ok(eig.into_iter().map(|z| polish(coeffs, z)).collect())
}

/// All roots of a real polynomial. Non-real roots come in exact conjugate
/// pairs.
pub fn real_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let coeffs = trim(coeffs, |c: f64| c == 0.0)?;
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    let companion = Mat::<f64>::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -coeffs[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eig = companion
        .eigenvalues()
        .map_err(|e| Error::LinearAlgebra(format!("companion eigenvalues: {e:?}")))?;
    let complex: Vec<Complex64> = coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let mut out = Vec::with_capacity(n);
    for z in &eig {
        if z.im == 0.0 {
            out.push(Complex64::new(polish_real(coeffs, z.re), 0.0));
        } else if z.im > 0.0 {
            let p = polish(&complex, *z);
            if p.im == 0.0 {
                out.push(p);
                out.push(p);
            } else {
                let p = Complex64::new(p.re, p.im.abs());
                out.push(p);
                out.push(p.conj());
            }
        }
    }
    if out.len() != n {
        return Ok(eig.into_iter().map(|z| polish(&complex, z)).collect());
    }
    Ok(out)
}
