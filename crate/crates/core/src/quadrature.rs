//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature.
//!
//! All bath integrals and the frequency integral of the Keldysh correlator go
//! through [`integrate`]. Semi-infinite ranges are mapped onto `[0, 1)` with
//! `x = a + scale * t / (1 - t)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Error targets for adaptive quadrature. Convergence is declared when the
/// summed error estimate is below `max(abs, rel * |I|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-8,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }

    pub fn with_max_intervals(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }
}

/// Values that can be integrated: real or complex scalars.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[10];
    let mut gauss = T::zero();
    for i in 0..10 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kron = kron + pair * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + pair * WG[i / 2];
        }
    }
    let value = kron * half;
    let err = ((kron - gauss) * half).magnitude();
    (value, err)
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    integrate_breaks(f, &[a, b], tol)
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the
/// subdivision given by `points` (which must be non-decreasing).
pub fn integrate_breaks<T, F>(f: F, points: &[f64], tol: Tolerance) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    assert!(points.len() >= 2, "need at least two break points");
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = 0.0;
    // segments too small to split further
    let mut frozen_err = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (value, error) = kronrod(&f, a, b);
        total = total + value;
        total_err += error;
        heap.push(Segment { a, b, value, error });
    }
    loop {
        if !total.magnitude().is_finite() || !total_err.is_finite() {
            return Err(Error::Quadrature {
                achieved: f64::INFINITY,
                requested: tol.abs,
                intervals: heap.len(),
            });
        }
        let target = tol.abs.max(tol.rel * total.magnitude());
        if total_err <= target {
            return Ok(Estimate {
                value: total,
                error: total_err,
                intervals: heap.len(),
            });
        }
        if heap.len() >= tol.max_intervals || total_err - frozen_err <= 0.0 {
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: target,
                intervals: heap.len(),
            });
        }
        let Some(seg) = heap.pop() else {
            unreachable!("heap holds at least one segment")
        };
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) || (seg.b - seg.a) <= 1e-14 * seg.a.abs().max(seg.b.abs()) {
            frozen_err += seg.error;
            // push back with zero priority so it is never picked again
            heap.push(Segment { error: -1.0, ..seg });
            if heap.iter().all(|s| s.error < 0.0) {
                return Err(Error::Quadrature {
                    achieved: total_err,
                    requested: target,
                    intervals: heap.len(),
                });
            }
            continue;
        }
        let (lv, le) = kronrod(&f, seg.a, mid);
        let (rv, re) = kronrod(&f, mid, seg.b);
        total = total - seg.value + lv + rv;
        total_err += le + re - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: lv, error: le });
        heap.push(Segment { a: mid, b: seg.b, value: rv, error: re });
    }
}

/// Integrates `f` over `[a, inf)` via `x = a + scale * t / (1 - t)`.
pub fn integrate_to_infinity<T, F>(f: F, a: f64, scale: f64, tol: Tolerance) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let mapped = |t: f64| {
        let one_minus = 1.0 - t;
        let x = a + scale * t / one_minus;
        let jac = scale / (one_minus * one_minus);
        f(x) * jac
    };
    integrate(mapped, 0.0, 1.0, tol)
}
