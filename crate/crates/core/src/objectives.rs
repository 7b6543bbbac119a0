//! Deterministic test objectives with analytic gradients.
//!
//! Each objective is the `f` that the BG-0 wrapper in [`crate::oracle`]
//! turns into a stochastic problem. Objectives are immutable after
//! construction and can be shared across threads behind an `Arc`.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops;

/// Which smoothness family an objective is known to belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    Standard,
    SymAlpha,
    Mss,
    ExpectedSymAlpha,
}

/// Generalized-smoothness metadata. `None` constants are unknown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessMeta {
    pub alpha: f64,
    pub l0: Option<f64>,
    pub l1: Option<f64>,
    pub class: ClassTag,
}

impl SmoothnessMeta {
    pub fn new(alpha: f64, l0: Option<f64>, l1: Option<f64>, class: ClassTag) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0,1], got {alpha}")));
        }
        if l0.is_some_and(|v| !(v >= 0.0)) || l1.is_some_and(|v| !(v >= 0.0)) {
            return Err(Error::invalid("smoothness constants must be nonnegative"));
        }
        if class == ClassTag::Standard && l1.is_some_and(|v| v != 0.0) {
            return Err(Error::invalid("standard smoothness requires L1 = 0 or unknown"));
        }
        Ok(Self { alpha, l0, l1, class })
    }
}

pub trait Objective: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn grad(&self, x: &[f64]) -> Vec<f64>;

    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.grad(x))
    }

    fn meta(&self) -> Option<&SmoothnessMeta> {
        None
    }

    /// Known infimum of `f`, when available analytically.
    fn f_inf(&self) -> Option<f64> {
        None
    }
}

/// Noiseless real phase retrieval, `f(x) = (1/2m) sum_r (y_r - (a_r^T x)^2)^2`.
#[derive(Clone, Debug)]
pub struct PhaseRetrieval {
    dim: usize,
    measurements: usize,
    /// Row-major `m x d` measurement matrix.
    a: Vec<f64>,
    y: Vec<f64>,
    x_star: Vec<f64>,
    meta: SmoothnessMeta,
}

impl PhaseRetrieval {
    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    pub fn measurement_matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn measurements(&self) -> usize {
        self.measurements
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.a.chunks_exact(self.dim)
    }
}

pub fn make_phase_retrieval(d: usize, m: usize, meas_std: f64, signal_seed: u64) -> Result<PhaseRetrieval> {
    if d == 0 || m == 0 {
        return Err(Error::invalid("phase retrieval needs d >= 1 and m >= 1"));
    }
    if !(meas_std > 0.0 && meas_std.is_finite()) {
        return Err(Error::invalid(format!("meas_std must be positive, got {meas_std}")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(signal_seed);
    let entry = Normal::new(0.0, meas_std).map_err(|e| Error::invalid(e.to_string()))?;
    let a: Vec<f64> = (0..m * d).map(|_| entry.sample(&mut rng)).collect();
    let x_star: Vec<f64> = (0..d).map(|_| rand_distr::StandardNormal.sample(&mut rng)).collect();
    let y = a
        .chunks_exact(d)
        .map(|row| {
            let s = vecops::dot(row, &x_star);
            s * s
        })
        .collect();
    Ok(PhaseRetrieval {
        dim: d,
        measurements: m,
        a,
        y,
        x_star,
        meta: SmoothnessMeta::new(2.0 / 3.0, None, None, ClassTag::SymAlpha)?,
    })
}

impl Objective for PhaseRetrieval {
    fn name(&self) -> &str {
        "phase_retrieval"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let sum: f64 = self
            .rows()
            .zip(&self.y)
            .map(|(row, &y)| {
                let s = vecops::dot(row, x);
                let r = y - s * s;
                r * r
            })
            .sum();
        sum / (2.0 * self.measurements as f64)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.value_and_grad(x).1
    }

    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; self.dim];
        let mut sum = 0.0;
        for (row, &y) in self.rows().zip(&self.y) {
            let s = vecops::dot(row, x);
            let r = s * s - y;
            sum += r * r;
            vecops::axpy(r * s, row, &mut g);
        }
        let m = self.measurements as f64;
        g.iter_mut().for_each(|v| *v *= 2.0 / m);
        (sum / (2.0 * m), g)
    }

    fn meta(&self) -> Option<&SmoothnessMeta> {
        Some(&self.meta)
    }

    fn f_inf(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// One-dimensional `f(x) = |x|^p` with `p = (2 - alpha) / (1 - alpha)`.
#[derive(Clone, Debug)]
pub struct PowerPoly {
    power: f64,
    meta: SmoothnessMeta,
}

impl PowerPoly {
    pub fn power(&self) -> f64 {
        self.power
    }
}

pub fn make_power_poly(alpha: f64) -> Result<PowerPoly> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("power_poly needs alpha in (0,1), got {alpha}")));
    }
    Ok(PowerPoly {
        power: (2.0 - alpha) / (1.0 - alpha),
        meta: SmoothnessMeta::new(alpha, None, None, ClassTag::SymAlpha)?,
    })
}

impl Objective for PowerPoly {
    fn name(&self) -> &str {
        "power_poly"
    }

    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        x[0].abs().powf(self.power)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let t = x[0];
        if t == 0.0 {
            return vec![0.0];
        }
        vec![self.power * t.abs().powf(self.power - 1.0) * t.signum()]
    }

    fn meta(&self) -> Option<&SmoothnessMeta> {
        Some(&self.meta)
    }

    fn f_inf(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Isotropic quadratic `f(x) = (c/2) ||x||^2`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    dim: usize,
    curvature: f64,
    meta: SmoothnessMeta,
}

impl Quadratic {
    pub fn curvature(&self) -> f64 {
        self.curvature
    }
}

pub fn make_quadratic(dimension: usize, curvature: f64) -> Result<Quadratic> {
    if dimension == 0 {
        return Err(Error::invalid("quadratic needs dimension >= 1"));
    }
    if !(curvature > 0.0 && curvature.is_finite()) {
        return Err(Error::invalid(format!("curvature must be positive, got {curvature}")));
    }
    Ok(Quadratic {
        dim: dimension,
        curvature,
        meta: SmoothnessMeta::new(1.0, Some(curvature), Some(0.0), ClassTag::Standard)?,
    })
}

impl Objective for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.curvature * vecops::dot(x, x)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| self.curvature * v).collect()
    }

    fn meta(&self) -> Option<&SmoothnessMeta> {
        Some(&self.meta)
    }

    fn f_inf(&self) -> Option<f64> {
        Some(0.0)
    }
}
