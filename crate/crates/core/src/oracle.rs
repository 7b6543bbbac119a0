//! BG-0 stochastic first-order oracle built by wrapping a deterministic
//! objective.
//!
//! For a sample `xi = (rho, u)` with `rho` uniform on `{-1, +1}` and
//! `u ~ N(0, I_d / d)`, the wrapped loss is
//!
//! ```text
//! f_xi(x) = f(x) + (B rho / 2) ||x - x0||^2 + G <u, x - x0>
//! ```
//!
//! so `grad f_xi(x) = grad f(x) + B rho (x - x0) + G u`. The gradient is
//! unbiased and its variance is exactly `B^2 ||x - x0||^2 + G^2`.
//!
//! The oracle owns the SFO counter. Every gradient evaluation, including
//! each half of a paired evaluation, is charged here so that all methods
//! are billed identically.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::objectives::Objective;
use crate::vecops;

/// One wrapper draw.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSample {
    pub rho: f64,
    pub u: Vec<f64>,
}

/// A mini-batch of `size` independent draws, represented by its sample
/// means.
///
/// The noise enters the wrapped gradient linearly in `(rho, u)`, so the
/// batch average depends on the draws only through `mean(rho)` and
/// `mean(u)`. Those are sampled directly from their exact joint law:
/// `sum(rho) = 2 Bin(b, 1/2) - b` and `mean(u) ~ N(0, I_d / (d b))`.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSample {
    pub size: usize,
    pub rho_mean: f64,
    pub u_mean: Vec<f64>,
}

impl From<OracleSample> for BatchSample {
    fn from(s: OracleSample) -> Self {
        BatchSample {
            size: 1,
            rho_mean: s.rho,
            u_mean: s.u,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Bg0Oracle {
    base: Arc<dyn Objective>,
    b: f64,
    g: f64,
    x0: Vec<f64>,
    sfo: u64,
}

pub fn wrap(base: Arc<dyn Objective>, b: f64, g: f64, x0: &[f64]) -> Result<Bg0Oracle> {
    Bg0Oracle::new(base, b, g, x0)
}

impl Bg0Oracle {
    pub fn new(base: Arc<dyn Objective>, b: f64, g: f64, x0: &[f64]) -> Result<Self> {
        if !(b >= 0.0 && b.is_finite()) || !(g >= 0.0 && g.is_finite()) {
            return Err(Error::invalid(format!(
                "B and G must be finite and >= 0, got B={b}, G={g}"
            )));
        }
        check_dim(base.dim(), x0.len())?;
        Ok(Self {
            base,
            b,
            g,
            x0: x0.to_vec(),
            sfo: 0,
        })
    }

    pub fn base(&self) -> &Arc<dyn Objective> {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn sfo_count(&self) -> u64 {
        self.sfo
    }

    /// `B^2 ||x - x0||^2 + G^2`, the exact gradient-noise variance at `x`.
    pub fn noise_variance(&self, x: &[f64]) -> f64 {
        self.b * self.b * vecops::dist_sq(x, &self.x0) + self.g * self.g
    }

    pub fn draw_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> OracleSample {
        let rho = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let scale = 1.0 / (self.dim() as f64).sqrt();
        let u = (0..self.dim())
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * scale
            })
            .collect();
        OracleSample { rho, u }
    }

    /// Draw `size` independent samples. A batch of one is exactly
    /// [`Self::draw_sample`], consuming the stream identically.
    pub fn draw_batch<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<BatchSample> {
        if size == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        if size == 1 {
            return Ok(self.draw_sample(rng).into());
        }
        let heads = Binomial::new(size as u64, 0.5)
            .map_err(|e| Error::invalid(e.to_string()))?
            .sample(rng);
        let rho_mean = (2.0 * heads as f64 - size as f64) / size as f64;
        let scale = 1.0 / (self.dim() as f64 * size as f64).sqrt();
        let u_mean = (0..self.dim())
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * scale
            })
            .collect();
        Ok(BatchSample { size, rho_mean, u_mean })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())
    }

    /// `base_grad + B rho (x - x0) + G u` without touching the counter.
    fn perturb(&self, x: &[f64], base_grad: &[f64], rho: f64, u: &[f64]) -> Vec<f64> {
        let br = self.b * rho;
        base_grad
            .iter()
            .zip(x.iter().zip(&self.x0))
            .zip(u)
            .map(|((gi, (xi, x0i)), ui)| gi + br * (xi - x0i) + self.g * ui)
            .collect()
    }

    pub fn stoch_grad(&mut self, x: &[f64], sample: &OracleSample) -> Result<Vec<f64>> {
        self.check_point(x)?;
        check_dim(self.dim(), sample.u.len())?;
        let base = self.base.grad(x);
        self.sfo += 1;
        Ok(self.perturb(x, &base, sample.rho, &sample.u))
    }

    /// Average of `batch` independent stochastic gradients at `x`.
    pub fn stoch_grad_batch<R: Rng + ?Sized>(&mut self, x: &[f64], batch: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let sample = self.draw_batch(batch, rng)?;
        let base = self.base.grad(x);
        Ok(self.perturb_batch(x, &base, &sample))
    }

    /// Gradients at `x` and `y` under the same sample. Charges two calls.
    pub fn paired_stoch_grads(&mut self, x: &[f64], y: &[f64], sample: &OracleSample) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_point(x)?;
        self.check_point(y)?;
        check_dim(self.dim(), sample.u.len())?;
        let gx = self.base.grad(x);
        let gy = self.base.grad(y);
        self.sfo += 2;
        Ok((
            self.perturb(x, &gx, sample.rho, &sample.u),
            self.perturb(y, &gy, sample.rho, &sample.u),
        ))
    }

    /// Mini-batch version of [`Self::paired_stoch_grads`], charging `2 b`.
    pub fn paired_stoch_grads_batch(
        &mut self,
        x: &[f64],
        y: &[f64],
        sample: &BatchSample,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_point(x)?;
        self.check_point(y)?;
        check_dim(self.dim(), sample.u_mean.len())?;
        let gx = self.base.grad(x);
        let gy = self.base.grad(y);
        Ok(self.paired_batch_from_base(x, &gx, y, &gy, sample))
    }

    /// Wrapped loss. Loss evaluations are not SFO calls.
    pub fn stoch_loss(&self, x: &[f64], sample: &OracleSample) -> Result<f64> {
        self.check_point(x)?;
        check_dim(self.dim(), sample.u.len())?;
        let diff = vecops::sub(x, &self.x0);
        Ok(self.base.value(x)
            + 0.5 * self.b * sample.rho * vecops::dot(&diff, &diff)
            + self.g * vecops::dot(&sample.u, &diff))
    }

    // The optimizers already hold the exact gradient of the base objective
    // at every visited point (it feeds the trace), so these entry points
    // take it as input instead of recomputing it. Charging is unchanged.

    pub(crate) fn perturb_batch(&mut self, x: &[f64], base_grad: &[f64], sample: &BatchSample) -> Vec<f64> {
        self.sfo += sample.size as u64;
        self.perturb(x, base_grad, sample.rho_mean, &sample.u_mean)
    }

    pub(crate) fn paired_batch_from_base(
        &mut self,
        x: &[f64],
        gx: &[f64],
        y: &[f64],
        gy: &[f64],
        sample: &BatchSample,
    ) -> (Vec<f64>, Vec<f64>) {
        self.sfo += 2 * sample.size as u64;
        (
            self.perturb(x, gx, sample.rho_mean, &sample.u_mean),
            self.perturb(y, gy, sample.rho_mean, &sample.u_mean),
        )
    }
}
