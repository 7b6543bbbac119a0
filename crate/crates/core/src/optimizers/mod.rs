//! Normalized methods (NSGDM, NSTORM, deterministic normalized GD) and the
//! unnormalized baselines (SGD and STORM, with fixed or dynamic batches).
//!
//! Every run records the states `x^0, ..., x^K` with `K = T - 1`. State `k`
//! carries the estimator `v^k` built from the samples drawn at that state;
//! the step from `x^k` to `x^{k+1}` uses `v^k`. No sample is drawn for the
//! unrecorded `x^{K+1}`, so NSGDM charges `K + 1` oracle calls and NSTORM
//! charges `N_init + 2K`.

mod baselines;
mod normalized;
mod trace;

pub use baselines::{run_sgd, run_storm_dynamic};
pub use normalized::{run_normalized_gd, run_nsgdm, run_nstorm};
pub use trace::{uniform_output, IterateStore, RunStatus, Trace, UniformOutput, FULL_ITERATE_MAX_DIM, THIN_STRIDE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BATCH_CAP: usize = 100_000;

/// How many samples a baseline draws per estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BatchPolicy {
    Fixed {
        size: usize,
    },
    /// `b = min(cap, max(1, ceil((B^2 ||x - x0||^2 + G^2) / sigma_sq)))`.
    Dynamic {
        sigma_sq: f64,
        cap: usize,
    },
}

impl BatchPolicy {
    pub fn fixed(size: usize) -> Result<Self> {
        let p = BatchPolicy::Fixed { size };
        p.validate()?;
        Ok(p)
    }

    pub fn dynamic(sigma_sq: f64, cap: usize) -> Result<Self> {
        let p = BatchPolicy::Dynamic { sigma_sq, cap };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BatchPolicy::Fixed { size } if size == 0 => Err(Error::invalid("fixed batch size must be >= 1")),
            BatchPolicy::Dynamic { sigma_sq, .. } if !(sigma_sq > 0.0 && sigma_sq.is_finite()) => {
                Err(Error::invalid(format!("sigma_sq must be positive, got {sigma_sq}")))
            }
            BatchPolicy::Dynamic { cap, .. } if cap == 0 => Err(Error::invalid("batch cap must be >= 1")),
            _ => Ok(()),
        }
    }

    /// Batch size for a point whose oracle noise variance is `variance`,
    /// and whether the cap clipped it.
    pub fn size_for(&self, variance: f64) -> (usize, bool) {
        match *self {
            BatchPolicy::Fixed { size } => (size, false),
            BatchPolicy::Dynamic { sigma_sq, cap } => {
                let raw = (variance / sigma_sq).ceil();
                if !(raw <= cap as f64) {
                    (cap, true)
                } else {
                    ((raw as usize).max(1), false)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dynamic_rule() {
        let p = BatchPolicy::dynamic(1.0, DEFAULT_BATCH_CAP).unwrap();
        // at x0 with G = 1
        assert_eq!(p.size_for(1.0), (1, false));
        // B = 1, r = 31.6
        assert_eq!(p.size_for(31.6f64 * 31.6 + 1.0), (1000, false));
        assert_eq!(p.size_for(0.0), (1, false));
        assert_eq!(p.size_for(1e9), (DEFAULT_BATCH_CAP, true));
        assert_eq!(p.size_for(f64::INFINITY), (DEFAULT_BATCH_CAP, true));
    }

    #[test]
    fn policy_validation() {
        assert!(BatchPolicy::fixed(0).is_err());
        assert!(BatchPolicy::dynamic(0.0, 10).is_err());
        assert!(BatchPolicy::dynamic(1.0, 0).is_err());
        assert_eq!(BatchPolicy::fixed(3).unwrap().size_for(1e6), (3, false));
    }
}
