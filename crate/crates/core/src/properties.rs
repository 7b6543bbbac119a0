//! Executable forms of the auxiliary inequalities used by the convergence
//! analysis, plus the numerical checkers shared by `verify` and the tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::objectives::Objective;
use crate::vecops;

/// Central finite differences of `obj.value` with step `1e-6 * (1 + ||x||)`.
pub fn finite_difference_grad(obj: &dyn Objective, x: &[f64]) -> Vec<f64> {
    let h = 1e-6 * (1.0 + vecops::norm(x));
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            probe[j] = x[j] + h;
            let up = obj.value(&probe);
            probe[j] = x[j] - h;
            let down = obj.value(&probe);
            probe[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Normalized direction with the `v/||v|| := 0` convention at the origin.
///
/// Returns the direction and whether the zero convention fired. Norms below
/// `1e-300` count as zero so the division never overflows.
pub fn normalized_direction(v: &[f64]) -> (Vec<f64>, bool) {
    let n = vecops::norm(v);
    if n < 1e-300 {
        (vec![0.0; v.len()], true)
    } else {
        (v.iter().map(|x| x / n).collect(), false)
    }
}

/// Slack of `<a, d> >= ||a|| - 2||e||` where `d` is the normalized `a + e`.
/// Nonnegative whenever the inequality holds.
pub fn direction_error_slack(a: &[f64], e: &[f64]) -> f64 {
    let sum: Vec<f64> = a.iter().zip(e).map(|(x, y)| x + y).collect();
    let (d, _) = normalized_direction(&sum);
    vecops::dot(a, &d) - (vecops::norm(a) - 2.0 * vecops::norm(e))
}

/// Slack of `x^alpha <= alpha*rho*x + (1-alpha)*rho^(-alpha/(1-alpha))`.
pub fn young_fractional_slack(x: f64, alpha: f64, rho: f64) -> f64 {
    alpha * rho * x + (1.0 - alpha) * rho.powf(-alpha / (1.0 - alpha)) - x.powf(alpha)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
    pub p_value: f64,
}

impl ChiSquareOutcome {
    pub fn passes(&self) -> bool {
        self.statistic <= self.critical
    }
}

/// Pearson chi-square goodness-of-fit against the uniform distribution on
/// `counts.len()` cells, at significance `level`.
pub fn chi_square_uniform(counts: &[u64], level: f64) -> ChiSquareOutcome {
    let cells = counts.len();
    assert!(cells >= 2, "need at least two cells");
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / cells as f64;
    let statistic = counts
        .iter()
        .map(|&c| {
            let diff = c as f64 - expected;
            diff * diff / expected
        })
        .sum();
    let dist = ChiSquared::new((cells - 1) as f64).expect("positive dof");
    ChiSquareOutcome {
        statistic,
        dof: cells - 1,
        critical: dist.inverse_cdf(1.0 - level),
        p_value: 1.0 - dist.cdf(statistic),
    }
}
