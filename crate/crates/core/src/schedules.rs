//! Horizon-dependent hyperparameter schedules for the normalized methods,
//! the derived smoothness constants, and the stepsize conditions the
//! guarantees require.
//!
//! Throughout, `T = K + 1` is the number of recorded states of a run.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Nsgdm,
    Nstorm,
    NormalizedGd,
}

/// Noise regime of the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseRegime {
    /// Variance `B^2 ||x - x0||^2 + G^2`.
    Bg0,
    /// `B = 0`.
    BoundedVariance,
    /// `B = G = 0`.
    Deterministic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Standard,
    SymAlpha,
    SymOne,
    Mss,
    ExpectedSymAlpha,
    ExpectedSymOne,
}

impl Smoothness {
    fn for_nsgdm(self) -> bool {
        matches!(self, Smoothness::Standard | Smoothness::SymAlpha | Smoothness::SymOne)
    }

    fn for_nstorm(self) -> bool {
        matches!(
            self,
            Smoothness::Mss | Smoothness::ExpectedSymAlpha | Smoothness::ExpectedSymOne
        )
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Smoothness::Standard => "standard",
            Smoothness::SymAlpha => "sym_alpha",
            Smoothness::SymOne => "sym_one",
            Smoothness::Mss => "mss",
            Smoothness::ExpectedSymAlpha => "expected_sym_alpha",
            Smoothness::ExpectedSymOne => "expected_sym_one",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Smoothness {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "standard" | "smooth" => Smoothness::Standard,
            "sym_alpha" => Smoothness::SymAlpha,
            "sym_one" => Smoothness::SymOne,
            "mss" => Smoothness::Mss,
            "expected_sym_alpha" => Smoothness::ExpectedSymAlpha,
            "expected_sym_one" => Smoothness::ExpectedSymOne,
            _ => return Err(Error::invalid(format!("unknown smoothness class '{s}'"))),
        })
    }
}

impl std::str::FromStr for NoiseRegime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bg0" => NoiseRegime::Bg0,
            "bounded_variance" => NoiseRegime::BoundedVariance,
            "deterministic" => NoiseRegime::Deterministic,
            _ => return Err(Error::invalid(format!("unknown noise regime '{s}'"))),
        })
    }
}

/// The raw tuning constants a schedule was resolved from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Knobs {
    pub gamma0: f64,
    pub eta0: Option<f64>,
    pub lambda0: Option<f64>,
    pub alpha: Option<f64>,
    pub g: Option<f64>,
}

/// Resolved hyperparameters for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub method: MethodKind,
    pub noise: NoiseRegime,
    pub smoothness: Smoothness,
    /// Number of recorded states, `T = K + 1`.
    pub horizon: usize,
    pub gamma: f64,
    pub eta: f64,
    pub n_init: u64,
    pub knobs: Knobs,
}

impl Schedule {
    /// `K`, the number of transitions.
    pub fn iterations(&self) -> usize {
        self.horizon - 1
    }

    /// Hand-built fixed schedule, e.g. for unit experiments.
    pub fn fixed(method: MethodKind, horizon: usize, gamma: f64, eta: f64, n_init: u64) -> Result<Self> {
        let s = Schedule {
            method,
            noise: NoiseRegime::Bg0,
            smoothness: Smoothness::Standard,
            horizon,
            gamma,
            eta,
            n_init,
            knobs: Knobs {
                gamma0: gamma,
                eta0: Some(eta),
                ..Knobs::default()
            },
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::invalid("horizon T must be >= 1"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0,1], got {}", self.eta)));
        }
        if self.n_init < 1 {
            return Err(Error::invalid("n_init must be >= 1"));
        }
        Ok(())
    }
}

fn check_common(horizon: usize, gamma0: f64) -> Result<f64> {
    if horizon < 1 {
        return Err(Error::invalid("horizon T must be >= 1"));
    }
    if !(gamma0 > 0.0 && gamma0.is_finite()) {
        return Err(Error::invalid(format!("gamma0 must be positive, got {gamma0}")));
    }
    Ok(horizon as f64)
}

fn open_unit_alpha(alpha: Option<f64>) -> Result<f64> {
    match alpha {
        None => Err(Error::invalid("alpha is required for the alpha-smoothness regimes")),
        Some(a) if a > 0.0 && a < 1.0 => Ok(a),
        Some(a) => Err(Error::invalid(format!("alpha must lie in (0,1), got {a}"))),
    }
}

/// `max{1, ceil(G^2 T^e)}`.
fn init_batch(g: f64, t: f64, exponent: f64) -> u64 {
    let raw = (g * g * t.powf(exponent)).ceil();
    if raw.is_finite() && raw > 1.0 {
        raw as u64
    } else {
        1
    }
}

/// NSGDM schedule.
///
/// * BG-0: `eta = T^{-2/3}`, `gamma = gamma0 T^{-5/6}`
/// * bounded variance: `eta = T^{-1/2}`, `gamma = gamma0 T^{-3/4}`
/// * deterministic: `eta = 1`, `gamma = gamma0 T^{-1/2}`
///
/// The schedule is the same in every NSGDM smoothness class; the class only
/// selects which stepsize condition applies.
pub fn nsgdm_schedule(noise: NoiseRegime, smoothness: Smoothness, horizon: usize, gamma0: f64) -> Result<Schedule> {
    let t = check_common(horizon, gamma0)?;
    if !smoothness.for_nsgdm() {
        return Err(Error::invalid(format!("{smoothness} is not an NSGDM smoothness class")));
    }
    let (eta, gamma) = match noise {
        NoiseRegime::Bg0 => (t.powf(-2.0 / 3.0), gamma0 * t.powf(-5.0 / 6.0)),
        NoiseRegime::BoundedVariance => (t.powf(-0.5), gamma0 * t.powf(-0.75)),
        NoiseRegime::Deterministic => (1.0, gamma0 * t.powf(-0.5)),
    };
    let s = Schedule {
        method: MethodKind::Nsgdm,
        noise,
        smoothness,
        horizon,
        gamma,
        eta,
        n_init: 1,
        knobs: Knobs {
            gamma0,
            ..Knobs::default()
        },
    };
    s.check()?;
    Ok(s)
}

/// NSTORM schedule and sharp-initialization batch size.
///
/// BG-0:
/// * MSS: `eta = T^{-1}`, `gamma = gamma0 T^{-3/4}`, `N = max{1, ceil(G^2 T^{1/2})}`
/// * expected alpha-symmetric, `alpha in (0,1)`: `gamma = gamma0 T^{-(3+a)/(4+a)}`,
///   `eta = eta0 T^{-4/(4+a)}`, `N = max{1, ceil(G^2 T^{2(1-a)/(4+a)})}`
/// * expected 1-symmetric: `eta = T^{-4/5}`, `gamma = gamma0 T^{-4/5}`, `N = 1`
///
/// Bounded variance uses `eta = eta0 T^{-2/3}`, `gamma = gamma0 T^{-2/3}`,
/// `N = 1` in every class; deterministic reduces to normalized GD with
/// `gamma = gamma0 T^{-1/2}`.
pub fn nstorm_schedule(
    smoothness: Smoothness,
    noise: NoiseRegime,
    alpha: Option<f64>,
    horizon: usize,
    gamma0: f64,
    eta0: f64,
    g: f64,
) -> Result<Schedule> {
    let t = check_common(horizon, gamma0)?;
    if !smoothness.for_nstorm() {
        return Err(Error::invalid(format!(
            "{smoothness} is not an NSTORM smoothness class"
        )));
    }
    if !(eta0 > 0.0 && eta0 <= 1.0) {
        return Err(Error::invalid(format!("eta0 must lie in (0,1], got {eta0}")));
    }
    if !(g >= 0.0 && g.is_finite()) {
        return Err(Error::invalid(format!("G must be >= 0, got {g}")));
    }
    let alpha = match smoothness {
        Smoothness::ExpectedSymAlpha => Some(open_unit_alpha(alpha)?),
        Smoothness::ExpectedSymOne => Some(1.0),
        _ => alpha,
    };
    let (eta, gamma, n_init) = match (noise, smoothness) {
        (NoiseRegime::Bg0, Smoothness::Mss) => (1.0 / t, gamma0 * t.powf(-0.75), init_batch(g, t, 0.5)),
        (NoiseRegime::Bg0, Smoothness::ExpectedSymAlpha) => {
            let a = alpha.expect("checked above");
            (
                eta0 * t.powf(-4.0 / (4.0 + a)),
                gamma0 * t.powf(-(3.0 + a) / (4.0 + a)),
                init_batch(g, t, 2.0 * (1.0 - a) / (4.0 + a)),
            )
        }
        (NoiseRegime::Bg0, _) => (t.powf(-0.8), gamma0 * t.powf(-0.8), 1),
        (NoiseRegime::BoundedVariance, _) => (eta0 * t.powf(-2.0 / 3.0), gamma0 * t.powf(-2.0 / 3.0), 1),
        (NoiseRegime::Deterministic, _) => (1.0, gamma0 * t.powf(-0.5), 1),
    };
    let s = Schedule {
        method: MethodKind::Nstorm,
        noise,
        smoothness,
        horizon,
        gamma,
        eta,
        n_init,
        knobs: Knobs {
            gamma0,
            eta0: Some(eta0),
            lambda0: None,
            alpha,
            g: Some(g),
        },
    };
    s.check()?;
    Ok(s)
}

/// Deterministic normalized GD, `gamma = gamma0 T^{-1/2}`.
pub fn normalized_gd_schedule(smoothness: Smoothness, horizon: usize, gamma0: f64) -> Result<Schedule> {
    let t = check_common(horizon, gamma0)?;
    let s = Schedule {
        method: MethodKind::NormalizedGd,
        noise: NoiseRegime::Deterministic,
        smoothness,
        horizon,
        gamma: gamma0 * t.powf(-0.5),
        eta: 1.0,
        n_init: 1,
        knobs: Knobs {
            gamma0,
            ..Knobs::default()
        },
    };
    s.check()?;
    Ok(s)
}

/// Constants derived from `(alpha, L0, L1)` for `alpha in (0,1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub alpha: f64,
    pub l0: f64,
    pub l1: f64,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub l_alpha: f64,
    pub c_alpha: f64,
    pub p: f64,
    pub lbar0: f64,
    pub lbar1: f64,
    pub lbar2: f64,
    pub big_c_alpha: f64,
    pub big_c_tilde_alpha: f64,
}

pub fn derived_constants(alpha: f64, l0: f64, l1: f64) -> Result<ConstantsLedger> {
    let a = open_unit_alpha(Some(alpha))?;
    if !(l0 > 0.0 && l1 > 0.0) {
        return Err(Error::invalid("L0 and L1 must be positive"));
    }
    let inv = 1.0 / (1.0 - a);
    let p = a * inv;
    let two_pow = 2f64.powf((2.0 - a) * inv);
    let k0 = two_pow * l0;
    let k1 = two_pow * l1;
    let k2 = (5.0 * l1).powf(inv);
    let l_alpha = 2f64.powf(a / 2.0) * k1;
    let c_alpha = (1.0 - a) * a.powf(p);
    let sq = 2f64.powf(a * a * inv);
    let three_a = 3f64.powf(a);
    let lbar0 = l0 * (sq + 1.0);
    let lbar1 = l1 * sq * three_a;
    let lbar2 = l1.powf(inv) * sq * three_a * (1.0 - a).powf(p);
    let lbar1_pow = lbar1.powf(inv);
    let big_c_alpha = lbar2 + 0.5 * (1.0 - a) * (2.0 * a).powf(p) * lbar1_pow;
    let big_c_tilde_alpha = lbar0 + lbar2 + (1.0 - a) * (8.0 * a).powf(p) * lbar1_pow;
    Ok(ConstantsLedger {
        alpha: a,
        l0,
        l1,
        k0,
        k1,
        k2,
        l_alpha,
        c_alpha,
        p,
        lbar0,
        lbar1,
        lbar2,
        big_c_alpha,
        big_c_tilde_alpha,
    })
}

/// Smoothness constants handed to [`validate_conditions`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessConstants {
    pub l0: f64,
    pub l1: f64,
    pub alpha: Option<f64>,
}

/// Largest `lambda0` satisfying both expected alpha-symmetric conditions.
pub fn default_lambda0(alpha: f64, l1: f64, gamma0: f64, eta0: f64) -> Result<f64> {
    let a = open_unit_alpha(Some(alpha))?;
    if !(l1 > 0.0 && gamma0 > 0.0 && eta0 > 0.0) {
        return Err(Error::invalid("L1, gamma0 and eta0 must be positive"));
    }
    let k1 = 2f64.powf((2.0 - a) / (1.0 - a)) * l1;
    let first = 1.0 / (2f64.powf(a / 2.0) * k1 * gamma0);
    let second = eta0 / (2f64.powf((6.0 + a) / 2.0) * k1 * gamma0);
    Ok(first.min(second))
}

// Relative slack so a parameter set sitting exactly on a boundary is not
// rejected by rounding in the constants.
const BOUNDARY_RTOL: f64 = 1e-12;

fn at_most(label: &str, lhs: f64, rhs: f64, out: &mut Vec<String>) {
    if !(lhs <= rhs * (1.0 + BOUNDARY_RTOL)) {
        out.push(format!("{label}: {lhs:.6e} > {rhs:.6e}"));
    }
}

/// Returns one description per violated stepsize condition; empty means the
/// schedule satisfies every condition that applies to it. Conditions that
/// involve `lambda0` are evaluated only when it is supplied.
pub fn validate_conditions(schedule: &Schedule, constants: &SmoothnessConstants, lambda0: Option<f64>) -> Vec<String> {
    let mut out = Vec::new();
    let gamma0 = schedule.knobs.gamma0;
    let eta0 = schedule.knobs.eta0.unwrap_or(1.0);
    let l1 = constants.l1;
    let sqrt_2e34 = (2.0 * 0.75f64.exp()).sqrt();
    let alpha = constants.alpha.or(schedule.knobs.alpha);

    match (schedule.method, schedule.smoothness, schedule.noise) {
        (MethodKind::Nsgdm, Smoothness::SymAlpha, _) | (MethodKind::NormalizedGd, Smoothness::SymAlpha, _) => {
            at_most("gamma0 <= 1", gamma0, 1.0, &mut out);
        }
        (MethodKind::Nsgdm, Smoothness::SymOne, NoiseRegime::Deterministic)
        | (MethodKind::NormalizedGd, Smoothness::SymOne, _) => {
            at_most("gamma0 <= 1/(2 L1)", gamma0, 1.0 / (2.0 * l1), &mut out);
        }
        (MethodKind::Nsgdm, Smoothness::SymOne, _) => {
            at_most("gamma0 <= 1/(8 L1)", gamma0, 1.0 / (8.0 * l1), &mut out);
        }
        (MethodKind::Nstorm, Smoothness::ExpectedSymAlpha, noise) => {
            let Some(lambda0) = lambda0 else { return out };
            let Some(a) = alpha.filter(|a| *a > 0.0 && *a < 1.0) else {
                out.push("alpha in (0,1) required for expected_sym_alpha".into());
                return out;
            };
            let k1 = 2f64.powf((2.0 - a) / (1.0 - a)) * l1;
            let l_alpha = 2f64.powf(a / 2.0) * k1;
            at_most(
                "2^(a/2) K1 lambda0 gamma0 <= 1",
                l_alpha * lambda0 * gamma0,
                1.0,
                &mut out,
            );
            if noise != NoiseRegime::Deterministic {
                at_most(
                    "2^((6+a)/2) K1 lambda0 gamma0 / eta0 <= 1",
                    2f64.powf((6.0 + a) / 2.0) * k1 * lambda0 * gamma0 / eta0,
                    1.0,
                    &mut out,
                );
            }
        }
        (MethodKind::Nstorm, Smoothness::ExpectedSymOne, NoiseRegime::Bg0) => {
            at_most(
                "gamma0 <= 1/(16 sqrt(2 e^(3/4)) L1)",
                gamma0,
                1.0 / (16.0 * sqrt_2e34 * l1),
                &mut out,
            );
        }
        (MethodKind::Nstorm, Smoothness::ExpectedSymOne, noise) => {
            at_most(
                "gamma0 <= 1/(4 sqrt(2) L1)",
                gamma0,
                1.0 / (4.0 * 2f64.sqrt() * l1),
                &mut out,
            );
            if noise == NoiseRegime::BoundedVariance {
                at_most(
                    "16 sqrt(2 e^(3/4)) L1 gamma0 / eta0 <= 1",
                    16.0 * sqrt_2e34 * l1 * gamma0 / eta0,
                    1.0,
                    &mut out,
                );
            }
        }
        _ => {}
    }
    out
}
