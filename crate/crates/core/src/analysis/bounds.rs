//! Explicit right-hand sides of the NSGDM and NSTORM convergence guarantees
//! on `E ||grad f(x_hat)||`, evaluated term by term.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedules::{
    default_lambda0, derived_constants, nsgdm_schedule, nstorm_schedule, validate_conditions, MethodKind, NoiseRegime,
    Smoothness, SmoothnessConstants,
};

/// NSGDM guarantee regimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NsgdmRegime {
    /// Standard `L0`-smoothness.
    Smooth,
    /// Symmetric generalized smoothness with `alpha in (0,1)`.
    SymAlpha,
    /// Symmetric `(L0, L1)`-smoothness.
    SymOne,
}

/// NSTORM guarantee regimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NstormRegime {
    /// Mean-square smoothness with constant `L`, sharp initialization.
    Mss,
    ExpectedSymAlpha,
    ExpectedSymOne,
}

impl fmt::Display for NsgdmRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NsgdmRegime::Smooth => "smooth",
            NsgdmRegime::SymAlpha => "sym_alpha",
            NsgdmRegime::SymOne => "sym_one",
        })
    }
}

impl fmt::Display for NstormRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NstormRegime::Mss => "mss",
            NstormRegime::ExpectedSymAlpha => "expected_sym_alpha",
            NstormRegime::ExpectedSymOne => "expected_sym_one",
        })
    }
}

impl FromStr for NsgdmRegime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" | "standard" | "i" => Ok(NsgdmRegime::Smooth),
            "sym_alpha" | "ii" => Ok(NsgdmRegime::SymAlpha),
            "sym_one" | "iii" => Ok(NsgdmRegime::SymOne),
            _ => Err(Error::invalid(format!(
                "unknown NSGDM regime '{s}' (smooth, sym_alpha, sym_one)"
            ))),
        }
    }
}

impl FromStr for NstormRegime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mss" | "smooth" | "i" => Ok(NstormRegime::Mss),
            "expected_sym_alpha" | "sym_alpha" | "ii" => Ok(NstormRegime::ExpectedSymAlpha),
            "expected_sym_one" | "sym_one" | "iii" => Ok(NstormRegime::ExpectedSymOne),
            _ => Err(Error::invalid(format!(
                "unknown NSTORM regime '{s}' (mss, expected_sym_alpha, expected_sym_one)"
            ))),
        }
    }
}

/// Inputs of a bound evaluation. Which optional fields are required
/// depends on the regime.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// `f(x0) - f_inf`, or an upper estimate of it.
    pub delta: f64,
    pub gamma0: f64,
    pub eta0: Option<f64>,
    pub lambda0: Option<f64>,
    pub alpha: Option<f64>,
    /// Mean-square smoothness constant.
    pub l: Option<f64>,
    pub l0: Option<f64>,
    pub l1: Option<f64>,
    pub b: f64,
    pub g: f64,
    pub t: u64,
    /// Initial estimator error `E ||v^0 - grad f(x^0)||`; defaults to `G`.
    pub b0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTerm {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEvaluation {
    pub method: MethodKind,
    pub regime: String,
    pub params: BoundParams,
    pub value: f64,
    pub terms: Vec<BoundTerm>,
    /// Violated stepsize conditions. The value is still reported, but the
    /// guarantee does not apply when this is nonempty.
    pub warnings: Vec<String>,
}

impl BoundEvaluation {
    pub fn conditions_hold(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

struct Terms(Vec<BoundTerm>);

impl Terms {
    fn add(&mut self, name: &str, value: f64) {
        self.0.push(BoundTerm {
            name: name.to_string(),
            value,
        });
    }
}

fn need(v: Option<f64>, name: &str, regime: &str) -> Result<f64> {
    match v {
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(x) => Err(Error::invalid(format!("{name} must be positive for {regime}, got {x}"))),
        None => Err(Error::invalid(format!("{name} is required for {regime}"))),
    }
}

fn check_common(p: &BoundParams) -> Result<f64> {
    if !(p.delta >= 0.0 && p.delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be >= 0, got {}", p.delta)));
    }
    if !(p.gamma0 > 0.0 && p.gamma0.is_finite()) {
        return Err(Error::invalid(format!("gamma0 must be positive, got {}", p.gamma0)));
    }
    if !(p.b >= 0.0 && p.g >= 0.0 && p.b.is_finite() && p.g.is_finite()) {
        return Err(Error::invalid("B and G must be finite and >= 0"));
    }
    if p.t < 1 {
        return Err(Error::invalid("T must be >= 1"));
    }
    Ok(p.t as f64)
}

fn finish(method: MethodKind, regime: String, p: &BoundParams, terms: Terms, warnings: Vec<String>) -> BoundEvaluation {
    let value = terms.0.iter().map(|t| t.value).sum();
    BoundEvaluation {
        method,
        regime,
        params: p.clone(),
        value,
        terms: terms.0,
        warnings,
    }
}

fn horizon(t: u64) -> Result<usize> {
    usize::try_from(t).map_err(|_| Error::invalid("T does not fit in usize"))
}

/// NSGDM bound with the BG-0 schedule `eta = T^{-2/3}`,
/// `gamma = gamma0 T^{-5/6}`.
pub fn theorem_bound_nsgdm(regime: NsgdmRegime, p: &BoundParams) -> Result<BoundEvaluation> {
    let t = check_common(p)?;
    let name = regime.to_string();
    let (d, g0, b, g) = (p.delta, p.gamma0, p.b, p.g);
    let t6 = t.powf(-1.0 / 6.0);
    let t3 = t.powf(-1.0 / 3.0);
    let t56 = t.powf(-5.0 / 6.0);
    let mut terms = Terms(Vec::new());
    let mut warnings = Vec::new();

    match regime {
        NsgdmRegime::Smooth | NsgdmRegime::SymOne => {
            let l0 = need(p.l0, "L0", &name)?;
            terms.add("2 delta / gamma0 * T^(-1/6)", 2.0 * d / g0 * t6);
            terms.add("16 L0 gamma0 * T^(-1/6)", 16.0 * l0 * g0 * t6);
            terms.add("2 B gamma0 * T^(-1/6)", 2.0 * b * g0 * t6);
            terms.add("8 G * T^(-1/3)", 8.0 * g * t3);
            terms.add("2 L0 gamma0 * T^(-5/6)", 2.0 * l0 * g0 * t56);
            if regime == NsgdmRegime::SymOne {
                let l1 = need(p.l1, "L1", &name)?;
                let pre = 64.0 * l1 * l1 * g0 * t6;
                terms.add("64 L1^2 gamma0 T^(-1/6) * 4 delta", pre * 4.0 * d);
                terms.add(
                    "64 L1^2 gamma0 T^(-1/6) * (16 L0 + 2B) gamma0^2",
                    pre * (16.0 * l0 + 2.0 * b) * g0 * g0,
                );
                terms.add("64 L1^2 gamma0 T^(-1/6) * 8 gamma0 G T^(-1/6)", pre * 8.0 * g0 * g * t6);
                terms.add(
                    "64 L1^2 gamma0 T^(-1/6) * 2 L0 gamma0^2 T^(-2/3)",
                    pre * 2.0 * l0 * g0 * g0 * t.powf(-2.0 / 3.0),
                );
                let s = nsgdm_schedule(NoiseRegime::Bg0, Smoothness::SymOne, horizon(p.t)?, g0)?;
                warnings = validate_conditions(
                    &s,
                    &SmoothnessConstants {
                        l0,
                        l1,
                        alpha: Some(1.0),
                    },
                    None,
                );
            }
        }
        NsgdmRegime::SymAlpha => {
            let a = p
                .alpha
                .ok_or_else(|| Error::invalid("alpha is required for sym_alpha"))?;
            let l0 = need(p.l0, "L0", &name)?;
            let l1 = need(p.l1, "L1", &name)?;
            let c = derived_constants(a, l0, l1)?;
            terms.add("2 delta / gamma0 * T^(-1/6)", 2.0 * d / g0 * t6);
            terms.add("4 C~_alpha gamma0 * T^(-1/6)", 4.0 * c.big_c_tilde_alpha * g0 * t6);
            terms.add("2 B gamma0 * T^(-1/6)", 2.0 * b * g0 * t6);
            terms.add("8 G * T^(-1/3)", 8.0 * g * t3);
            terms.add("L~0 gamma0 * T^(-5/6)", c.lbar0 * g0 * t56);
            terms.add(
                "2 C_alpha gamma0^(1/(1-a)) * T^(-5/(6(1-a)))",
                2.0 * c.big_c_alpha * g0.powf(1.0 / (1.0 - a)) * t.powf(-5.0 / (6.0 * (1.0 - a))),
            );
            let s = nsgdm_schedule(NoiseRegime::Bg0, Smoothness::SymAlpha, horizon(p.t)?, g0)?;
            warnings = validate_conditions(&s, &SmoothnessConstants { l0, l1, alpha: Some(a) }, None);
        }
    }
    Ok(finish(MethodKind::Nsgdm, name, p, terms, warnings))
}

/// NSTORM bound under the matching BG-0 schedule of each regime.
pub fn theorem_bound_nstorm(regime: NstormRegime, p: &BoundParams) -> Result<BoundEvaluation> {
    let t = check_common(p)?;
    let name = regime.to_string();
    let (d, g0, b, g) = (p.delta, p.gamma0, p.b, p.g);
    let mut terms = Terms(Vec::new());
    let mut warnings = Vec::new();

    match regime {
        NstormRegime::Mss => {
            let l = need(p.l, "L", &name)?;
            let t4 = t.powf(-0.25);
            terms.add("delta / gamma0 * T^(-1/4)", d / g0 * t4);
            terms.add("2 * T^(-1/4)", 2.0 * t4);
            terms.add("2 L gamma0 * T^(-1/4)", 2.0 * l * g0 * t4);
            terms.add("2 B gamma0 * T^(-1/4)", 2.0 * b * g0 * t4);
            terms.add("2 G * T^(-1/2)", 2.0 * g * t.powf(-0.5));
            terms.add("L gamma0 / 2 * T^(-3/4)", 0.5 * l * g0 * t.powf(-0.75));
        }
        NstormRegime::ExpectedSymAlpha => {
            let a = p
                .alpha
                .ok_or_else(|| Error::invalid("alpha is required for expected_sym_alpha"))?;
            let l0 = need(p.l0, "L0", &name)?;
            let l1 = need(p.l1, "L1", &name)?;
            let eta0 = need(p.eta0, "eta0", &name)?;
            if eta0 > 1.0 {
                return Err(Error::invalid(format!("eta0 must lie in (0,1], got {eta0}")));
            }
            let c = derived_constants(a, l0, l1)?;
            let lambda0 = match p.lambda0 {
                Some(_) => need(p.lambda0, "lambda0", &name)?,
                None => default_lambda0(a, l1, g0, eta0)?,
            };
            let s = eta0.sqrt();
            let h = 2f64.powf(a / 2.0);
            let h2 = 2f64.powf(1.0 + a / 2.0);
            let q = 1.0 / (1.0 - a);
            let lam = lambda0.powf(-a / (1.0 - a));
            let e = |num: f64| t.powf(-num / (4.0 + a));
            let ba = b.powf(a);
            let ga = g.powf(a);
            terms.add("4 delta / gamma0 * T^(-1/(4+a))", 4.0 * d / g0 * e(1.0));
            terms.add("8 / eta0 * T^(-1/(4+a))", 8.0 / eta0 * e(1.0));
            terms.add(
                "8 c_a 2^(a/2) K1 gamma0 lambda0^(-a/(1-a)) / sqrt(eta0) * T^(-1/(4+a))",
                8.0 * c.c_alpha * h * c.k1 * g0 * lam / s * e(1.0),
            );
            terms.add(
                "8 2^(a/2) K1 B^a gamma0^(1+a) / sqrt(eta0) * T^(-1/(4+a))",
                8.0 * h * c.k1 * ba * g0.powf(1.0 + a) / s * e(1.0),
            );
            terms.add("8 sqrt(eta0) B gamma0 * T^(-1/(4+a))", 8.0 * s * b * g0 * e(1.0));
            terms.add(
                "8 K0 gamma0 / sqrt(eta0) * T^(-(1+a)/(4+a))",
                8.0 * c.k0 * g0 / s * e(1.0 + a),
            );
            terms.add(
                "8 2^(a/2) K1 G^a gamma0 / sqrt(eta0) * T^(-(1+a)/(4+a))",
                8.0 * h * c.k1 * ga * g0 / s * e(1.0 + a),
            );
            terms.add("8 sqrt(eta0) G * T^(-2/(4+a))", 8.0 * s * g * e(2.0));
            terms.add(
                "8 K2 gamma0^(1/(1-a)) / sqrt(eta0) * T^(-(1+3a)/((1-a)(4+a)))",
                8.0 * c.k2 * g0.powf(q) / s * e((1.0 + 3.0 * a) * q),
            );
            terms.add("2 K0 gamma0 * T^(-(3+a)/(4+a))", 2.0 * c.k0 * g0 * e(3.0 + a));
            terms.add(
                "2 c_a 2^(a/2) K1 gamma0 lambda0^(-a/(1-a)) * T^(-3/(4+a))",
                2.0 * c.c_alpha * h * c.k1 * g0 * lam * e(3.0),
            );
            terms.add(
                "4 K2 gamma0^(1/(1-a)) * T^(-(3+a)/((1-a)(4+a)))",
                4.0 * c.k2 * g0.powf(q) * e((3.0 + a) * q),
            );
            terms.add(
                "2^(1+a/2) K1 G^a gamma0 * T^(-(3+a)/(4+a))",
                h2 * c.k1 * ga * g0 * e(3.0 + a),
            );
            terms.add(
                "2^(1+a/2) K1 B^a gamma0^(1+a) * T^(-3/(4+a))",
                h2 * c.k1 * ba * g0.powf(1.0 + a) * e(3.0),
            );
            let sch = nstorm_schedule(
                Smoothness::ExpectedSymAlpha,
                NoiseRegime::Bg0,
                Some(a),
                horizon(p.t)?,
                g0,
                eta0,
                g,
            )?;
            warnings = validate_conditions(&sch, &SmoothnessConstants { l0, l1, alpha: Some(a) }, Some(lambda0));
        }
        NstormRegime::ExpectedSymOne => {
            let l0 = need(p.l0, "L0", &name)?;
            let l1 = need(p.l1, "L1", &name)?;
            let b0 = p.b0.unwrap_or(g);
            if !(b0 >= 0.0 && b0.is_finite()) {
                return Err(Error::invalid(format!("b0 must be >= 0, got {b0}")));
            }
            let r = (2.0 * 0.75f64.exp()).sqrt();
            let sq2 = 2f64.sqrt();
            let t15 = t.powf(-0.2);
            let t25 = t.powf(-0.4);
            terms.add("4 delta / gamma0 * T^(-1/5)", 4.0 * d / g0 * t15);
            terms.add("8 b0 * T^(-1/5)", 8.0 * b0 * t15);
            terms.add("8 B gamma0 * T^(-1/5)", 8.0 * b * g0 * t15);
            terms.add(
                "16 sqrt(2e^(3/4)) L1 B gamma0^2 * T^(-1/5)",
                16.0 * r * l1 * b * g0 * g0 * t15,
            );
            terms.add(
                "8 sqrt(2e^(3/4)) gamma0 (L0 + 2 L1 G) * T^(-2/5)",
                8.0 * r * g0 * (l0 + 2.0 * l1 * g) * t25,
            );
            terms.add("8 G * T^(-2/5)", 8.0 * g * t25);
            terms.add(
                "8 sqrt(2) L1 B gamma0^2 * T^(-3/5)",
                8.0 * sq2 * l1 * b * g0 * g0 * t.powf(-0.6),
            );
            terms.add("4 sqrt(2) L0 gamma0 * T^(-4/5)", 4.0 * sq2 * l0 * g0 * t.powf(-0.8));
            terms.add(
                "8 sqrt(2) L1 G gamma0 * T^(-4/5)",
                8.0 * sq2 * l1 * g * g0 * t.powf(-0.8),
            );
            let sch = nstorm_schedule(
                Smoothness::ExpectedSymOne,
                NoiseRegime::Bg0,
                None,
                horizon(p.t)?,
                g0,
                1.0,
                g,
            )?;
            warnings = validate_conditions(
                &sch,
                &SmoothnessConstants {
                    l0,
                    l1,
                    alpha: Some(1.0),
                },
                None,
            );
        }
    }
    Ok(finish(MethodKind::Nstorm, name, p, terms, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base(t: u64) -> BoundParams {
        BoundParams {
            delta: 1.0,
            gamma0: 1.0,
            l: Some(1.0),
            l0: Some(1.0),
            t,
            ..BoundParams::default()
        }
    }

    fn sums_to_value(e: &BoundEvaluation) -> bool {
        let s: f64 = e.terms.iter().map(|t| t.value).sum();
        (s - e.value).abs() <= 1e-12 * e.value.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn nsgdm_smooth_example() {
        let e = theorem_bound_nsgdm(NsgdmRegime::Smooth, &base(1_000_000)).unwrap();
        assert!((e.value - 1.80002).abs() < 1e-12, "{}", e.value);
        assert!(e.conditions_hold());
    }

    #[test]
    fn nsgdm_g_term_vanishes() {
        let e = theorem_bound_nsgdm(NsgdmRegime::Smooth, &base(1000)).unwrap();
        assert_eq!(e.term("8 G * T^(-1/3)"), Some(0.0));
    }

    #[test]
    fn nsgdm_sym_alpha_six_addends() {
        let p = BoundParams {
            alpha: Some(0.05),
            l1: Some(2.0),
            b: 1.0,
            g: 0.5,
            ..base(10_000)
        };
        let e = theorem_bound_nsgdm(NsgdmRegime::SymAlpha, &p).unwrap();
        assert_eq!(e.terms.len(), 6);
        assert!(sums_to_value(&e));
        assert!(e.terms.iter().all(|t| t.value > 0.0));
        let over = theorem_bound_nsgdm(NsgdmRegime::SymAlpha, &BoundParams { gamma0: 1.5, ..p }).unwrap();
        assert_eq!(over.warnings.len(), 1);
    }

    #[test]
    fn nsgdm_sym_one_extends_smooth() {
        let p = BoundParams {
            l1: Some(0.1),
            b: 1.0,
            g: 1.0,
            ..base(4096)
        };
        let s = theorem_bound_nsgdm(NsgdmRegime::Smooth, &p).unwrap();
        let o = theorem_bound_nsgdm(NsgdmRegime::SymOne, &p).unwrap();
        assert_eq!(o.terms.len(), 9);
        assert_eq!(&o.terms[..5], &s.terms[..]);
        // bracket at T = 4096: T^(-1/6) = 1/4, T^(-2/3) = 1/256
        let pre = 64.0 * 0.01 * 0.25;
        let bracket = 4.0 + 18.0 + 8.0 * 0.25 + 2.0 / 256.0;
        assert!((o.value - s.value - pre * bracket).abs() < 1e-12);
        // 1/(8 L1) = 1.25 >= gamma0
        assert!(o.conditions_hold());
        let bad = theorem_bound_nsgdm(NsgdmRegime::SymOne, &BoundParams { l1: Some(1.0), ..p }).unwrap();
        assert!(!bad.conditions_hold());
    }

    #[test]
    fn nstorm_mss_example() {
        let e = theorem_bound_nstorm(NstormRegime::Mss, &base(10_000)).unwrap();
        assert!((e.value - 0.5005).abs() < 1e-12, "{}", e.value);
    }

    #[test]
    fn nstorm_sym_one_b_free() {
        let p = BoundParams {
            l1: Some(1.0),
            gamma0: 0.01,
            g: 0.3,
            b0: Some(0.2),
            ..base(100_000)
        };
        let e = theorem_bound_nstorm(NstormRegime::ExpectedSymOne, &p).unwrap();
        let t15 = 100_000f64.powf(-0.2);
        let lead: f64 = e.terms[..4].iter().map(|t| t.value).sum();
        assert!((lead - (4.0 * 1.0 / 0.01 + 8.0 * 0.2) * t15).abs() < 1e-12);
        assert!(e.conditions_hold());
        // b0 defaults to G
        let d = theorem_bound_nstorm(NstormRegime::ExpectedSymOne, &BoundParams { b0: None, ..p }).unwrap();
        assert!((d.term("8 b0 * T^(-1/5)").unwrap() - 8.0 * 0.3 * t15).abs() < 1e-15);
    }

    #[test]
    fn nstorm_sym_alpha_breakdown() {
        let p = BoundParams {
            alpha: Some(0.5),
            l1: Some(1.0),
            eta0: Some(1.0),
            gamma0: 0.05,
            b: 1.0,
            g: 0.5,
            ..base(10_001)
        };
        let e = theorem_bound_nstorm(NstormRegime::ExpectedSymAlpha, &p).unwrap();
        assert_eq!(e.terms.len(), 14);
        assert!(sums_to_value(&e));
        // default lambda0 sits on the condition boundary
        assert!(e.conditions_hold());
        let bad = theorem_bound_nstorm(
            NstormRegime::ExpectedSymAlpha,
            &BoundParams {
                lambda0: Some(1e3),
                ..p
            },
        )
        .unwrap();
        assert!(!bad.conditions_hold());
        assert!(bad.value.is_finite());
    }

    #[test]
    fn missing_parameters_rejected() {
        let p = BoundParams { l0: None, ..base(100) };
        assert!(theorem_bound_nsgdm(NsgdmRegime::Smooth, &p).is_err());
        assert!(theorem_bound_nstorm(NstormRegime::ExpectedSymOne, &base(100)).is_err());
        assert!(theorem_bound_nstorm(NstormRegime::Mss, &BoundParams { t: 0, ..base(1) }).is_err());
        assert!("bogus".parse::<NsgdmRegime>().is_err());
        assert_eq!("smooth".parse::<NsgdmRegime>().unwrap(), NsgdmRegime::Smooth);
        assert_eq!("iii".parse::<NstormRegime>().unwrap(), NstormRegime::ExpectedSymOne);
    }

    proptest! {
        #[test]
        fn nonnegative_and_decreasing(
            delta in 0.0f64..10.0,
            gamma0 in 0.01f64..1.0,
            b in 0.0f64..3.0,
            g in 0.0f64..3.0,
            alpha in 0.05f64..0.95,
            t in 1u64..1_000_000,
        ) {
            let p = BoundParams {
                delta, gamma0, b, g, t,
                alpha: Some(alpha),
                eta0: Some(0.5),
                l: Some(1.5),
                l0: Some(1.0),
                l1: Some(0.5),
                ..BoundParams::default()
            };
            let later = BoundParams { t: 2 * t, ..p.clone() };
            for r in [NsgdmRegime::Smooth, NsgdmRegime::SymAlpha, NsgdmRegime::SymOne] {
                let a = theorem_bound_nsgdm(r, &p).unwrap();
                let z = theorem_bound_nsgdm(r, &later).unwrap();
                prop_assert!(a.value >= 0.0 && sums_to_value(&a));
                prop_assert!(z.value <= a.value * (1.0 + 1e-12));
            }
            for r in [NstormRegime::Mss, NstormRegime::ExpectedSymAlpha, NstormRegime::ExpectedSymOne] {
                let a = theorem_bound_nstorm(r, &p).unwrap();
                let z = theorem_bound_nstorm(r, &later).unwrap();
                prop_assert!(a.value >= 0.0 && sums_to_value(&a));
                prop_assert!(z.value <= a.value * (1.0 + 1e-12));
            }
        }
    }
}
