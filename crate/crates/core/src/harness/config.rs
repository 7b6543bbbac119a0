//! Experiment configuration, read from TOML files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{make_phase_retrieval, make_power_poly, make_quadratic, Objective};
use crate::optimizers::{BatchPolicy, DEFAULT_BATCH_CAP};
use crate::schedules::{NoiseRegime, Smoothness};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    PhaseRetrieval {
        dim: usize,
        measurements: usize,
        /// Standard deviation of the measurement entries.
        meas_std: f64,
        #[serde(default)]
        signal_seed: u64,
    },
    /// `|x|^((2 - alpha) / (1 - alpha))` on the real line.
    #[serde(alias = "cubic")]
    PowerPoly {
        #[serde(default = "half")]
        alpha: f64,
    },
    Quadratic {
        dim: usize,
        curvature: f64,
    },
}

fn half() -> f64 {
    0.5
}

impl ObjectiveSpec {
    pub fn build(&self) -> Result<Arc<dyn Objective>> {
        Ok(match *self {
            ObjectiveSpec::PhaseRetrieval {
                dim,
                measurements,
                meas_std,
                signal_seed,
            } => Arc::new(make_phase_retrieval(dim, measurements, meas_std, signal_seed)?),
            ObjectiveSpec::PowerPoly { alpha } => Arc::new(make_power_poly(alpha)?),
            ObjectiveSpec::Quadratic { dim, curvature } => Arc::new(make_quadratic(dim, curvature)?),
        })
    }

    /// Smoothness exponent used when a method does not set one.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            ObjectiveSpec::PhaseRetrieval { .. } => Some(2.0 / 3.0),
            ObjectiveSpec::PowerPoly { alpha } => Some(alpha),
            ObjectiveSpec::Quadratic { .. } => None,
        }
    }
}

/// Starting point distribution, drawn once per seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// Independent `N(mean, variance)` coordinates.
    Gaussian {
        mean: f64,
        variance: f64,
    },
    Constant {
        value: f64,
    },
    Point {
        x: Vec<f64>,
    },
}

impl InitSpec {
    pub fn draw<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            InitSpec::Gaussian { mean, variance } => {
                if !(*variance >= 0.0 && variance.is_finite()) {
                    return Err(Error::Config(format!("init variance must be >= 0, got {variance}")));
                }
                let n = Normal::new(*mean, variance.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
                Ok((0..dim).map(|_| n.sample(rng)).collect())
            }
            InitSpec::Constant { value } => Ok(vec![*value; dim]),
            InitSpec::Point { x } => {
                if x.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: x.len(),
                    });
                }
                Ok(x.clone())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(rename = "B", alias = "b")]
    pub b: f64,
    #[serde(rename = "G", alias = "g")]
    pub g: f64,
}

impl NoiseSpec {
    /// The weakest regime the oracle falls into.
    pub fn regime(&self) -> NoiseRegime {
        if self.b > 0.0 {
            NoiseRegime::Bg0
        } else if self.g > 0.0 {
            NoiseRegime::BoundedVariance
        } else {
            NoiseRegime::Deterministic
        }
    }
}

/// A fixed learning rate or a log-spaced grid searched over the seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LrSpec {
    Value(f64),
    Grid(LrGrid),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for LrSpec {
    fn default() -> Self {
        LrSpec::Grid(LrGrid {
            min: 1e-4,
            max: 1.0,
            points: 13,
        })
    }
}

impl LrSpec {
    pub fn candidates(&self) -> Result<Vec<f64>> {
        match self {
            LrSpec::Value(v) => {
                if !(*v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("learning rate must be positive, got {v}")));
                }
                Ok(vec![*v])
            }
            LrSpec::Grid(LrGrid { min, max, points }) => {
                if !(*min > 0.0 && max >= min && max.is_finite()) || *points == 0 {
                    return Err(Error::Config(
                        "learning-rate grid needs 0 < min <= max, points >= 1".into(),
                    ));
                }
                if *points == 1 {
                    return Ok(vec![*min]);
                }
                let (a, b) = (min.log10(), max.log10());
                Ok((0..*points)
                    .map(|i| 10f64.powf(a + (b - a) * i as f64 / (*points - 1) as f64))
                    .collect())
            }
        }
    }
}

fn default_batch() -> BatchPolicy {
    BatchPolicy::Dynamic {
        sigma_sq: 1.0,
        cap: DEFAULT_BATCH_CAP,
    }
}

fn default_storm_eta() -> f64 {
    0.1
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    Nsgdm {
        label: Option<String>,
        #[serde(default = "sym_alpha")]
        smoothness: Smoothness,
        /// Schedule regime; defaults to the one implied by the noise.
        noise_regime: Option<NoiseRegime>,
        gamma0: f64,
    },
    Nstorm {
        label: Option<String>,
        #[serde(default = "expected_sym_alpha")]
        smoothness: Smoothness,
        noise_regime: Option<NoiseRegime>,
        /// Defaults to the objective's exponent.
        alpha: Option<f64>,
        gamma0: f64,
        #[serde(default = "one")]
        eta0: f64,
    },
    NormalizedGd {
        label: Option<String>,
        #[serde(default = "standard")]
        smoothness: Smoothness,
        gamma0: f64,
    },
    Sgd {
        label: Option<String>,
        #[serde(default = "default_batch")]
        batch: BatchPolicy,
        #[serde(default)]
        lr: LrSpec,
    },
    Storm {
        label: Option<String>,
        #[serde(default = "default_batch")]
        batch: BatchPolicy,
        #[serde(default)]
        lr: LrSpec,
        #[serde(default = "default_storm_eta")]
        eta: f64,
    },
}

fn sym_alpha() -> Smoothness {
    Smoothness::SymAlpha
}

fn expected_sym_alpha() -> Smoothness {
    Smoothness::ExpectedSymAlpha
}

fn standard() -> Smoothness {
    Smoothness::Standard
}

impl MethodSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            MethodSpec::Nsgdm { .. } => "nsgdm",
            MethodSpec::Nstorm { .. } => "nstorm",
            MethodSpec::NormalizedGd { .. } => "normalized_gd",
            MethodSpec::Sgd { .. } => "sgd",
            MethodSpec::Storm { .. } => "storm",
        }
    }

    pub fn label(&self) -> String {
        let l = match self {
            MethodSpec::Nsgdm { label, .. }
            | MethodSpec::Nstorm { label, .. }
            | MethodSpec::NormalizedGd { label, .. }
            | MethodSpec::Sgd { label, .. }
            | MethodSpec::Storm { label, .. } => label,
        };
        l.clone().unwrap_or_else(|| self.kind().to_string())
    }

    /// Method with default knobs, as selected by name on the command line.
    pub fn from_name(name: &str, gamma0: Option<f64>, eta0: Option<f64>) -> Result<Self> {
        let g0 = gamma0.unwrap_or(1.0);
        Ok(match name {
            "nsgdm" => MethodSpec::Nsgdm {
                label: None,
                smoothness: Smoothness::SymAlpha,
                noise_regime: None,
                gamma0: g0,
            },
            "nstorm" => MethodSpec::Nstorm {
                label: None,
                smoothness: Smoothness::ExpectedSymAlpha,
                noise_regime: None,
                alpha: None,
                gamma0: g0,
                eta0: eta0.unwrap_or(1.0),
            },
            "normalized_gd" | "ngd" => MethodSpec::NormalizedGd {
                label: None,
                smoothness: Smoothness::Standard,
                gamma0: g0,
            },
            "sgd" => MethodSpec::Sgd {
                label: Some("sgd_b1".into()),
                batch: BatchPolicy::Fixed { size: 1 },
                lr: LrSpec::default(),
            },
            "sgd_dynamic" => MethodSpec::Sgd {
                label: Some("sgd_dynamic".into()),
                batch: default_batch(),
                lr: LrSpec::default(),
            },
            "storm_dynamic" | "storm" => MethodSpec::Storm {
                label: Some("storm_dynamic".into()),
                batch: default_batch(),
                lr: LrSpec::default(),
                eta: default_storm_eta(),
            },
            _ => {
                return Err(Error::Config(format!(
                    "unknown method '{name}' (nsgdm, nstorm, normalized_gd, sgd, sgd_dynamic, storm_dynamic)"
                )))
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            _ => Err(Error::Config(format!("unknown export format '{s}' (csv, json)"))),
        }
    }
}

fn default_formats() -> Vec<ExportFormat> {
    vec![ExportFormat::Csv, ExportFormat::Json]
}

fn default_true() -> bool {
    true
}

fn default_grid_points() -> usize {
    400
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<ExportFormat>,
    #[serde(default = "default_true")]
    pub plots: bool,
    /// Points of the log-spaced SFO grid used for aggregation.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Recorded states per run, `T = K + 1`.
    pub horizon: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub root_seed: u64,
    /// Worker threads; 0 uses the available parallelism.
    #[serde(default)]
    pub workers: usize,
    pub objective: ObjectiveSpec,
    pub init: InitSpec,
    pub noise: NoiseSpec,
    pub methods: Vec<MethodSpec>,
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::Config(format!("horizon must be >= 2, got {}", self.horizon)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        let labels: BTreeSet<String> = self.methods.iter().map(|m| m.label()).collect();
        if labels.len() != self.methods.len() {
            return Err(Error::Config("method labels must be unique".into()));
        }
        if labels
            .iter()
            .any(|l| l.is_empty() || l.contains(',') || l.contains('"'))
        {
            return Err(Error::Config(
                "method labels must be nonempty without commas or quotes".into(),
            ));
        }
        let n = &self.noise;
        if !(n.b >= 0.0 && n.g >= 0.0 && n.b.is_finite() && n.g.is_finite()) {
            return Err(Error::Config("noise B and G must be finite and >= 0".into()));
        }
        for m in &self.methods {
            match m {
                MethodSpec::Sgd { batch, lr, .. } => {
                    batch.validate()?;
                    lr.candidates()?;
                }
                MethodSpec::Storm { batch, lr, eta, .. } => {
                    batch.validate()?;
                    lr.candidates()?;
                    if !(*eta > 0.0 && *eta <= 1.0) {
                        return Err(Error::Config(format!("storm eta must lie in (0,1], got {eta}")));
                    }
                }
                _ => {}
            }
        }
        if self.output.grid_points < 2 {
            return Err(Error::Config("output.grid_points must be >= 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "demo"
horizon = 100
seeds = [0, 1]

[objective]
kind = "cubic"

[init]
kind = "gaussian"
mean = 5.0
variance = 0.1

[noise]
B = 1.0
G = 0.5

[[methods]]
kind = "nsgdm"
gamma0 = 1.0

[[methods]]
kind = "storm"
label = "storm_dynamic"
lr = 0.01

[[methods]]
kind = "sgd"
batch = { kind = "fixed", size = 1 }
lr = { min = 1e-3, max = 1e-1, points = 3 }

[output]
dir = "out/demo"
"#;

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.objective, ObjectiveSpec::PowerPoly { alpha: 0.5 });
        assert_eq!(c.methods.len(), 3);
        assert_eq!(c.methods[1].label(), "storm_dynamic");
        assert_eq!(c.output.formats, vec![ExportFormat::Csv, ExportFormat::Json]);
        let MethodSpec::Sgd { lr, .. } = &c.methods[2] else {
            panic!()
        };
        let g = lr.candidates().unwrap();
        assert!((g[1] - 1e-2).abs() < 1e-15);
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn default_lr_grid() {
        let g = LrSpec::default().candidates().unwrap();
        assert_eq!(g.len(), 13);
        assert!((g[0] - 1e-4).abs() < 1e-18 && (g[12] - 1.0).abs() < 1e-12);
        assert!((g[3] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = SAMPLE.replace("horizon = 100", "horizon = 1");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = SAMPLE.replace("seeds = [0, 1]", "seeds = []");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = SAMPLE.replace("label = \"storm_dynamic\"", "label = \"nsgdm\"");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = SAMPLE.replace("G = 0.5", "G = 0.5\nH = 1");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        assert!(ExperimentConfig::from_toml_str("name = 3").is_err());
    }

    #[test]
    fn init_draws() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0);
        assert_eq!(
            InitSpec::Constant { value: 2.0 }.draw(3, &mut rng).unwrap(),
            vec![2.0; 3]
        );
        assert!(InitSpec::Point { x: vec![1.0] }.draw(2, &mut rng).is_err());
        let x = InitSpec::Gaussian {
            mean: 5.0,
            variance: 1.0,
        }
        .draw(2000, &mut rng)
        .unwrap();
        let m = x.iter().sum::<f64>() / 2000.0;
        assert!((m - 5.0).abs() < 0.1);
    }

    #[test]
    fn noise_regimes() {
        assert_eq!(NoiseSpec { b: 1.0, g: 0.0 }.regime(), NoiseRegime::Bg0);
        assert_eq!(NoiseSpec { b: 0.0, g: 1.0 }.regime(), NoiseRegime::BoundedVariance);
        assert_eq!(NoiseSpec { b: 0.0, g: 0.0 }.regime(), NoiseRegime::Deterministic);
    }
}
