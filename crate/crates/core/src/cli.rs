//! Command-line front end: `run`, `verify`, `accept` and `bound`.
//!
//! Exit status is 0 when the command succeeded and every requested check
//! passed, 1 on a failed check or runtime error, 2 on a usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::acceptance::{self, CriterionReport};
use crate::analysis::{theorem_bound_nsgdm, theorem_bound_nstorm, BoundEvaluation, BoundParams};
use crate::error::{Error, Result};
use crate::harness::{
    run_and_export, ExperimentConfig, ExportFormat, InitSpec, MethodSpec, NoiseSpec, ObjectiveSpec, OutputSpec,
};
use crate::schedules::Smoothness;

#[derive(Debug, Parser)]
#[command(name = "bg0opt", version, about = "Normalized stochastic methods under BG-0 noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment from a config file or inline flags and export it.
    Run(RunArgs),
    /// Run the fast property suites.
    Verify {
        /// Also write the reports as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the acceptance checklist and print a pass/fail table.
    Accept {
        /// Comma-separated criterion ids; all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Also write the reports as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate a theorem bound.
    Bound(BoundArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (TOML). Inline flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// phase_retrieval, cubic (power_poly) or quadratic. Required without --config.
    #[arg(long)]
    objective: Option<String>,
    /// Smoothness exponent of the power objective.
    #[arg(long)]
    alpha: Option<f64>,
    /// Dimension of the phase retrieval or quadratic objective.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long = "B")]
    b: Option<f64>,
    #[arg(long = "G")]
    g: Option<f64>,
    /// Recorded states per run.
    #[arg(long = "T")]
    t: Option<usize>,
    /// nsgdm, nstorm, normalized_gd, sgd, sgd_dynamic, storm_dynamic. Repeatable.
    #[arg(long = "method")]
    methods: Vec<String>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    eta0: Option<f64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json. Repeatable or comma-separated.
    #[arg(long = "format", value_delimiter = ',')]
    formats: Vec<ExportFormat>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    no_plots: bool,
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// nsgdm or nstorm.
    #[arg(long)]
    method: String,
    /// NSGDM: smooth, sym_alpha, sym_one. NSTORM: mss, expected_sym_alpha, expected_sym_one.
    #[arg(long)]
    regime: String,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    gamma0: f64,
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long = "L0")]
    l0: Option<f64>,
    #[arg(long = "L1")]
    l1: Option<f64>,
    #[arg(long = "B", default_value_t = 0.0)]
    b: f64,
    #[arg(long = "G", default_value_t = 0.0)]
    g: f64,
    #[arg(long = "T")]
    t: u64,
    #[arg(long)]
    b0: Option<f64>,
    /// Print each addend after the value.
    #[arg(long)]
    terms: bool,
}

/// Parses `args` (program name first) and executes the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => match build_config(&a) {
            Ok(cfg) => run(&cfg, out, err),
            Err(e) => {
                let _ = writeln!(err, "error: {e}\n\n{}", run_usage());
                return 2;
            }
        },
        Command::Verify { report } => checks(&acceptance::PROPERTY_SUITE, report, out),
        Command::Accept { only, report } => {
            let ids = if only.is_empty() {
                acceptance::CRITERIA.to_vec()
            } else {
                only
            };
            checks(&ids, report, out)
        }
        Command::Bound(a) => bound(&a, out, err),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn run_usage() -> String {
    let mut cmd = Cli::command();
    cmd.find_subcommand_mut("run")
        .map(|c| c.render_usage().to_string())
        .unwrap_or_default()
}

fn inline_objective(name: &str, a: &RunArgs) -> Result<(ObjectiveSpec, InitSpec)> {
    Ok(match name {
        "phase_retrieval" => (
            ObjectiveSpec::PhaseRetrieval {
                dim: a.dim.unwrap_or(100),
                measurements: 3000,
                meas_std: 0.1,
                signal_seed: 0,
            },
            InitSpec::Gaussian {
                mean: 5.0,
                variance: 1.0,
            },
        ),
        "cubic" | "power_poly" => (
            ObjectiveSpec::PowerPoly {
                alpha: a.alpha.unwrap_or(0.5),
            },
            InitSpec::Gaussian {
                mean: 5.0,
                variance: 0.1,
            },
        ),
        "quadratic" => (
            ObjectiveSpec::Quadratic {
                dim: a.dim.unwrap_or(10),
                curvature: 1.0,
            },
            InitSpec::Constant { value: 1.0 },
        ),
        _ => {
            return Err(Error::Config(format!(
                "unknown objective '{name}' (phase_retrieval, cubic, quadratic)"
            )))
        }
    })
}

/// The alpha-smoothness defaults do not apply to the quadratic.
fn fit_to_objective(m: MethodSpec, objective: &ObjectiveSpec) -> MethodSpec {
    if objective.alpha().is_some() {
        return m;
    }
    match m {
        MethodSpec::Nsgdm {
            label,
            noise_regime,
            gamma0,
            smoothness: Smoothness::SymAlpha,
        } => MethodSpec::Nsgdm {
            label,
            noise_regime,
            gamma0,
            smoothness: Smoothness::Standard,
        },
        MethodSpec::Nstorm {
            label,
            noise_regime,
            alpha,
            gamma0,
            eta0,
            smoothness: Smoothness::ExpectedSymAlpha,
        } => MethodSpec::Nstorm {
            label,
            noise_regime,
            alpha,
            gamma0,
            eta0,
            smoothness: Smoothness::Mss,
        },
        other => other,
    }
}

fn build_config(a: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&a.config, &a.objective) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, None) => return Err(Error::Config("--objective is required without --config".into())),
        (None, Some(name)) => {
            let (objective, init) = inline_objective(name, a)?;
            let name = match objective {
                ObjectiveSpec::PowerPoly { .. } => "cubic".to_string(),
                _ => name.clone(),
            };
            ExperimentConfig {
                output: OutputSpec {
                    dir: PathBuf::from("out").join(&name),
                    formats: vec![ExportFormat::Csv, ExportFormat::Json],
                    plots: true,
                    grid_points: 400,
                },
                name,
                horizon: 10001,
                seeds: vec![0, 1, 2],
                root_seed: 0,
                workers: 0,
                objective,
                init,
                noise: NoiseSpec { b: 1.0, g: 1.0 },
                methods: Vec::new(),
            }
        }
    };
    if a.config.is_some() {
        if let Some(name) = &a.objective {
            let (objective, init) = inline_objective(name, a)?;
            cfg.objective = objective;
            cfg.init = init;
        } else if let (Some(alpha), ObjectiveSpec::PowerPoly { .. }) = (a.alpha, &cfg.objective) {
            cfg.objective = ObjectiveSpec::PowerPoly { alpha };
        }
    }
    let methods = match (a.methods.is_empty(), cfg.methods.is_empty()) {
        (false, _) => a.methods.clone(),
        (true, true) => vec!["nsgdm".into(), "nstorm".into()],
        (true, false) => Vec::new(),
    };
    if !methods.is_empty() {
        cfg.methods = methods
            .iter()
            .map(|m| MethodSpec::from_name(m, a.gamma0, a.eta0).map(|s| fit_to_objective(s, &cfg.objective)))
            .collect::<Result<_>>()?;
    }
    if let Some(b) = a.b {
        cfg.noise.b = b;
    }
    if let Some(g) = a.g {
        cfg.noise.g = g;
    }
    if let Some(t) = a.t {
        cfg.horizon = t;
    }
    if !a.seeds.is_empty() {
        cfg.seeds = a.seeds.clone();
    }
    if let Some(out) = &a.out {
        cfg.output.dir = out.clone();
    }
    if !a.formats.is_empty() {
        cfg.output.formats = a.formats.clone();
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if a.no_plots {
        cfg.output.plots = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cfg: &ExperimentConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    let (result, files) = run_and_export(cfg)?;
    let io = |e| Error::io("<stdout>", e);
    writeln!(
        out,
        "{:<16} {:>9} {:>12} {:>12} {:>9} {:>10}",
        "method", "lr", "final|grad|", "mean|grad|", "maxbatch", "sfo"
    )
    .map_err(io)?;
    for m in &result.methods {
        let done = m.completed();
        let n = done.len().max(1) as f64;
        let fin = done.iter().map(|t| t.final_grad_norm()).sum::<f64>() / n;
        let avg = done.iter().map(|t| t.mean_grad_norm()).sum::<f64>() / n;
        let batch = done.iter().map(|t| t.max_batch()).max().unwrap_or(0);
        let sfo = done.iter().map(|t| t.total_sfo()).max().unwrap_or(0);
        let lr = m.lr.map_or("-".to_string(), |v| format!("{v:.2e}"));
        writeln!(
            out,
            "{:<16} {:>9} {:>12.4e} {:>12.4e} {:>9} {:>10}",
            m.label, lr, fin, avg, batch, sfo
        )
        .map_err(io)?;
        for t in m.aborted() {
            let _ = writeln!(err, "warning: {} seed {} aborted: {:?}", m.label, t.seed, t.status);
        }
    }
    for f in files {
        writeln!(out, "wrote {}", f.display()).map_err(io)?;
    }
    Ok(true)
}

fn checks(ids: &[u8], report: Option<PathBuf>, out: &mut dyn Write) -> Result<bool> {
    let reports: Vec<CriterionReport> = acceptance::run_checks(ids, |r| {
        let _ = writeln!(out, "{}", r.line());
        let _ = out.flush();
    });
    let passed = reports.iter().filter(|r| r.passed).count();
    let _ = writeln!(out, "{passed}/{} criteria passed", reports.len());
    if let Some(path) = report {
        let json = serde_json::to_string_pretty(&reports).map_err(|e| Error::Serialization(e.to_string()))?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    }
    Ok(passed == reports.len())
}

/// Twelve significant digits with trailing zeros removed.
pub fn trim_value(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let prec = (11 - v.abs().log10().floor() as i32).clamp(0, 320) as usize;
    let s = format!("{v:.prec$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn bound(a: &BoundArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    let p = BoundParams {
        delta: a.delta,
        gamma0: a.gamma0,
        eta0: a.eta0,
        lambda0: a.lambda0,
        alpha: a.alpha,
        l: a.l,
        l0: a.l0,
        l1: a.l1,
        b: a.b,
        g: a.g,
        t: a.t,
        b0: a.b0,
    };
    let eval: BoundEvaluation = match a.method.as_str() {
        "nsgdm" => theorem_bound_nsgdm(a.regime.parse()?, &p)?,
        "nstorm" => theorem_bound_nstorm(a.regime.parse()?, &p)?,
        m => return Err(Error::invalid(format!("unknown method '{m}' (nsgdm, nstorm)"))),
    };
    let io = |e| Error::io("<stdout>", e);
    writeln!(out, "{}", trim_value(eval.value)).map_err(io)?;
    if a.terms {
        for t in &eval.terms {
            writeln!(out, "  {:<40} {}", t.name, trim_value(t.value)).map_err(io)?;
        }
    }
    for w in &eval.warnings {
        let _ = writeln!(err, "warning: stepsize condition violated: {w}");
    }
    Ok(true)
}
