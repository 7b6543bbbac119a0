//! Runs every (method, seed) pair of a config and aggregates the traces.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{aggregate_by_iteration, aggregate_on_grid, log_sfo_grid, AggregateCurve, Series};
use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::optimizers::{
    run_normalized_gd, run_nsgdm, run_nstorm, run_sgd, run_storm_dynamic, BatchPolicy, RunStatus, Trace,
};
use crate::oracle::Bg0Oracle;
use crate::schedules::{normalized_gd_schedule, nsgdm_schedule, nstorm_schedule, Schedule};

use super::config::{ExperimentConfig, MethodSpec};

/// Random stream for `seed`: the init stream is 0, method `i` uses `i + 1`.
pub fn stream_rng(root_seed: u64, seed: u64, stream: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&root_seed.to_le_bytes());
    key[8..16].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub method: String,
    pub seed: u64,
    pub status: RunStatus,
    pub states: usize,
    pub total_sfo: u64,
    pub final_grad_norm: f64,
    pub mean_grad_norm: f64,
    pub min_grad_norm: f64,
    pub final_drift_sq: f64,
    pub max_batch: u64,
    pub zero_direction_events: u64,
    pub batch_cap_hits: u64,
}

impl RunSummary {
    pub fn of(label: &str, t: &Trace) -> Self {
        RunSummary {
            method: label.to_string(),
            seed: t.seed,
            status: t.status.clone(),
            states: t.len(),
            total_sfo: t.total_sfo(),
            final_grad_norm: t.final_grad_norm(),
            mean_grad_norm: t.mean_grad_norm(),
            min_grad_norm: t.grad_norm.iter().copied().fold(f64::INFINITY, f64::min),
            final_drift_sq: t.drift_sq.last().copied().unwrap_or(f64::NAN),
            max_batch: t.max_batch(),
            zero_direction_events: t.zero_direction_events,
            batch_cap_hits: t.batch_cap_hits,
        }
    }
}

/// One learning-rate candidate of a baseline grid search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRecord {
    pub lr: f64,
    /// Final gradient norm per seed; `None` for aborted runs.
    pub final_grad_norm: Vec<Option<f64>>,
    /// Mean over seeds, infinite if any seed aborted.
    pub score: f64,
    pub selected: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodOutcome {
    pub label: String,
    pub kind: String,
    pub schedule: Option<Schedule>,
    pub lr: Option<f64>,
    pub eta: Option<f64>,
    pub policy: Option<BatchPolicy>,
    /// Selection rule of the grid search, when one ran.
    pub selection: Option<String>,
    pub grid_search: Vec<GridRecord>,
    pub summaries: Vec<RunSummary>,
    /// One trace per seed, in config seed order.
    #[serde(skip)]
    pub traces: Vec<Trace>,
}

impl MethodOutcome {
    pub fn completed(&self) -> Vec<&Trace> {
        self.traces.iter().filter(|t| t.completed()).collect()
    }

    pub fn aborted(&self) -> Vec<&Trace> {
        self.traces.iter().filter(|t| !t.completed()).collect()
    }
}

/// Seed aggregates of one method; `None` when every seed aborted.
#[derive(Clone, Debug, Serialize)]
pub struct MethodCurves {
    pub label: String,
    pub completed_seeds: Vec<u64>,
    pub aborted_seeds: Vec<u64>,
    pub grad_norm: Option<AggregateCurve>,
    pub drift_sq: Option<AggregateCurve>,
    pub batch_size: Option<AggregateCurve>,
    pub drift_sq_by_iter: Option<AggregateCurve>,
    pub batch_size_by_iter: Option<AggregateCurve>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    pub name: String,
    pub config: ExperimentConfig,
    /// Shared budgets for all methods' SFO-indexed curves.
    pub sfo_grid: Vec<u64>,
    pub methods: Vec<MethodOutcome>,
    pub curves: Vec<MethodCurves>,
}

impl ExperimentResult {
    pub fn method(&self, label: &str) -> Option<&MethodOutcome> {
        self.methods.iter().find(|m| m.label == label)
    }

    pub fn curves_for(&self, label: &str) -> Option<&MethodCurves> {
        self.curves.iter().find(|c| c.label == label)
    }

    pub fn final_budget(&self) -> u64 {
        self.sfo_grid.last().copied().unwrap_or(0)
    }
}

enum Plan {
    Normalized(Schedule),
    Baseline {
        lrs: Vec<f64>,
        policy: BatchPolicy,
        eta: Option<f64>,
    },
}

fn plan(cfg: &ExperimentConfig, m: &MethodSpec) -> Result<Plan> {
    let regime = cfg.noise.regime();
    let t = cfg.horizon;
    Ok(match m {
        MethodSpec::Nsgdm {
            smoothness,
            noise_regime,
            gamma0,
            ..
        } => Plan::Normalized(nsgdm_schedule(noise_regime.unwrap_or(regime), *smoothness, t, *gamma0)?),
        MethodSpec::Nstorm {
            smoothness,
            noise_regime,
            alpha,
            gamma0,
            eta0,
            ..
        } => Plan::Normalized(nstorm_schedule(
            *smoothness,
            noise_regime.unwrap_or(regime),
            alpha.or(cfg.objective.alpha()),
            t,
            *gamma0,
            *eta0,
            cfg.noise.g,
        )?),
        MethodSpec::NormalizedGd { smoothness, gamma0, .. } => {
            Plan::Normalized(normalized_gd_schedule(*smoothness, t, *gamma0)?)
        }
        MethodSpec::Sgd { batch, lr, .. } => Plan::Baseline {
            lrs: lr.candidates()?,
            policy: batch.clone(),
            eta: None,
        },
        MethodSpec::Storm { batch, lr, eta, .. } => Plan::Baseline {
            lrs: lr.candidates()?,
            policy: batch.clone(),
            eta: Some(*eta),
        },
    })
}

struct Job {
    method: usize,
    seed: usize,
    lr: usize,
}

fn run_job(
    cfg: &ExperimentConfig,
    objective: &Arc<dyn Objective>,
    starts: &[Vec<f64>],
    plans: &[Plan],
    job: &Job,
) -> Result<Trace> {
    let seed = cfg.seeds[job.seed];
    let x0 = &starts[job.seed];
    let spec = &cfg.methods[job.method];
    let mut rng = stream_rng(cfg.root_seed, seed, job.method as u64 + 1);
    let mut oracle = Bg0Oracle::new(objective.clone(), cfg.noise.b, cfg.noise.g, x0)?;
    let mut trace = match (&plans[job.method], spec) {
        (Plan::Normalized(s), MethodSpec::Nsgdm { .. }) => run_nsgdm(&mut oracle, s, x0, &mut rng)?,
        (Plan::Normalized(s), MethodSpec::Nstorm { .. }) => run_nstorm(&mut oracle, s, x0, &mut rng)?,
        (Plan::Normalized(s), _) => {
            let mut t = run_normalized_gd(objective.as_ref(), s.gamma, s.horizon, x0)?;
            t.schedule = Some(s.clone());
            t
        }
        (Plan::Baseline { lrs, policy, eta: None }, _) => {
            run_sgd(&mut oracle, lrs[job.lr], policy, cfg.horizon, x0, &mut rng)?
        }
        (
            Plan::Baseline {
                lrs,
                policy,
                eta: Some(eta),
            },
            _,
        ) => run_storm_dynamic(&mut oracle, lrs[job.lr], *eta, policy, cfg.horizon, x0, &mut rng)?,
    };
    trace.seed = seed;
    trace.method = spec.label();
    Ok(trace)
}

fn score(traces: &[&Trace]) -> (f64, Vec<Option<f64>>) {
    let finals: Vec<Option<f64>> = traces
        .iter()
        .map(|t| t.completed().then(|| t.final_grad_norm()))
        .collect();
    let s = if finals.iter().all(|f| f.is_some_and(f64::is_finite)) {
        finals.iter().map(|f| f.unwrap()).sum::<f64>() / finals.len() as f64
    } else {
        f64::INFINITY
    };
    (s, finals)
}

const SELECTION_RULE: &str =
    "lowest mean final gradient norm over seeds; aborted runs score +inf; ties go to the smaller rate";

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let objective = cfg.objective.build()?;
    let dim = objective.dim();
    let starts: Vec<Vec<f64>> = cfg
        .seeds
        .iter()
        .map(|&s| cfg.init.draw(dim, &mut stream_rng(cfg.root_seed, s, 0)))
        .collect::<Result<_>>()?;
    let plans: Vec<Plan> = cfg.methods.iter().map(|m| plan(cfg, m)).collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for (mi, p) in plans.iter().enumerate() {
        let n_lr = match p {
            Plan::Normalized(_) => 1,
            Plan::Baseline { lrs, .. } => lrs.len(),
        };
        for li in 0..n_lr {
            for si in 0..cfg.seeds.len() {
                jobs.push(Job {
                    method: mi,
                    seed: si,
                    lr: li,
                });
            }
        }
    }

    let workers = if cfg.workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        cfg.workers
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut results: Vec<Option<Trace>> = pool
        .install(|| {
            jobs.par_iter()
                .map(|j| run_job(cfg, &objective, &starts, &plans, j))
                .collect::<Vec<Result<Trace>>>()
        })
        .into_iter()
        .map(|r| r.map(Some))
        .collect::<Result<_>>()?;

    // results are in job order: method, then lr candidate, then seed
    let n_seeds = cfg.seeds.len();
    let mut offset = 0;
    let mut methods = Vec::with_capacity(cfg.methods.len());
    for (mi, spec) in cfg.methods.iter().enumerate() {
        let label = spec.label();
        let mut out = MethodOutcome {
            label: label.clone(),
            kind: spec.kind().to_string(),
            schedule: None,
            lr: None,
            eta: None,
            policy: None,
            selection: None,
            grid_search: Vec::new(),
            summaries: Vec::new(),
            traces: Vec::new(),
        };
        match &plans[mi] {
            Plan::Normalized(s) => {
                out.schedule = Some(s.clone());
                out.traces = results[offset..offset + n_seeds]
                    .iter_mut()
                    .map(|t| t.take().unwrap())
                    .collect();
                offset += n_seeds;
            }
            Plan::Baseline { lrs, policy, eta } => {
                out.policy = Some(policy.clone());
                out.eta = *eta;
                let mut best: Option<(usize, f64)> = None;
                for (li, &lr) in lrs.iter().enumerate() {
                    let block: Vec<&Trace> = results[offset + li * n_seeds..offset + (li + 1) * n_seeds]
                        .iter()
                        .map(|t| t.as_ref().unwrap())
                        .collect();
                    let (s, finals) = score(&block);
                    if best.is_none_or(|(_, b)| s < b) {
                        best = Some((li, s));
                    }
                    out.grid_search.push(GridRecord {
                        lr,
                        final_grad_norm: finals,
                        score: s,
                        selected: false,
                    });
                }
                let (li, _) = best.expect("nonempty grid");
                out.grid_search[li].selected = true;
                out.lr = Some(lrs[li]);
                if lrs.len() > 1 {
                    out.selection = Some(SELECTION_RULE.to_string());
                }
                let start = offset + li * n_seeds;
                out.traces = results[start..start + n_seeds]
                    .iter_mut()
                    .map(|t| t.take().unwrap())
                    .collect();
                offset += lrs.len() * n_seeds;
            }
        }
        out.summaries = out.traces.iter().map(|t| RunSummary::of(&label, t)).collect();
        methods.push(out);
    }

    let finals: Vec<u64> = methods
        .iter()
        .flat_map(|m| m.completed().into_iter().map(|t| t.total_sfo()))
        .collect();
    let max_sfo = finals.iter().copied().max().unwrap_or(0);
    let grid = log_sfo_grid(max_sfo, cfg.output.grid_points, &finals);

    let curves = methods
        .iter()
        .map(|m| {
            let done = m.completed();
            let agg = |series| {
                (!done.is_empty())
                    .then(|| aggregate_on_grid(&m.label, &done, series, &grid))
                    .transpose()
            };
            let by_iter = |series| {
                (!done.is_empty())
                    .then(|| aggregate_by_iteration(&m.label, &done, series))
                    .transpose()
            };
            Ok(MethodCurves {
                label: m.label.clone(),
                completed_seeds: done.iter().map(|t| t.seed).collect(),
                aborted_seeds: m.aborted().iter().map(|t| t.seed).collect(),
                grad_norm: agg(Series::GradNorm)?,
                drift_sq: agg(Series::DriftSq)?,
                batch_size: agg(Series::BatchSize)?,
                drift_sq_by_iter: by_iter(Series::DriftSq)?,
                batch_size_by_iter: by_iter(Series::BatchSize)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentResult {
        name: cfg.name.clone(),
        config: cfg.clone(),
        sfo_grid: grid,
        methods,
        curves,
    })
}
