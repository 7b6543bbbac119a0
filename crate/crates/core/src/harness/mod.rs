//! Config-driven experiment runner: seeds, worker pool, aggregation,
//! export and plots.

pub mod config;
mod experiment;
mod export;
mod plots;

pub use config::{
    ExperimentConfig, ExportFormat, InitSpec, LrGrid, LrSpec, MethodSpec, NoiseSpec, ObjectiveSpec, OutputSpec,
};
pub use experiment::{
    run_experiment, stream_rng, ExperimentResult, GridRecord, MethodCurves, MethodOutcome, RunSummary,
};
pub use export::{csv_string, export, fmt_f64, json_string, parse_csv, CsvRow, CSV_HEADER};
pub use plots::emit_plots;

use std::path::PathBuf;

use crate::error::Result;

/// Runs the experiment and writes every requested artifact under
/// `config.output.dir`.
pub fn run_and_export(config: &ExperimentConfig) -> Result<(ExperimentResult, Vec<PathBuf>)> {
    let result = run_experiment(config)?;
    let dir = &config.output.dir;
    let mut files = Vec::new();
    for &f in &config.output.formats {
        files.push(export(&result, f, dir)?);
    }
    if config.output.plots {
        files.extend(emit_plots(&result, dir)?);
    }
    Ok((result, files))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{aggregate_on_grid, Series};
    use crate::optimizers::BatchPolicy;
    use crate::schedules::Smoothness;

    fn cfg(methods: Vec<MethodSpec>, seeds: Vec<u64>, noise: (f64, f64), horizon: usize) -> ExperimentConfig {
        ExperimentConfig {
            name: "t".into(),
            horizon,
            seeds,
            root_seed: 3,
            workers: 2,
            objective: ObjectiveSpec::Quadratic { dim: 3, curvature: 1.0 },
            init: InitSpec::Gaussian {
                mean: 2.0,
                variance: 1.0,
            },
            noise: NoiseSpec { b: noise.0, g: noise.1 },
            methods,
            output: OutputSpec {
                dir: PathBuf::from("unused"),
                formats: vec![ExportFormat::Csv],
                plots: false,
                grid_points: 50,
            },
        }
    }

    fn ngd(gamma0: f64) -> MethodSpec {
        MethodSpec::NormalizedGd {
            label: None,
            smoothness: Smoothness::Standard,
            gamma0,
        }
    }

    fn mixed() -> Vec<MethodSpec> {
        vec![
            MethodSpec::from_name("nsgdm", Some(1.0), None).unwrap(),
            MethodSpec::Nstorm {
                label: None,
                smoothness: Smoothness::Mss,
                noise_regime: None,
                alpha: None,
                gamma0: 1.0,
                eta0: 1.0,
            },
            MethodSpec::Sgd {
                label: Some("sgd_dynamic".into()),
                batch: BatchPolicy::Dynamic {
                    sigma_sq: 1.0,
                    cap: 1000,
                },
                lr: LrSpec::Grid(LrGrid {
                    min: 1e-3,
                    max: 1.0,
                    points: 4,
                }),
            },
            MethodSpec::Storm {
                label: None,
                batch: BatchPolicy::Fixed { size: 2 },
                lr: LrSpec::Value(0.05),
                eta: 0.3,
            },
        ]
    }

    #[test]
    fn ngd_descends_until_gamma_ball() {
        let c = cfg(vec![ngd(1.0)], vec![0], (0.0, 0.0), 400);
        let r = run_experiment(&c).unwrap();
        let t = &r.methods[0].traces[0];
        let gamma = r.methods[0].schedule.as_ref().unwrap().gamma;
        // on the unit quadratic grad_norm = ||x||, which shrinks by gamma per step
        let k_ball = t.grad_norm.iter().position(|&g| g <= gamma).unwrap();
        assert!(t.grad_norm[..=k_ball].windows(2).all(|w| w[1] < w[0]));
        assert!(t.grad_norm[k_ball..].iter().all(|&g| g <= gamma + 1e-12));
    }

    #[test]
    fn three_seed_aggregate_is_unbiased_std() {
        let c = cfg(vec![ngd(1.0)], vec![0, 1, 2], (0.0, 0.0), 50);
        let r = run_experiment(&c).unwrap();
        let curve = r.curves[0].grad_norm.as_ref().unwrap();
        for (i, &s) in r.sfo_grid.iter().enumerate() {
            let vals: Vec<f64> = r.methods[0]
                .traces
                .iter()
                .map(|t| {
                    let k = t.sfo_cum.iter().rposition(|&c| c <= s).unwrap_or(0);
                    t.grad_norm[k]
                })
                .collect();
            let m = vals.iter().sum::<f64>() / 3.0;
            let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 2.0).sqrt();
            assert!((curve.mean[i] - m).abs() < 1e-12 && (curve.std[i] - sd).abs() < 1e-12);
            assert!(curve.min[i] <= curve.mean[i] && curve.mean[i] <= curve.max[i]);
        }
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let mut a = cfg(mixed(), vec![0, 1], (1.0, 1.0), 60);
        let r1 = run_experiment(&a).unwrap();
        a.workers = 1;
        let mut r2 = run_experiment(&a).unwrap();
        r2.config.workers = 2;
        assert_eq!(csv_string(&r1).unwrap(), csv_string(&r2).unwrap());
        assert_eq!(json_string(&r1).unwrap(), json_string(&r2).unwrap());
        let g = &r1.method("sgd_dynamic").unwrap().grid_search;
        assert_eq!(g.len(), 4);
        assert_eq!(g.iter().filter(|r| r.selected).count(), 1);
        assert!(r1.method("sgd_dynamic").unwrap().selection.is_some());
    }

    #[test]
    fn shared_x0_within_seed() {
        let r = run_experiment(&cfg(mixed(), vec![5], (1.0, 1.0), 20)).unwrap();
        let x0 = &r.methods[0].traces[0].x0;
        assert!(r.methods.iter().all(|m| &m.traces[0].x0 == x0));
    }

    #[test]
    fn csv_round_trip() {
        let r = run_experiment(&cfg(mixed(), vec![0, 1, 2], (1.0, 1.0), 40)).unwrap();
        let text = csv_string(&r).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "method,seed,iter,sfo,grad_norm,drift_sq,batch_size,loss"
        );
        let rows = parse_csv(&text).unwrap();
        let total: usize = r.methods.iter().flat_map(|m| &m.traces).map(|t| t.len()).sum();
        assert_eq!(rows.len(), total);
        for m in &r.methods {
            let mut traces = m.traces.clone();
            for t in traces.iter_mut() {
                let mine: Vec<&CsvRow> = rows
                    .iter()
                    .filter(|x| x.method == m.label && x.seed == t.seed)
                    .collect();
                t.grad_norm = mine.iter().map(|x| x.grad_norm).collect();
                t.sfo_cum = mine.iter().map(|x| x.sfo).collect();
            }
            let refs: Vec<&crate::optimizers::Trace> = traces.iter().collect();
            let parsed = aggregate_on_grid(&m.label, &refs, Series::GradNorm, &r.sfo_grid).unwrap();
            let orig = r.curves_for(&m.label).unwrap().grad_norm.as_ref().unwrap();
            for (a, b) in parsed.mean.iter().zip(&orig.mean) {
                assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn empty_result_rejected() {
        let mut r = run_experiment(&cfg(vec![ngd(1.0)], vec![0], (0.0, 0.0), 5)).unwrap();
        for m in &mut r.methods {
            m.traces.clear();
        }
        let dir = tempfile::tempdir().unwrap();
        assert!(export(&r, ExportFormat::Csv, dir.path()).is_err());
        assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    }

    #[test]
    fn plots_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(mixed(), vec![0], (1.0, 1.0), 80);
        c.output.dir = dir.path().to_path_buf();
        c.output.formats = vec![ExportFormat::Csv, ExportFormat::Json];
        c.output.plots = true;
        let (r, files) = run_and_export(&c).unwrap();
        assert_eq!(files.len(), 2 + 6);
        assert!(files.iter().all(|f| f.exists()));
        let svg = std::fs::read_to_string(dir.path().join("t_batch_vs_iter.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
        // one seed: zero-width band
        let side = std::fs::read_to_string(dir.path().join("t_grad_norm_vs_sfo.csv")).unwrap();
        for line in side.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f[2], f[3]);
            assert_eq!(f[3], f[4]);
        }
        // fixed b=1 normalized methods plot a flat line at 1, except NSTORM's init batch
        let b = r.curves_for("nsgdm").unwrap().batch_size_by_iter.as_ref().unwrap();
        assert!(b.mean.iter().all(|&v| v == 1.0));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
        assert!(json["methods"][0]["schedule"]["gamma"].is_number());
        assert!(json["methods"][2]["grid_search"].as_array().unwrap().len() == 4);
    }

    #[test]
    fn all_seeds_aborted_is_reported() {
        let m = MethodSpec::Sgd {
            label: None,
            batch: BatchPolicy::Fixed { size: 1 },
            lr: LrSpec::Value(3.0),
        };
        let mut c = cfg(vec![m, ngd(1.0)], vec![0, 1], (0.0, 0.0), 3000);
        c.output.grid_points = 10;
        let r = run_experiment(&c).unwrap();
        let cur = r.curves_for("sgd").unwrap();
        assert!(cur.grad_norm.is_none());
        assert_eq!(cur.aborted_seeds, vec![0, 1]);
        assert!(r.curves_for("normalized_gd").unwrap().grad_norm.is_some());
    }
}
