//! The cubic experiment: NSGDM and NSTORM against the batched baselines on
//! f(x) = |x|^3, the NSGDM rate across horizons, and the final comparison.
//!
//!     cargo run --release --example cubic [config]

use std::path::PathBuf;

use bg0opt::analysis::{compare_runs, fit_rate_slope};
use bg0opt::harness::{run_and_export, run_experiment, ExperimentConfig, MethodSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/cubic.cfg")));
    let cfg = ExperimentConfig::load(&path)?;
    let (result, files) = run_and_export(&cfg)?;
    for m in &result.methods {
        let done = m.completed();
        let fin = done.iter().map(|t| t.final_grad_norm()).sum::<f64>() / done.len().max(1) as f64;
        let lr = m.lr.map_or("-".into(), |v| format!("{v:.1e}"));
        println!(
            "{:<14} lr {:>8}  final |grad| {:.4e}  aborted {}",
            m.label,
            lr,
            fin,
            m.aborted().len()
        );
    }
    let curve = |l: &str| result.curves_for(l).and_then(|c| c.grad_norm.as_ref());
    if let (Some(a), Some(b)) = (curve("nstorm"), curve("nsgdm")) {
        let c = compare_runs(a, b, result.final_budget())?;
        println!(
            "at SFO {}: nstorm {:.3e} ± {:.1e}, nsgdm {:.3e} ± {:.1e} -> {}",
            c.grid_sfo, c.a_mean, c.a_std, c.b_mean, c.b_std, c.verdict
        );
    }

    let mut short = cfg.clone();
    short.methods.retain(|m| matches!(m, MethodSpec::Nsgdm { .. }));
    let mut pts = Vec::new();
    for t in [1_000usize, 3_162, 10_000, 31_623] {
        short.horizon = t;
        let r = run_experiment(&short)?;
        let runs = r.methods[0].completed();
        pts.push((
            t as u64,
            runs.iter().map(|x| x.mean_grad_norm()).sum::<f64>() / runs.len() as f64,
        ));
    }
    println!("NSGDM trace-mean slope over T: {:+.4}", fit_rate_slope(&pts)?.slope);
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
