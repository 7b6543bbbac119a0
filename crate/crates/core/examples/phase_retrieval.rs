//! Phase retrieval with NSGDM, NSTORM and the batched baselines.
//!
//!     cargo run --release --example phase_retrieval [config] [--seeds 0,1,2] [--horizon T]
//!
//! Writes CSV, JSON and three SVG panels to the config's output directory.

use std::path::PathBuf;
use std::time::Instant;

use bg0opt::harness::{run_and_export, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut path = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/phase_retrieval.cfg"));
    let mut seeds = None;
    let mut horizon = None;
    while let Some(a) = args.next() {
        match a.as_str() {
            "--seeds" => seeds = args.next(),
            "--horizon" => horizon = args.next(),
            _ => path = PathBuf::from(a),
        }
    }
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(s) = seeds {
        cfg.seeds = s.split(',').map(str::parse).collect::<Result<_, _>>()?;
    }
    if let Some(h) = horizon {
        cfg.horizon = h.parse()?;
    }

    let start = Instant::now();
    let (result, files) = run_and_export(&cfg)?;
    println!("{} in {:.1?}", result.name, start.elapsed());
    println!(
        "{:<16} {:>8} {:>14} {:>14} {:>10} {:>10}",
        "method", "lr", "final |grad|", "mean |grad|", "max batch", "sfo"
    );
    for m in &result.methods {
        let done = m.completed();
        let n = done.len().max(1) as f64;
        let fin = done.iter().map(|t| t.final_grad_norm()).sum::<f64>() / n;
        let avg = done.iter().map(|t| t.mean_grad_norm()).sum::<f64>() / n;
        let batch = m.traces.iter().map(|t| t.max_batch()).max().unwrap_or(0);
        let sfo = done.iter().map(|t| t.total_sfo()).max().unwrap_or(0);
        let lr = m.lr.map_or("-".to_string(), |v| format!("{v:.1e}"));
        println!(
            "{:<16} {:>8} {:>14.4e} {:>14.4e} {:>10} {:>10}",
            m.label, lr, fin, avg, batch, sfo
        );
        if done.len() < m.traces.len() {
            println!("  {} of {} seeds aborted", m.traces.len() - done.len(), m.traces.len());
        }
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
