//! Theorem-scheduled runs on a quadratic with known constants, checked
//! against the corresponding bounds.
//!
//!     cargo run --release --example bound_check

use std::path::Path;

use bg0opt::analysis::{
    check_against_bound, theorem_bound_nsgdm, theorem_bound_nstorm, BoundParams, NsgdmRegime, NstormRegime,
};
use bg0opt::harness::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/quadratic.cfg")))?;
    let obj = cfg.objective.build()?;
    let r = run_experiment(&cfg)?;
    for m in &r.methods {
        let s = m.schedule.as_ref().expect("normalized method");
        let runs = m.completed();
        let means: Vec<f64> = runs.iter().map(|t| t.mean_grad_norm()).collect();
        let p = BoundParams {
            delta: runs.iter().map(|t| obj.value(&t.x0)).fold(0.0, f64::max),
            gamma0: s.knobs.gamma0,
            eta0: s.knobs.eta0,
            l0: Some(1.0),
            l: Some(2f64.sqrt()),
            b: cfg.noise.b,
            g: cfg.noise.g,
            t: s.horizon as u64,
            ..BoundParams::default()
        };
        let bound = match m.kind.as_str() {
            "nsgdm" => theorem_bound_nsgdm(NsgdmRegime::Smooth, &p)?,
            _ => theorem_bound_nstorm(NstormRegime::Mss, &p)?,
        };
        let chk = check_against_bound(&means, &bound)?;
        println!(
            "{:<7} mean |grad| {:.4e} ± {:.1e}  bound {:.4e}  holds: {}",
            m.label, chk.mean, chk.std_err, chk.bound, chk.holds
        );
    }
    Ok(())
}
