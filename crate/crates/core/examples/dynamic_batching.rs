//! SGD and STORM with variance-proportional batches: the batch grows with
//! the distance travelled, while the normalized methods stay at one sample.
//!
//!     cargo run --release --example dynamic_batching

use std::sync::Arc;

use bg0opt::objectives::{make_quadratic, Objective};
use bg0opt::optimizers::{run_nsgdm, run_sgd, run_storm_dynamic, BatchPolicy};
use bg0opt::oracle::Bg0Oracle;
use bg0opt::schedules::{nsgdm_schedule, NoiseRegime, Smoothness};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> bg0opt::Result<()> {
    let base: Arc<dyn Objective> = Arc::new(make_quadratic(10, 1.0)?);
    let x0 = vec![10.0; 10];
    let horizon = 2_000;
    let policy = BatchPolicy::dynamic(1.0, 100_000)?;
    let mut rng = ChaCha12Rng::seed_from_u64(3);

    let mut o = Bg0Oracle::new(base.clone(), 1.0, 1.0, &x0)?;
    let sgd = run_sgd(&mut o, 0.01, &policy, horizon, &x0, &mut rng)?;
    let mut o = Bg0Oracle::new(base.clone(), 1.0, 1.0, &x0)?;
    let storm = run_storm_dynamic(&mut o, 0.01, 0.1, &policy, horizon, &x0, &mut rng)?;
    let mut o = Bg0Oracle::new(base, 1.0, 1.0, &x0)?;
    let s = nsgdm_schedule(NoiseRegime::Bg0, Smoothness::Standard, horizon, 10.0)?;
    let nsgdm = run_nsgdm(&mut o, &s, &x0, &mut rng)?;

    println!(
        "{:>6} {:>22} {:>22} {:>22}",
        "k", "sgd |x-x0| / batch", "storm |x-x0| / batch", "nsgdm |x-x0| / batch"
    );
    for k in [0usize, 10, 50, 100, 200, 500, 1000, 1999] {
        let cell = |t: &bg0opt::optimizers::Trace| format!("{:.2} / {}", t.drift_sq[k].sqrt(), t.batch_size[k]);
        println!("{k:>6} {:>22} {:>22} {:>22}", cell(&sgd), cell(&storm), cell(&nsgdm));
    }
    for (name, t) in [("sgd", &sgd), ("storm", &storm), ("nsgdm", &nsgdm)] {
        println!(
            "{name:<6} total SFO {:>10}  final |grad| {:.3e}",
            t.total_sfo(),
            t.final_grad_norm()
        );
    }
    Ok(())
}
