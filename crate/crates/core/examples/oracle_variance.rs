//! Monte Carlo check of the BG-0 variance model: the noise variance grows
//! quadratically with the distance from the anchor point.
//!
//!     cargo run --release --example oracle_variance

use std::sync::Arc;

use bg0opt::objectives::{make_quadratic, Objective};
use bg0opt::oracle::Bg0Oracle;
use bg0opt::vecops;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> bg0opt::Result<()> {
    let dim = 20;
    let (b, g) = (0.5, 1.0);
    let base: Arc<dyn Objective> = Arc::new(make_quadratic(dim, 2.0)?);
    let x0 = vec![0.0; dim];
    let mut oracle = Bg0Oracle::new(base.clone(), b, g, &x0)?;
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let draws = 50_000;

    println!("{:>8} {:>12} {:>12}", "|x-x0|", "measured", "B^2 r^2+G^2");
    for r in [0.0, 1.0, 3.0, 10.0, 30.0] {
        let mut x = x0.clone();
        x[0] = r;
        let mean = base.grad(&x);
        let mut total = 0.0;
        for _ in 0..draws {
            let s = oracle.draw_sample(&mut rng);
            total += vecops::dist_sq(&oracle.stoch_grad(&x, &s)?, &mean);
        }
        println!(
            "{r:>8.1} {:>12.4} {:>12.4}",
            total / draws as f64,
            oracle.noise_variance(&x)
        );
    }

    // a mini-batch of b samples divides the variance by b
    let mut x = x0.clone();
    x[0] = 10.0;
    let mean = base.grad(&x);
    for batch in [1usize, 10, 100] {
        let mut total = 0.0;
        for _ in 0..draws {
            total += vecops::dist_sq(&oracle.stoch_grad_batch(&x, batch, &mut rng)?, &mean);
        }
        println!(
            "batch {batch:>4}: variance {:.5} (exact {:.5})",
            total / draws as f64,
            oracle.noise_variance(&x) / batch as f64
        );
    }
    println!("SFO calls charged: {}", oracle.sfo_count());
    Ok(())
}
