//! The auxiliary inequalities behind the analysis, evaluated numerically,
//! plus a finite-difference gradient check and the uniform output draw.
//!
//!     cargo run --example lemmas

use bg0opt::objectives::{make_phase_retrieval, Objective};
use bg0opt::optimizers::{run_normalized_gd, uniform_output};
use bg0opt::properties::{
    chi_square_uniform, direction_error_slack, finite_difference_grad, normalized_direction, young_fractional_slack,
};
use bg0opt::vecops;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> bg0opt::Result<()> {
    let a = [3.0, -1.0, 2.0];
    for scale in [0.01, 0.5, 2.0] {
        let e: Vec<f64> = [1.0, 1.0, -1.0].iter().map(|v| v * scale).collect();
        println!(
            "direction error, ||e|| = {:.3}: slack {:.4e}",
            vecops::norm(&e),
            direction_error_slack(&a, &e)
        );
    }
    println!("zero convention: {:?}", normalized_direction(&[0.0, 0.0]));
    for x in [0.01, 0.25, 1.0, 10.0] {
        println!(
            "young, x = {x}: slack {:.4e}",
            young_fractional_slack(x, 2.0 / 3.0, 1.5)
        );
    }

    let pr = make_phase_retrieval(8, 200, 0.1, 1)?;
    let x = vec![0.3; 8];
    let fd = finite_difference_grad(&pr, &x);
    let err = vecops::dist_sq(&fd, &pr.grad(&x)).sqrt() / vecops::norm(&fd);
    println!("phase retrieval gradient vs finite differences: rel err {err:.2e}");

    let trace = run_normalized_gd(&pr, 0.05, 50, &x)?;
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    let mut counts = vec![0u64; trace.len()];
    for _ in 0..50_000 {
        counts[uniform_output(&trace, &mut rng)?.index] += 1;
    }
    let chi = chi_square_uniform(&counts, 0.01);
    println!(
        "uniform output: chi2 {:.1} (critical {:.1}, p = {:.3})",
        chi.statistic, chi.critical, chi.p_value
    );
    Ok(())
}
