//! Deterministic normalized GD with gamma = T^(-1/2): the trajectory
//! average of the gradient norm decays like T^(-1/2).
//!
//!     cargo run --release --example normalized_gd

use bg0opt::analysis::fit_rate_slope;
use bg0opt::objectives::{make_phase_retrieval, make_power_poly, make_quadratic, Objective};
use bg0opt::optimizers::run_normalized_gd;

fn main() -> bg0opt::Result<()> {
    let cubic = make_power_poly(0.5)?;
    let quad = make_quadratic(10, 1.0)?;
    let pr = make_phase_retrieval(20, 400, 0.1, 7)?;
    let problems: [(&str, &dyn Objective, Vec<f64>); 3] = [
        ("|x|^3", &cubic, vec![5.0]),
        ("quadratic", &quad, vec![1.0; 10]),
        ("phase retrieval d=20", &pr, vec![2.0; 20]),
    ];
    for (name, obj, x0) in problems {
        let mut pts = Vec::new();
        for t in [100u64, 1_000, 10_000, 100_000] {
            let gamma = (t as f64).powf(-0.5);
            let trace = run_normalized_gd(obj, gamma, t as usize, &x0)?;
            pts.push((t, trace.mean_grad_norm()));
        }
        let fit = fit_rate_slope(&pts)?;
        let vals: Vec<String> = pts.iter().map(|(t, v)| format!("T={t}: {v:.3e}")).collect();
        println!(
            "{name:<22} slope {:+.4} (R^2 {:.4})  {}",
            fit.slope,
            fit.r_squared,
            vals.join(", ")
        );
    }
    Ok(())
}
