//! Theorem-driven schedules for the two experiment instantiations, the
//! derived smoothness constants, and stepsize condition checks.
//!
//!     cargo run --example schedules

use bg0opt::schedules::{
    default_lambda0, derived_constants, nsgdm_schedule, nstorm_schedule, validate_conditions, NoiseRegime, Smoothness,
    SmoothnessConstants,
};

fn main() -> bg0opt::Result<()> {
    let t = 10001;
    let rows = [
        (
            "phase retrieval NSGDM",
            nsgdm_schedule(NoiseRegime::Bg0, Smoothness::SymAlpha, t, 10.0)?,
        ),
        (
            "cubic NSGDM",
            nsgdm_schedule(NoiseRegime::Bg0, Smoothness::SymAlpha, t, 1.0)?,
        ),
        (
            "phase retrieval NSTORM",
            nstorm_schedule(
                Smoothness::ExpectedSymAlpha,
                NoiseRegime::Bg0,
                Some(2.0 / 3.0),
                t,
                7.5,
                1.0,
                1.0,
            )?,
        ),
        (
            "cubic NSTORM",
            nstorm_schedule(
                Smoothness::ExpectedSymAlpha,
                NoiseRegime::Bg0,
                Some(0.5),
                t,
                1.0,
                1.0,
                0.5,
            )?,
        ),
        (
            "MSS NSTORM",
            nstorm_schedule(Smoothness::Mss, NoiseRegime::Bg0, None, t, 1.0, 1.0, 1.0)?,
        ),
    ];
    println!(
        "{:<24} {:>12} {:>12} {:>7}",
        "schedule (T = 10001)", "gamma", "eta", "N_init"
    );
    for (name, s) in &rows {
        println!("{name:<24} {:>12.4e} {:>12.4e} {:>7}", s.gamma, s.eta, s.n_init);
    }

    let c = derived_constants(0.5, 1.0, 1.0)?;
    println!(
        "\nalpha = 1/2, L0 = L1 = 1: K0 = {:.4}, K1 = {:.4}, p = {}, C_alpha = {:.4}",
        c.k0, c.k1, c.p, c.big_c_alpha
    );

    // the cubic NSTORM run with L1 = 1 and the largest admissible lambda0
    let s = &rows[3].1;
    let lambda0 = default_lambda0(0.5, 1.0, 1.0, 1.0)?;
    let consts = SmoothnessConstants {
        l0: 1.0,
        l1: 1.0,
        alpha: Some(0.5),
    };
    println!("default lambda0 = {lambda0:.4e}");
    println!(
        "violations at lambda0:     {:?}",
        validate_conditions(s, &consts, Some(lambda0))
    );
    println!(
        "violations at 10 lambda0:  {:?}",
        validate_conditions(s, &consts, Some(10.0 * lambda0))
    );
    Ok(())
}
