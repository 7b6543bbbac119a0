//! Evaluating the convergence bounds, with term breakdowns and the decay
//! in the horizon.
//!
//!     cargo run --example bounds

use bg0opt::analysis::{theorem_bound_nsgdm, theorem_bound_nstorm, BoundParams, NsgdmRegime, NstormRegime};

fn main() -> bg0opt::Result<()> {
    let smooth = BoundParams {
        delta: 1.0,
        gamma0: 1.0,
        l0: Some(1.0),
        t: 1_000_000,
        ..BoundParams::default()
    };
    let e = theorem_bound_nsgdm(NsgdmRegime::Smooth, &smooth)?;
    println!("NSGDM smooth, B = G = 0, T = 1e6: {}", bg0opt::cli::trim_value(e.value));
    for term in &e.terms {
        println!("  {:<36} {:.6e}", term.name, term.value);
    }

    let sym = BoundParams {
        delta: 5.0,
        gamma0: 1.0,
        eta0: Some(1.0),
        alpha: Some(0.5),
        l0: Some(1.0),
        l1: Some(1.0),
        b: 1.0,
        g: 0.5,
        t: 10_001,
        ..BoundParams::default()
    };
    let e = theorem_bound_nstorm(NstormRegime::ExpectedSymAlpha, &sym)?;
    println!(
        "\nNSTORM expected alpha-symmetric, {} addends, value {:.4e}",
        e.terms.len(),
        e.value
    );
    for w in &e.warnings {
        println!("  warning: {w}");
    }

    println!(
        "\n{:>10} {:>14} {:>14} {:>14}",
        "T", "NSGDM sym_alpha", "NSTORM mss", "NSTORM sym_one"
    );
    for t in [1_000u64, 10_000, 100_000, 1_000_000] {
        let p = BoundParams {
            t,
            lambda0: None,
            ..sym.clone()
        };
        let a = theorem_bound_nsgdm(NsgdmRegime::SymAlpha, &p)?;
        let b = theorem_bound_nstorm(
            NstormRegime::Mss,
            &BoundParams {
                l: Some(2.0),
                ..p.clone()
            },
        )?;
        let c = theorem_bound_nstorm(NstormRegime::ExpectedSymOne, &BoundParams { gamma0: 1e-3, ..p })?;
        println!("{t:>10} {:>14.4e} {:>14.4e} {:>14.4e}", a.value, b.value, c.value);
    }
    Ok(())
}
