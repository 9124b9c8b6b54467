//! Fit a two-component normal mixture under the scale floor
//! c_n = c0·exp(-n^d), including the clamped case where all observations
//! coincide and the floor becomes active.
//!
//! Run with: cargo run --example fit_sieve_mle

use sievemix::estimator::{fit, multi_start_fit, FitOptions, SieveSchedule};
use sievemix::mixture::{MixtureComponent, MixtureParams};
use sievemix::{param_set_distance, sim, ComponentFamily};

fn main() -> sievemix::Result<()> {
    let normal = ComponentFamily::normal(2.0)?;
    let truth = MixtureParams::mixture(vec![
        MixtureComponent::new(0.5, normal.clone(), 0.0, 1.0)?,
        MixtureComponent::new(0.5, normal.clone(), 4.0, 1.5)?,
    ])?;
    let data = sim::sample(&truth, 2000, 7)?;

    let schedule = SieveSchedule::new(1.0, 0.5)?;
    let spec = [normal.clone(), normal.clone()];
    let result = multi_start_fit(&data, &spec, &schedule, 8, &[], &FitOptions::default())?;

    println!("n = {}, floor c_n = {:.3e}", result.n, result.floor);
    println!(
        "loglik {:.3} after {} iterations (converged: {})",
        result.loglik, result.iterations, result.converged
    );
    for (c, active) in result
        .theta_hat
        .components()
        .iter()
        .zip(&result.floor_active)
    {
        println!(
            "  alpha {:.4}  mu {:+.4}  sigma {:.4}  floor_active {}",
            c.alpha,
            c.mu,
            c.scale.value(),
            active
        );
    }
    let dist = param_set_distance(&result.theta_hat, &[truth])?;
    println!("parameter distance to the truth: {dist:.4}");

    // Degenerate data: every point equal. The closed-form scale estimate is
    // zero, so the floor clamps it.
    let constant = vec![5.0; 10];
    let single = [normal.clone()];
    let init = MixtureParams::mixture(vec![MixtureComponent::new(1.0, normal, 0.0, 1.0)?])?;
    let clamped = fit(&constant, &single, &schedule, &init, &FitOptions::default())?;
    let c = &clamped.theta_hat.components()[0];
    println!(
        "\nconstant data: mu {:.1}, sigma clamped to c_10 = {:.6e} (floor active: {})",
        c.mu,
        c.scale.value(),
        clamped.floor_active[0]
    );
    Ok(())
}
