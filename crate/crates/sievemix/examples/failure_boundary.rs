//! The floor rate is nearly sharp: with c_n = exp(-n^2), shrinking faster
//! than exp(-n), a constructed spike (weight 1/n at one observation, scale
//! on the floor) eventually dominates every nondegenerate fit while sitting
//! far from the truth in parameter distance. At d = 0.5 the same spike
//! loses. Comparisons run in exact log space; exp(-3600) underflows f64 but
//! its logarithm does not.
//!
//! Run with: cargo run --example failure_boundary

use sievemix::estimator::{FitOptions, SieveSchedule};
use sievemix::mixture::{MixtureComponent, MixtureParams};
use sievemix::sim::{run_failure_demo, NamedSchedule, SimConfig};
use sievemix::ComponentFamily;

fn main() -> sievemix::Result<()> {
    let normal = ComponentFamily::normal(2.0)?;
    let truth = MixtureParams::mixture(vec![
        MixtureComponent::new(0.5, normal.clone(), 0.0, 1.0)?,
        MixtureComponent::new(0.5, normal.clone(), 4.0, 1.5)?,
    ])?;

    let base = SieveSchedule::new(1.0, 0.5)?;
    let cfg = SimConfig {
        theta0: truth,
        true_set: vec![],
        spec: vec![normal.clone(), normal],
        schedules: vec![
            NamedSchedule {
                id: "exp(-n^2)".into(),
                schedule: base.with_override(2.0)?,
            },
            NamedSchedule {
                id: "exp(-n^0.5)".into(),
                schedule: base,
            },
        ],
        n_grid: vec![20, 40, 60, 80],
        reps: 1,
        seed: 3,
        starts: 8,
        fit_opts: FitOptions::default(),
    };

    let report = run_failure_demo(&cfg)?;
    println!(
        "  schedule       n     log c_n     spike loglik    fit loglik    spike wins   param dist"
    );
    for r in &report.rows {
        println!(
            "  {:<12} {:>3}  {:>10.1}  {:>14.3}  {:>12.3}  {:>10}  {:>10.3}",
            r.schedule,
            r.n,
            r.log_floor,
            r.loglik_spike,
            r.loglik_fit,
            r.spike_superior,
            r.spike_param_dist
        );
    }
    for (id, crossover) in &report.crossover {
        match crossover {
            Some(n) => println!("\n{id}: spike superior from n = {n} onward"),
            None => println!("\n{id}: spike never superior on this grid"),
        }
    }
    Ok(())
}
