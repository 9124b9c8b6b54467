//! Desk-scale consistency study: with floor exponent d in (0,1), the median
//! parameter distance and L1 distance to the truth shrink as n grows.
//!
//! Run with: cargo run --example consistency_trend

use sievemix::estimator::{FitOptions, SieveSchedule};
use sievemix::mixture::{MixtureComponent, MixtureParams};
use sievemix::sim::{run_consistency, NamedSchedule, SimConfig};
use sievemix::ComponentFamily;

fn main() -> sievemix::Result<()> {
    let normal = ComponentFamily::normal(2.0)?;
    let truth = MixtureParams::mixture(vec![
        MixtureComponent::new(0.5, normal.clone(), 0.0, 1.0)?,
        MixtureComponent::new(0.5, normal.clone(), 4.0, 1.5)?,
    ])?;

    let cfg = SimConfig {
        theta0: truth,
        true_set: vec![],
        spec: vec![normal.clone(), normal],
        schedules: vec![NamedSchedule {
            id: "d = 0.5".into(),
            schedule: SieveSchedule::new(1.0, 0.5)?,
        }],
        n_grid: vec![100, 400, 1600, 6400],
        reps: 10,
        seed: 1,
        starts: 8,
        fit_opts: FitOptions::default(),
    };

    let report = run_consistency(&cfg)?;
    println!("      n   median param dist   median L1 dist");
    for s in &report.summary {
        println!(
            "  {:>5}   {:>17.5}   {:>14.5}",
            s.n, s.median_param_dist, s.median_l1_dist
        );
    }
    println!(
        "\n({} replications per n, truth injected as one start)",
        cfg.reps
    );
    Ok(())
}
