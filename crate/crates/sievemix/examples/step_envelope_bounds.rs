//! The quantitative skeleton of the consistency argument, verified on a
//! grid: where a component's scale drops below c0, the mixture is bounded by
//! a step function with at most 2M pieces whose widths shrink with their
//! heights; the true density obeys a two-sided envelope; sample extremes
//! stay inside an expanding radius; and the exact binomial tail sits below
//! its exponential concentration bound.
//!
//! Run with: cargo run --example step_envelope_bounds

use sievemix::bounds::{
    derive_context, extreme_exceedance_mc, okamoto_bound, step_envelope, verify_step_bound,
    verify_true_tail, ContextSpec,
};
use sievemix::mixture::{MixtureComponent, MixtureParams};
use sievemix::ComponentFamily;

fn main() -> sievemix::Result<()> {
    let normal = ComponentFamily::normal(2.0)?;
    let truth = MixtureParams::mixture(vec![
        MixtureComponent::new(0.5, normal.clone(), 0.0, 1.0)?,
        MixtureComponent::new(0.5, normal.clone(), 4.0, 1.5)?,
    ])?;

    let spec = ContextSpec {
        kappa0: 0.1,
        c0: 0.05,
        a0: 10.0,
        zeta: 1.0,
        lambda0: None,
    };
    let (ctx, _) = derive_context(&spec, &[normal.clone(), normal.clone()], Some(&truth))?;
    println!("derived constants:");
    println!(
        "  v0 {:.6}  v1 {:.6}  beta {}  beta_tilde {}",
        ctx.v0, ctx.v1, ctx.beta, ctx.beta_tilde
    );
    println!("  v2 {:.6}  B {:.4}", ctx.v2, ctx.b);
    let truth_consts = ctx.truth.unwrap();
    println!("  u0 {:.6}  u1 {:.4}", truth_consts.u0, truth_consts.u1);

    // A parameter vector with two small scales; its step envelope.
    let theta = MixtureParams::mixture(vec![
        MixtureComponent::new(0.5, normal.clone(), 1.0, 0.01)?,
        MixtureComponent::new(0.5, normal.clone(), 1.1, 0.03)?,
    ])?;
    let envelope = step_envelope(&theta, &ctx, Some(100));
    println!("\nstep envelope pieces (n = 100 classification):");
    for (p, class) in envelope
        .pieces
        .iter()
        .zip(envelope.classes.as_ref().unwrap())
    {
        println!(
            "  [{:+.4}, {:+.4})  height {:>8.2}  width {:.4} <= xi(height) {:.4}  {:?}",
            p.lo,
            p.hi,
            p.height,
            p.width(),
            ctx.xi(p.height),
            class
        );
    }
    let report = verify_step_bound(&theta, &ctx, 4001);
    println!(
        "grid verification: component bound {}, mixture bound {}, widths {}, T = {} <= 2M = {}",
        report.component_bound.holds,
        report.mixture_bound.holds,
        report.width_bound.holds,
        report.piece_count,
        2 * ctx.m
    );

    let tail = verify_true_tail(&truth, &ctx, 30.0, 12_001)?;
    println!(
        "\ntrue-density tail bound f0 <= min(u0, u1·|x|^-beta): holds = {} (worst margin {:.2e})",
        tail.holds, tail.worst_margin
    );

    // Extreme radius A_n = A0·n^((2+zeta)/(beta-1)) with a beta = 4 envelope.
    let family4 = ComponentFamily::normal(4.0)?;
    let std_normal =
        MixtureParams::mixture(vec![MixtureComponent::new(1.0, family4.clone(), 0.0, 1.0)?])?;
    let spec4 = ContextSpec {
        kappa0: 0.1,
        c0: 0.05,
        a0: 1.0,
        zeta: 1.0,
        lambda0: None,
    };
    let (ctx4, _) = derive_context(&spec4, &[family4], Some(&std_normal))?;
    println!("\nextreme-value exceedance over 2000 samples (A_n = n for these constants):");
    for n in [25usize, 100, 400] {
        let freq = extreme_exceedance_mc(&std_normal, &ctx4, n, 2000, 6)?;
        println!(
            "  n = {n:>3}: A_n = {:>5.0}, frequency {freq:.4}",
            ctx4.extreme_radius(n)
        );
    }

    let ok = okamoto_bound(10, 0.5, 0.2)?;
    println!(
        "\nbinomial concentration at n=10, p=0.5, eps=0.2: exact {:.7} <= bound {:.4}",
        ok.exact_tail, ok.bound
    );
    Ok(())
}
