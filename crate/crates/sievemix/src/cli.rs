//! Command-line dispatcher. One thin entry point over the library: every
//! subcommand loads a config, runs the corresponding module, and writes its
//! outputs (plus a replayable manifest) under the output directory.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bounds::{self, CandidateGrid, ContextSpec};
use crate::config::{self, parse_f64, parse_u64, parse_usize};
use crate::error::{Error, Result};
use crate::estimator::{self, FitOptions};
use crate::mixture::{MixtureComponent, MixtureParams};
use crate::report::{self, fmt_f64};
use crate::sim;

#[derive(Debug, Parser)]
#[command(
    name = "sievemix",
    version,
    about = "Sieve maximum-likelihood estimation for location-scale mixtures",
    disable_help_subcommand = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Config file (TOML, numbers as decimal strings).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "./out")]
    pub out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Constrained maximum-likelihood fit of a mixture to data.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Newline-delimited numeric data file (overrides the config data).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Model spec config when not using --config.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Derive the floor sample size from the data length.
        #[arg(long)]
        n_auto: bool,
    },
    /// Monte-Carlo consistency study over a grid of sample sizes.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Spike-vs-fit comparison for floors shrinking faster than exp(-n).
    FailureDemo {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Unconstrained likelihood divergence along a shrinking-scale path.
    DegenerateDemo {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Derive bound constants; with --verify-all, sweep every inequality.
    Bounds {
        #[command(flatten)]
        common: CommonArgs,
        /// Run all verification sweeps and write their CSVs.
        #[arg(long)]
        verify_all: bool,
    },
    /// Scan the separation margin over reduced-mixture candidates.
    Margin {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check a family's envelope, normalization, and parameter continuity.
    CheckFamily {
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Exit codes: 0 success, 1 usage, 2 validation, 3 runtime failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 3,
        _ => 2,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            common,
            data,
            spec,
            n_auto,
        } => run_fit(common, data, spec, n_auto),
        Command::Simulate { common } => run_simulate(common),
        Command::FailureDemo { common } => run_failure_demo(common),
        Command::DegenerateDemo { common } => run_degenerate_demo(common),
        Command::Bounds { common, verify_all } => run_bounds(common, verify_all),
        Command::Margin { common } => run_margin(common),
        Command::CheckFamily { common } => run_check_family(common),
    }
}

fn read_config_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn config_path(common: &CommonArgs, alt: Option<&PathBuf>) -> Result<PathBuf> {
    common
        .config
        .clone()
        .or_else(|| alt.cloned())
        .ok_or_else(|| Error::Config("a --config file is required".into()))
}

fn say(common: &CommonArgs, line: &str) {
    if !common.quiet {
        println!("{line}");
    }
}

fn run_fit(
    common: CommonArgs,
    data_flag: Option<PathBuf>,
    spec_flag: Option<PathBuf>,
    n_auto: bool,
) -> Result<()> {
    let path = config_path(&common, spec_flag.as_ref())?;
    let bytes = read_config_bytes(&path)?;
    let cfg: config::FitFileConfig = config::load(&path)?;
    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();

    let data = match &data_flag {
        Some(p) => config::read_data_file(p)?,
        None => config::resolve_data(&cfg.data, &cfg.data_path, &base_dir)?,
    };
    let n = if n_auto {
        data.len()
    } else {
        match &cfg.n {
            Some(s) => parse_usize(s, "n")?,
            None => data.len(),
        }
    };
    if n != data.len() {
        return Err(Error::Config(format!(
            "configured n = {n} does not match the {} data points; pass --n-auto to derive it",
            data.len()
        )));
    }

    let beta = cfg.default_beta()?;
    let families = cfg
        .family
        .iter()
        .map(|f| config::family_from_config(f, beta))
        .collect::<Result<Vec<_>>>()?;
    let schedule = cfg.schedule.to_schedule()?;
    let opts = cfg.fit_options()?;
    let starts = match &cfg.starts {
        Some(s) => parse_usize(s, "starts")?,
        None => 8,
    };
    let extra = match &cfg.init {
        Some(init) => vec![config::mixture_from_configs(init, beta)?],
        None => vec![],
    };

    let result = estimator::multi_start_fit(&data, &families, &schedule, starts, &extra, &opts)?;
    for c in result.theta_hat.components() {
        if c.alpha < 1e-6 {
            say(
                &common,
                &format!(
                    "warning: fitted weight {} is below 1e-6; the model order may exceed the truth",
                    fmt_f64(c.alpha)
                ),
            );
        }
    }

    let out = report::ensure_out_dir(&common.out)?;
    report::write_text(&out, "fit.toml", &report::fit_result_toml(&result))?;
    report::write_manifest(&out, "fit", Some(&bytes), common.seed)?;
    say(
        &common,
        &format!(
            "fit: n = {n}, loglik = {}, floor = {} (active on {} of {})",
            fmt_f64(result.loglik),
            fmt_f64(result.floor),
            result.floor_active_count(),
            result.theta_hat.len()
        ),
    );
    Ok(())
}

fn run_simulate(common: CommonArgs) -> Result<()> {
    let path = config_path(&common, None)?;
    let bytes = read_config_bytes(&path)?;
    let cfg: config::SimFileConfig = config::load(&path)?;
    let sim_cfg = cfg.to_sim_config(common.seed)?;

    let report = sim::run_consistency(&sim_cfg)?;
    let out = report::ensure_out_dir(&common.out)?;
    let (header, rows) = report::sim_report_csv(&report);
    report::write_csv(out.join("report.csv"), &header, &rows)?;
    report::write_text(&out, "summary.toml", &report::sim_summary_toml(&report))?;

    let mut series = Vec::new();
    for named in &sim_cfg.schedules {
        let pts: Vec<(f64, f64)> = report
            .summary
            .iter()
            .filter(|s| s.schedule == named.id)
            .map(|s| (s.n as f64, s.median_param_dist))
            .collect();
        series.push((named.id.clone(), pts));
    }
    report::write_text(
        &out,
        "dist_vs_n.svg",
        &report::svg_line_chart(
            "median parameter distance vs n",
            "n",
            "median dist",
            &series,
        ),
    )?;
    report::write_manifest(&out, "simulate", Some(&bytes), common.seed)?;
    for s in &report.summary {
        say(
            &common,
            &format!(
                "{} n = {:>6}: median param dist {}, median L1 {}",
                s.schedule,
                s.n,
                fmt_f64(s.median_param_dist),
                fmt_f64(s.median_l1_dist)
            ),
        );
    }
    Ok(())
}

fn run_failure_demo(common: CommonArgs) -> Result<()> {
    let path = config_path(&common, None)?;
    let bytes = read_config_bytes(&path)?;
    let cfg: config::SimFileConfig = config::load(&path)?;
    let sim_cfg = cfg.to_sim_config(common.seed)?;

    let report = sim::run_failure_demo(&sim_cfg)?;
    let out = report::ensure_out_dir(&common.out)?;
    let (header, rows) = report::failure_report_csv(&report);
    report::write_csv(out.join("failure.csv"), &header, &rows)?;
    let mut summary = String::new();
    for (id, crossover) in &report.crossover {
        use std::fmt::Write as _;
        writeln!(summary, "[[crossover]]").unwrap();
        writeln!(summary, "schedule = {id:?}").unwrap();
        match crossover {
            Some(n) => writeln!(summary, "spike_superior_from_n = \"{n}\"").unwrap(),
            None => writeln!(summary, "spike_superior_from_n = \"\"").unwrap(),
        }
        writeln!(summary).unwrap();
    }
    report::write_text(&out, "summary.toml", &summary)?;
    report::write_manifest(&out, "failure-demo", Some(&bytes), common.seed)?;
    for row in &report.rows {
        say(
            &common,
            &format!(
                "{} n = {:>4}: spike {} fit {} ({})",
                row.schedule,
                row.n,
                fmt_f64(row.loglik_spike),
                fmt_f64(row.loglik_fit),
                if row.spike_superior {
                    "spike wins"
                } else {
                    "fit wins"
                }
            ),
        );
    }
    Ok(())
}

fn run_degenerate_demo(common: CommonArgs) -> Result<()> {
    let path = config_path(&common, None)?;
    let bytes = read_config_bytes(&path)?;
    let cfg: config::DegenerateFileConfig = config::load(&path)?;
    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let beta = match &cfg.beta {
        Some(s) => parse_f64(s, "beta")?,
        None => 2.0,
    };
    let seed = match common.seed {
        Some(s) => s,
        None => match &cfg.seed {
            Some(s) => parse_u64(s, "seed")?,
            None => 1,
        },
    };

    let data = if cfg.data.is_some() || cfg.data_path.is_some() {
        config::resolve_data(&cfg.data, &cfg.data_path, &base_dir)?
    } else {
        let truth = config::mixture_from_configs(&cfg.truth, beta)?;
        let n = match &cfg.n {
            Some(s) => parse_usize(s, "n")?,
            None => 50,
        };
        sim::sample(&truth, n, seed)?
    };
    let n = data.len();
    let schedule = cfg.schedule.to_schedule()?;
    let starts = match &cfg.starts {
        Some(s) => parse_usize(s, "starts")?,
        None => 8,
    };
    let component = match &cfg.component {
        Some(s) => parse_usize(s, "component")?,
        None => 0,
    };
    let sigma_start = parse_f64(&cfg.sigma_start, "sigma_start")?;
    let halvings = parse_usize(&cfg.halvings, "halvings")?;

    let truth = config::mixture_from_configs(&cfg.truth, beta)?;
    let families: Vec<_> = truth
        .components()
        .iter()
        .map(|c| c.family.clone())
        .collect();

    // Constrained comparison optimum.
    let constrained = estimator::multi_start_fit(
        &data,
        &families,
        &schedule,
        starts,
        &[],
        &FitOptions::default(),
    )?;

    // Divergence base: weight 1/n on the shrinking component centered at the
    // first observation; the remaining mass on the best reduced fit so the
    // other observations keep coverage.
    let rest: Vec<_> = families
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != component)
        .map(|(_, f)| f.clone())
        .collect();
    let base = if rest.is_empty() {
        return Err(Error::Config(
            "degenerate demo needs at least 2 components".into(),
        ));
    } else {
        let rest_fit = estimator::multi_start_fit(
            &data,
            &rest,
            &schedule,
            starts,
            &[],
            &FitOptions::default(),
        )?;
        let mut comps = vec![MixtureComponent {
            alpha: 1.0 / n as f64,
            family: families[component].clone(),
            mu: data[0],
            scale: crate::mixture::Scale::new(sigma_start)?,
        }];
        for c in rest_fit.theta_hat.components() {
            let mut c = c.clone();
            c.alpha *= 1.0 - 1.0 / n as f64;
            comps.push(c);
        }
        MixtureParams::mixture(comps)?
    };

    let sigmas: Vec<f64> = (0..=halvings)
        .map(|j| sigma_start * 2.0f64.powi(-(j as i32)))
        .collect();
    let path_points = estimator::degenerate_path(&data, &base, 0, &sigmas)?;

    let out = report::ensure_out_dir(&common.out)?;
    let rows: Vec<Vec<String>> = path_points
        .iter()
        .map(|(s, ll)| vec![fmt_f64(*s), fmt_f64(*ll)])
        .collect();
    report::write_csv(out.join("path.csv"), &["sigma", "loglik"], &rows)?;

    let last = path_points.last().unwrap().1;
    let excess = last - constrained.loglik;
    let mut summary = String::new();
    {
        use std::fmt::Write as _;
        writeln!(summary, "n = \"{n}\"").unwrap();
        writeln!(
            summary,
            "constrained_loglik = \"{}\"",
            fmt_f64(constrained.loglik)
        )
        .unwrap();
        writeln!(summary, "final_loglik = \"{}\"", fmt_f64(last)).unwrap();
        writeln!(summary, "excess = \"{}\"", fmt_f64(excess)).unwrap();
    }
    report::write_text(&out, "summary.toml", &summary)?;
    report::write_manifest(&out, "degenerate-demo", Some(&bytes), common.seed)?;
    say(
        &common,
        &format!(
            "degenerate path exceeds the constrained optimum by {} after {halvings} halvings",
            fmt_f64(excess)
        ),
    );
    Ok(())
}

fn context_toml(ctx: &bounds::BoundContext, report: &bounds::ConditionReport) -> String {
    use std::fmt::Write as _;
    let mut text = String::new();
    writeln!(text, "kappa0 = \"{}\"", fmt_f64(ctx.kappa0)).unwrap();
    writeln!(text, "c0 = \"{}\"", fmt_f64(ctx.c0)).unwrap();
    writeln!(text, "m = \"{}\"", ctx.m).unwrap();
    writeln!(text, "v0 = \"{}\"", fmt_f64(ctx.v0)).unwrap();
    writeln!(text, "v1 = \"{}\"", fmt_f64(ctx.v1)).unwrap();
    writeln!(text, "beta = \"{}\"", fmt_f64(ctx.beta)).unwrap();
    writeln!(text, "beta_tilde = \"{}\"", fmt_f64(ctx.beta_tilde)).unwrap();
    writeln!(text, "nu_coeff = \"{}\"", fmt_f64(ctx.nu_coeff)).unwrap();
    writeln!(text, "v2 = \"{}\"", fmt_f64(ctx.v2)).unwrap();
    writeln!(text, "b = \"{}\"", fmt_f64(ctx.b)).unwrap();
    writeln!(text, "a0 = \"{}\"", fmt_f64(ctx.a0)).unwrap();
    writeln!(text, "zeta = \"{}\"", fmt_f64(ctx.zeta)).unwrap();
    if let Some(t) = &ctx.truth {
        writeln!(text).unwrap();
        writeln!(text, "[truth_constants]").unwrap();
        writeln!(text, "u0 = \"{}\"", fmt_f64(t.u0)).unwrap();
        writeln!(text, "u1 = \"{}\"", fmt_f64(t.u1)).unwrap();
        writeln!(text, "mu_bar = \"{}\"", fmt_f64(t.mu_bar)).unwrap();
        writeln!(text, "min_sigma = \"{}\"", fmt_f64(t.min_sigma)).unwrap();
        writeln!(text, "max_sigma = \"{}\"", fmt_f64(t.max_sigma)).unwrap();
    }
    for check in &report.checks {
        writeln!(text).unwrap();
        writeln!(text, "[[condition]]").unwrap();
        writeln!(text, "name = {:?}", check.name).unwrap();
        writeln!(text, "lhs = \"{}\"", fmt_f64(check.lhs)).unwrap();
        writeln!(text, "rhs = \"{}\"", fmt_f64(check.rhs)).unwrap();
        writeln!(text, "holds = \"{}\"", check.holds).unwrap();
    }
    text
}

fn run_bounds(common: CommonArgs, verify_all: bool) -> Result<()> {
    let path = config_path(&common, None)?;
    let bytes = read_config_bytes(&path)?;
    let cfg: config::BoundsFileConfig = config::load(&path)?;
    let beta = match &cfg.beta {
        Some(s) => parse_f64(s, "beta")?,
        None => 2.0,
    };
    let spec = ContextSpec {
        kappa0: parse_f64(&cfg.kappa0, "kappa0")?,
        c0: parse_f64(&cfg.c0, "c0")?,
        a0: parse_f64(&cfg.a0, "a0")?,
        zeta: parse_f64(&cfg.zeta, "zeta")?,
        lambda0: cfg
            .lambda0
            .as_deref()
            .map(|s| parse_f64(s, "lambda0"))
            .transpose()?,
    };
    let families = cfg
        .family
        .iter()
        .map(|f| config::family_from_config(f, beta))
        .collect::<Result<Vec<_>>>()?;
    let theta0 = if cfg.truth.is_empty() {
        None
    } else {
        Some(config::mixture_from_configs(&cfg.truth, beta)?)
    };

    let (ctx, conditions) = bounds::derive_context(&spec, &families, theta0.as_ref())?;
    let out = report::ensure_out_dir(&common.out)?;
    report::write_text(&out, "context.toml", &context_toml(&ctx, &conditions))?;

    if verify_all {
        let seed = match common.seed {
            Some(s) => s,
            None => cfg
                .seed
                .as_deref()
                .map(|s| parse_u64(s, "seed"))
                .transpose()?
                .unwrap_or(1),
        };
        let n = cfg.n.as_deref().map(|s| parse_usize(s, "n")).transpose()?;

        // Step-envelope target: from the config or synthesized around the
        // truth with small scales.
        let theta = if cfg.theta.is_empty() {
            synthesize_small_scale_theta(&ctx, theta0.as_ref(), &families, seed)?
        } else {
            config::mixture_from_configs(&cfg.theta, beta)?
        };

        let step = bounds::verify_step_bound(&theta, &ctx, 2001);
        write_step_csvs(&out, &theta, &ctx, &step, n)?;

        if let Some(theta0) = &theta0 {
            let (lo, hi, count) = match &cfg.grid {
                Some(g) => g.parse()?,
                None => (-30.0, 30.0, 6001),
            };
            let reach = hi.max(-lo);
            let truth = ctx.truth.as_ref().expect("context derived with truth");
            let rows: Vec<Vec<String>> = (0..count)
                .map(|i| {
                    let x = lo + (hi - lo) * i as f64 / (count - 1) as f64;
                    let lhs = theta0.density(x);
                    let rhs = if x == 0.0 {
                        truth.u0
                    } else {
                        truth.u0.min(truth.u1 * x.abs().powf(-ctx.beta))
                    };
                    vec![fmt_f64(x), fmt_f64(lhs), fmt_f64(rhs), fmt_f64(lhs - rhs)]
                })
                .collect();
            report::write_csv(
                out.join("true_density_tail.csv"),
                &["x", "lhs", "rhs", "margin"],
                &rows,
            )?;
            let tail = bounds::verify_true_tail(theta0, &ctx, reach, count)?;
            say(
                &common,
                &format!("true-density tail bound holds: {}", tail.holds),
            );

            let reps = cfg
                .mc_reps
                .as_deref()
                .map(|s| parse_usize(s, "mc_reps"))
                .transpose()?
                .unwrap_or(500);
            let mut rows = Vec::new();
            for n_mc in [25usize, 100, 400] {
                let freq = bounds::extreme_exceedance_mc(theta0, &ctx, n_mc, reps, seed)?;
                rows.push(vec![
                    n_mc.to_string(),
                    fmt_f64(ctx.extreme_radius(n_mc)),
                    fmt_f64(freq),
                ]);
            }
            report::write_csv(
                out.join("extreme_exceedance.csv"),
                &["n", "radius", "frequency"],
                &rows,
            )?;
        }

        let mut rows = Vec::new();
        for n_ok in [10usize, 50, 100, 200] {
            for p10 in 0..=10 {
                let p = p10 as f64 / 10.0;
                for e20 in 1..=10 {
                    let eps = e20 as f64 * 0.05;
                    let r = bounds::okamoto_bound(n_ok, p, eps)?;
                    rows.push(vec![
                        n_ok.to_string(),
                        fmt_f64(p),
                        fmt_f64(eps),
                        fmt_f64(r.exact_tail),
                        fmt_f64(r.bound),
                        fmt_f64(r.exact_tail - r.bound),
                    ]);
                }
            }
        }
        report::write_csv(
            out.join("binomial_concentration.csv"),
            &["n", "p", "eps", "exact", "bound", "margin"],
            &rows,
        )?;
        say(&common, &format!("step bounds hold: {}", step.all_hold()));
    }

    report::write_manifest(&out, "bounds", Some(&bytes), common.seed)?;
    say(
        &common,
        &format!("conditions all hold: {}", conditions.all_hold()),
    );
    Ok(())
}

fn synthesize_small_scale_theta(
    ctx: &bounds::BoundContext,
    theta0: Option<&MixtureParams>,
    families: &[crate::family::ComponentFamily],
    seed: u64,
) -> Result<MixtureParams> {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let center_span = match theta0 {
        Some(t) => {
            let lo = t
                .components()
                .iter()
                .map(|c| c.mu)
                .fold(f64::INFINITY, f64::min);
            let hi = t
                .components()
                .iter()
                .map(|c| c.mu)
                .fold(f64::NEG_INFINITY, f64::max);
            (lo, hi.max(lo + 1.0))
        }
        None => (-2.0, 2.0),
    };
    let m = families.len();
    let mut comps = Vec::with_capacity(m);
    for family in families {
        let mu = center_span.0 + rng.random::<f64>() * (center_span.1 - center_span.0);
        let sigma = ctx.c0 * 10f64.powf(-2.0 * rng.random::<f64>());
        comps.push(MixtureComponent::new(
            1.0 / m as f64,
            family.clone(),
            mu,
            sigma,
        )?);
    }
    MixtureParams::mixture(comps)
}

fn write_step_csvs(
    out: &Path,
    theta: &MixtureParams,
    ctx: &bounds::BoundContext,
    step: &bounds::StepBoundReport,
    n: Option<usize>,
) -> Result<()> {
    // Component-level sweep.
    let mut rows = Vec::new();
    for c in theta.components() {
        let sigma = c.scale.value();
        let r = ctx.nu(sigma);
        let window = (8.0 * sigma).max(2.0 * r);
        for i in 0..801 {
            let x = c.mu - window + 2.0 * window * i as f64 / 800.0;
            let inside = c.mu - r <= x && x < c.mu + r;
            let rhs = if inside {
                (ctx.v0 / sigma).max(ctx.kappa0)
            } else {
                ctx.kappa0
            };
            let lhs = c.density(x);
            rows.push(vec![
                fmt_f64(x),
                fmt_f64(lhs),
                fmt_f64(rhs),
                fmt_f64(lhs - rhs),
            ]);
        }
    }
    report::write_csv(
        out.join("component_step_bound.csv"),
        &["x", "lhs", "rhs", "margin"],
        &rows,
    )?;

    // Mixture-level sweep over the covered region.
    let mut rows = Vec::new();
    for p in &step.envelope.pieces {
        for i in 1..=200 {
            let x = p.lo + p.width() * i as f64 / 201.0;
            let lhs = theta.density(x);
            rows.push(vec![
                fmt_f64(x),
                fmt_f64(lhs),
                fmt_f64(p.height),
                fmt_f64(lhs - p.height),
            ]);
        }
    }
    report::write_csv(
        out.join("mixture_step_bound.csv"),
        &["x", "lhs", "rhs", "margin"],
        &rows,
    )?;

    // Widths against xi(height), with the classification when n is given.
    let envelope = bounds::step_envelope(theta, ctx, n);
    let mut rows = Vec::new();
    for (t, p) in envelope.pieces.iter().enumerate() {
        let xi = ctx.xi(p.height);
        let class = envelope.classes.as_ref().map(|cs| match cs[t] {
            bounds::PieceClass::Moderate => "moderate",
            bounds::PieceClass::Tall => "tall",
        });
        rows.push(vec![
            t.to_string(),
            fmt_f64(p.width()),
            fmt_f64(xi),
            fmt_f64(p.width() - xi),
            fmt_f64(p.height),
            class.unwrap_or("").to_string(),
        ]);
    }
    report::write_csv(
        out.join("interval_widths.csv"),
        &["t", "width", "xi_of_height", "margin", "height", "class"],
        &rows,
    )?;
    Ok(())
}

fn run_margin(common: CommonArgs) -> Result<()> {
    let path = config_path(&common, None)?;
    let bytes = read_config_bytes(&path)?;
    let cfg: config::MarginFileConfig = config::load(&path)?;
    let beta = match &cfg.beta {
        Some(s) => parse_f64(s, "beta")?,
        None => 2.0,
    };
    let theta0 = config::mixture_from_configs(&cfg.truth, beta)?;
    let family = config::family_from_config(&cfg.candidate_family, beta)?;
    let grid = CandidateGrid {
        components: cfg
            .components
            .as_deref()
            .map(|s| parse_usize(s, "components"))
            .transpose()?
            .unwrap_or(1),
        family,
        weight_levels: parse_usize(&cfg.weight_levels, "weight_levels")?,
        location_levels: parse_usize(&cfg.location_levels, "location_levels")?,
        location_range: (
            parse_f64(&cfg.location_lo, "location_lo")?,
            parse_f64(&cfg.location_hi, "location_hi")?,
        ),
        scale_levels: parse_usize(&cfg.scale_levels, "scale_levels")?,
        scale_range: (
            parse_f64(&cfg.scale_lo, "scale_lo")?,
            parse_f64(&cfg.scale_hi, "scale_hi")?,
        ),
        extreme_scales: cfg
            .extreme_scales
            .iter()
            .map(|s| parse_f64(s, "extreme_scales"))
            .collect::<Result<Vec<_>>>()?,
        jitter: cfg
            .jitter
            .as_deref()
            .map(|s| parse_f64(s, "jitter"))
            .transpose()?
            .unwrap_or(0.0),
    };
    let kappa = parse_f64(&cfg.kappa, "kappa")?;
    let seed = match common.seed {
        Some(s) => s,
        None => cfg
            .seed
            .as_deref()
            .map(|s| parse_u64(s, "seed"))
            .transpose()?
            .unwrap_or(0),
    };

    let scan = bounds::margin_scan(&theta0, kappa, &grid, seed)?;
    let out = report::ensure_out_dir(&common.out)?;
    let rows: Vec<Vec<String>> = scan
        .rows
        .iter()
        .map(|r| {
            let c = &r.candidate.components()[0];
            vec![
                r.index.to_string(),
                fmt_f64(c.alpha),
                fmt_f64(c.mu),
                fmt_f64(c.scale.value()),
                fmt_f64(r.margin),
            ]
        })
        .collect();
    report::write_csv(
        out.join("margin_scan.csv"),
        &["index", "weight", "mu", "sigma", "margin"],
        &rows,
    )?;
    let mut summary = String::new();
    {
        use std::fmt::Write as _;
        writeln!(
            summary,
            "# empirical margin over {} candidates; evidence, not proof",
            scan.count
        )
        .unwrap();
        writeln!(summary, "candidates = \"{}\"", scan.count).unwrap();
        writeln!(summary, "kappa = \"{}\"", fmt_f64(kappa)).unwrap();
        writeln!(summary, "min_margin = \"{}\"", fmt_f64(scan.min_margin)).unwrap();
        writeln!(summary, "argmin_index = \"{}\"", scan.argmin_index).unwrap();
        let c = &scan.argmin.components()[0];
        writeln!(summary, "argmin_weight = \"{}\"", fmt_f64(c.alpha)).unwrap();
        writeln!(summary, "argmin_mu = \"{}\"", fmt_f64(c.mu)).unwrap();
        writeln!(summary, "argmin_sigma = \"{}\"", fmt_f64(c.scale.value())).unwrap();
    }
    report::write_text(&out, "summary.toml", &summary)?;
    report::write_manifest(&out, "margin", Some(&bytes), common.seed)?;
    say(
        &common,
        &format!(
            "min margin {} over {} candidates",
            fmt_f64(scan.min_margin),
            scan.count
        ),
    );
    Ok(())
}

fn run_check_family(common: CommonArgs) -> Result<()> {
    let path = config_path(&common, None)?;
    let bytes = read_config_bytes(&path)?;
    let cfg: config::CheckFamilyFileConfig = config::load(&path)?;
    let beta = match &cfg.beta {
        Some(s) => parse_f64(s, "beta")?,
        None => 2.0,
    };
    let family = config::family_from_config(&cfg.family, beta)?;
    let (lo, hi, count) = match &cfg.grid {
        Some(g) => g.parse()?,
        None => (-50.0, 50.0, 10_001),
    };

    let envelope_report = family.check_envelope(lo, hi, count);
    let mass = family.normalization();

    let param_grid: Vec<(f64, f64)> = if cfg.param_grid.is_empty() {
        vec![(0.0, 1.0), (1.0, 0.5)]
    } else {
        cfg.param_grid
            .iter()
            .map(|p| {
                Ok((
                    parse_f64(&p[0], "param_grid.mu")?,
                    parse_f64(&p[1], "param_grid.sigma")?,
                ))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let radii: Vec<f64> = if cfg.radii.is_empty() {
        vec![0.1, 0.01, 0.001, 1e-5]
    } else {
        cfg.radii
            .iter()
            .map(|s| parse_f64(s, "radii"))
            .collect::<Result<Vec<_>>>()?
    };
    let regularity = family.check_regularity(&param_grid, &radii)?;

    let out = report::ensure_out_dir(&common.out)?;
    let env = family.envelope();
    let mut text = String::new();
    {
        use std::fmt::Write as _;
        writeln!(text, "v0 = \"{}\"", fmt_f64(env.v0)).unwrap();
        writeln!(text, "v1 = \"{}\"", fmt_f64(env.v1)).unwrap();
        writeln!(text, "beta = \"{}\"", fmt_f64(env.beta)).unwrap();
        writeln!(text, "envelope_source = \"{:?}\"", family.envelope_source()).unwrap();
        writeln!(text, "envelope_holds = \"{}\"", envelope_report.holds).unwrap();
        writeln!(
            text,
            "worst_margin = \"{}\"",
            fmt_f64(envelope_report.worst_margin)
        )
        .unwrap();
        writeln!(text, "worst_x = \"{}\"", fmt_f64(envelope_report.worst_x)).unwrap();
        writeln!(text, "mass = \"{}\"", fmt_f64(mass.value)).unwrap();
        writeln!(text, "mass_error_bound = \"{}\"", fmt_f64(mass.error_bound)).unwrap();
        writeln!(text, "regularity_pass = \"{}\"", regularity.pass).unwrap();
        writeln!(text, "measurability = {:?}", regularity.measurability_note).unwrap();
    }
    report::write_text(&out, "family_report.toml", &text)?;

    let step = (hi - lo) / (count - 1) as f64;
    let rows: Vec<Vec<String>> = (0..count)
        .map(|i| {
            let x = lo + step * i as f64;
            let lhs = family.standardized_density(x);
            let rhs = env.bound(x);
            vec![fmt_f64(x), fmt_f64(lhs), fmt_f64(rhs), fmt_f64(lhs - rhs)]
        })
        .collect();
    report::write_csv(
        out.join("envelope_sweep.csv"),
        &["x", "lhs", "rhs", "margin"],
        &rows,
    )?;

    let rows: Vec<Vec<String>> = regularity
        .points
        .iter()
        .map(|p| {
            vec![
                fmt_f64(p.mu),
                fmt_f64(p.sigma),
                fmt_f64(p.x),
                fmt_f64(p.base),
                fmt_f64(*p.sups.last().unwrap()),
                p.monotone.to_string(),
                p.converged.to_string(),
                p.boundary.to_string(),
            ]
        })
        .collect();
    report::write_csv(
        out.join("regularity_points.csv"),
        &[
            "mu",
            "sigma",
            "x",
            "density",
            "smallest_ball_sup",
            "monotone",
            "converged",
            "boundary",
        ],
        &rows,
    )?;
    report::write_manifest(&out, "check-family", Some(&bytes), common.seed)?;
    say(
        &common,
        &format!(
            "envelope holds: {}; mass = {} +- {}; regularity pass: {}",
            envelope_report.holds,
            fmt_f64(mass.value),
            fmt_f64(mass.error_bound),
            regularity.pass
        ),
    );
    Ok(())
}
