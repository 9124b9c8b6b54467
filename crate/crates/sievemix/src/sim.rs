//! Sampling from mixtures and the two Monte-Carlo studies: the consistency
//! trend under floors `c_n = c0·exp(-n^d)` with `d` in (0,1), and the failure
//! demonstration for floors shrinking faster than `exp(-n)`.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimator::{self, FitOptions, SieveSchedule};
use crate::family::ComponentFamily;
use crate::mixture::{l1_distance, param_set_distance, MixtureComponent, MixtureParams};

/// A schedule with the identifier used in report rows.
#[derive(Debug, Clone)]
pub struct NamedSchedule {
    pub id: String,
    pub schedule: SieveSchedule,
}

/// Configuration of a Monte-Carlo study.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub theta0: MixtureParams,
    /// Representatives of the true parameter class; the truth itself is
    /// always included.
    pub true_set: Vec<MixtureParams>,
    pub spec: Vec<ComponentFamily>,
    pub schedules: Vec<NamedSchedule>,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub starts: usize,
    pub fit_opts: FitOptions,
}

impl SimConfig {
    fn representatives(&self) -> Vec<MixtureParams> {
        let mut reps = vec![self.theta0.clone()];
        reps.extend(self.true_set.iter().cloned());
        reps
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidParameter("n grid must be nonempty".into()));
        }
        for w in self.n_grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter(
                    "n grid must be strictly increasing".into(),
                ));
            }
        }
        if self.schedules.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one schedule is required".into(),
            ));
        }
        Ok(())
    }
}

/// One replication record.
#[derive(Debug, Clone)]
pub struct SimRow {
    pub schedule: String,
    pub n: usize,
    pub rep: usize,
    pub stream_seed: u64,
    pub param_dist: f64,
    pub l1_dist: f64,
    pub loglik_hat: f64,
    pub loglik_true: f64,
    pub floor_active_count: usize,
    pub wall_ms: f64,
}

/// Per-(schedule, n) medians.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub schedule: String,
    pub n: usize,
    pub median_param_dist: f64,
    pub median_l1_dist: f64,
    pub reps: usize,
}

/// Full study output: one row per (schedule, n, rep) plus per-n medians,
/// in canonical order.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub rows: Vec<SimRow>,
    pub summary: Vec<SummaryRow>,
    pub failed_reps: usize,
}

/// Derive an independent deterministic stream seed from the master seed and
/// the replication coordinates (splitmix64 folding).
pub fn stream_seed(seed: u64, parts: &[u64]) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let mut state = splitmix64(seed);
    for &p in parts {
        state = splitmix64(state ^ p);
    }
    state
}

/// Composition sampling: draw a component index from the weights, then
/// location-scale transform a standardized draw. Deterministic given the
/// seed.
pub fn sample(theta: &MixtureParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    if theta.is_sub_probability() {
        return Err(Error::InvalidParameter(
            "sampling needs a full mixture".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = theta.len() - 1;
        for (k, c) in theta.components().iter().enumerate() {
            acc += c.alpha;
            if u < acc {
                chosen = k;
                break;
            }
        }
        let c = &theta.components()[chosen];
        let z = c.family.sample_standardized(&mut rng)?;
        out.push(c.mu + c.scale.value() * z);
    }
    Ok(out)
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Sample, fit with multi-start (the truth injected as one initialization),
/// and record parameter and L1 distances for every (schedule, n, rep)
/// combination. Individual replication failures are tolerated up to 10% of
/// the total.
pub fn run_consistency(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    for s in &cfg.schedules {
        if s.schedule.is_failure_study() {
            return Err(Error::InvalidParameter(format!(
                "schedule {} has a failure-study override; consistency runs need d in (0,1)",
                s.id
            )));
        }
    }
    let reps_set = cfg.representatives();
    let mut rows = Vec::new();
    let mut failed = 0usize;
    let total = cfg.schedules.len() * cfg.n_grid.len() * cfg.reps;

    for (si, named) in cfg.schedules.iter().enumerate() {
        for &n in &cfg.n_grid {
            for rep in 0..cfg.reps {
                let seed = stream_seed(cfg.seed, &[si as u64, n as u64, rep as u64]);
                let started = Instant::now();
                let outcome = (|| -> Result<SimRow> {
                    let data = sample(&cfg.theta0, n, seed)?;
                    let fit = estimator::multi_start_fit(
                        &data,
                        &cfg.spec,
                        &named.schedule,
                        cfg.starts,
                        std::slice::from_ref(&cfg.theta0),
                        &cfg.fit_opts,
                    )?;
                    let param_dist = param_set_distance(&fit.theta_hat, &reps_set)?;
                    let l1 = l1_distance(&fit.theta_hat, &cfg.theta0)?;
                    let loglik_true = cfg.theta0.log_likelihood(&data)?;
                    Ok(SimRow {
                        schedule: named.id.clone(),
                        n,
                        rep,
                        stream_seed: seed,
                        param_dist,
                        l1_dist: l1.value,
                        loglik_hat: fit.loglik,
                        loglik_true,
                        floor_active_count: fit.floor_active_count(),
                        wall_ms: started.elapsed().as_secs_f64() * 1e3,
                    })
                })();
                match outcome {
                    Ok(row) => rows.push(row),
                    Err(_) => failed += 1,
                }
            }
        }
    }

    if failed * 10 > total {
        return Err(Error::InvalidParameter(format!(
            "{failed} of {total} replications failed"
        )));
    }

    let mut summary = Vec::new();
    for named in &cfg.schedules {
        for &n in &cfg.n_grid {
            let mut pd: Vec<f64> = rows
                .iter()
                .filter(|r| r.schedule == named.id && r.n == n)
                .map(|r| r.param_dist)
                .collect();
            let mut l1: Vec<f64> = rows
                .iter()
                .filter(|r| r.schedule == named.id && r.n == n)
                .map(|r| r.l1_dist)
                .collect();
            let count = pd.len();
            summary.push(SummaryRow {
                schedule: named.id.clone(),
                n,
                median_param_dist: median(&mut pd),
                median_l1_dist: median(&mut l1),
                reps: count,
            });
        }
    }

    Ok(SimReport {
        rows,
        summary,
        failed_reps: failed,
    })
}

/// One comparison of the failure demonstration.
#[derive(Debug, Clone)]
pub struct FailureRow {
    pub schedule: String,
    pub n: usize,
    pub log_floor: f64,
    pub loglik_spike: f64,
    pub loglik_fit: f64,
    pub gain: f64,
    pub spike_superior: bool,
    pub spike_param_dist: f64,
}

/// Output of [`run_failure_demo`].
#[derive(Debug, Clone)]
pub struct FailureReport {
    pub rows: Vec<FailureRow>,
    /// Smallest `n` from which the spike stays superior through the end of
    /// the grid, per schedule.
    pub crossover: Vec<(String, Option<usize>)>,
}

/// For each n, compare the log likelihood of the constructed spike (weight
/// 1/n at the first observation, scale exactly on the floor) against the
/// best nondegenerate multi-start fit. All floor arithmetic is in log space,
/// so override exponents whose floors underflow `f64` compare exactly.
pub fn run_failure_demo(cfg: &SimConfig) -> Result<FailureReport> {
    cfg.validate()?;
    if cfg.spec.len() < 2 {
        return Err(Error::InvalidParameter(
            "failure demonstration needs at least 2 components".into(),
        ));
    }
    let reps_set = cfg.representatives();
    let mut rows = Vec::new();
    let mut crossover = Vec::new();

    for (si, named) in cfg.schedules.iter().enumerate() {
        let mut superior_flags = Vec::new();
        for &n in &cfg.n_grid {
            let seed = stream_seed(cfg.seed, &[0xfa11, si as u64, n as u64]);
            let data = sample(&cfg.theta0, n, seed)?;

            // Donor: best fit with the first component dropped, then one
            // vestigial zero-weight slot so the spike can take its place.
            let rest_spec: Vec<ComponentFamily> = cfg.spec[1..].to_vec();
            let rest_fit = estimator::multi_start_fit(
                &data,
                &rest_spec,
                &named.schedule,
                cfg.starts,
                &[],
                &cfg.fit_opts,
            )?;
            let mut donor_comps = vec![MixtureComponent {
                alpha: 0.0,
                family: cfg.spec[0].clone(),
                mu: data[0],
                scale: crate::mixture::Scale::new(1.0)?,
            }];
            donor_comps.extend(rest_fit.theta_hat.components().iter().cloned());
            let donor = MixtureParams::mixture(donor_comps)?;

            let spike = estimator::spike_params(&data, &cfg.spec, &named.schedule, n, &donor)?;
            let loglik_spike = spike.log_likelihood(&data)?;

            // The donor is injected as an initialization too, so the
            // nondegenerate fit always dominates the reduced model the spike
            // is built on.
            let extra = [cfg.theta0.clone(), donor.clone()];
            let fit = estimator::multi_start_fit(
                &data,
                &cfg.spec,
                &named.schedule,
                cfg.starts,
                &extra,
                &cfg.fit_opts,
            )?;

            let gain = loglik_spike - fit.loglik;
            let spike_superior = gain > 0.0;
            superior_flags.push((n, spike_superior));
            rows.push(FailureRow {
                schedule: named.id.clone(),
                n,
                log_floor: named.schedule.log_floor(n)?,
                loglik_spike,
                loglik_fit: fit.loglik,
                gain,
                spike_superior,
                spike_param_dist: param_set_distance(&spike, &reps_set)?,
            });
        }
        let mut cross = None;
        for &(n, sup) in superior_flags.iter().rev() {
            if sup {
                cross = Some(n);
            } else {
                break;
            }
        }
        crossover.push((named.id.clone(), cross));
    }

    Ok(FailureReport { rows, crossover })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::ComponentFamily;
    use crate::mixture::MixtureComponent;

    fn normal() -> ComponentFamily {
        ComponentFamily::normal(2.0).unwrap()
    }

    fn two_normal(mu2: f64, sigma2: f64) -> MixtureParams {
        MixtureParams::mixture(vec![
            MixtureComponent::new(0.5, normal(), 0.0, 1.0).unwrap(),
            MixtureComponent::new(0.5, normal(), mu2, sigma2).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let theta = two_normal(4.0, 1.0);
        let a = sample(&theta, 100, 42).unwrap();
        let b = sample(&theta, 100, 42).unwrap();
        assert_eq!(a, b);
        let c = sample(&theta, 100, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_mean_matches_clt_tolerance() {
        let theta = two_normal(4.0, 1.0);
        let n = 100_000;
        let data = sample(&theta, n, 7).unwrap();
        let mean = data.iter().sum::<f64>() / n as f64;
        // Mixture mean 2.0, variance 0.5·1 + 0.5·1 + 0.25·16 = 5.
        let sd = 5.0f64.sqrt();
        let tol = 3.0 * sd / (n as f64).sqrt();
        assert!((mean - 2.0).abs() < tol, "mean = {mean}");
    }

    #[test]
    fn degenerate_weights_draw_single_component() {
        let theta = MixtureParams::mixture(vec![
            MixtureComponent::new(1.0, normal(), 10.0, 0.5).unwrap(),
            MixtureComponent::new(0.0, normal(), -10.0, 0.5).unwrap(),
        ])
        .unwrap();
        let data = sample(&theta, 1000, 3).unwrap();
        assert!(data.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn uniform_samples_stay_in_support() {
        let theta = MixtureParams::mixture(vec![MixtureComponent::new(
            1.0,
            ComponentFamily::uniform(2.0).unwrap(),
            1.0,
            2.0,
        )
        .unwrap()])
        .unwrap();
        let data = sample(&theta, 5000, 9).unwrap();
        assert!(data.iter().all(|&x| (0.0..1.0 + 1.0).contains(&x)));
    }

    fn small_config() -> SimConfig {
        SimConfig {
            theta0: two_normal(4.0, 1.5),
            true_set: vec![],
            spec: vec![normal(), normal()],
            schedules: vec![NamedSchedule {
                id: "d05".into(),
                schedule: SieveSchedule::new(1.0, 0.5).unwrap(),
            }],
            n_grid: vec![100],
            reps: 1,
            seed: 42,
            starts: 2,
            fit_opts: FitOptions::default(),
        }
    }

    #[test]
    fn single_rep_report_shape() {
        let report = run_consistency(&small_config()).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.summary.len(), 1);
        assert_eq!(report.failed_reps, 0);
        let row = &report.rows[0];
        assert!(row.param_dist >= 0.0);
        assert!((0.0..=2.0).contains(&row.l1_dist));
    }

    #[test]
    fn estimator_dominates_injected_truth() {
        let mut cfg = small_config();
        cfg.reps = 3;
        let report = run_consistency(&cfg).unwrap();
        for row in &report.rows {
            assert!(
                row.loglik_hat >= row.loglik_true - 1e-6,
                "fit {} below truth {}",
                row.loglik_hat,
                row.loglik_true
            );
        }
    }

    #[test]
    fn consistency_rejects_failure_schedules() {
        let mut cfg = small_config();
        cfg.schedules[0].schedule = SieveSchedule::new(1.0, 0.5)
            .unwrap()
            .with_override(2.0)
            .unwrap();
        assert!(run_consistency(&cfg).is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = small_config();
        let a = run_consistency(&cfg).unwrap();
        let b = run_consistency(&cfg).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.stream_seed, y.stream_seed);
            assert_eq!(x.param_dist, y.param_dist);
            assert_eq!(x.l1_dist, y.l1_dist);
            assert_eq!(x.loglik_hat, y.loglik_hat);
        }
    }

    #[test]
    fn failure_demo_singleton_grid() {
        let mut cfg = small_config();
        cfg.schedules[0].schedule = SieveSchedule::new(1.0, 0.5)
            .unwrap()
            .with_override(2.0)
            .unwrap();
        cfg.n_grid = vec![20];
        let report = run_failure_demo(&cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].log_floor, -400.0);
    }
}
