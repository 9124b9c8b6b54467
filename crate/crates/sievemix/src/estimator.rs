//! Constrained maximum-likelihood fitting over the parameter set
//! `{theta : sigma_m >= c_n}` with the shrinking scale floor
//! `c_n = c0·exp(-n^d)`, plus the two demonstrators around it: the
//! unconstrained degenerate likelihood path and the adversarial spike
//! construction used to probe floors shrinking faster than `exp(-n)`.

use crate::error::{Error, Result};
use crate::family::{ComponentFamily, FamilyKind};
use crate::mixture::{MixtureComponent, MixtureParams, Scale};
use crate::optim;

/// Scale-floor schedule `c_n = c0·exp(-n^d)`.
///
/// The consistency regime requires `0 < d < 1`. An override exponent may be
/// set for failure-mode studies (`d' > 1` breaks consistency); schedules with
/// an override are flagged and excluded from consistency runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SieveSchedule {
    c0: f64,
    d: f64,
    override_exponent: Option<f64>,
}

impl SieveSchedule {
    pub fn new(c0: f64, d: f64) -> Result<Self> {
        if !(c0 > 0.0) || !c0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "c0 must be positive, got {c0}"
            )));
        }
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent d must lie in (0,1), got {d}; use with_override for failure studies"
            )));
        }
        Ok(SieveSchedule {
            c0,
            d,
            override_exponent: None,
        })
    }

    /// Replace the effective exponent for a failure-mode study.
    pub fn with_override(mut self, d_prime: f64) -> Result<Self> {
        if !(d_prime > 0.0) || !d_prime.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "override exponent must be positive, got {d_prime}"
            )));
        }
        self.override_exponent = Some(d_prime);
        Ok(self)
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn override_exponent(&self) -> Option<f64> {
        self.override_exponent
    }

    pub fn is_failure_study(&self) -> bool {
        self.override_exponent.is_some()
    }

    fn exponent(&self) -> f64 {
        self.override_exponent.unwrap_or(self.d)
    }

    /// Exact `ln c_n = ln c0 - n^d`; never underflows.
    pub fn log_floor(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "sample size must be at least 1".into(),
            ));
        }
        Ok(self.c0.ln() - (n as f64).powf(self.exponent()))
    }

    /// `c_n` as a value; may underflow to zero for failure-study exponents.
    pub fn floor(&self, n: usize) -> Result<f64> {
        Ok(self.log_floor(n)?.exp())
    }

    /// `c_n` as a [`Scale`], keeping the exact logarithm.
    pub fn floor_scale(&self, n: usize) -> Result<Scale> {
        Ok(Scale::from_ln(self.log_floor(n)?))
    }
}

/// Options for a single fit.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Relative log-likelihood improvement below which the fit stops.
    pub tol: f64,
    /// Record a per-iteration trace (log-likelihood and smallest scale).
    pub trace: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 500,
            tol: 1e-8,
            trace: false,
        }
    }
}

/// One trace entry of a fit.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub loglik: f64,
    pub min_sigma: f64,
}

/// Output of a constrained fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta_hat: MixtureParams,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per-component flag: fitted scale within 1e-12 of the floor.
    pub floor_active: Vec<bool>,
    pub n: usize,
    /// Floor value used (may underflow to zero; see `log_floor`).
    pub floor: f64,
    pub log_floor: f64,
    pub trace: Vec<TracePoint>,
}

impl FitResult {
    pub fn floor_active_count(&self) -> usize {
        self.floor_active.iter().filter(|&&b| b).count()
    }
}

fn validate_fit_inputs(
    data: &[f64],
    spec: &[ComponentFamily],
    init: &MixtureParams,
    log_floor: f64,
) -> Result<()> {
    if data.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 observations, got {}",
            data.len()
        )));
    }
    if spec.is_empty() {
        return Err(Error::InvalidParameter(
            "component spec must be nonempty".into(),
        ));
    }
    if init.len() != spec.len() {
        return Err(Error::InvalidParameter(format!(
            "init has {} components but spec has {}",
            init.len(),
            spec.len()
        )));
    }
    for (i, (c, fam)) in init.components().iter().zip(spec).enumerate() {
        if !c.family.same_kind(fam) {
            return Err(Error::InvalidParameter(format!(
                "init component {i} family does not match the spec"
            )));
        }
        if c.scale.ln() < log_floor - 1e-12 {
            return Err(Error::InitBelowFloor {
                index: i,
                sigma: c.scale.value(),
                floor: log_floor.exp(),
            });
        }
    }
    Ok(())
}

/// Maximize the log likelihood over `{sigma_m >= c_n}` starting from `init`.
///
/// All-normal specs use EM with the M-step scale update clamped at the floor;
/// anything else goes through Nelder-Mead ascent on the reparameterization
/// `sigma = c_n + exp(s)` with softmax weight coordinates. Both paths keep
/// every iterate feasible and never return a log likelihood below the
/// starting point's.
pub fn fit(
    data: &[f64],
    spec: &[ComponentFamily],
    schedule: &SieveSchedule,
    init: &MixtureParams,
    opts: &FitOptions,
) -> Result<FitResult> {
    let n = data.len();
    let log_floor = schedule.log_floor(n)?;
    validate_fit_inputs(data, spec, init, log_floor)?;
    let all_normal = spec.iter().all(|f| matches!(f.kind(), FamilyKind::Normal));
    if all_normal {
        em_fit(data, init, log_floor, opts)
    } else {
        nelder_mead_fit(data, init, log_floor, opts)
    }
}

fn floor_flags(theta: &MixtureParams, floor: f64) -> Vec<bool> {
    theta
        .components()
        .iter()
        .map(|c| c.scale.value() - floor <= 1e-12)
        .collect()
}

fn em_fit(
    data: &[f64],
    init: &MixtureParams,
    log_floor: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    let n = data.len();
    let m = init.len();
    let floor = log_floor.exp();
    let floor_scale = Scale::from_ln(log_floor);

    let mut comps: Vec<MixtureComponent> = init.components().to_vec();
    let mut resp = vec![0.0f64; n * m];
    let mut prev_ll = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut loglik = f64::NEG_INFINITY;

    for iter in 0..=opts.max_iter {
        // E-step in log space with max subtraction; also yields the
        // log likelihood of the current parameters.
        let mut ll = 0.0;
        for (i, &x) in data.iter().enumerate() {
            let row = &mut resp[i * m..(i + 1) * m];
            let mut max = f64::NEG_INFINITY;
            for (k, c) in comps.iter().enumerate() {
                row[k] = if c.alpha > 0.0 {
                    c.alpha.ln() + c.log_density(x)
                } else {
                    f64::NEG_INFINITY
                };
                if row[k] > max {
                    max = row[k];
                }
            }
            if max == f64::NEG_INFINITY {
                ll = f64::NEG_INFINITY;
                for r in row.iter_mut() {
                    *r = 0.0;
                }
                continue;
            }
            let mut sum = 0.0;
            for r in row.iter_mut() {
                *r = (*r - max).exp();
                sum += *r;
            }
            for r in row.iter_mut() {
                *r /= sum;
            }
            ll += max + sum.ln();
        }
        loglik = ll;
        if opts.trace {
            let min_sigma = comps
                .iter()
                .map(|c| c.scale.value())
                .fold(f64::INFINITY, f64::min);
            trace.push(TracePoint {
                loglik: ll,
                min_sigma,
            });
        }
        if iter > 0 && ll.is_finite() && (ll - prev_ll) <= opts.tol * (1.0 + ll.abs()) {
            converged = true;
            break;
        }
        if iter == opts.max_iter {
            break;
        }
        prev_ll = ll;
        iterations = iter + 1;

        // M-step; the scale update is the floor-clamped maximizer.
        for k in 0..m {
            let nk: f64 = (0..n).map(|i| resp[i * m + k]).sum();
            let alpha = nk / n as f64;
            if nk > 1e-300 {
                let mu: f64 = (0..n).map(|i| resp[i * m + k] * data[i]).sum::<f64>() / nk;
                let var: f64 = (0..n)
                    .map(|i| {
                        let d = data[i] - mu;
                        resp[i * m + k] * d * d
                    })
                    .sum::<f64>()
                    / nk;
                let rms = var.sqrt();
                comps[k].mu = mu;
                comps[k].scale = if rms > floor {
                    Scale::new(rms)?
                } else {
                    floor_scale
                };
            }
            comps[k].alpha = alpha;
        }
    }

    let theta_hat = MixtureParams::mixture(comps)?;
    let floor_active = floor_flags(&theta_hat, floor);
    Ok(FitResult {
        theta_hat,
        loglik,
        iterations,
        converged,
        floor_active,
        n,
        floor,
        log_floor,
        trace,
    })
}

/// Feasible-by-construction coordinates for the generic optimizer:
/// the first weight logit is pinned to zero, scales are `c_n + exp(s)`.
struct Reparam {
    m: usize,
    floor: f64,
}

impl Reparam {
    fn encode(&self, theta: &MixtureParams) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.m - 1);
        let a0 = theta.components()[0].alpha.max(1e-12);
        for c in theta.components().iter().skip(1) {
            v.push((c.alpha.max(1e-12) / a0).ln());
        }
        for c in theta.components() {
            v.push(c.mu);
        }
        for c in theta.components() {
            let excess = c.scale.value() - self.floor;
            v.push(excess.max(self.floor * 1e-9).max(1e-300).ln());
        }
        v
    }

    fn decode(&self, v: &[f64], families: &[ComponentFamily]) -> Result<MixtureParams> {
        let m = self.m;
        let mut logits = Vec::with_capacity(m);
        logits.push(0.0);
        logits.extend_from_slice(&v[..m - 1]);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let comps = (0..m)
            .map(|k| {
                Ok(MixtureComponent {
                    alpha: weights[k] / total,
                    family: families[k].clone(),
                    mu: v[m - 1 + k],
                    scale: Scale::new(self.floor + v[2 * m - 1 + k].exp())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MixtureParams::mixture(comps)
    }
}

fn nelder_mead_fit(
    data: &[f64],
    init: &MixtureParams,
    log_floor: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    let n = data.len();
    let m = init.len();
    let floor = log_floor.exp();
    let repar = Reparam { m, floor };
    let families: Vec<ComponentFamily> =
        init.components().iter().map(|c| c.family.clone()).collect();

    let x0 = repar.encode(init);
    let spread = data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - data.iter().copied().fold(f64::INFINITY, f64::min);
    let mu_step = if spread > 0.0 { 0.05 * spread } else { 0.1 };
    let mut steps = vec![0.5; m - 1];
    steps.extend(std::iter::repeat_n(mu_step, m));
    steps.extend(std::iter::repeat_n(0.5, m));

    let mut trace = Vec::new();
    let mut best_ll = init.log_likelihood(data)?;
    let objective = |v: &[f64]| -> f64 {
        match repar.decode(v, &families) {
            Ok(theta) => theta.log_likelihood(data).unwrap_or(f64::NEG_INFINITY),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let traced = |v: &[f64]| -> f64 {
        let ll = objective(v);
        if opts.trace && ll > best_ll {
            best_ll = ll;
            if let Ok(theta) = repar.decode(v, &families) {
                let min_sigma = theta
                    .components()
                    .iter()
                    .map(|c| c.scale.value())
                    .fold(f64::INFINITY, f64::min);
                trace.push(TracePoint {
                    loglik: ll,
                    min_sigma,
                });
            }
        }
        ll
    };

    let result = optim::maximize(traced, &x0, &steps, opts.max_iter, opts.tol);

    let init_ll = init.log_likelihood(data)?;
    let (theta_hat, loglik) = if result.value >= init_ll {
        (repar.decode(&result.x, &families)?, result.value)
    } else {
        (init.clone(), init_ll)
    };
    let floor_active = floor_flags(&theta_hat, floor);
    Ok(FitResult {
        theta_hat,
        loglik,
        iterations: result.iterations,
        converged: result.converged,
        floor_active,
        n,
        floor,
        log_floor,
        trace,
    })
}

/// Deterministic initializations: locations at data quantiles, a geometric
/// scale ladder between the floor and the sample range, uniform weights.
pub fn default_starts(
    data: &[f64],
    spec: &[ComponentFamily],
    schedule: &SieveSchedule,
    starts: usize,
) -> Result<Vec<MixtureParams>> {
    if starts == 0 {
        return Err(Error::InvalidParameter("starts must be at least 1".into()));
    }
    if spec.is_empty() {
        return Err(Error::InvalidParameter(
            "component spec must be nonempty".into(),
        ));
    }
    let m = spec.len();
    let floor = schedule.floor(data.len().max(1))?;
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let range = match (sorted.first(), sorted.last()) {
        (Some(lo), Some(hi)) if hi > lo => hi - lo,
        _ => 1.0,
    };
    let quantile = |p: f64| -> f64 {
        if sorted.is_empty() {
            return 0.0;
        }
        let t = p * (sorted.len() - 1) as f64;
        let i = t.floor() as usize;
        let frac = t - i as f64;
        if i + 1 < sorted.len() {
            sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
        } else {
            sorted[i]
        }
    };

    let s_lo = (range * 1e-4).max(floor).max(1e-300);
    let s_hi = range.max(s_lo * (1.0 + 1e-6));
    let mut inits = Vec::with_capacity(starts);
    for k in 0..starts {
        let t = (k as f64 + 0.5) / starts as f64;
        let sigma = s_lo * (s_hi / s_lo).powf(t);
        let comps = (0..m)
            .map(|j| {
                MixtureComponent::new(
                    1.0 / m as f64,
                    spec[j].clone(),
                    quantile((j + 1) as f64 / (m + 1) as f64),
                    sigma.max(floor),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        inits.push(MixtureParams::mixture(comps)?);
    }
    Ok(inits)
}

/// Run [`fit`] from `starts` deterministic initializations plus any extra
/// initializations supplied by the caller (tried first), returning the result
/// with the highest log likelihood; ties keep the earliest start.
pub fn multi_start_fit(
    data: &[f64],
    spec: &[ComponentFamily],
    schedule: &SieveSchedule,
    starts: usize,
    extra_inits: &[MixtureParams],
    opts: &FitOptions,
) -> Result<FitResult> {
    let mut inits: Vec<MixtureParams> = extra_inits.to_vec();
    inits.extend(default_starts(data, spec, schedule, starts)?);
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for init in &inits {
        match fit(data, spec, schedule, init, opts) {
            Ok(result) => {
                let better = match &best {
                    None => true,
                    Some(b) => result.loglik > b.loglik,
                };
                if better {
                    best = Some(result);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some(result) => Ok(result),
        None => Err(last_err
            .unwrap_or_else(|| Error::InvalidParameter("no initialization produced a fit".into()))),
    }
}

/// Unconstrained log likelihood along a path of shrinking scales for one
/// component: the degenerate-likelihood demonstrator. No floor is applied.
pub fn degenerate_path(
    data: &[f64],
    base: &MixtureParams,
    component: usize,
    sigma_seq: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if component >= base.len() {
        return Err(Error::InvalidParameter(format!(
            "component index {component} out of range for {} components",
            base.len()
        )));
    }
    if sigma_seq.is_empty() {
        return Err(Error::InvalidParameter(
            "sigma sequence must be nonempty".into(),
        ));
    }
    for w in sigma_seq.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidParameter(
                "sigma sequence must be strictly decreasing".into(),
            ));
        }
    }
    let mut path = Vec::with_capacity(sigma_seq.len());
    for &sigma in sigma_seq {
        let mut comps = base.components().to_vec();
        comps[component].scale = Scale::new(sigma)?;
        let theta = MixtureParams::mixture(comps)?;
        path.push((sigma, theta.log_likelihood(data)?));
    }
    Ok(path)
}

/// Adversarial spike: component 1 gets weight `1/n`, location at the first
/// observation, and scale exactly on the floor `c_n`; the remaining
/// components copy the donor's components 2..M rescaled to total weight
/// `1 - 1/n`. The floor enters through its exact logarithm, so schedules
/// whose floor underflows `f64` still evaluate correctly.
pub fn spike_params(
    data: &[f64],
    spec: &[ComponentFamily],
    schedule: &SieveSchedule,
    n: usize,
    donor: &MixtureParams,
) -> Result<MixtureParams> {
    if spec.len() < 2 {
        return Err(Error::InvalidParameter(
            "spike construction needs at least 2 components".into(),
        ));
    }
    if donor.len() != spec.len() {
        return Err(Error::InvalidParameter(format!(
            "donor has {} components but spec has {}",
            donor.len(),
            spec.len()
        )));
    }
    if data.is_empty() {
        return Err(Error::InvalidParameter("data must be nonempty".into()));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("n must be at least 2".into()));
    }
    let spike_weight = 1.0 / n as f64;
    let rest_total: f64 = donor.components().iter().skip(1).map(|c| c.alpha).sum();
    if rest_total <= 0.0 {
        return Err(Error::InvalidParameter(
            "donor components 2..M carry no weight".into(),
        ));
    }
    let mut comps = Vec::with_capacity(spec.len());
    comps.push(MixtureComponent {
        alpha: spike_weight,
        family: spec[0].clone(),
        mu: data[0],
        scale: schedule.floor_scale(n)?,
    });
    for c in donor.components().iter().skip(1) {
        let mut c = c.clone();
        c.alpha = c.alpha / rest_total * (1.0 - spike_weight);
        comps.push(c);
    }
    MixtureParams::mixture(comps)
}
