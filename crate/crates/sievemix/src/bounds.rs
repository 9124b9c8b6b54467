//! The quantitative objects behind the consistency argument, as inspectable
//! values and grid-verified inequalities: derived constants, the
//! step-function envelope over the region where some scale is small, the
//! true-density tail bound, the expanding extreme-value radius, exact
//! binomial concentration against its exponential bound, and the uniform
//! log-likelihood separation margin over reduced mixtures.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::family::ComponentFamily;
use crate::mixture::{MixtureComponent, MixtureParams};
use crate::quad::{self, octave_breakpoints};
use crate::sim;

/// Caller-chosen constants from which everything else is derived.
#[derive(Debug, Clone, Copy)]
pub struct ContextSpec {
    pub kappa0: f64,
    pub c0: f64,
    pub a0: f64,
    pub zeta: f64,
    /// Target slack for the smallness conditions; when absent those checks
    /// are skipped in the report.
    pub lambda0: Option<f64>,
}

/// Constants computed from the true parameter vector.
#[derive(Debug, Clone, Copy)]
pub struct TruthConstants {
    /// Numeric supremum of the true density.
    pub u0: f64,
    /// Tail coefficient of the true density bound `min(u0, u1·|x|^-beta)`.
    pub u1: f64,
    /// Largest absolute component location.
    pub mu_bar: f64,
    pub min_sigma: f64,
    pub max_sigma: f64,
}

/// Derived constants shared by every bound computation.
#[derive(Debug, Clone)]
pub struct BoundContext {
    pub kappa0: f64,
    pub c0: f64,
    /// Number of mixture components the bounds are instantiated for.
    pub m: usize,
    /// Componentwise maxima of the family envelope constants.
    pub v0: f64,
    pub v1: f64,
    pub beta: f64,
    /// `(beta - 1)/beta`.
    pub beta_tilde: f64,
    /// `(v1/kappa0)^(1/beta)`, the coefficient of the interval radius map.
    pub nu_coeff: f64,
    /// `2·(v1/kappa0)^(1/beta)·(v0·(M+1))^beta_tilde`, the width-bound
    /// coefficient.
    pub v2: f64,
    /// `v0/kappa0`; scales at or above this are effectively flat.
    pub b: f64,
    pub a0: f64,
    pub zeta: f64,
    pub truth: Option<TruthConstants>,
}

/// One evaluated inequality.
#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl ConditionCheck {
    fn strict_less(name: &str, lhs: f64, rhs: f64) -> Self {
        ConditionCheck {
            name: name.to_string(),
            lhs,
            rhs,
            holds: lhs < rhs,
        }
    }
}

/// Pass/fail report over the smallness conditions coupling
/// `kappa0, c0, lambda0, A0`.
#[derive(Debug, Clone, Default)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Numeric supremum of a mixture density by dense grid plus golden-section
/// refinement.
pub fn sup_density(theta: &MixtureParams) -> f64 {
    let lo = theta
        .components()
        .iter()
        .map(|c| c.mu - 8.0 * c.scale.value())
        .fold(f64::INFINITY, f64::min);
    let hi = theta
        .components()
        .iter()
        .map(|c| c.mu + 8.0 * c.scale.value())
        .fold(f64::NEG_INFINITY, f64::max);
    let n = 16_385;
    let step = (hi - lo) / (n - 1) as f64;
    let mut best_x = lo;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let x = lo + step * i as f64;
        let v = theta.density(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    // Golden-section refinement in the bracketing cell.
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (best_x - step, best_x + step);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = theta.density(c);
    let mut fd = theta.density(d);
    for _ in 0..100 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = theta.density(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = theta.density(d);
        }
    }
    best.max(fc).max(fd)
}

/// Build the derived constants and evaluate the smallness conditions.
///
/// Rejects a violated structural precondition by name: the families must
/// share one tail exponent, `c0 < v0/(kappa0·(M+1))` must hold, and with a
/// truth supplied `v0/kappa0` must exceed its largest scale. The remaining
/// conditions are reported pass/fail, not enforced.
pub fn derive_context(
    spec: &ContextSpec,
    families: &[ComponentFamily],
    theta0: Option<&MixtureParams>,
) -> Result<(BoundContext, ConditionReport)> {
    if families.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one family is required".into(),
        ));
    }
    if !(spec.kappa0 > 0.0) || !(spec.c0 > 0.0) || !(spec.a0 > 0.0) || !(spec.zeta > 0.0) {
        return Err(Error::Precondition(
            "kappa0, c0, A0 and zeta must all be positive".into(),
        ));
    }
    let beta = families[0].envelope().beta;
    for f in families {
        if f.envelope().beta != beta {
            return Err(Error::Precondition(format!(
                "families must share one tail exponent; found {} and {}",
                beta,
                f.envelope().beta
            )));
        }
    }
    let v0 = families
        .iter()
        .map(|f| f.envelope().v0)
        .fold(f64::NEG_INFINITY, f64::max);
    let v1 = families
        .iter()
        .map(|f| f.envelope().v1)
        .fold(f64::NEG_INFINITY, f64::max);
    let m = families.len();

    let kappa_c0_rhs = v0 / (spec.kappa0 * (m + 1) as f64);
    if !(spec.c0 < kappa_c0_rhs) {
        return Err(Error::Precondition(format!(
            "c0 < v0/(kappa0·(M+1)) violated: {} >= {}",
            spec.c0, kappa_c0_rhs
        )));
    }

    let beta_tilde = (beta - 1.0) / beta;
    let nu_coeff = (v1 / spec.kappa0).powf(1.0 / beta);
    let v2 = 2.0 * nu_coeff * (v0 * (m + 1) as f64).powf(beta_tilde);
    let b = v0 / spec.kappa0;

    let truth = match theta0 {
        None => None,
        Some(theta0) => {
            let u0 = sup_density(theta0);
            let mu_bar = theta0
                .components()
                .iter()
                .map(|c| c.mu.abs())
                .fold(0.0, f64::max);
            let min_sigma = theta0
                .components()
                .iter()
                .map(|c| c.scale.value())
                .fold(f64::INFINITY, f64::min);
            let max_sigma = theta0
                .components()
                .iter()
                .map(|c| c.scale.value())
                .fold(f64::NEG_INFINITY, f64::max);
            if !(b > max_sigma) {
                return Err(Error::Precondition(format!(
                    "v0/kappa0 = {b} must exceed the largest true scale {max_sigma}"
                )));
            }
            let weighted: f64 = theta0
                .components()
                .iter()
                .map(|c| c.alpha * c.scale.value().powf(beta - 1.0))
                .sum();
            let u1 = (u0 * (2.0 * mu_bar).powf(beta)).max(2.0f64.powf(beta) * v1 * weighted);
            Some(TruthConstants {
                u0,
                u1,
                mu_bar,
                min_sigma,
                max_sigma,
            })
        }
    };

    let ctx = BoundContext {
        kappa0: spec.kappa0,
        c0: spec.c0,
        m,
        v0,
        v1,
        beta,
        beta_tilde,
        nu_coeff,
        v2,
        b,
        a0: spec.a0,
        zeta: spec.zeta,
        truth,
    };

    let mut report = ConditionReport::default();
    report.checks.push(ConditionCheck {
        name: "(v0/c0)^beta_tilde > e".into(),
        lhs: (v0 / spec.c0).powf(beta_tilde),
        rhs: std::f64::consts::E,
        holds: (v0 / spec.c0).powf(beta_tilde) > std::f64::consts::E,
    });
    report.checks.push(ConditionCheck::strict_less(
        "kappa0 < v0/(c0(M+1))",
        spec.kappa0,
        v0 / (spec.c0 * (m + 1) as f64),
    ));
    if let Some(t) = &ctx.truth {
        report.checks.push(ConditionCheck::strict_less(
            "c0 < min true scale",
            spec.c0,
            t.min_sigma,
        ));
        if let Some(lambda0) = spec.lambda0 {
            let lhs3 = 3.0 * m as f64 * t.u0 * 2.0 * ctx.nu(spec.c0) * spec.kappa0.ln().abs();
            report.checks.push(ConditionCheck::strict_less(
                "3M·u0·2nu(c0)·|log kappa0| < lambda0",
                lhs3,
                lambda0,
            ));
            let lhs4 = 3.0 * 2.0 * m as f64 * t.u0 * ctx.xi(v0 / spec.c0) * (v0 / spec.c0).ln();
            report.checks.push(ConditionCheck::strict_less(
                "6M·u0·xi(v0/c0)·log(v0/c0) < lambda0",
                lhs4,
                lambda0,
            ));
            if let Some(theta0) = theta0 {
                let body = quad::integrate(
                    |x| theta0.density(x),
                    -spec.a0,
                    spec.a0,
                    1e-10,
                    &theta0.support_breakpoints(),
                );
                let outer_mass = (1.0 - body.value).max(0.0) + body.error_bound;
                let lhs5 =
                    outer_mass * ((v0 / spec.c0 + 2.0 * spec.kappa0) / (3.0 * spec.kappa0)).ln();
                report.checks.push(ConditionCheck::strict_less(
                    "P0(|x|>=A0)·log((v0/c0+2kappa0)/(3kappa0)) < lambda0",
                    lhs5,
                    lambda0,
                ));
            }
        }
    }
    Ok((ctx, report))
}

impl BoundContext {
    /// Interval radius `nu(y) = (v1/kappa0)^(1/beta)·y^beta_tilde`; strictly
    /// increasing.
    pub fn nu(&self, y: f64) -> f64 {
        assert!(y > 0.0, "nu needs a positive argument");
        self.nu_coeff * y.powf(self.beta_tilde)
    }

    /// Width bound `xi(y) = v2·(1/y)^beta_tilde`; strictly decreasing.
    pub fn xi(&self, y: f64) -> f64 {
        assert!(y > 0.0, "xi needs a positive argument");
        self.v2 * y.powf(-self.beta_tilde)
    }

    /// Expanding extreme-value radius `A_n = A0·n^((2+zeta)/(beta-1))`.
    pub fn extreme_radius(&self, n: usize) -> f64 {
        assert!(n >= 1);
        self.a0 * (n as f64).powf((2.0 + self.zeta) / (self.beta - 1.0))
    }

    /// Auxiliary classification floor `c0·exp(-n^(1/4))`, in log space.
    pub fn log_floor_prime(&self, n: usize) -> f64 {
        assert!(n >= 1);
        self.c0.ln() - (n as f64).powf(0.25)
    }

    pub fn floor_prime(&self, n: usize) -> f64 {
        self.log_floor_prime(n).exp()
    }

    /// Height threshold `M·v0/c_n'` separating moderate from tall pieces,
    /// as a logarithm.
    pub fn log_height_threshold(&self, n: usize) -> f64 {
        (self.m as f64 * self.v0).ln() - self.log_floor_prime(n)
    }
}

/// Height classification of one step piece relative to `M·v0/c_n'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceClass {
    /// Height at most the threshold (narrowness is controlled through the
    /// width bound).
    Moderate,
    /// Height above the threshold (width is exponentially small instead).
    Tall,
}

/// One constant-height piece of the step envelope.
#[derive(Debug, Clone, Copy)]
pub struct StepPiece {
    pub lo: f64,
    pub hi: f64,
    pub height: f64,
}

impl StepPiece {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }
}

/// Piecewise-constant upper bound of the mixture over the region where some
/// scale is at most `c0`.
#[derive(Debug, Clone)]
pub struct StepEnvelope {
    pub pieces: Vec<StepPiece>,
    /// Present when a sample size was given at construction.
    pub classes: Option<Vec<PieceClass>>,
}

impl StepEnvelope {
    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    /// Step height at `x`, if `x` lies in the covered region.
    pub fn height_at(&self, x: f64) -> Option<f64> {
        self.pieces.iter().find(|p| p.contains(x)).map(|p| p.height)
    }
}

/// Build the step envelope of `theta`: one half-open interval
/// `[mu - nu(sigma), mu + nu(sigma))` per component with `sigma <= c0`, the
/// union split at all endpoints, each piece's height evaluated at its
/// midpoint. With `n` supplied, pieces are classified against the height
/// threshold `M·v0/c_n'`.
pub fn step_envelope(theta: &MixtureParams, ctx: &BoundContext, n: Option<usize>) -> StepEnvelope {
    let mut endpoints: Vec<f64> = Vec::new();
    let mut intervals: Vec<(f64, f64, f64)> = Vec::new(); // (lo, hi, sigma)
    for c in theta.components() {
        let sigma = c.scale.value();
        if sigma <= ctx.c0 && sigma > 0.0 {
            let r = ctx.nu(sigma);
            intervals.push((c.mu - r, c.mu + r, sigma));
            endpoints.push(c.mu - r);
            endpoints.push(c.mu + r);
        }
    }
    endpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    endpoints.dedup();

    let mut pieces = Vec::new();
    for w in endpoints.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let mut height = 0.0;
        let mut covered = false;
        for &(ilo, ihi, sigma) in &intervals {
            if ilo <= mid && mid < ihi {
                covered = true;
                height += ctx.v0 / sigma;
            }
        }
        if covered {
            pieces.push(StepPiece {
                lo,
                hi,
                height: height + ctx.kappa0,
            });
        }
    }

    let classes = n.map(|n| {
        let log_threshold = ctx.log_height_threshold(n);
        pieces
            .iter()
            .map(|p| {
                if p.height.ln() <= log_threshold {
                    PieceClass::Moderate
                } else {
                    PieceClass::Tall
                }
            })
            .collect()
    });

    StepEnvelope { pieces, classes }
}

/// Worst margin of one sweep; `holds` means no positive margin was found.
#[derive(Debug, Clone, Copy)]
pub struct SweepCheck {
    pub holds: bool,
    pub worst_margin: f64,
    pub worst_at: f64,
}

impl SweepCheck {
    fn new() -> Self {
        SweepCheck {
            holds: true,
            worst_margin: f64::NEG_INFINITY,
            worst_at: f64::NAN,
        }
    }

    fn observe(&mut self, margin: f64, at: f64) {
        if margin > self.worst_margin || self.worst_margin == f64::NEG_INFINITY {
            self.worst_margin = margin;
            self.worst_at = at;
        }
        if margin > 0.0 {
            self.holds = false;
        }
    }
}

/// Grid verification of the step-function machinery.
#[derive(Debug, Clone)]
pub struct StepBoundReport {
    /// Component level: `f_m(x) <= max(1_interval·v0/sigma, kappa0)`.
    pub component_bound: SweepCheck,
    /// Mixture level on the covered region: density at most the step height.
    pub mixture_bound: SweepCheck,
    /// Width against `xi(height)`, per piece.
    pub width_bound: SweepCheck,
    /// Heights at least `v0/c0 + kappa0`.
    pub height_floor: SweepCheck,
    pub piece_count: usize,
    pub piece_count_ok: bool,
    /// Pieces of the envelope, for emission.
    pub envelope: StepEnvelope,
}

impl StepBoundReport {
    pub fn all_hold(&self) -> bool {
        self.component_bound.holds
            && self.mixture_bound.holds
            && self.width_bound.holds
            && self.height_floor.holds
            && self.piece_count_ok
    }
}

/// Sweep the component and mixture step bounds of `theta` on a grid of
/// `grid_points` per piece, check every piece's width against `xi(height)`,
/// the height floor, and the piece-count bound `T <= 2M`.
pub fn verify_step_bound(
    theta: &MixtureParams,
    ctx: &BoundContext,
    grid_points: usize,
) -> StepBoundReport {
    let envelope = step_envelope(theta, ctx, None);
    let mut component_bound = SweepCheck::new();
    let mut mixture_bound = SweepCheck::new();
    let mut width_bound = SweepCheck::new();
    let mut height_floor = SweepCheck::new();

    // Component-level bound, swept over a window around each component.
    for c in theta.components() {
        let sigma = c.scale.value();
        if sigma <= 0.0 {
            continue;
        }
        let r = ctx.nu(sigma);
        let window = (8.0 * sigma).max(2.0 * r);
        let step = 2.0 * window / (grid_points - 1) as f64;
        for i in 0..grid_points {
            let x = c.mu - window + step * i as f64;
            let inside = c.mu - r <= x && x < c.mu + r;
            let bound = if inside {
                (ctx.v0 / sigma).max(ctx.kappa0)
            } else {
                ctx.kappa0
            };
            component_bound.observe(c.density(x) - bound, x);
        }
    }

    // Mixture-level bound on each piece.
    for p in &envelope.pieces {
        let step = p.width() / (grid_points + 1) as f64;
        for i in 1..=grid_points {
            let x = p.lo + step * i as f64;
            mixture_bound.observe(theta.density(x) - p.height, x);
        }
        width_bound.observe(p.width() - ctx.xi(p.height), p.lo);
        height_floor.observe((ctx.v0 / ctx.c0 + ctx.kappa0) - p.height, p.lo);
    }

    let piece_count = envelope.piece_count();
    StepBoundReport {
        component_bound,
        mixture_bound,
        width_bound,
        height_floor,
        piece_count,
        piece_count_ok: piece_count <= 2 * ctx.m,
        envelope,
    }
}

/// Sweep the true-density tail bound `f0(x) <= min(u0, u1·|x|^-beta)` on a
/// grid over `[-r, r]`; the grid always reaches past `2·mu_bar`.
pub fn verify_true_tail(
    theta0: &MixtureParams,
    ctx: &BoundContext,
    r: f64,
    grid_points: usize,
) -> Result<SweepCheck> {
    let truth = ctx
        .truth
        .ok_or_else(|| Error::Precondition("context was derived without a truth".into()))?;
    let reach = r.max(2.0 * truth.mu_bar * 1.5 + 1.0);
    let step = 2.0 * reach / (grid_points - 1) as f64;
    let mut check = SweepCheck::new();
    for i in 0..grid_points {
        let x = -reach + step * i as f64;
        let bound = if x == 0.0 {
            truth.u0
        } else {
            truth.u0.min(truth.u1 * x.abs().powf(-ctx.beta))
        };
        check.observe(theta0.density(x) - bound, x);
    }
    Ok(check)
}

/// Monte-Carlo frequency of the event that a size-`n` sample from the truth
/// has an extreme beyond `±A_n`, over `reps` independent samples.
pub fn extreme_exceedance_mc(
    theta0: &MixtureParams,
    ctx: &BoundContext,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 || reps == 0 {
        return Err(Error::InvalidParameter(
            "n and reps must be at least 1".into(),
        ));
    }
    let radius = ctx.extreme_radius(n);
    let mut exceedances = 0usize;
    for rep in 0..reps {
        let data = sim::sample(theta0, n, sim::stream_seed(seed, &[n as u64, rep as u64]))?;
        let min = data.iter().copied().fold(f64::INFINITY, f64::min);
        let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min < -radius || max > radius {
            exceedances += 1;
        }
    }
    Ok(exceedances as f64 / reps as f64)
}

/// Exact binomial upper-tail probability next to its exponential bound.
#[derive(Debug, Clone, Copy)]
pub struct OkamotoBound {
    /// `P(X/n - p > eps)` by exact log-space summation.
    pub exact_tail: f64,
    /// `exp(-2·n·eps^2)`.
    pub bound: f64,
}

/// Exact tail `P(X/n - p > eps)` for `X ~ Binomial(n, p)` with the
/// exponential concentration bound it never exceeds.
pub fn okamoto_bound(n: usize, p: f64, eps: f64) -> Result<OkamotoBound> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "p must lie in [0,1], got {p}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let bound = (-2.0 * n as f64 * eps * eps).exp();
    let cut = n as f64 * (p + eps);
    // Strict inequality k/n - p > eps means k >= floor(cut) + 1; the small
    // slack guards boundary cases that floating point lands just below an
    // integer.
    let k0 = (cut + 1e-9).floor() as i64 + 1;
    if k0 > n as i64 {
        return Ok(OkamotoBound {
            exact_tail: 0.0,
            bound,
        });
    }
    if p == 0.0 {
        // All mass at k = 0 < k0.
        return Ok(OkamotoBound {
            exact_tail: 0.0,
            bound,
        });
    }
    if p == 1.0 {
        // All mass at k = n >= k0.
        return Ok(OkamotoBound {
            exact_tail: 1.0,
            bound,
        });
    }
    let ln_n_fact = ln_gamma(n as f64 + 1.0);
    let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
    let mut tail = 0.0;
    for k in k0..=(n as i64) {
        let kf = k as f64;
        let ln_term = ln_n_fact - ln_gamma(kf + 1.0) - ln_gamma(n as f64 - kf + 1.0)
            + kf * ln_p
            + (n as f64 - kf) * ln_q;
        tail += ln_term.exp();
    }
    Ok(OkamotoBound {
        exact_tail: tail.min(1.0),
        bound,
    })
}

/// Margin of the separation inequality for one reduced candidate.
#[derive(Debug, Clone, Copy)]
pub struct MarginResult {
    /// `E0[log f0] - E0[log(g + kappa)]`; positive means the candidate is
    /// separated by this much.
    pub margin: f64,
    pub error_bound: f64,
    pub e0_log_f0: f64,
    pub e0_log_g_kappa: f64,
    /// Numeric check that `E0[|log f0|]` is finite (tail-certified value).
    pub abs_log_f0_integral: f64,
    /// Whether the discarded tails are covered by envelope bounds; with
    /// `kappa = 0` the `log g` tail cannot be certified in general and the
    /// bound is heuristic.
    pub tail_certified: bool,
}

fn truth_tail_constants(theta0: &MixtureParams) -> Result<(f64, f64, f64)> {
    let beta = theta0.components()[0].family.envelope().beta;
    for c in theta0.components() {
        if c.family.envelope().beta != beta {
            return Err(Error::Precondition(
                "margin integrals need one shared tail exponent across the truth".into(),
            ));
        }
    }
    let v1 = theta0
        .components()
        .iter()
        .map(|c| c.family.envelope().v1)
        .fold(f64::NEG_INFINITY, f64::max);
    let u0 = sup_density(theta0);
    let mu_bar = theta0
        .components()
        .iter()
        .map(|c| c.mu.abs())
        .fold(0.0, f64::max);
    let weighted: f64 = theta0
        .components()
        .iter()
        .map(|c| c.alpha * c.scale.value().powf(beta - 1.0))
        .sum();
    let u1 = (u0 * (2.0 * mu_bar).powf(beta)).max(2.0f64.powf(beta) * v1 * weighted);
    Ok((beta, u1, mu_bar))
}

/// `int_r^inf u1·x^-beta·(|log u1| + beta·log x) dx`, one tail of the
/// `f0·|log f0|` envelope integral; valid once `u1·r^-beta <= 1/e`.
fn log_tail_integral(u1: f64, beta: f64, r: f64) -> f64 {
    let bm1 = beta - 1.0;
    let r1 = r.powf(-bm1);
    u1 * (u1.ln().abs() * r1 / bm1 + beta * (r1 * r.ln() / bm1 + r1 / (bm1 * bm1)))
}

/// `ln(e^a + e^b)` without leaving log space.
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

struct MarginWindow {
    r: f64,
    f0_tail_mass: f64,
    f0_log_tail: f64,
}

fn margin_window(theta0: &MixtureParams, tol: f64) -> Result<MarginWindow> {
    let (beta, u1, mu_bar) = truth_tail_constants(theta0)?;
    let mut r = theta0.certified_window(tol).max(2.0 * mu_bar + 1.0);
    // Push the window until both the mass and the log-weighted tails drop
    // below tolerance and the envelope is below 1/e.
    for _ in 0..400 {
        let mass = theta0.tail_mass_bound(r);
        let env_small = u1 * r.powf(-beta) <= (1.0f64 / std::f64::consts::E);
        let log_tail = 2.0 * log_tail_integral(u1, beta, r);
        if env_small && mass <= tol && log_tail <= tol {
            return Ok(MarginWindow {
                r,
                f0_tail_mass: mass,
                f0_log_tail: log_tail,
            });
        }
        r *= 1.25;
    }
    Err(Error::Precondition(
        "could not certify a truncation window for the margin integral".into(),
    ))
}

/// `E0[log f0] - E0[log(g + kappa)]` by quadrature against the true density
/// on an envelope-certified window.
///
/// `g` is a (possibly sub-probability) mixture; use
/// [`MixtureParams::select`] to pass a sub-mixture of an existing vector.
/// With `kappa = 0` the integrand must stay finite on the window, otherwise
/// the computation fails asking for a positive `kappa`.
pub fn kl_margin(theta0: &MixtureParams, g: &MixtureParams, kappa: f64) -> Result<MarginResult> {
    if theta0.is_sub_probability() {
        return Err(Error::InvalidParameter(
            "the truth must be a full mixture".into(),
        ));
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa must be nonnegative, got {kappa}"
        )));
    }
    let tol = 1e-9;
    let window = margin_window(theta0, tol)?;
    let r = window.r.max(g.certified_window(tol));

    let mut cuts = theta0.support_breakpoints();
    cuts.extend(g.support_breakpoints());
    octave_breakpoints(&mut cuts, r);

    let ln_kappa = if kappa > 0.0 {
        kappa.ln()
    } else {
        f64::NEG_INFINITY
    };
    let saw_infinite = std::cell::Cell::new(false);
    let integrand = |x: f64| {
        let lf0 = theta0.log_density(x);
        if lf0 == f64::NEG_INFINITY {
            return 0.0;
        }
        let lg = log_add_exp(g.log_density(x), ln_kappa);
        if lg == f64::NEG_INFINITY {
            saw_infinite.set(true);
            return 0.0;
        }
        (lf0 - lg) * lf0.exp()
    };
    let body = quad::integrate(integrand, -r, r, 1e-8, &cuts);
    if saw_infinite.get() || !body.value.is_finite() {
        return Err(Error::KappaRequired);
    }

    // Tail of the margin integrand: the f0·log f0 part is covered by the
    // envelope log-tail; the log(g+kappa) part by |log| bounds against the
    // tail mass. With kappa = 0 the latter uses the boundary values of
    // log g, which is heuristic.
    let g_log_bound = if kappa > 0.0 {
        kappa
            .ln()
            .abs()
            .max((g.sup_density_bound() + kappa).ln().abs())
    } else {
        let lo = g.log_density(-r).abs();
        let hi = g.log_density(r).abs();
        lo.max(hi).min(f64::MAX)
    };
    let tail_bound = window.f0_log_tail + g_log_bound * window.f0_tail_mass;
    let tail_certified = kappa > 0.0;

    // E0[log f0] and the integrability check share the window and cuts.
    let e0_log_f0_body = quad::integrate(
        |x: f64| {
            let lf0 = theta0.log_density(x);
            if lf0 == f64::NEG_INFINITY {
                0.0
            } else {
                lf0 * lf0.exp()
            }
        },
        -r,
        r,
        1e-8,
        &cuts,
    );
    let abs_log_body = quad::integrate(
        |x: f64| {
            let lf0 = theta0.log_density(x);
            if lf0 == f64::NEG_INFINITY {
                0.0
            } else {
                lf0.abs() * lf0.exp()
            }
        },
        -r,
        r,
        1e-8,
        &cuts,
    );

    let margin = body.value;
    Ok(MarginResult {
        margin,
        error_bound: body.error_bound + tail_bound,
        e0_log_f0: e0_log_f0_body.value,
        e0_log_g_kappa: e0_log_f0_body.value - margin,
        abs_log_f0_integral: abs_log_body.value + window.f0_log_tail,
        tail_certified,
    })
}

/// Deterministic grid of reduced-candidate parameters for [`margin_scan`].
#[derive(Debug, Clone)]
pub struct CandidateGrid {
    /// Number of components per candidate (the reduced order).
    pub components: usize,
    pub family: ComponentFamily,
    /// Weight levels in (0, 1].
    pub weight_levels: usize,
    pub location_levels: usize,
    pub location_range: (f64, f64),
    /// Geometric scale ladder endpoints.
    pub scale_levels: usize,
    pub scale_range: (f64, f64),
    /// Extra scales appended to the ladder (near-degenerate and near-flat
    /// extremes).
    pub extreme_scales: Vec<f64>,
    /// Relative jitter applied to grid nodes, seeded; zero disables it.
    pub jitter: f64,
}

impl CandidateGrid {
    /// Single-component candidates over a data range; the default shape for
    /// scanning reduced mixtures of order one.
    pub fn single(
        family: ComponentFamily,
        location_range: (f64, f64),
        scale_range: (f64, f64),
    ) -> Self {
        CandidateGrid {
            components: 1,
            family,
            weight_levels: 8,
            location_levels: 25,
            location_range,
            scale_levels: 23,
            scale_range,
            extreme_scales: vec![1e-4, 1e3],
            jitter: 0.0,
        }
    }

    fn scales(&self) -> Vec<f64> {
        let (lo, hi) = self.scale_range;
        let mut out = Vec::with_capacity(self.scale_levels + self.extreme_scales.len());
        for i in 0..self.scale_levels {
            let t = if self.scale_levels == 1 {
                0.5
            } else {
                i as f64 / (self.scale_levels - 1) as f64
            };
            out.push(lo * (hi / lo).powf(t));
        }
        out.extend_from_slice(&self.extreme_scales);
        out
    }

    fn weights(&self) -> Vec<f64> {
        (1..=self.weight_levels)
            .map(|i| i as f64 / self.weight_levels as f64)
            .collect()
    }

    fn locations(&self) -> Vec<f64> {
        let (lo, hi) = self.location_range;
        (0..self.location_levels)
            .map(|i| {
                if self.location_levels == 1 {
                    0.5 * (lo + hi)
                } else {
                    lo + (hi - lo) * i as f64 / (self.location_levels - 1) as f64
                }
            })
            .collect()
    }

    /// Materialize the candidate list, deterministically given the seed.
    pub fn candidates(&self, seed: u64) -> Result<Vec<MixtureParams>> {
        if self.components == 0 {
            return Err(Error::InvalidParameter(
                "candidates need at least one component".into(),
            ));
        }
        let weights = self.weights();
        let locations = self.locations();
        let scales = self.scales();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jitter = |span: f64, rng: &mut ChaCha8Rng| -> f64 {
            if self.jitter > 0.0 {
                use rand::Rng;
                (rng.random::<f64>() - 0.5) * self.jitter * span
            } else {
                0.0
            }
        };
        let mut out = Vec::new();
        if self.components == 1 {
            let loc_span = (self.location_range.1 - self.location_range.0)
                / self.location_levels.max(1) as f64;
            for &w in &weights {
                for &mu in &locations {
                    for &sigma in &scales {
                        let mu = mu + jitter(loc_span, &mut rng);
                        let sigma = sigma * (1.0 + jitter(0.5, &mut rng));
                        out.push(MixtureParams::sub_mixture(vec![MixtureComponent::new(
                            w,
                            self.family.clone(),
                            mu,
                            sigma,
                        )?])?);
                    }
                }
            }
        } else {
            // Multi-component candidates: low-discrepancy fill over the box,
            // weights scaled onto the sub-probability simplex.
            let count = weights.len() * locations.len() * scales.len();
            let dim = 3 * self.components;
            for idx in 0..count {
                let u = crate::lowdisc::halton_point(idx as u64 + 1, dim);
                let mut comps = Vec::with_capacity(self.components);
                let mut raw_weights: Vec<f64> =
                    u[..self.components].iter().map(|&x| x.max(1e-6)).collect();
                let total: f64 = raw_weights.iter().sum();
                let target = u[0].max(0.05); // total candidate mass in (0, 1]
                for w in &mut raw_weights {
                    *w = *w / total * target;
                }
                for k in 0..self.components {
                    let mu = self.location_range.0
                        + (self.location_range.1 - self.location_range.0) * u[self.components + k];
                    let (slo, shi) = self.scale_range;
                    let sigma = slo * (shi / slo).powf(u[2 * self.components + k]);
                    comps.push(MixtureComponent::new(
                        raw_weights[k],
                        self.family.clone(),
                        mu,
                        sigma,
                    )?);
                }
                out.push(MixtureParams::sub_mixture(comps)?);
            }
        }
        Ok(out)
    }
}

/// One scanned candidate.
#[derive(Debug, Clone)]
pub struct MarginScanRow {
    pub index: usize,
    pub candidate: MixtureParams,
    pub margin: f64,
}

/// Result of a margin scan: an empirical lower bound for the separation
/// constant at the given `kappa`, over a finite candidate family. Evidence,
/// not proof.
#[derive(Debug, Clone)]
pub struct MarginScan {
    pub count: usize,
    pub min_margin: f64,
    pub argmin_index: usize,
    pub argmin: MixtureParams,
    pub rows: Vec<MarginScanRow>,
}

/// Scan `kl_margin` over the candidate grid; the minimum is reported with
/// the first attaining candidate.
pub fn margin_scan(
    theta0: &MixtureParams,
    kappa: f64,
    grid: &CandidateGrid,
    seed: u64,
) -> Result<MarginScan> {
    let tol = 1e-9;
    let window = margin_window(theta0, tol)?;
    let f0_cuts = theta0.support_breakpoints();
    let candidates = grid.candidates(seed)?;
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("candidate grid is empty".into()));
    }

    let ln_kappa = if kappa > 0.0 {
        kappa.ln()
    } else {
        f64::NEG_INFINITY
    };
    let mut rows = Vec::with_capacity(candidates.len());
    let mut min_margin = f64::INFINITY;
    let mut argmin_index = 0usize;
    for (index, g) in candidates.iter().enumerate() {
        let r = window.r.max(g.certified_window(tol));
        let mut cuts = f0_cuts.clone();
        cuts.extend(g.support_breakpoints());
        octave_breakpoints(&mut cuts, r);
        let integrand = |x: f64| {
            let lf0 = theta0.log_density(x);
            if lf0 == f64::NEG_INFINITY {
                return 0.0;
            }
            (lf0 - log_add_exp(g.log_density(x), ln_kappa)) * lf0.exp()
        };
        let body = quad::integrate(integrand, -r, r, 1e-8, &cuts);
        let margin = body.value;
        if !margin.is_finite() {
            return Err(Error::KappaRequired);
        }
        if margin < min_margin {
            min_margin = margin;
            argmin_index = index;
        }
        rows.push(MarginScanRow {
            index,
            candidate: g.clone(),
            margin,
        });
    }

    Ok(MarginScan {
        count: rows.len(),
        min_margin,
        argmin_index,
        argmin: candidates[argmin_index].clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{ComponentFamily, Envelope};
    use crate::mixture::{MixtureComponent, MixtureParams};

    fn normal() -> ComponentFamily {
        ComponentFamily::normal(2.0).unwrap()
    }

    fn std_normal_theta() -> MixtureParams {
        MixtureParams::mixture(vec![MixtureComponent::new(1.0, normal(), 0.0, 1.0).unwrap()])
            .unwrap()
    }

    fn two_normal_truth() -> MixtureParams {
        MixtureParams::mixture(vec![
            MixtureComponent::new(0.5, normal(), 0.0, 1.0).unwrap(),
            MixtureComponent::new(0.5, normal(), 4.0, 1.5).unwrap(),
        ])
        .unwrap()
    }

    fn unit_envelope_family() -> ComponentFamily {
        // Box density with the loose explicit envelope (v0, v1, beta) = (1, 1, 2).
        ComponentFamily::custom_with_envelope(
            "unit-box",
            |z| if (-0.5..0.5).contains(&z) { 1.0 } else { 0.0 },
            Envelope::new(1.0, 1.0, 2.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn derive_context_closed_form_constants() {
        let spec = ContextSpec {
            kappa0: 1.0,
            c0: 0.4,
            a0: 1.0,
            zeta: 1.0,
            lambda0: None,
        };
        let (ctx, _) = derive_context(&spec, &[unit_envelope_family()], None).unwrap();
        assert_eq!(ctx.beta_tilde, 0.5);
        assert!((ctx.v2 - 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(ctx.b, 1.0);
        assert_eq!(ctx.m, 1);
    }

    #[test]
    fn derive_context_rejects_violated_precondition() {
        let spec = ContextSpec {
            kappa0: 1.0,
            c0: 1.0,
            a0: 1.0,
            zeta: 1.0,
            lambda0: None,
        };
        let err = derive_context(&spec, &[unit_envelope_family()], None);
        match err {
            Err(Error::Precondition(msg)) => assert!(msg.contains("c0 < v0/(kappa0")),
            other => panic!("expected precondition rejection, got {other:?}"),
        }
    }

    #[test]
    fn derive_context_truth_constants_match_formula() {
        let spec = ContextSpec {
            kappa0: 0.1,
            c0: 0.05,
            a0: 10.0,
            zeta: 1.0,
            lambda0: Some(0.5),
        };
        let theta0 = std_normal_theta();
        let (ctx, report) = derive_context(&spec, &[normal()], Some(&theta0)).unwrap();
        let truth = ctx.truth.unwrap();
        assert!((truth.u0 - 0.398_942_3).abs() < 1e-6);
        // mu_bar = 0, so u1 = 2^beta·v1·sigma^(beta-1) = 4·v1.
        let v1 = normal().envelope().v1;
        assert!((truth.u1 - 4.0 * v1).abs() < 1e-12);
        assert!((truth.u1 - 1.174).abs() < 1e-3);
        assert!(!report.checks.is_empty());
    }

    #[test]
    fn nu_xi_closed_forms_and_identity() {
        let spec = ContextSpec {
            kappa0: 1.0,
            c0: 0.4,
            a0: 1.0,
            zeta: 1.0,
            lambda0: None,
        };
        let (ctx, _) = derive_context(&spec, &[unit_envelope_family()], None).unwrap();
        // v1 = kappa0 = 1, beta = 2: nu(y) = sqrt(y).
        assert!((ctx.nu(0.25) - 0.5).abs() < 1e-15);
        // v2 = 2·sqrt(2), beta_tilde = 1/2: xi(4) = sqrt(2).
        assert!((ctx.xi(4.0) - 2.0f64.sqrt()).abs() < 1e-15);
        // v1·nu(y)^-beta = kappa0/y on a log grid.
        for i in -6..=6 {
            let y = 10.0f64.powi(i);
            let lhs = ctx.v1 * ctx.nu(y).powf(-ctx.beta);
            let rhs = ctx.kappa0 / y;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
        // xi(h)·h^beta_tilde = v2.
        for i in 0..8 {
            let h = 2.0f64.powi(i) * 3.0;
            assert!((ctx.xi(h) * h.powf(ctx.beta_tilde) - ctx.v2).abs() < 1e-12 * ctx.v2);
        }
    }

    #[test]
    fn monotonicity_of_derived_maps() {
        let spec = ContextSpec {
            kappa0: 0.1,
            c0: 0.05,
            a0: 1.0,
            zeta: 1.0,
            lambda0: None,
        };
        let (ctx, _) = derive_context(&spec, &[normal()], None).unwrap();
        let mut prev_nu = 0.0;
        let mut prev_xi = f64::INFINITY;
        for i in 1..40 {
            let y = 0.01 * i as f64;
            let nu = ctx.nu(y);
            let xi = ctx.xi(y);
            assert!(nu > prev_nu);
            assert!(xi < prev_xi);
            prev_nu = nu;
            prev_xi = xi;
        }
        let mut prev_a = 0.0;
        let mut prev_floor = f64::INFINITY;
        for n in [1usize, 4, 16, 64, 256] {
            let a = ctx.extreme_radius(n);
            assert!(a > prev_a);
            prev_a = a;
            let f = ctx.log_floor_prime(n);
            assert!(f < prev_floor);
            prev_floor = f;
        }
    }

    fn small_scale_context() -> BoundContext {
        // Matches the worked single-spike example: v0 ~ 0.3989, v1 ~ 0.2935,
        // beta = 2, kappa0 = 0.1, c0 = 0.05.
        let spec = ContextSpec {
            kappa0: 0.1,
            c0: 0.05,
            a0: 1.0,
            zeta: 1.0,
            lambda0: None,
        };
        derive_context(&spec, &[normal()], None).unwrap().0
    }

    #[test]
    fn single_spike_step_envelope() {
        let ctx = small_scale_context();
        let mu = 1.3;
        let sigma = 0.01;
        let theta = MixtureParams::mixture(vec![
            MixtureComponent::new(1.0, normal(), mu, sigma).unwrap()
        ])
        .unwrap();
        let envelope = step_envelope(&theta, &ctx, None);
        assert_eq!(envelope.piece_count(), 1);
        let p = envelope.pieces[0];
        let radius = ctx.nu(sigma);
        assert!((radius - (ctx.v1 / ctx.kappa0).sqrt() * 0.1).abs() < 1e-12);
        assert!((radius - 0.1713).abs() < 5e-4);
        assert!((p.lo - (mu - radius)).abs() < 1e-12);
        assert!((p.hi - (mu + radius)).abs() < 1e-12);
        let expected_height = ctx.v0 / sigma + ctx.kappa0;
        assert!((p.height - expected_height).abs() < 1e-9);
        assert!((expected_height - 40.0).abs() < 0.01);
    }

    #[test]
    fn overlapping_spikes_split_into_three_pieces() {
        let ctx = small_scale_context();
        let sigma = 0.01;
        let r = ctx.nu(sigma);
        let mu1 = 0.0;
        let mu2 = mu1 + r;
        let theta = MixtureParams::mixture(vec![
            MixtureComponent::new(0.5, normal(), mu1, sigma).unwrap(),
            MixtureComponent::new(0.5, normal(), mu2, sigma).unwrap(),
        ])
        .unwrap();
        let envelope = step_envelope(&theta, &ctx, None);
        assert_eq!(envelope.piece_count(), 3);
        let single = ctx.v0 / sigma + ctx.kappa0;
        let double = 2.0 * ctx.v0 / sigma + ctx.kappa0;
        let heights: Vec<f64> = envelope.pieces.iter().map(|p| p.height).collect();
        assert!((heights[0] - single).abs() < 1e-9);
        assert!((heights[1] - double).abs() < 1e-9);
        assert!((heights[2] - single).abs() < 1e-9);

        // Brute-force oracle: height at sampled points equals the sum of
        // interval indicators.
        for p in &envelope.pieces {
            for t in 1..5 {
                let x = p.lo + p.width() * t as f64 / 5.0;
                let mut oracle = ctx.kappa0;
                for c in theta.components() {
                    let rr = ctx.nu(c.scale.value());
                    if c.mu - rr <= x && x < c.mu + rr {
                        oracle += ctx.v0 / c.scale.value();
                    }
                }
                assert!((oracle - p.height).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn no_small_scales_means_empty_envelope() {
        let ctx = small_scale_context();
        let theta = two_normal_truth();
        let envelope = step_envelope(&theta, &ctx, None);
        assert_eq!(envelope.piece_count(), 0);
        let report = verify_step_bound(&theta, &ctx, 1001);
        assert!(report.mixture_bound.holds);
        assert!(report.width_bound.holds);
        assert!(report.piece_count_ok);
    }

    #[test]
    fn heights_constant_across_each_piece() {
        let ctx = small_scale_context();
        let theta = MixtureParams::mixture(vec![
            MixtureComponent::new(0.4, normal(), 0.0, 0.008).unwrap(),
            MixtureComponent::new(0.3, normal(), 0.1, 0.02).unwrap(),
            MixtureComponent::new(0.3, normal(), -0.05, 0.045).unwrap(),
        ])
        .unwrap();
        let envelope = step_envelope(&theta, &ctx, None);
        for p in &envelope.pieces {
            for t in 1..=5 {
                let x = p.lo + p.width() * t as f64 / 6.0;
                let mut h = ctx.kappa0;
                for c in theta.components() {
                    if c.scale.value() <= ctx.c0 {
                        let r = ctx.nu(c.scale.value());
                        if c.mu - r <= x && x < c.mu + r {
                            h += ctx.v0 / c.scale.value();
                        }
                    }
                }
                assert!((h - p.height).abs() < 1e-9, "height varies inside a piece");
            }
        }
    }

    #[test]
    fn step_bound_verification_passes_for_spike() {
        let ctx = small_scale_context();
        let theta = MixtureParams::mixture(vec![
            MixtureComponent::new(1.0, normal(), 1.3, 0.01).unwrap()
        ])
        .unwrap();
        let report = verify_step_bound(&theta, &ctx, 10_001);
        assert!(report.all_hold(), "margins: {report:?}");
    }

    #[test]
    fn step_bound_randomized_parameters_hold() {
        let ctx_spec = ContextSpec {
            kappa0: 0.1,
            c0: 0.05,
            a0: 1.0,
            zeta: 1.0,
            lambda0: None,
        };
        let families = vec![normal(), normal(), normal(), normal()];
        let (ctx, _) = derive_context(&ctx_spec, &families, None).unwrap();
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..25 {
            let mut comps = Vec::new();
            let mut weights = [0.0; 4];
            let mut total = 0.0;
            for w in &mut weights {
                *w = rng.random::<f64>() + 0.01;
                total += *w;
            }
            for w in &mut weights {
                *w /= total;
            }
            for &w in &weights {
                let mu = rng.random::<f64>() * 4.0 - 2.0;
                let sigma = 10f64.powf(rng.random::<f64>() * 3.0 - 4.0); // 1e-4..0.1
                comps.push(MixtureComponent::new(w, normal(), mu, sigma).unwrap());
            }
            let theta = MixtureParams::mixture(comps).unwrap();
            let report = verify_step_bound(&theta, &ctx, 801);
            assert!(report.all_hold(), "violation for {theta:?}");
            assert!(report.piece_count <= 8);
        }
    }

    #[test]
    fn tall_pieces_classified_against_threshold() {
        let ctx = small_scale_context();
        let theta = MixtureParams::mixture(vec![
            MixtureComponent::new(0.5, normal(), 0.0, 1e-9).unwrap(),
            MixtureComponent::new(0.5, normal(), 2.0, 0.04).unwrap(),
        ])
        .unwrap();
        let envelope = step_envelope(&theta, &ctx, Some(16));
        let classes = envelope.classes.clone().unwrap();
        assert_eq!(classes.len(), envelope.piece_count());
        // c'_16 = c0·exp(-2), threshold = 2·v0/c'_16 ~ 117.9; the 1e-9 spike
        // towers over it, the 0.04 component stays below.
        let threshold = ctx.log_height_threshold(16).exp();
        for (p, class) in envelope.pieces.iter().zip(&classes) {
            if p.height > threshold {
                assert_eq!(*class, PieceClass::Tall);
            } else {
                assert_eq!(*class, PieceClass::Moderate);
            }
        }
        assert!(classes.contains(&PieceClass::Tall));
        assert!(classes.contains(&PieceClass::Moderate));
    }

    #[test]
    fn true_tail_bound_holds_for_normals() {
        let spec = ContextSpec {
            kappa0: 0.1,
            c0: 0.05,
            a0: 10.0,
            zeta: 1.0,
            lambda0: None,
        };
        let theta0 = std_normal_theta();
        let (ctx, _) = derive_context(&spec, &[normal()], Some(&theta0)).unwrap();
        let check = verify_true_tail(&theta0, &ctx, 30.0, 20_001).unwrap();
        assert!(
            check.holds,
            "worst {} at {}",
            check.worst_margin, check.worst_at
        );

        let mixed = MixtureParams::mixture(vec![
            MixtureComponent::new(0.5, normal(), -1.0, 1.0).unwrap(),
            MixtureComponent::new(0.5, normal(), 1.0, 2.0).unwrap(),
        ])
        .unwrap();
        let (ctx2, _) = derive_context(&spec, &[normal(), normal()], Some(&mixed)).unwrap();
        let check2 = verify_true_tail(&mixed, &ctx2, 30.0, 20_001).unwrap();
        assert!(
            check2.holds,
            "worst {} at {}",
            check2.worst_margin, check2.worst_at
        );
    }

    #[test]
    fn undersized_u1_breaks_tail_bound_beyond_two_mu_bar() {
        let spec = ContextSpec {
            kappa0: 0.1,
            c0: 0.05,
            a0: 10.0,
            zeta: 1.0,
            lambda0: None,
        };
        let theta0 = MixtureParams::mixture(vec![
            MixtureComponent::new(0.5, normal(), -1.0, 1.0).unwrap(),
            MixtureComponent::new(0.5, normal(), 1.0, 2.0).unwrap(),
        ])
        .unwrap();
        let (mut ctx, _) = derive_context(&spec, &[normal(), normal()], Some(&theta0)).unwrap();
        let mut truth = ctx.truth.unwrap();
        // Oracle: the smallest valid tail coefficient is the supremum of
        // f0(x)·x^2 past 2·mu_bar; anything below it must be violated there.
        let mut u1_min = 0.0f64;
        for i in 0..40_000 {
            let x = 2.0 * truth.mu_bar + i as f64 * 1e-3;
            u1_min = u1_min.max(theta0.density(x) * x * x);
            let xm = -x;
            u1_min = u1_min.max(theta0.density(xm) * xm * xm);
        }
        assert!(truth.u1 >= u1_min, "derived u1 below the oracle minimum");
        truth.u1 = u1_min * 0.9;
        ctx.truth = Some(truth);
        let check = verify_true_tail(&theta0, &ctx, 30.0, 40_001).unwrap();
        assert!(!check.holds);
        // The sweep must see a violation past 2·mu_bar, where the undersized
        // coefficient sits below the oracle supremum of f0(x)·x^2.
        let mut tail_violation = false;
        for i in 0..40_000 {
            for sign in [-1.0, 1.0] {
                let x = sign * (2.0 * truth.mu_bar + i as f64 * 1e-3);
                let bound = truth.u0.min(truth.u1 * x.abs().powf(-ctx.beta));
                if theta0.density(x) > bound {
                    tail_violation = true;
                }
            }
        }
        assert!(tail_violation);
    }

    #[test]
    fn extreme_radius_closed_form() {
        let spec = ContextSpec {
            kappa0: 0.02,
            c0: 0.05,
            a0: 1.0,
            zeta: 1.0,
            lambda0: None,
        };
        let fam = ComponentFamily::normal(4.0).unwrap();
        let (ctx, _) = derive_context(&spec, &[fam], None).unwrap();
        assert_eq!(ctx.extreme_radius(1), 1.0);
        assert!((ctx.extreme_radius(16) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn okamoto_exact_matches_rational_oracle() {
        // P(X >= 8) for X ~ Bin(10, 1/2) is (45 + 10 + 1)/1024.
        let r = okamoto_bound(10, 0.5, 0.2).unwrap();
        assert!((r.exact_tail - 56.0 / 1024.0).abs() < 1e-12);
        assert!((r.bound - (-0.8f64).exp()).abs() < 1e-15);
        assert!(r.exact_tail <= r.bound);
    }

    #[test]
    fn okamoto_impossible_event_is_zero() {
        let r = okamoto_bound(50, 0.7, 0.3).unwrap();
        assert_eq!(r.exact_tail, 0.0);
        let r2 = okamoto_bound(1, 0.0, 0.5).unwrap();
        assert_eq!(r2.exact_tail, 0.0);
    }

    #[test]
    fn okamoto_exact_below_bound_on_sweep() {
        for n in [1usize, 3, 10, 37, 100] {
            for ip in 0..=10 {
                let p = ip as f64 / 10.0;
                for ie in 1..=10 {
                    let eps = ie as f64 * 0.05;
                    let r = okamoto_bound(n, p, eps).unwrap();
                    assert!(
                        r.exact_tail <= r.bound + 1e-12,
                        "n={n} p={p} eps={eps}: {} > {}",
                        r.exact_tail,
                        r.bound
                    );
                }
            }
        }
    }

    #[test]
    fn margin_of_truth_against_itself_is_zero() {
        let theta0 = two_normal_truth();
        let g = theta0
            .select(&crate::mixture::SubMixtureSelector::new(vec![0, 1]).unwrap())
            .unwrap();
        let r = kl_margin(&theta0, &g, 0.0).unwrap();
        assert!(r.margin.abs() < 1e-8, "margin = {}", r.margin);
    }

    #[test]
    fn empty_candidate_with_unit_kappa_gives_normal_entropy_term() {
        let theta0 = std_normal_theta();
        let g = MixtureParams::sub_mixture(vec![
            MixtureComponent::new(0.0, normal(), 0.0, 1.0).unwrap()
        ])
        .unwrap();
        let r = kl_margin(&theta0, &g, 1.0).unwrap();
        let expected = -(1.0 + (2.0 * std::f64::consts::PI).ln()) / 2.0;
        assert!(
            (r.margin - expected).abs() < 1e-6,
            "margin = {}, expected {expected}",
            r.margin
        );
        assert!((expected + 1.418_938_5).abs() < 1e-6);
        assert!(r.tail_certified);
        assert!(r.abs_log_f0_integral.is_finite());
    }

    #[test]
    fn moment_matched_single_normal_margins_match_oracle() {
        let theta0 = two_normal_truth();
        // Moment matching: mean 2, var = 0.5(1) + 0.5(2.25) + 4 = 5.625.
        let g = MixtureParams::sub_mixture(vec![MixtureComponent::new(
            1.0,
            normal(),
            2.0,
            5.625f64.sqrt(),
        )
        .unwrap()])
        .unwrap();
        // Frozen from a 2^22-panel Simpson oracle on [-60, 80], confirmed by
        // 2e7-sample Monte Carlo. The margin stays positive only for small
        // kappa (here up to about 0.0097): adding kappa inside the log lifts
        // E0[log(g+kappa)] until it crosses E0[log f0].
        let cases = [
            (0.0, 0.107_058_0),
            (0.005, 0.050_929_16),
            (0.01, -0.000_318_168),
            (0.05, -0.320_885_6),
        ];
        for (kappa, oracle) in cases {
            let r = kl_margin(&theta0, &g, kappa).unwrap();
            assert!(
                (r.margin - oracle).abs() < 1e-6,
                "kappa={kappa}: margin {} vs oracle {oracle}",
                r.margin
            );
        }
    }

    #[test]
    fn margin_nonincreasing_in_kappa() {
        let theta0 = two_normal_truth();
        let g = MixtureParams::sub_mixture(vec![
            MixtureComponent::new(0.8, normal(), 1.0, 2.0).unwrap()
        ])
        .unwrap();
        let mut prev = f64::INFINITY;
        for kappa in [0.001, 0.01, 0.1, 1.0, 10.0] {
            let r = kl_margin(&theta0, &g, kappa).unwrap();
            assert!(r.margin <= prev + 1e-10);
            prev = r.margin;
        }
    }

    #[test]
    fn vanishing_candidate_without_kappa_is_rejected() {
        let theta0 = std_normal_theta();
        let g = MixtureParams::sub_mixture(vec![MixtureComponent::new(
            0.5,
            ComponentFamily::uniform(2.0).unwrap(),
            0.0,
            1.0,
        )
        .unwrap()])
        .unwrap();
        assert!(matches!(
            kl_margin(&theta0, &g, 0.0),
            Err(Error::KappaRequired)
        ));
    }

    #[test]
    fn singleton_scan_equals_direct_margin() {
        let theta0 = two_normal_truth();
        let grid = CandidateGrid {
            components: 1,
            family: normal(),
            weight_levels: 1,
            location_levels: 1,
            location_range: (0.0, 0.0),
            scale_levels: 1,
            scale_range: (1.0, 1.0),
            extreme_scales: vec![],
            jitter: 0.0,
        };
        let scan = margin_scan(&theta0, 0.05, &grid, 0).unwrap();
        assert_eq!(scan.count, 1);
        let g = MixtureParams::sub_mixture(vec![
            MixtureComponent::new(1.0, normal(), 0.0, 1.0).unwrap()
        ])
        .unwrap();
        let direct = kl_margin(&theta0, &g, 0.05).unwrap();
        assert!((scan.min_margin - direct.margin).abs() < 1e-9);
    }

    #[test]
    fn huge_kappa_turns_margins_negative() {
        let theta0 = two_normal_truth();
        let mut grid = CandidateGrid::single(normal(), (-1.0, 5.0), (0.3, 10.0));
        grid.weight_levels = 2;
        grid.location_levels = 3;
        grid.scale_levels = 3;
        let scan = margin_scan(&theta0, 10.0, &grid, 7).unwrap();
        assert!(scan.min_margin < 0.0, "min margin = {}", scan.min_margin);
    }

    #[test]
    fn margin_scan_is_deterministic() {
        let theta0 = two_normal_truth();
        let mut grid = CandidateGrid::single(normal(), (-1.0, 5.0), (0.3, 10.0));
        grid.weight_levels = 2;
        grid.location_levels = 4;
        grid.scale_levels = 3;
        grid.jitter = 0.1;
        let a = margin_scan(&theta0, 0.05, &grid, 11).unwrap();
        let b = margin_scan(&theta0, 0.05, &grid, 11).unwrap();
        assert_eq!(a.min_margin, b.min_margin);
        assert_eq!(a.argmin_index, b.argmin_index);
    }
}
