//! Finite mixtures of location-scale components: densities, likelihood,
//! sub-mixtures, and the two distances used to talk about consistency
//! (L1 distance between densities, Euclidean distance to a set of parameter
//! representatives).

use crate::error::{Error, Result};
use crate::family::ComponentFamily;
use crate::lowdisc::ball_points;
use crate::quad::{self, Integral};

/// Weight-sum tolerance for full mixtures; inputs within this tolerance are
/// renormalized, anything farther off is rejected.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Positive scale parameter carrying both its value and its exact logarithm.
///
/// Scale floors of the form `c0·exp(-n^d)` underflow `f64` long before the
/// log does, so the log is the authoritative representation: densities are
/// evaluated from it and `value()` may round to zero for extreme floors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    value: f64,
    ln: f64,
}

impl Scale {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveScale(value));
        }
        Ok(Scale {
            value,
            ln: value.ln(),
        })
    }

    /// Scale from its logarithm; the value may underflow to zero.
    pub fn from_ln(ln: f64) -> Self {
        assert!(ln.is_finite(), "log-scale must be finite");
        Scale {
            value: ln.exp(),
            ln,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn ln(&self) -> f64 {
        self.ln
    }
}

/// One weighted location-scale component.
#[derive(Debug, Clone)]
pub struct MixtureComponent {
    pub alpha: f64,
    pub family: ComponentFamily,
    pub mu: f64,
    pub scale: Scale,
}

impl MixtureComponent {
    pub fn new(alpha: f64, family: ComponentFamily, mu: f64, sigma: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "weight must be nonnegative, got {alpha}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "location must be finite, got {mu}"
            )));
        }
        Ok(MixtureComponent {
            alpha,
            family,
            mu,
            scale: Scale::new(sigma)?,
        })
    }

    /// `ln f(x; mu, sigma)`, evaluated through the log-scale so extreme
    /// scales behave correctly.
    pub fn log_density(&self, x: f64) -> f64 {
        let d = x - self.mu;
        let z = if self.scale.value() > 0.0 {
            d / self.scale.value()
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY * d.signum()
        };
        self.family.log_standardized_density(z) - self.scale.ln()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }
}

/// Parameter vector of a finite mixture. Full mixtures have weights summing
/// to one; sub-probability vectors (weight sum <= 1) are flagged.
#[derive(Debug, Clone)]
pub struct MixtureParams {
    components: Vec<MixtureComponent>,
    sub_probability: bool,
}

impl MixtureParams {
    /// Full mixture; the weight sum must be within [`WEIGHT_TOL`] of one and
    /// is renormalized exactly onto the simplex.
    pub fn mixture(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "mixture needs at least one component".into(),
            ));
        }
        let sum: f64 = components.iter().map(|c| c.alpha).sum();
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::WeightsNotNormalized { sum });
        }
        let mut components = components;
        for c in &mut components {
            c.alpha /= sum;
        }
        Ok(MixtureParams {
            components,
            sub_probability: false,
        })
    }

    /// Sub-probability vector: weights sum to at most one.
    pub fn sub_mixture(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "sub-mixture needs at least one component".into(),
            ));
        }
        let sum: f64 = components.iter().map(|c| c.alpha).sum();
        if sum > 1.0 + WEIGHT_TOL {
            return Err(Error::WeightsNotNormalized { sum });
        }
        Ok(MixtureParams {
            components,
            sub_probability: true,
        })
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn is_sub_probability(&self) -> bool {
        self.sub_probability
    }

    /// Mixture density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                if c.alpha > 0.0 {
                    c.alpha * c.density(x)
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// `ln f(x; theta)` via log-sum-exp with max subtraction.
    pub fn log_density(&self, x: f64) -> f64 {
        let mut terms = [0.0f64; 8];
        let mut heap;
        let logs: &mut [f64] = if self.components.len() <= 8 {
            &mut terms[..self.components.len()]
        } else {
            heap = vec![0.0; self.components.len()];
            &mut heap
        };
        let mut max = f64::NEG_INFINITY;
        for (slot, c) in logs.iter_mut().zip(&self.components) {
            *slot = if c.alpha > 0.0 {
                c.alpha.ln() + c.log_density(x)
            } else {
                f64::NEG_INFINITY
            };
            if *slot > max {
                max = *slot;
            }
        }
        if max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let sum: f64 = logs.iter().map(|&t| (t - max).exp()).sum();
        max + sum.ln()
    }

    /// Log likelihood of a data set; `-inf` when any point has zero density.
    pub fn log_likelihood(&self, data: &[f64]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::InvalidParameter("data must be nonempty".into()));
        }
        Ok(data.iter().map(|&x| self.log_density(x)).sum())
    }

    /// Density of the sub-mixture selected by `sel` (not renormalized).
    pub fn sub_density(&self, sel: &SubMixtureSelector, x: f64) -> Result<f64> {
        sel.validate(self.len())?;
        Ok(sel
            .indices()
            .iter()
            .map(|&k| {
                let c = &self.components[k];
                if c.alpha > 0.0 {
                    c.alpha * c.density(x)
                } else {
                    0.0
                }
            })
            .sum())
    }

    /// Extract the selected components as a sub-probability vector.
    pub fn select(&self, sel: &SubMixtureSelector) -> Result<MixtureParams> {
        sel.validate(self.len())?;
        let components = sel
            .indices()
            .iter()
            .map(|&k| self.components[k].clone())
            .collect();
        MixtureParams::sub_mixture(components)
    }

    /// Sampled supremum of the mixture density over the Euclidean ball of
    /// radius `rho` around this parameter vector, using a deterministic
    /// 128-point low-discrepancy cloud. Perturbed points are projected back
    /// to valid parameters: weights clipped onto the simplex, scales floored
    /// at 1e-12. The result always dominates the density at the center.
    pub fn local_sup_density(&self, rho: f64, x: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {rho}"
            )));
        }
        let m = self.len();
        let mut center = Vec::with_capacity(3 * m);
        center.extend(self.components.iter().map(|c| c.alpha));
        center.extend(self.components.iter().map(|c| c.mu));
        center.extend(self.components.iter().map(|c| c.scale.value()));

        let mut sup = self.density(x);
        for p in ball_points(&center, rho, 128) {
            let mut alphas: Vec<f64> = p[..m].iter().map(|a| a.max(0.0)).collect();
            let total: f64 = alphas.iter().sum();
            if total > 0.0 {
                for a in &mut alphas {
                    *a /= total;
                }
            } else {
                alphas = self.components.iter().map(|c| c.alpha).collect();
            }
            let mut value = 0.0;
            for k in 0..m {
                if alphas[k] == 0.0 {
                    continue;
                }
                let mu = p[m + k];
                let sigma = p[2 * m + k].max(1e-12);
                let z = (x - mu) / sigma;
                value += alphas[k] * self.components[k].family.standardized_density(z) / sigma;
            }
            if value > sup {
                sup = value;
            }
        }
        Ok(sup)
    }

    /// Upper bound on the mixture density anywhere: sum of `alpha·v0/sigma`.
    pub fn sup_density_bound(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.alpha * c.family.envelope().v0 * (-c.scale.ln()).exp())
            .sum()
    }

    /// Envelope bound on the mass outside `[-r, r]`.
    pub fn tail_mass_bound(&self, r: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                if c.alpha == 0.0 {
                    return 0.0;
                }
                let env = c.family.envelope();
                let t = (r - c.mu.abs()) / c.scale.value();
                if t <= 0.0 {
                    return c.alpha;
                }
                if let Some((zlo, zhi)) = c.family.standardized_support() {
                    if t >= zlo.abs().max(zhi.abs()) {
                        return 0.0;
                    }
                }
                c.alpha * (2.0 * env.v1 / (env.beta - 1.0) * t.powf(1.0 - env.beta)).min(1.0)
            })
            .sum()
    }

    /// Support endpoints of bounded-support components; quadrature splits
    /// there.
    pub fn support_breakpoints(&self) -> Vec<f64> {
        let mut cuts = Vec::new();
        for c in &self.components {
            if let Some((zlo, zhi)) = c.family.standardized_support() {
                cuts.push(c.mu + zlo * c.scale.value());
                cuts.push(c.mu + zhi * c.scale.value());
            }
        }
        cuts
    }

    /// Window `[-r, r]` outside which this mixture's mass is below `tol`,
    /// certified by the envelope tail bounds.
    pub fn certified_window(&self, tol: f64) -> f64 {
        let mut r = self
            .components
            .iter()
            .map(|c| c.mu.abs() + 8.0 * c.scale.value().min(1e12))
            .fold(1.0f64, f64::max);
        while self.tail_mass_bound(r) > tol && r < 1e12 {
            r *= 1.25;
        }
        r
    }
}

/// Subset of component indices defining a sub-mixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubMixtureSelector {
    indices: Vec<usize>,
}

impl SubMixtureSelector {
    /// Build from indices (0-based); they must be nonempty and duplicate-free.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSelector("empty index set".into()));
        }
        indices.sort_unstable();
        let before = indices.len();
        indices.dedup();
        if indices.len() != before {
            return Err(Error::InvalidSelector("duplicate indices".into()));
        }
        Ok(SubMixtureSelector { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    fn validate(&self, m: usize) -> Result<()> {
        match self.indices.last() {
            Some(&max) if max >= m => Err(Error::InvalidSelector(format!(
                "index {max} out of range for {m} components"
            ))),
            _ => Ok(()),
        }
    }
}

/// L1 distance between two full mixture densities, by adaptive quadrature on
/// an envelope-certified window; the discarded tail mass enters the error
/// bound.
pub fn l1_distance(a: &MixtureParams, b: &MixtureParams) -> Result<Integral> {
    if a.is_sub_probability() || b.is_sub_probability() {
        return Err(Error::InvalidParameter(
            "l1 distance is defined between full mixtures".into(),
        ));
    }
    let tail_tol = 4.5e-10;
    let r = a
        .certified_window(tail_tol)
        .max(b.certified_window(tail_tol));
    let tail = a.tail_mass_bound(r) + b.tail_mass_bound(r);
    let mut cuts = a.support_breakpoints();
    cuts.extend(b.support_breakpoints());
    quad::octave_breakpoints(&mut cuts, r);
    let body = quad::integrate(|x| (a.density(x) - b.density(x)).abs(), -r, r, 1e-9, &cuts);
    Ok(Integral {
        value: body.value,
        error_bound: body.error_bound + tail,
    })
}

/// Minimal Euclidean distance from `theta_hat` to a finite set of parameter
/// representatives, minimized over label permutations that map components
/// between same-kind families. Components whose weight is below 1e-10 on
/// both sides are excluded from the location/scale part of the distance.
pub fn param_set_distance(theta_hat: &MixtureParams, true_set: &[MixtureParams]) -> Result<f64> {
    if true_set.is_empty() {
        return Err(Error::InvalidParameter("true set must be nonempty".into()));
    }
    let m = theta_hat.len();
    for rep in true_set {
        if rep.len() != m {
            return Err(Error::InvalidParameter(format!(
                "component count mismatch: {} vs {}",
                m,
                rep.len()
            )));
        }
    }
    const NEGLIGIBLE: f64 = 1e-10;
    let mut best = f64::INFINITY;
    for rep in true_set {
        permutations(m, &mut |perm| {
            let mut compatible = true;
            for (i, &j) in perm.iter().enumerate() {
                if !theta_hat.components[i]
                    .family
                    .same_kind(&rep.components[j].family)
                {
                    compatible = false;
                    break;
                }
            }
            if !compatible {
                return;
            }
            let mut d2 = 0.0;
            for (i, &j) in perm.iter().enumerate() {
                let ca = &theta_hat.components[i];
                let cb = &rep.components[j];
                let da = ca.alpha - cb.alpha;
                d2 += da * da;
                if ca.alpha >= NEGLIGIBLE || cb.alpha >= NEGLIGIBLE {
                    let dm = ca.mu - cb.mu;
                    let ds = ca.scale.value() - cb.scale.value();
                    d2 += dm * dm + ds * ds;
                }
            }
            let d = d2.sqrt();
            if d < best {
                best = d;
            }
        });
    }
    if best.is_infinite() {
        return Err(Error::InvalidParameter(
            "no kind-compatible component matching exists".into(),
        ));
    }
    Ok(best)
}

/// Heap's algorithm over permutations of `0..m`.
fn permutations(m: usize, visit: &mut impl FnMut(&[usize])) {
    let mut items: Vec<usize> = (0..m).collect();
    let mut stack = vec![0usize; m];
    visit(&items);
    let mut i = 1;
    while i < m {
        if stack[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(stack[i], i);
            }
            visit(&items);
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
}
