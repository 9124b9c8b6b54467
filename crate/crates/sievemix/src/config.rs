//! Config file formats.
//!
//! Files are TOML with every number written as a decimal string, so loading
//! and re-emitting a config preserves the given decimal representations
//! exactly. The raw structs below mirror the files; conversion into domain
//! types validates and parses.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{FitOptions, SieveSchedule};
use crate::family::{ComponentFamily, Envelope};
use crate::mixture::{MixtureComponent, MixtureParams};
use crate::sim;

pub fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{what}: cannot parse {s:?} as a decimal")))
}

pub fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("{what}: cannot parse {s:?} as a count")))
}

pub fn parse_u64(s: &str, what: &str) -> Result<u64> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| Error::Config(format!("{what}: cannot parse {s:?} as an integer seed")))
}

/// One mixture component record: `(alpha, kind, dof?, mu, sigma)` as decimal
/// strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentConfig {
    pub alpha: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dof: Option<String>,
    pub mu: String,
    pub sigma: String,
}

/// Family specification: kind, optional dof, optional explicit envelope
/// triple as decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dof: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
}

/// Scale-floor schedule record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub c0: String,
    pub d: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub override_exponent: Option<String>,
}

impl ScheduleConfig {
    pub fn to_schedule(&self) -> Result<SieveSchedule> {
        let c0 = parse_f64(&self.c0, "schedule.c0")?;
        let d = parse_f64(&self.d, "schedule.d")?;
        let schedule = SieveSchedule::new(c0, d)?;
        match &self.override_exponent {
            None => Ok(schedule),
            Some(s) => schedule.with_override(parse_f64(s, "schedule.override_exponent")?),
        }
    }

    pub fn label(&self, index: usize) -> String {
        self.id
            .clone()
            .unwrap_or_else(|| format!("schedule{index}"))
    }
}

/// Build a family from config; `default_beta` applies when the record does
/// not carry its own tail exponent.
pub fn family_from_config(cfg: &FamilyConfig, default_beta: f64) -> Result<ComponentFamily> {
    let beta = match &cfg.beta {
        Some(s) => parse_f64(s, "family.beta")?,
        None => default_beta,
    };
    let kind = cfg.kind.trim().to_lowercase();
    match (cfg.v0.as_deref(), cfg.v1.as_deref()) {
        (Some(v0), Some(v1)) => {
            let envelope = Envelope::new(
                parse_f64(v0, "family.v0")?,
                parse_f64(v1, "family.v1")?,
                beta,
            )?;
            match kind.as_str() {
                "normal" => ComponentFamily::custom_with_envelope(
                    "normal-explicit",
                    |z| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt(),
                    envelope,
                ),
                "uniform" => ComponentFamily::custom_with_envelope(
                    "uniform-explicit",
                    |z| if (-0.5..0.5).contains(&z) { 1.0 } else { 0.0 },
                    envelope,
                ),
                other => Err(Error::Config(format!(
                    "explicit envelopes are supported for normal and uniform kinds, got {other:?}"
                ))),
            }
        }
        (None, None) => match kind.as_str() {
            "normal" => ComponentFamily::normal(beta),
            "uniform" => ComponentFamily::uniform(beta),
            "student_t" => {
                let dof = cfg
                    .dof
                    .as_deref()
                    .ok_or_else(|| Error::Config("student_t needs a dof entry".into()))?;
                ComponentFamily::student_t(parse_f64(dof, "family.dof")?, beta)
            }
            other => Err(Error::Config(format!("unknown family kind {other:?}"))),
        },
        _ => Err(Error::Config(
            "explicit envelopes need both v0 and v1 (beta optional)".into(),
        )),
    }
}

/// Build one component from config.
pub fn component_from_config(cfg: &ComponentConfig, default_beta: f64) -> Result<MixtureComponent> {
    let family = family_from_config(
        &FamilyConfig {
            kind: cfg.kind.clone(),
            dof: cfg.dof.clone(),
            v0: None,
            v1: None,
            beta: None,
        },
        default_beta,
    )?;
    MixtureComponent::new(
        parse_f64(&cfg.alpha, "component.alpha")?,
        family,
        parse_f64(&cfg.mu, "component.mu")?,
        parse_f64(&cfg.sigma, "component.sigma")?,
    )
}

/// Build a full mixture from ordered component records.
pub fn mixture_from_configs(cfgs: &[ComponentConfig], default_beta: f64) -> Result<MixtureParams> {
    let comps = cfgs
        .iter()
        .map(|c| component_from_config(c, default_beta))
        .collect::<Result<Vec<_>>>()?;
    MixtureParams::mixture(comps)
}

/// A set of components naming one representative parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeConfig {
    pub component: Vec<ComponentConfig>,
}

/// Fit request: data inline as decimal strings or as a path to a
/// newline-delimited numeric file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_path: Option<String>,
    /// Sample size driving the floor; defaults to the data length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    pub schedule: ScheduleConfig,
    pub family: Vec<FamilyConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<ComponentConfig>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<String>,
}

impl FitFileConfig {
    pub fn fit_options(&self) -> Result<FitOptions> {
        let mut opts = FitOptions::default();
        if let Some(s) = &self.max_iter {
            opts.max_iter = parse_usize(s, "max_iter")?;
        }
        if let Some(s) = &self.tol {
            opts.tol = parse_f64(s, "tol")?;
        }
        Ok(opts)
    }

    pub fn default_beta(&self) -> Result<f64> {
        match &self.beta {
            Some(s) => parse_f64(s, "beta"),
            None => Ok(2.0),
        }
    }
}

/// Simulation study file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFileConfig {
    pub seed: String,
    pub reps: String,
    pub starts: String,
    pub n_grid: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    pub schedule: Vec<ScheduleConfig>,
    /// True mixture components.
    pub truth: Vec<ComponentConfig>,
    /// Extra representatives of the true parameter class.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub true_set: Vec<RepresentativeConfig>,
    /// Families of the fitted model.
    pub family: Vec<FamilyConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<String>,
}

impl SimFileConfig {
    pub fn to_sim_config(&self, seed_override: Option<u64>) -> Result<sim::SimConfig> {
        let beta = match &self.beta {
            Some(s) => parse_f64(s, "beta")?,
            None => 2.0,
        };
        let theta0 = mixture_from_configs(&self.truth, beta)?;
        let true_set = self
            .true_set
            .iter()
            .map(|r| mixture_from_configs(&r.component, beta))
            .collect::<Result<Vec<_>>>()?;
        let spec = self
            .family
            .iter()
            .map(|f| family_from_config(f, beta))
            .collect::<Result<Vec<_>>>()?;
        let schedules = self
            .schedule
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(sim::NamedSchedule {
                    id: s.label(i),
                    schedule: s.to_schedule()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let n_grid = self
            .n_grid
            .iter()
            .map(|s| parse_usize(s, "n_grid"))
            .collect::<Result<Vec<_>>>()?;
        let mut fit_opts = FitOptions::default();
        if let Some(s) = &self.max_iter {
            fit_opts.max_iter = parse_usize(s, "max_iter")?;
        }
        if let Some(s) = &self.tol {
            fit_opts.tol = parse_f64(s, "tol")?;
        }
        Ok(sim::SimConfig {
            theta0,
            true_set,
            spec,
            schedules,
            n_grid,
            reps: parse_usize(&self.reps, "reps")?,
            seed: seed_override
                .map(Ok)
                .unwrap_or_else(|| parse_u64(&self.seed, "seed"))?,
            starts: parse_usize(&self.starts, "starts")?,
            fit_opts,
        })
    }
}

/// Grid definition inside bound-verification configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub lo: String,
    pub hi: String,
    pub count: String,
}

impl GridConfig {
    pub fn parse(&self) -> Result<(f64, f64, usize)> {
        Ok((
            parse_f64(&self.lo, "grid.lo")?,
            parse_f64(&self.hi, "grid.hi")?,
            parse_usize(&self.count, "grid.count")?,
        ))
    }
}

/// Bound-verification file: the context constants, the families they are
/// instantiated for, optionally the truth and a step-envelope target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsFileConfig {
    pub kappa0: String,
    pub c0: String,
    pub a0: String,
    pub zeta: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    pub family: Vec<FamilyConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub truth: Vec<ComponentConfig>,
    /// Parameter vector whose step envelope is built and verified; when
    /// empty only the randomized sweeps run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<ComponentConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    /// Monte-Carlo replications for the extreme-radius check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_reps: Option<String>,
}

/// Margin-scan file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginFileConfig {
    pub kappa: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    pub truth: Vec<ComponentConfig>,
    pub candidate_family: FamilyConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<String>,
    pub weight_levels: String,
    pub location_levels: String,
    pub location_lo: String,
    pub location_hi: String,
    pub scale_levels: String,
    pub scale_lo: String,
    pub scale_hi: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extreme_scales: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jitter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
}

/// Family-check file: envelope sweep plus the regularity surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckFamilyFileConfig {
    pub family: FamilyConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    /// (mu, sigma) pairs for the regularity check.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub param_grid: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub radii: Vec<String>,
}

/// Degenerate-likelihood demonstration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateFileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_path: Option<String>,
    /// When no data is given, sample this many points from the truth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub truth: Vec<ComponentConfig>,
    /// Component whose scale shrinks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<String>,
    pub sigma_start: String,
    pub halvings: String,
    /// Constrained comparison schedule.
    pub schedule: ScheduleConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<String>,
}

/// Load a TOML config file.
pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Read a newline-delimited numeric data file; `#` starts a comment, blank
/// lines are skipped.
pub fn read_data_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        out.push(line.parse::<f64>().map_err(|_| {
            Error::Config(format!(
                "{}:{}: cannot parse {line:?} as a decimal",
                path.display(),
                lineno + 1
            ))
        })?);
    }
    Ok(out)
}

/// Resolve fit data from inline strings or a data file.
pub fn resolve_data(
    inline: &Option<Vec<String>>,
    data_path: &Option<String>,
    base_dir: &Path,
) -> Result<Vec<f64>> {
    match (inline, data_path) {
        (Some(values), None) => values
            .iter()
            .map(|s| parse_f64(s, "data"))
            .collect::<Result<Vec<f64>>>(),
        (None, Some(path)) => {
            let p = Path::new(path);
            let full = if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            };
            read_data_file(&full)
        }
        (Some(_), Some(_)) => Err(Error::Config(
            "give either data or data_path, not both".into(),
        )),
        (None, None) => Err(Error::Config("either data or data_path is required".into())),
    }
}
