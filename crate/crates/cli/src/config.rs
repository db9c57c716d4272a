//! Experiment configuration files (TOML).
//!
//! ```toml
//! [model]
//! name = "nls"        # or "burgers"
//! sigma = 3
//! amplitude = 1.35
//!
//! [resolution]
//! ladder = [48, 96, 324, 648, 1296, 2592, 5184, 10368]
//! # or: n_start = 32, n_final = 8192, refine_factor = 2
//!
//! [criterion]
//! tol = 1e-16
//!
//! [integrator]        # every key optional
//! cfl_safety = 0.25
//!
//! [run]
//! t_end = 1.0
//! ```

use std::path::{Path, PathBuf};

use blowup::driver::{geometric_ladder, RunConfig};
use blowup::integrator::{IntegratorConfig, Scheme};
use blowup::{Error, InitialCondition, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub resolution: ResolutionSection,
    pub criterion: CriterionSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    pub run: RunSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Burgers,
    Nls,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: ModelName,
    pub sigma: Option<f64>,
    pub amplitude: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionSection {
    pub n_start: Option<usize>,
    pub n_final: Option<usize>,
    pub refine_factor: Option<usize>,
    pub ladder: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSection {
    pub tol: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub scheme: Option<Scheme>,
    pub cfl_safety: Option<f64>,
    pub dt_max: Option<f64>,
    pub check_every: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    pub output_dir: Option<PathBuf>,
    /// Recorded for bookkeeping; every run is deterministic.
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    fn ladder(&self) -> Result<Vec<usize>, Error> {
        let r = &self.resolution;
        match (&r.ladder, r.refine_factor) {
            (Some(_), Some(_)) => Err(Error::config(
                "resolution.refine_factor",
                "give either an explicit ladder or a refine factor, not both",
            )),
            (Some(l), None) => {
                if let (Some(s), Some(first)) = (r.n_start, l.first()) {
                    if s != *first {
                        return Err(Error::config("resolution.n_start", "disagrees with the first ladder entry"));
                    }
                }
                if let (Some(f), Some(last)) = (r.n_final, l.last()) {
                    if f != *last {
                        return Err(Error::config("resolution.n_final", "disagrees with the last ladder entry"));
                    }
                }
                Ok(l.clone())
            }
            (None, factor) => {
                let s = r
                    .n_start
                    .ok_or_else(|| Error::config("resolution.n_start", "required without a ladder"))?;
                let f = r
                    .n_final
                    .ok_or_else(|| Error::config("resolution.n_final", "required without a ladder"))?;
                geometric_ladder(s, f, factor.unwrap_or(2))
            }
        }
    }

    /// Validated run configuration.
    pub fn run_config(&self) -> Result<RunConfig, Error> {
        let m = &self.model;
        let (model, initial) = match m.name {
            ModelName::Burgers => {
                if m.sigma.is_some() {
                    return Err(Error::config("model.sigma", "only used by the nls model"));
                }
                if m.amplitude.is_some() {
                    return Err(Error::config("model.amplitude", "only used by the nls model"));
                }
                (ModelSpec::burgers(), InitialCondition::Sine)
            }
            ModelName::Nls => {
                let sigma = m.sigma.ok_or_else(|| Error::config("model.sigma", "required for nls"))?;
                let amplitude = m
                    .amplitude
                    .ok_or_else(|| Error::config("model.amplitude", "required for nls"))?;
                let model = ModelSpec::nls(sigma).map_err(|e| Error::config("model.sigma", e.to_string()))?;
                (model, InitialCondition::Gaussian { amplitude })
            }
        };
        let defaults = IntegratorConfig::for_model(&model);
        let i = &self.integrator;
        let integrator = IntegratorConfig {
            scheme: i.scheme.unwrap_or(defaults.scheme),
            cfl_safety: i.cfl_safety.unwrap_or(defaults.cfl_safety),
            dt_max: i.dt_max.unwrap_or(defaults.dt_max),
            check_every: i.check_every.unwrap_or(defaults.check_every),
        };
        let cfg = RunConfig {
            model,
            initial,
            ladder: self.ladder()?,
            tol: self.criterion.tol,
            integrator,
            t_end: self.run.t_end,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
