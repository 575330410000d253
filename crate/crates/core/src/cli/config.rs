//! Experiment configuration files.
//!
//! A config is a list of `key = value` lines grouped under `[section]`
//! headers (TOML syntax). Unknown sections and keys are rejected.
//!
//! ```toml
//! [experiment]
//! name = "fig3"
//! method = "adiabatic"
//! out = "out/fig3"
//! seed = 0
//! plot = true
//!
//! [chain]
//! sites = [2, 3, 4]
//! coupling = -1.0
//!
//! [adiabatic]
//! schedule = "exp"
//! f0 = 10.0
//! mu = 0.1
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::adiabatic;
use crate::error::{Error, Result};
use crate::lyapunov;
use crate::optimizer;
use crate::propagation::{PulseSchedule, DEFAULT_LINDBLAD_DT, DEFAULT_SAMPLE_DT};
use crate::robustness::{self, Method, SweepKind};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub chain: ChainSection,
    pub adiabatic: Option<AdiabaticSection>,
    pub lyapunov: Option<LyapunovSection>,
    pub optimize: Option<OptimizeSection>,
    pub scan: Option<ScanSection>,
    pub robustness: Option<RobustnessSection>,
    pub spectrum: Option<SpectrumSection>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentMethod {
    Decompose,
    Spectrum,
    Adiabatic,
    Lyapunov,
    Optimize,
    ScanMinTime,
    Robustness,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    pub method: ExperimentMethod,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub plot: Option<bool>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub sites: Vec<usize>,
    pub coupling: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Linear,
    Exp,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AdiabaticSection {
    pub schedule: ScheduleKind,
    pub f0: f64,
    pub mu: f64,
    /// Ramp duration of the linear schedule.
    pub t_f: f64,
    pub horizon: f64,
    pub threshold: f64,
    pub sample_dt: f64,
}

impl Default for AdiabaticSection {
    fn default() -> Self {
        AdiabaticSection {
            schedule: ScheduleKind::Exp,
            f0: 10.0,
            mu: 0.1,
            t_f: adiabatic::DEFAULT_HORIZON,
            horizon: adiabatic::DEFAULT_HORIZON,
            threshold: adiabatic::DEFAULT_THRESHOLD,
            sample_dt: DEFAULT_SAMPLE_DT,
        }
    }
}

impl AdiabaticSection {
    pub fn schedule(&self) -> Result<PulseSchedule> {
        match self.schedule {
            ScheduleKind::Linear => PulseSchedule::linear(self.f0, self.t_f),
            ScheduleKind::Exp => PulseSchedule::exponential(self.f0, self.mu),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovSection {
    /// Defaults to the size-dependent gain.
    pub kappa: Option<f64>,
    pub t_f: f64,
    pub dt: f64,
    /// Field whose ground state is the initial state.
    pub f0: f64,
    pub sample_dt: f64,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        LyapunovSection { kappa: None, t_f: 20.0, dt: lyapunov::DEFAULT_DT, f0: 10.0, sample_dt: DEFAULT_SAMPLE_DT }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSection {
    /// Fixed `t_f`; otherwise `t_f_per_site·N`.
    pub t_f: Option<f64>,
    pub t_f_per_site: f64,
    /// Fixed `K`; otherwise `slices_per_site·N`.
    pub slices: Option<usize>,
    pub slices_per_site: usize,
    pub starts: usize,
    pub max_iters: usize,
    pub fidelity_target: Option<f64>,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        OptimizeSection {
            t_f: None,
            t_f_per_site: 0.65,
            slices: None,
            slices_per_site: 3,
            starts: optimizer::DEFAULT_STARTS,
            max_iters: optimizer::DEFAULT_MAX_ITERS,
            fidelity_target: None,
        }
    }
}

impl OptimizeSection {
    pub fn t_f(&self, n: usize) -> f64 {
        self.t_f.unwrap_or(self.t_f_per_site * n as f64)
    }

    pub fn slices(&self, n: usize) -> usize {
        self.slices.unwrap_or(self.slices_per_site * n)
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub fidelity_target: f64,
    pub slices_per_site: usize,
    pub starts: usize,
    pub m_start: usize,
    pub m_max: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        let d = optimizer::ScanOptions::default();
        ScanSection {
            fidelity_target: d.fidelity_target,
            slices_per_site: d.k_per_site,
            starts: d.starts,
            m_start: d.m_start,
            m_max: d.m_max,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSection {
    pub method: String,
    pub kind: String,
    pub values: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_f0")]
    pub f0: f64,
    #[serde(default = "default_lindblad_dt")]
    pub dt: f64,
}

fn default_samples() -> usize {
    robustness::DEFAULT_SAMPLES
}

fn default_f0() -> f64 {
    robustness::DESIGN_F0
}

fn default_lindblad_dt() -> f64 {
    DEFAULT_LINDBLAD_DT
}

impl RobustnessSection {
    pub fn method(&self) -> Result<Method> {
        self.method.parse()
    }

    pub fn kind(&self) -> Result<SweepKind> {
        self.kind.parse()
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub f_min: f64,
    pub f_max: f64,
    pub points: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection { f_min: 0.0, f_max: 10.0, points: 101 }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates; `origin` labels error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1).unwrap_or(0);
            Error::Config { path: origin.to_string(), line, message: e.message().to_string() }
        })?;
        config.validate().map_err(|e| match e {
            Error::Invalid(message) => Error::Config { path: origin.to_string(), line: 0, message },
            other => other,
        })?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.experiment.name.trim().is_empty() {
            return Err(Error::invalid("experiment.name must not be empty"));
        }
        if self.chain.sites.is_empty() {
            return Err(Error::invalid("chain.sites must list at least one chain length"));
        }
        if self.chain.coupling == 0.0 || !self.chain.coupling.is_finite() {
            return Err(Error::invalid("chain.coupling must be finite and nonzero"));
        }
        if self.experiment.method == ExperimentMethod::Robustness {
            let r = self.robustness.as_ref().ok_or_else(|| Error::invalid("method robustness needs a [robustness] section"))?;
            r.method()?;
            r.kind()?;
            if r.values.is_empty() {
                return Err(Error::invalid("robustness.values must not be empty"));
            }
        }
        Ok(())
    }

    pub fn adiabatic(&self) -> AdiabaticSection {
        self.adiabatic.clone().unwrap_or_default()
    }

    pub fn lyapunov(&self) -> LyapunovSection {
        self.lyapunov.clone().unwrap_or_default()
    }

    pub fn optimize(&self) -> OptimizeSection {
        self.optimize.clone().unwrap_or_default()
    }

    pub fn scan(&self) -> ScanSection {
        self.scan.clone().unwrap_or_default()
    }

    pub fn spectrum(&self) -> SpectrumSection {
        self.spectrum.clone().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG3: &str = "[experiment]\nname = \"fig3\"\nmethod = \"adiabatic\"\n\n[chain]\nsites = [2, 3]\ncoupling = -1.0\n\n[adiabatic]\nmu = 0.1\n";

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::parse(FIG3, "fig3.cfg").unwrap();
        assert_eq!(c.experiment.method, ExperimentMethod::Adiabatic);
        assert_eq!(c.chain.sites, vec![2, 3]);
        let a = c.adiabatic();
        assert_eq!((a.f0, a.mu, a.schedule), (10.0, 0.1, ScheduleKind::Exp));
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = FIG3.replace("mu = 0.1", "mu = 0.1\nspeed = 3");
        match ExperimentConfig::parse(&text, "x.cfg").unwrap_err() {
            Error::Config { line, message, .. } => {
                assert_eq!(line, 11);
                assert!(message.contains("speed"), "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn missing_required_key_is_rejected() {
        let text = FIG3.replace("coupling = -1.0\n", "");
        let e = ExperimentConfig::parse(&text, "x.cfg").unwrap_err();
        assert!(matches!(e, Error::Config { .. }) && e.to_string().contains("coupling"), "{e}");
    }

    #[test]
    fn robustness_requires_its_section() {
        let text = FIG3.replace("\"adiabatic\"\n\n[chain]", "\"robustness\"\n\n[chain]");
        assert!(ExperimentConfig::parse(&text, "x.cfg").is_err());
        let ok = format!("{text}\n[robustness]\nmethod = \"optimal\"\nkind = \"thermal\"\nvalues = [1.0]\n");
        let c = ExperimentConfig::parse(&ok, "x.cfg").unwrap();
        assert_eq!(c.robustness.unwrap().samples, 100);
    }
}
