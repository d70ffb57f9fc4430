//! JSON run-configuration schema. Unknown keys are rejected everywhere:
//! a typo in a physics parameter must fail loudly, not silently fall back
//! to a default.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fock::TruncationSpec;
use crate::lattice::LatticeConfig;
use crate::qite::{CRecursion, Estimator, InitialState, QiteConfig};
use crate::qlanczos::T12Formula;
use crate::tol;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub tag: Option<String>,
    pub lattice: LatticeSection,
    pub truncation: TruncationSection,
    #[serde(default)]
    pub qite: QiteSection,
    #[serde(default)]
    pub initial_state: Option<InitialState>,
    #[serde(default)]
    pub qlanczos: Option<QlanczosSection>,
    #[serde(default)]
    pub massgap: Option<MassgapSection>,
    #[serde(default)]
    pub sensitivity: Option<SensitivitySection>,
    #[serde(default)]
    pub spectrum: Option<SpectrumSection>,
    /// Default output directory; the --out flag overrides it.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    /// Names of parameters that are assumptions rather than quoted
    /// values; copied verbatim into every emitted summary.
    #[serde(default)]
    pub assumed: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub l: usize,
    pub m0_sq: f64,
    #[serde(default)]
    pub delta_m: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub n_cutoff: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QiteSection {
    #[serde(default = "default_delta_tau")]
    pub delta_tau: f64,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    #[serde(default = "default_eta_spacing")]
    pub eta_spacing: f64,
    #[serde(default)]
    pub active_modes: Option<Vec<usize>>,
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: f64,
    #[serde(default = "default_c_recursion")]
    pub c_recursion: CRecursion,
}

impl Default for QiteSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

fn default_delta_tau() -> f64 {
    0.1
}
fn default_n_steps() -> usize {
    200
}
fn default_estimator() -> Estimator {
    Estimator::Exact
}
fn default_eta_spacing() -> f64 {
    0.1
}
fn default_convergence_tol() -> f64 {
    tol::CONVERGENCE
}
fn default_c_recursion() -> CRecursion {
    CRecursion::Exact
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QlanczosSection {
    /// Step-index pairs (or longer selections); empty means the default
    /// quarter-point pair of the finished trace.
    #[serde(default)]
    pub selections: Vec<Vec<usize>>,
    #[serde(default = "default_t12")]
    pub t12_formula: T12Formula,
}

fn default_t12() -> T12Formula {
    T12Formula::Squared
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassgapSection {
    #[serde(default)]
    pub excited_k: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    #[serde(default = "default_spacings")]
    pub spacings: Vec<f64>,
    #[serde(default = "default_delta_r")]
    pub delta_r: Vec<f64>,
    #[serde(default = "default_n_points")]
    pub n_points: usize,
}

fn default_spacings() -> Vec<f64> {
    vec![0.1, 0.05, 0.01]
}
fn default_delta_r() -> Vec<f64> {
    vec![0.0, 1e-4, 1e-3, 5e-3, 1e-2, 5e-2]
}
fn default_n_points() -> usize {
    9
}

impl Default for SensitivitySection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default = "default_n_levels")]
    pub n_levels: usize,
}

fn default_n_levels() -> usize {
    8
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::ConfigParse(format!("cannot read {}: {e}", path.display()))
        })?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| {
            Error::ConfigParse(format!("{}: {e}", path.display()))
        })?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let lattice = self.lattice_config()?;
        let spec = self.truncation_spec()?;
        if spec.n_modes() != lattice.l() {
            return Err(Error::InvalidConfig(
                "truncation modes must equal lattice size".into(),
            ));
        }
        if let Some(InitialState::SingleParticle { k }) = self.initial_state {
            if k >= lattice.l() {
                return Err(Error::InvalidConfig(format!(
                    "initial_state.k = {k} out of range for L = {}",
                    lattice.l()
                )));
            }
        }
        if let Some(mg) = &self.massgap {
            if mg.excited_k >= lattice.l() {
                return Err(Error::InvalidConfig(format!(
                    "massgap.excited_k = {} out of range for L = {}",
                    mg.excited_k,
                    lattice.l()
                )));
            }
        }
        if let Some(sens) = &self.sensitivity {
            if sens.spacings.iter().any(|&s| s <= 0.0) {
                return Err(Error::InvalidConfig(
                    "sensitivity.spacings must be positive".into(),
                ));
            }
            if sens.delta_r.iter().any(|&d| d < 0.0) {
                return Err(Error::InvalidConfig(
                    "sensitivity.delta_r must be nonnegative".into(),
                ));
            }
        }
        if self.qite.delta_tau <= 0.0 || self.qite.eta_spacing <= 0.0 {
            return Err(Error::InvalidConfig(
                "qite.delta_tau and qite.eta_spacing must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn lattice_config(&self) -> Result<LatticeConfig> {
        LatticeConfig::new(
            self.lattice.l,
            self.lattice.m0_sq,
            self.lattice.delta_m,
            self.lattice.lambda,
        )
    }

    pub fn truncation_spec(&self) -> Result<TruncationSpec> {
        TruncationSpec::new(self.truncation.n_cutoff, self.lattice.l)
    }

    pub fn qite_config(&self, store_states: bool) -> QiteConfig {
        QiteConfig {
            delta_tau: self.qite.delta_tau,
            n_steps: self.qite.n_steps,
            estimator: self.qite.estimator,
            eta_spacing: self.qite.eta_spacing,
            active_modes: self.qite.active_modes.clone(),
            convergence_tol: self.qite.convergence_tol,
            store_states,
            c_recursion: self.qite.c_recursion,
        }
    }

    pub fn initial(&self) -> InitialState {
        self.initial_state.unwrap_or(InitialState::Vacuum)
    }
}
