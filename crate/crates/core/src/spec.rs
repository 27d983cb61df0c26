//! JSON file form of a code ensemble.
//!
//! ```json
//! {"rho": 1.0, "gamma": 1.05, "p1": 0.4822, "p2": 0.1173,
//!  "omega": {"1": 0.039, "2": 0.492}, "phi": {"1": 0.072, "2": 0.48},
//!  "k": 2000}
//! ```
//!
//! Degree maps are normalized on load. `p3` may be given for readability;
//! it must then agree with `1 - p1 - p2`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{CodeEnsemble, CodecError};
use crate::degree::DegreeDistribution;

/// Block length used when a spec does not carry one.
pub const DEFAULT_K: usize = 2000;

/// Slack allowed on `p1 + p2 <= 1` in hand-written files.
pub const SPEC_PROB_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed ensemble spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid ensemble spec: {0}")]
    Invalid(String),
}

impl From<CodecError> for SpecError {
    fn from(e: CodecError) -> Self {
        SpecError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub rho: f64,
    pub gamma: f64,
    pub p1: f64,
    pub p2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p3: Option<f64>,
    pub omega: DegreeDistribution,
    pub phi: DegreeDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl EnsembleSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text =
            fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_ensemble(ensemble: &CodeEnsemble, include_k: bool) -> Self {
        Self {
            rho: ensemble.rho(),
            gamma: ensemble.gamma(),
            p1: ensemble.p1(),
            p2: ensemble.p2(),
            p3: Some(ensemble.p3()),
            omega: ensemble.omega().clone(),
            phi: ensemble.phi().clone(),
            k: include_k.then_some(ensemble.k()),
        }
    }

    /// Builds the ensemble, using `k` from the file when present, otherwise
    /// `default_k`.
    pub fn to_ensemble(&self, default_k: usize) -> Result<CodeEnsemble, SpecError> {
        let (mut p1, mut p2) = (self.p1, self.p2);
        for (name, p) in [("p1", p1), ("p2", p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SpecError::Invalid(format!("{name} = {p} must lie in [0, 1]")));
            }
        }
        let sum = p1 + p2;
        if sum > 1.0 + SPEC_PROB_TOL {
            return Err(SpecError::Invalid(format!("p1 + p2 = {sum} exceeds 1")));
        }
        if sum > 1.0 {
            p1 /= sum;
            p2 /= sum;
        }
        if let Some(p3) = self.p3 {
            let implied = (1.0 - p1 - p2).max(0.0);
            if (p3 - implied).abs() > SPEC_PROB_TOL {
                return Err(SpecError::Invalid(format!("p3 = {p3} disagrees with 1 - p1 - p2 = {implied}")));
            }
        }
        let k = self.k.unwrap_or(default_k);
        Ok(CodeEnsemble::new(self.rho, k, self.omega.clone(), self.phi.clone(), p1, p2, self.gamma)?)
    }
}
