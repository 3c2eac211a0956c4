//! Noise configuration for the circuit runner: per-gate depolarizing
//! strengths, incoherent resets, SPAM errors, and the shot budget.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Noise model applied by the runner. Gates pick up a depolarizing channel
/// on their support keyed by [`crate::sim::Gate::noise_key`]; resets stay
/// incoherent but may be noisy; SPAM errors act once at preparation and at
/// readout.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NoiseModel {
    /// Map from gate id ("h", "x", "sx", "ry", "rz", "cnot", "cswap",
    /// "swap", "reset", "unitary") to depolarizing probability.
    #[serde(default)]
    pub gate_depolarizing: BTreeMap<String, f64>,
    /// Resets must stay incoherent; a coherent-leak reset is unsupported.
    pub reset_incoherent: bool,
    /// Depolarizing probability applied to every qubit once before the
    /// circuit runs.
    #[serde(default)]
    pub spam_prep_error: f64,
    /// Classical bit-flip probability at readout.
    #[serde(default)]
    pub spam_meas_error: f64,
    pub shots: usize,
    pub seed: u64,
}

impl NoiseModel {
    pub fn noiseless(shots: usize, seed: u64) -> Self {
        Self {
            gate_depolarizing: BTreeMap::new(),
            reset_incoherent: true,
            spam_prep_error: 0.0,
            spam_meas_error: 0.0,
            shots,
            seed,
        }
    }

    pub fn with_gate_error(mut self, key: &str, p: f64) -> Self {
        self.gate_depolarizing.insert(key.to_string(), p);
        self
    }

    pub fn with_spam(mut self, prep: f64, meas: f64) -> Self {
        self.spam_prep_error = prep;
        self.spam_meas_error = meas;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn depolarizing_for(&self, key: &str) -> f64 {
        self.gate_depolarizing.get(key).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.reset_incoherent {
            return Err(Error::InvalidArgument(
                "coherent resets are not supported; reset_incoherent must be true".into(),
            ));
        }
        let in_range = |p: f64| (0.0..=1.0).contains(&p);
        if !in_range(self.spam_prep_error) || !in_range(self.spam_meas_error) {
            return Err(Error::InvalidArgument(
                "SPAM probabilities must lie in [0,1]".into(),
            ));
        }
        for (k, &p) in &self.gate_depolarizing {
            if !in_range(p) {
                return Err(Error::InvalidArgument(format!(
                    "depolarizing probability for '{k}' is {p}, outside [0,1]"
                )));
            }
        }
        if self.shots == 0 {
            return Err(Error::InvalidArgument("shots must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let model: NoiseModel = serde_json::from_str(json)
            .map_err(|e| Error::InvalidArgument(format!("bad noise model JSON: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("noise model serializes")
    }
}
