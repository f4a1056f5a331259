use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{IsingInstance, SpinAssignment};
use crate::oracle::BoundCertificate;

/// The quality promise attached to a reported energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Guarantee {
    Exact,
    /// `opt ≤ E ≤ (1 − epsilon)·opt`.
    RelativeError {
        epsilon: f64,
    },
    /// `|E − opt| ≤ bound`.
    AbsoluteError {
        bound: f64,
    },
    /// `E ≥ opt`: the energy of an explicit trial state.
    UpperBound,
}

impl Guarantee {
    /// Whether `energy` honours this guarantee given the true optimum,
    /// with absolute slack `tol`.
    pub fn holds(&self, energy: f64, optimum: f64, tol: f64) -> bool {
        match *self {
            Guarantee::Exact => (energy - optimum).abs() <= tol,
            Guarantee::RelativeError { epsilon } => {
                energy >= optimum - tol && energy <= (1.0 - epsilon) * optimum + tol
            }
            Guarantee::AbsoluteError { bound } => (energy - optimum).abs() <= bound + tol,
            Guarantee::UpperBound => energy >= optimum - tol,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Guarantee::Exact => "exact",
            Guarantee::RelativeError { .. } => "relative_error",
            Guarantee::AbsoluteError { .. } => "absolute_error",
            Guarantee::UpperBound => "upper_bound",
        }
    }

    /// The numeric parameter, if any.
    pub fn value(&self) -> Option<f64> {
        match *self {
            Guarantee::RelativeError { epsilon } => Some(epsilon),
            Guarantee::AbsoluteError { bound } => Some(bound),
            _ => None,
        }
    }
}

/// Amplitudes of a state vector stored as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentState {
    pub qubits: Vec<usize>,
    pub energy: f64,
    pub amplitudes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    None,
    Spins {
        spins: SpinAssignment,
    },
    /// One Bloch vector per qubit; unit length for pure states.
    ProductState {
        bloch: Vec<[f64; 3]>,
    },
    /// Tensor product of ground states of disconnected components.
    Components {
        components: Vec<ComponentState>,
    },
    /// Ground vector in the central-qubit ⊗ symmetric-subspace basis.
    Symmetric {
        group_sizes: Vec<usize>,
        amplitudes: Vec<[f64; 2]>,
    },
}

impl Witness {
    pub fn spins(&self) -> Option<&SpinAssignment> {
        match self {
            Witness::Spins { spins } => Some(spins),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub removed_weight: Option<f64>,
    pub subproblems: usize,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl Diagnostics {
    pub fn note(&mut self, key: &str, value: impl Serialize) {
        if let Ok(v) = serde_json::to_value(value) {
            self.extra.insert(key.to_string(), v);
        }
    }

    pub fn set_wall(&mut self, elapsed: Duration) {
        self.wall_ms = elapsed.as_secs_f64() * 1e3;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub method: String,
    pub energy: f64,
    pub witness: Witness,
    pub guarantee: Guarantee,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<BoundCertificate>,
}

impl SolveResult {
    pub fn new(method: &str, energy: f64, witness: Witness, guarantee: Guarantee) -> Self {
        SolveResult {
            method: method.to_string(),
            energy,
            witness,
            guarantee,
            diagnostics: Diagnostics::default(),
            certificates: Vec::new(),
        }
    }

    pub fn classical(
        method: &str,
        instance: &IsingInstance,
        spins: SpinAssignment,
        guarantee: Guarantee,
    ) -> Result<Self> {
        let energy = instance.energy(&spins)?;
        Ok(Self::new(
            method,
            energy,
            Witness::Spins { spins },
            guarantee,
        ))
    }

    /// Recomputes the energy of a classical witness and checks it against
    /// the reported value to within `1e-9·(1 + |E|)`.
    pub fn check_classical_witness(&self, instance: &IsingInstance) -> Result<f64> {
        let Some(spins) = self.witness.spins() else {
            return Err(Error::Unsupported(
                "result carries no spin assignment".into(),
            ));
        };
        let recomputed = instance.energy(spins)?;
        if (recomputed - self.energy).abs() > 1e-9 * (1.0 + self.energy.abs()) {
            return Err(Error::Internal(format!(
                "reported energy {} but the witness evaluates to {recomputed}",
                self.energy
            )));
        }
        Ok(recomputed)
    }
}
