//! Static circuit description, parameter layout and dropout masks.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{Axis, Observable, MAX_QUBITS};

/// Scalar map applied to an input feature before it becomes an RY angle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingFn {
    /// `g(x) = arcsin(x)`, defined on `[-1, 1]`.
    #[default]
    Arcsin,
    /// `g(x) = x`; the feature is used as the angle directly.
    Identity,
}

impl EncodingFn {
    pub fn angle(self, x: f64) -> f64 {
        match self {
            EncodingFn::Arcsin => x.asin(),
            EncodingFn::Identity => x,
        }
    }

    pub fn in_domain(self, x: f64) -> bool {
        match self {
            EncodingFn::Arcsin => (-1.0..=1.0).contains(&x),
            EncodingFn::Identity => x.is_finite(),
        }
    }
}

/// One CNOT position inside a variational layer.
///
/// `after_column` places the gate after the given rotation sub-column, so
/// entanglers can be interleaved with the rotations of the layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntanglerSlot {
    pub control: usize,
    pub target: usize,
    pub after_column: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub n_layers: usize,
    /// One axis per rotation sub-column; every qubit gets one rotation per entry.
    pub rotation_axes: Vec<Axis>,
    /// Entangler slots of a single variational layer, identical across layers.
    pub entanglers: Vec<EntanglerSlot>,
    /// Input feature read by each qubit's encoding rotation.
    pub encoding_map: Vec<usize>,
    #[serde(default)]
    pub encoding: EncodingFn,
    pub observable: Observable,
}

/// Nearest-neighbour CNOT chain repeated after every rotation sub-column.
pub fn chain_entanglers(n_qubits: usize, columns: usize) -> Vec<EntanglerSlot> {
    (0..columns)
        .flat_map(|c| {
            (0..n_qubits.saturating_sub(1)).map(move |q| EntanglerSlot {
                control: q,
                target: q + 1,
                after_column: c,
            })
        })
        .collect()
}

impl AnsatzSpec {
    /// Single-feature regression model read out with `Z` on qubit 0.
    pub fn regression(n_qubits: usize, n_layers: usize) -> Self {
        let axes = vec![Axis::Z, Axis::Y, Axis::Z];
        AnsatzSpec {
            n_qubits,
            n_layers,
            entanglers: chain_entanglers(n_qubits, axes.len()),
            rotation_axes: axes,
            encoding_map: vec![0; n_qubits],
            encoding: EncodingFn::Arcsin,
            observable: Observable::z(0),
        }
    }

    /// Two-feature classifier: feature 0 on even qubits, feature 1 on odd
    /// qubits, read out with `Z_0 - Z_1`.
    pub fn classification(n_qubits: usize, n_layers: usize) -> Self {
        let mut spec = Self::regression(n_qubits, n_layers);
        spec.encoding_map = (0..n_qubits).map(|q| q % 2).collect();
        spec.observable = Observable::z_difference(0, 1);
        spec
    }

    pub fn rotations_per_qubit(&self) -> usize {
        self.rotation_axes.len()
    }

    pub fn params_per_layer(&self) -> usize {
        self.n_qubits * self.rotations_per_qubit()
    }

    pub fn n_params(&self) -> usize {
        self.n_layers * self.params_per_layer()
    }

    pub fn slots_per_layer(&self) -> usize {
        self.entanglers.len()
    }

    pub fn n_features(&self) -> usize {
        self.encoding_map.iter().max().map_or(0, |m| m + 1)
    }

    /// Flat index of parameter `(layer, qubit, slot)`: layer-major, then
    /// qubit, then rotation slot.
    pub fn param_index(&self, layer: usize, qubit: usize, slot: usize) -> usize {
        let r = self.rotations_per_qubit();
        layer * self.n_qubits * r + qubit * r + slot
    }

    /// Inverse of [`param_index`](Self::param_index).
    pub fn param_position(&self, index: usize) -> (usize, usize, usize) {
        let r = self.rotations_per_qubit();
        let per_layer = self.n_qubits * r;
        (index / per_layer, (index % per_layer) / r, index % r)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Config(format!(
                "n_qubits = {n} outside 1..={MAX_QUBITS}"
            )));
        }
        if self.n_layers == 0 {
            return Err(Error::Config("n_layers must be at least 1".into()));
        }
        if self.rotation_axes.is_empty() {
            return Err(Error::Config("rotation_axes is empty".into()));
        }
        if self.encoding_map.len() != n {
            return Err(Error::Config(format!(
                "encoding_map has {} entries for {n} qubits",
                self.encoding_map.len()
            )));
        }
        let cols = self.rotation_axes.len();
        let mut last_col = 0;
        for (i, e) in self.entanglers.iter().enumerate() {
            if e.control >= n || e.target >= n || e.control == e.target {
                return Err(Error::Config(format!(
                    "entangler slot {i} ({} -> {}) is not a valid distinct qubit pair",
                    e.control, e.target
                )));
            }
            if e.after_column >= cols {
                return Err(Error::Config(format!(
                    "entangler slot {i} placed after column {} but the layer has {cols} columns",
                    e.after_column
                )));
            }
            if e.after_column < last_col {
                return Err(Error::Config(format!(
                    "entangler slot {i} is out of column order"
                )));
            }
            last_col = e.after_column;
        }
        self.observable.validate(n)
    }
}

/// Flat trainable parameter vector, indexed via [`AnsatzSpec::param_index`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(spec: &AnsatzSpec) -> Self {
        ParamVector {
            values: vec![0.0; spec.n_params()],
        }
    }

    /// I.i.d. uniform angles on `[0, 2pi)`.
    pub fn random_uniform<R: Rng + ?Sized>(spec: &AnsatzSpec, rng: &mut R) -> Self {
        ParamVector {
            values: (0..spec.n_params()).map(|_| rng.gen_range(0.0..TAU)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_len(&self, spec: &AnsatzSpec) -> Result<()> {
        if self.values.len() != spec.n_params() {
            return Err(Error::Config(format!(
                "parameter vector has {} entries, ansatz needs {}",
                self.values.len(),
                spec.n_params()
            )));
        }
        Ok(())
    }
}

/// Per-layer keep flags over the entangler slots (`true` = gate present).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropoutMask {
    pub keep: Vec<Vec<bool>>,
}

impl DropoutMask {
    /// The evaluation mask: every entangler present.
    pub fn full(spec: &AnsatzSpec) -> Self {
        DropoutMask {
            keep: vec![vec![true; spec.slots_per_layer()]; spec.n_layers],
        }
    }

    pub fn empty(spec: &AnsatzSpec) -> Self {
        DropoutMask {
            keep: vec![vec![false; spec.slots_per_layer()]; spec.n_layers],
        }
    }

    pub fn removed_count(&self) -> usize {
        self.keep.iter().flatten().filter(|k| !**k).count()
    }

    pub fn kept_count(&self) -> usize {
        self.keep.iter().flatten().filter(|k| **k).count()
    }

    pub fn is_full(&self) -> bool {
        self.keep.iter().flatten().all(|k| *k)
    }

    pub fn validate(&self, spec: &AnsatzSpec) -> Result<()> {
        if self.keep.len() != spec.n_layers
            || self
                .keep
                .iter()
                .any(|l| l.len() != spec.slots_per_layer())
        {
            return Err(Error::Config(format!(
                "dropout mask shape does not match {} layers x {} entangler slots",
                spec.n_layers,
                spec.slots_per_layer()
            )));
        }
        Ok(())
    }
}
