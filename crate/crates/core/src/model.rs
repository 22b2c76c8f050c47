//! The data re-uploading model `f_L(x; theta)`.
//!
//! The circuit alternates an encoding block `S(x)` with a variational block
//! `W(theta_l)` for `l = 1..L`, starting with `S(x)` and ending with
//! `W(theta_L)`, and is read out as the expectation of the ansatz observable
//! on `|0...0>`.

use crate::ansatz::{AnsatzSpec, DropoutMask, ParamVector};
use crate::error::{Error, Result};
use crate::statevector::{Axis, Gate, StateVector};

/// Encoding block `S(x)`: one RY per qubit reading its mapped feature.
pub fn encode_layer_gates(spec: &AnsatzSpec, x: &[f64]) -> Result<Vec<Gate>> {
    let angles = encoding_angles(spec, x)?;
    Ok(spec
        .encoding_map
        .iter()
        .enumerate()
        .map(|(q, &f)| Gate::ry(q, angles[f]))
        .collect())
}

/// Variational block `W(theta_layer)`. Dropout removes entanglers only; every
/// rotation is always emitted.
pub fn variational_layer_gates(
    spec: &AnsatzSpec,
    layer: usize,
    params: &ParamVector,
    mask: &DropoutMask,
) -> Result<Vec<Gate>> {
    if layer >= spec.n_layers {
        return Err(Error::Config(format!(
            "layer {layer} out of range for {} layers",
            spec.n_layers
        )));
    }
    params.check_len(spec)?;
    mask.validate(spec)?;
    let mut gates = Vec::with_capacity(spec.params_per_layer() + spec.slots_per_layer());
    let keep = &mask.keep[layer];
    let mut slot = 0;
    for (col, &axis) in spec.rotation_axes.iter().enumerate() {
        for q in 0..spec.n_qubits {
            gates.push(Gate::Rotation {
                axis,
                target: q,
                angle: params.values[spec.param_index(layer, q, col)],
            });
        }
        while slot < spec.entanglers.len() && spec.entanglers[slot].after_column == col {
            if keep[slot] {
                let e = spec.entanglers[slot];
                gates.push(Gate::cnot(e.control, e.target));
            }
            slot += 1;
        }
    }
    Ok(gates)
}

/// Full gate list of the circuit for input `x`.
pub fn circuit_gates(
    spec: &AnsatzSpec,
    params: &ParamVector,
    x: &[f64],
    mask: &DropoutMask,
) -> Result<Vec<Gate>> {
    let enc = encode_layer_gates(spec, x)?;
    let mut gates = Vec::new();
    for layer in 0..spec.n_layers {
        gates.extend_from_slice(&enc);
        gates.extend(variational_layer_gates(spec, layer, params, mask)?);
    }
    Ok(gates)
}

/// Maps an input vector to per-feature encoding angles, checking the domain.
pub fn encoding_angles(spec: &AnsatzSpec, x: &[f64]) -> Result<Vec<f64>> {
    let nf = spec.n_features();
    if x.len() < nf {
        return Err(Error::Config(format!(
            "input has {} features, encoding map reads {nf}",
            x.len()
        )));
    }
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            if !spec.encoding.in_domain(v) {
                Err(Error::Domain(format!(
                    "feature {i} of input {x:?} is outside the domain of {:?}",
                    spec.encoding
                )))
            } else {
                Ok(spec.encoding.angle(v))
            }
        })
        .collect()
}

/// `f_L(x; theta)`. `mask = None` evaluates the undropped circuit.
pub fn forward(
    spec: &AnsatzSpec,
    params: &ParamVector,
    x: &[f64],
    mask: Option<&DropoutMask>,
) -> Result<f64> {
    spec.validate()?;
    params.check_len(spec)?;
    let program = Program::new(spec, mask)?;
    let angles = encoding_angles(spec, x)?;
    Ok(program.evaluate(&params.values, &angles))
}

/// Two-class probability vector `F(x) = (sigma(f), sigma(-f))`.
pub fn classifier_output(
    spec: &AnsatzSpec,
    params: &ParamVector,
    x: &[f64],
    mask: Option<&DropoutMask>,
) -> Result<[f64; 2]> {
    check_two_class_observable(spec)?;
    Ok(class_probabilities(forward(spec, params, x, mask)?))
}

/// `(1 / (1 + e^-f), 1 / (1 + e^f))`.
pub fn class_probabilities(f: f64) -> [f64; 2] {
    [1.0 / (1.0 + (-f).exp()), 1.0 / (1.0 + f.exp())]
}

pub(crate) fn check_two_class_observable(spec: &AnsatzSpec) -> Result<()> {
    let t = &spec.observable.terms;
    let ok = t.len() == 2 && t[0].weight == 1.0 && t[1].weight == -1.0 && t[0].qubit != t[1].qubit;
    if ok {
        Ok(())
    } else {
        Err(Error::Config(
            "classifier output needs an observable of the form Z_a - Z_b".into(),
        ))
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Encode { qubit: usize, feature: usize },
    Rotate { axis: Axis, qubit: usize, param: usize },
    Cnot { control: usize, target: usize },
}

/// A circuit compiled for one `(spec, mask)` pair, evaluated repeatedly for
/// different parameters and inputs.
#[derive(Clone, Debug)]
pub struct Program {
    n_qubits: usize,
    n_params: usize,
    n_features: usize,
    ops: Vec<Op>,
    diag: Vec<f64>,
}

impl Program {
    pub fn new(spec: &AnsatzSpec, mask: Option<&DropoutMask>) -> Result<Self> {
        spec.validate()?;
        if let Some(m) = mask {
            m.validate(spec)?;
        }
        let mut ops = Vec::new();
        for layer in 0..spec.n_layers {
            for (q, &f) in spec.encoding_map.iter().enumerate() {
                ops.push(Op::Encode {
                    qubit: q,
                    feature: f,
                });
            }
            let mut slot = 0;
            for (col, &axis) in spec.rotation_axes.iter().enumerate() {
                for q in 0..spec.n_qubits {
                    ops.push(Op::Rotate {
                        axis,
                        qubit: q,
                        param: spec.param_index(layer, q, col),
                    });
                }
                while slot < spec.entanglers.len() && spec.entanglers[slot].after_column == col {
                    if mask.map_or(true, |m| m.keep[layer][slot]) {
                        let e = spec.entanglers[slot];
                        ops.push(Op::Cnot {
                            control: e.control,
                            target: e.target,
                        });
                    }
                    slot += 1;
                }
            }
        }
        Ok(Program {
            n_qubits: spec.n_qubits,
            n_params: spec.n_params(),
            n_features: spec.n_features(),
            ops,
            diag: spec.observable.diagonal(spec.n_qubits),
        })
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn cnot_count(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, Op::Cnot { .. })).count()
    }

    fn check(&self, params: &[f64], angles: &[f64]) {
        assert_eq!(params.len(), self.n_params, "parameter count mismatch");
        assert!(angles.len() >= self.n_features, "missing encoding angles");
    }

    /// Final state `U(x; theta)|0...0>` given per-feature encoding angles.
    pub fn state(&self, params: &[f64], angles: &[f64]) -> StateVector {
        self.check(params, angles);
        self.run(&half_angle_trig(params), &half_angle_trig(angles))
    }

    fn run(&self, p_trig: &[(f64, f64)], a_trig: &[(f64, f64)]) -> StateVector {
        let mut psi = StateVector::zero_state(self.n_qubits).expect("validated qubit count");
        for &op in &self.ops {
            match op {
                Op::Encode { qubit, feature } => {
                    let (s, c) = a_trig[feature];
                    psi.rotate_cs(Axis::Y, qubit, c, s);
                }
                Op::Rotate { axis, qubit, param } => {
                    let (s, c) = p_trig[param];
                    psi.rotate_cs(axis, qubit, c, s);
                }
                Op::Cnot { control, target } => psi.cnot(control, target),
            }
        }
        psi
    }

    pub fn evaluate(&self, params: &[f64], angles: &[f64]) -> f64 {
        self.state(params, angles).diagonal_expectation(&self.diag)
    }

    /// Outputs for many inputs at one parameter point.
    pub fn evaluate_many<'a>(
        &self,
        params: &[f64],
        angles: impl IntoIterator<Item = &'a [f64]>,
    ) -> Vec<f64> {
        let p_trig = half_angle_trig(params);
        angles
            .into_iter()
            .map(|a| {
                self.check(params, a);
                self.run(&p_trig, &half_angle_trig(a)).diagonal_expectation(&self.diag)
            })
            .collect()
    }

    /// Output value and its exact gradient by reverse-mode (adjoint)
    /// differentiation. The gradient is accumulated into `grad` scaled by
    /// `weight`.
    pub fn value_and_gradient(
        &self,
        params: &[f64],
        angles: &[f64],
        weight: f64,
        grad: &mut [f64],
    ) -> f64 {
        assert_eq!(grad.len(), self.n_params, "gradient length mismatch");
        self.check(params, angles);
        let p_trig = half_angle_trig(params);
        let a_trig = half_angle_trig(angles);
        let rot = |op: Op| match op {
            Op::Encode { qubit, feature } => Some((Axis::Y, qubit, a_trig[feature], None)),
            Op::Rotate { axis, qubit, param } => Some((axis, qubit, p_trig[param], Some(param))),
            Op::Cnot { .. } => None,
        };
        let mut psi = self.run(&p_trig, &a_trig);
        let value = psi.diagonal_expectation(&self.diag);
        let mut lambda = psi.clone();
        lambda.scale_diagonal(&self.diag);
        for &op in self.ops.iter().rev() {
            if let Some((axis, q, (s, c), param)) = rot(op) {
                if let Some(i) = param {
                    // d<A>/dtheta = 2 Re <lambda| (-i/2) P |psi> = Im <lambda|P|psi>
                    grad[i] += weight * lambda.pauli_inner(axis, q, &psi).im;
                }
                psi.rotate_cs(axis, q, c, -s);
                lambda.rotate_cs(axis, q, c, -s);
            } else if let Op::Cnot { control, target } = op {
                psi.cnot(control, target);
                lambda.cnot(control, target);
            }
        }
        value
    }
}

/// `(sin, cos)` of each half angle.
fn half_angle_trig(angles: &[f64]) -> Vec<(f64, f64)> {
    angles.iter().map(|t| (0.5 * t).sin_cos()).collect()
}

/// Convenience constructor for an all-true mask program; used by evaluation.
pub fn evaluation_program(spec: &AnsatzSpec) -> Result<Program> {
    Program::new(spec, None)
}

/// Angles for a batch of inputs, failing on the first out-of-domain point.
pub fn batch_encoding_angles(spec: &AnsatzSpec, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    xs.iter()
        .enumerate()
        .map(|(k, x)| {
            encoding_angles(spec, x).map_err(|e| match e {
                Error::Domain(msg) => Error::Domain(format!("data point {k}: {msg}")),
                other => other,
            })
        })
        .collect()
}
