//! Dense statevector simulation.
//!
//! Qubit 0 is the leftmost (most significant) tensor factor: in a basis index
//! of an `n`-qubit register, qubit `q` is bit `n - 1 - q`. Rotations follow
//! the `exp(-i * angle * P / 2)` convention everywhere in the crate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Pauli axis of a single-qubit rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    /// `exp(-i * angle * P / 2)` on `target`.
    Rotation { axis: Axis, target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn rx(target: usize, angle: f64) -> Self {
        Gate::Rotation {
            axis: Axis::X,
            target,
            angle,
        }
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Gate::Rotation {
            axis: Axis::Y,
            target,
            angle,
        }
    }

    pub fn rz(target: usize, angle: f64) -> Self {
        Gate::Rotation {
            axis: Axis::Z,
            target,
            angle,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    /// Checks qubit indices against a register of `n_qubits`.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        match *self {
            Gate::Rotation { target, angle, .. } => {
                if target >= n_qubits {
                    return Err(Error::Config(format!(
                        "rotation target {target} out of range for {n_qubits} qubits"
                    )));
                }
                if !angle.is_finite() {
                    return Err(Error::Config(format!(
                        "rotation on qubit {target} has non-finite angle"
                    )));
                }
            }
            Gate::Cnot { control, target } => {
                if control >= n_qubits || target >= n_qubits {
                    return Err(Error::Config(format!(
                        "CNOT({control}->{target}) out of range for {n_qubits} qubits"
                    )));
                }
                if control == target {
                    return Err(Error::Config(format!(
                        "CNOT control and target are both qubit {control}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A weighted sum of single-qubit Pauli-Z operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub terms: Vec<ZTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZTerm {
    pub weight: f64,
    pub qubit: usize,
}

impl Observable {
    /// `Z` on a single qubit.
    pub fn z(qubit: usize) -> Self {
        Observable {
            terms: vec![ZTerm { weight: 1.0, qubit }],
        }
    }

    /// `Z_a - Z_b`, the two-class readout.
    pub fn z_difference(a: usize, b: usize) -> Self {
        Observable {
            terms: vec![
                ZTerm {
                    weight: 1.0,
                    qubit: a,
                },
                ZTerm {
                    weight: -1.0,
                    qubit: b,
                },
            ],
        }
    }

    /// Upper bound on `|<A>|` for any state.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.weight.abs()).sum()
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::Config("observable has no terms".into()));
        }
        for t in &self.terms {
            if t.qubit >= n_qubits {
                return Err(Error::Config(format!(
                    "observable term on qubit {} out of range for {n_qubits} qubits",
                    t.qubit
                )));
            }
            if !t.weight.is_finite() {
                return Err(Error::Config("observable weight is not finite".into()));
            }
        }
        Ok(())
    }

    /// Diagonal of the observable in the computational basis.
    pub fn diagonal(&self, n_qubits: usize) -> Vec<f64> {
        let dim = 1usize << n_qubits;
        (0..dim)
            .map(|i| {
                self.terms
                    .iter()
                    .map(|t| {
                        if i & qubit_mask(n_qubits, t.qubit) == 0 {
                            t.weight
                        } else {
                            -t.weight
                        }
                    })
                    .sum()
            })
            .collect()
    }
}

#[inline]
pub(crate) fn qubit_mask(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros computational basis state `|0...0>`.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "qubit count {n_qubits} outside supported range 1..={MAX_QUBITS}"
            )));
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Builds a state from raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Config(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!("{n_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    pub fn apply_gates<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for g in gates {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        match *gate {
            Gate::Rotation {
                axis,
                target,
                angle,
            } => self.rotate(axis, target, angle),
            Gate::Cnot { control, target } => self.cnot(control, target),
        }
    }

    pub(crate) fn rotate(&mut self, axis: Axis, target: usize, angle: f64) {
        let (s, c) = (0.5 * angle).sin_cos();
        self.rotate_cs(axis, target, c, s);
    }

    /// Rotation given `cos` and `sin` of the half angle.
    pub(crate) fn rotate_cs(&mut self, axis: Axis, target: usize, c: f64, s: f64) {
        let m = qubit_mask(self.n_qubits, target);
        match axis {
            Axis::Z => {
                let lo = Complex64::new(c, -s);
                let hi = Complex64::new(c, s);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    *a *= if i & m == 0 { lo } else { hi };
                }
            }
            Axis::Y => {
                for block in self.amps.chunks_exact_mut(2 * m) {
                    let (lo, hi) = block.split_at_mut(m);
                    for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                        let (x0, x1) = (*a0, *a1);
                        *a0 = x0 * c - x1 * s;
                        *a1 = x0 * s + x1 * c;
                    }
                }
            }
            Axis::X => {
                let mis = Complex64::new(0.0, -s);
                for block in self.amps.chunks_exact_mut(2 * m) {
                    let (lo, hi) = block.split_at_mut(m);
                    for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                        let (x0, x1) = (*a0, *a1);
                        *a0 = x0 * c + x1 * mis;
                        *a1 = x0 * mis + x1 * c;
                    }
                }
            }
        }
    }

    pub(crate) fn cnot(&mut self, control: usize, target: usize) {
        let cm = qubit_mask(self.n_qubits, control);
        let tm = qubit_mask(self.n_qubits, target);
        for i in (0..self.amps.len()).filter(|i| i & cm != 0 && i & tm == 0) {
            self.amps.swap(i, i | tm);
        }
    }

    /// Multiplies every amplitude by the matching entry of a diagonal operator.
    pub(crate) fn scale_diagonal(&mut self, diag: &[f64]) {
        for (a, d) in self.amps.iter_mut().zip(diag) {
            *a *= *d;
        }
    }

    /// `<self|P_target|other>` for a single-qubit Pauli.
    pub(crate) fn pauli_inner(&self, axis: Axis, target: usize, other: &StateVector) -> Complex64 {
        let m = qubit_mask(self.n_qubits, target);
        let dim = self.amps.len();
        let (l, r) = (&self.amps, &other.amps);
        let mut acc = ZERO;
        match axis {
            Axis::Z => {
                for i in 0..dim {
                    let t = l[i].conj() * r[i];
                    if i & m == 0 {
                        acc += t;
                    } else {
                        acc -= t;
                    }
                }
            }
            Axis::Y => {
                // Y|0> = i|1>, Y|1> = -i|0>: <l|Y|r> = sum -i l0* r1 + i l1* r0
                let mut t = ZERO;
                for (lb, rb) in l.chunks_exact(2 * m).zip(r.chunks_exact(2 * m)) {
                    let (l0, l1) = lb.split_at(m);
                    let (r0, r1) = rb.split_at(m);
                    for i in 0..m {
                        t += l1[i].conj() * r0[i] - l0[i].conj() * r1[i];
                    }
                }
                acc = Complex64::new(-t.im, t.re);
            }
            Axis::X => {
                for (lb, rb) in l.chunks_exact(2 * m).zip(r.chunks_exact(2 * m)) {
                    let (l0, l1) = lb.split_at(m);
                    let (r0, r1) = rb.split_at(m);
                    for i in 0..m {
                        acc += l0[i].conj() * r1[i] + l1[i].conj() * r0[i];
                    }
                }
            }
        }
        acc
    }

    /// `sum_i |a_i|^2 d_i` for a real diagonal operator.
    pub(crate) fn diagonal_expectation(&self, diag: &[f64]) -> f64 {
        self.amps
            .iter()
            .zip(diag)
            .map(|(a, d)| a.norm_sqr() * d)
            .sum()
    }

    /// Expectation of a Z-sum observable.
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        obs.validate(self.n_qubits)?;
        let mut total = 0.0;
        for t in &obs.terms {
            let m = qubit_mask(self.n_qubits, t.qubit);
            let z: f64 = self
                .amps
                .iter()
                .enumerate()
                .map(|(i, a)| if i & m == 0 { a.norm_sqr() } else { -a.norm_sqr() })
                .sum();
            total += t.weight * z;
        }
        Ok(total)
    }
}
