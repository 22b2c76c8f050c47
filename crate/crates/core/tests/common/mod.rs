//! Brute-force dense-matrix oracle, independent of the statevector kernels.

#![allow(dead_code)]

use edrop_core::{Axis, Gate};
use num_complex::Complex64;

pub type Matrix = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// `exp(-i angle P / 2)` written out from `cos(a/2) I - i sin(a/2) P`.
pub fn rotation(axis: Axis, angle: f64) -> Matrix {
    let (ch, sh) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let pauli: Matrix = match axis {
        Axis::X => vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]],
        Axis::Y => vec![vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]],
        Axis::Z => vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]],
    };
    (0..2)
        .map(|i| {
            (0..2)
                .map(|j| {
                    let id = if i == j { ch } else { 0.0 };
                    c(id, 0.0) + c(0.0, -sh) * pauli[i][j]
                })
                .collect()
        })
        .collect()
}

/// Full-register matrix: `I (x) ... (x) U_target (x) ... (x) I`, qubit 0 leftmost.
pub fn embed(n: usize, target: usize, u: &Matrix) -> Matrix {
    let mut m = vec![vec![c(1.0, 0.0)]];
    for q in 0..n {
        m = kron(&m, if q == target { u } else { &ONE_QUBIT_ID });
    }
    m
}

static ONE_QUBIT_ID: std::sync::LazyLock<Matrix> = std::sync::LazyLock::new(|| identity(2));

/// `|0><0| (x) I + |1><1| (x) X` on (control, target), identity elsewhere.
pub fn cnot(n: usize, control: usize, target: usize) -> Matrix {
    let p0 = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]];
    let p1 = vec![vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
    let x = rotation(Axis::X, std::f64::consts::PI); // -iX
    let x: Matrix = x.iter().map(|r| r.iter().map(|v| v * c(0.0, 1.0)).collect()).collect();
    let a = embed(n, control, &p0);
    let b = matmul(&embed(n, control, &p1), &embed(n, target, &x));
    a.iter()
        .zip(&b)
        .map(|(r, s)| r.iter().zip(s).map(|(u, v)| u + v).collect())
        .collect()
}

pub fn gate_matrix(n: usize, g: &Gate) -> Matrix {
    match *g {
        Gate::Rotation { axis, target, angle } => embed(n, target, &rotation(axis, angle)),
        Gate::Cnot { control, target } => cnot(n, control, target),
    }
}

/// Product of the gate matrices applied to `|0...0>`.
pub fn oracle_state(n: usize, gates: &[Gate]) -> Vec<Complex64> {
    let mut u = identity(1 << n);
    for g in gates {
        u = matmul(&gate_matrix(n, g), &u);
    }
    u.iter().map(|row| row[0]).collect()
}

/// `<psi| sum_k w_k Z_k |psi>` via explicit Z matrices.
pub fn oracle_z_expectation(n: usize, psi: &[Complex64], terms: &[(f64, usize)]) -> f64 {
    let z = rotation(Axis::Z, std::f64::consts::PI); // -iZ
    let z: Matrix = z.iter().map(|r| r.iter().map(|v| v * c(0.0, 1.0)).collect()).collect();
    terms
        .iter()
        .map(|&(w, q)| {
            let zpsi = matvec(&embed(n, q, &z), psi);
            w * psi.iter().zip(&zpsi).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
        })
        .sum()
}
