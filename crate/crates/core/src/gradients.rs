//! Exact gradients of the model output and of the training costs.
//!
//! The reference route is the parameter-shift rule, valid because every
//! trainable gate is `exp(-i theta P / 2)`. Training uses the adjoint
//! (reverse-mode) route, which is checked against parameter shift in tests.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzSpec, DropoutMask, ParamVector};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::model::{encoding_angles, Program};
use crate::training::cost::{Batch, CostKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientVector {
    pub values: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        GradientVector {
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    ParameterShift,
    #[default]
    Adjoint,
}

/// `df/dtheta_i = [f(theta_i + pi/2) - f(theta_i - pi/2)] / 2`, every
/// evaluation on the same (masked) circuit.
pub fn parameter_shift_grad(
    spec: &AnsatzSpec,
    params: &ParamVector,
    x: &[f64],
    mask: Option<&DropoutMask>,
) -> Result<GradientVector> {
    params.check_len(spec)?;
    let program = Program::new(spec, mask)?;
    let angles = encoding_angles(spec, x)?;
    let mut out = GradientVector::zeros(params.len());
    shift_gradient_into(&program, &params.values, &angles, 1.0, &mut out.values);
    Ok(out)
}

/// Reverse-mode gradient of `f`; agrees with [`parameter_shift_grad`].
pub fn adjoint_grad(
    spec: &AnsatzSpec,
    params: &ParamVector,
    x: &[f64],
    mask: Option<&DropoutMask>,
) -> Result<GradientVector> {
    params.check_len(spec)?;
    let program = Program::new(spec, mask)?;
    let angles = encoding_angles(spec, x)?;
    let mut out = GradientVector::zeros(params.len());
    program.value_and_gradient(&params.values, &angles, 1.0, &mut out.values);
    Ok(out)
}

pub(crate) fn shift_gradient_into(
    program: &Program,
    params: &[f64],
    angles: &[f64],
    weight: f64,
    grad: &mut [f64],
) -> f64 {
    let mut shifted = params.to_vec();
    for i in 0..params.len() {
        shifted[i] = params[i] + FRAC_PI_2;
        let plus = program.evaluate(&shifted, angles);
        shifted[i] = params[i] - FRAC_PI_2;
        let minus = program.evaluate(&shifted, angles);
        shifted[i] = params[i];
        grad[i] += weight * 0.5 * (plus - minus);
    }
    program.evaluate(params, angles)
}

/// Gradient of the data cost (no regularizer) on the masked circuit.
pub fn cost_gradient(
    spec: &AnsatzSpec,
    params: &ParamVector,
    dataset: &Dataset,
    mask: Option<&DropoutMask>,
    kind: CostKind,
) -> Result<GradientVector> {
    cost_gradient_with(spec, params, dataset, mask, kind, GradientMethod::Adjoint)
}

pub fn cost_gradient_with(
    spec: &AnsatzSpec,
    params: &ParamVector,
    dataset: &Dataset,
    mask: Option<&DropoutMask>,
    kind: CostKind,
    method: GradientMethod,
) -> Result<GradientVector> {
    params.check_len(spec)?;
    let batch = Batch::new(spec, dataset, kind)?;
    let program = Program::new(spec, mask)?;
    let (_, grad) = batch_cost_and_gradient(&program, &params.values, &batch, method);
    Ok(grad)
}

/// Cost and gradient over a prepared batch. Per-point contributions are
/// computed independently and summed in dataset order, so the result does
/// not depend on the rayon thread count.
pub(crate) fn batch_cost_and_gradient(
    program: &Program,
    params: &[f64],
    batch: &Batch,
    method: GradientMethod,
) -> (f64, GradientVector) {
    let n = params.len();
    let per_point: Vec<(f64, Vec<f64>)> = (0..batch.len())
        .into_par_iter()
        .map(|k| {
            let angles = batch.angles(k);
            let mut g = vec![0.0; n];
            let f = match method {
                GradientMethod::Adjoint => program.value_and_gradient(params, angles, 1.0, &mut g),
                GradientMethod::ParameterShift => shift_gradient_into(program, params, angles, 1.0, &mut g),
            };
            let (loss, dloss_df) = batch.point_loss(k, f);
            for v in &mut g {
                *v *= dloss_df;
            }
            (loss, g)
        })
        .collect();
    let mut cost = 0.0;
    let mut grad = GradientVector::zeros(n);
    for (loss, g) in per_point {
        cost += loss;
        for (a, b) in grad.values.iter_mut().zip(&g) {
            *a += b;
        }
    }
    (cost, grad)
}

pub(crate) fn check_finite(grad: &GradientVector, iteration: usize) -> Result<()> {
    if let Some(i) = grad.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            iteration,
            what: format!("gradient entry {i}"),
        });
    }
    Ok(())
}
