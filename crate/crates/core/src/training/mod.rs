//! The training loop: per-iteration dropout masks, full-batch Adam updates on
//! the masked circuit, optional L1/L2 penalties, and a trace of in-sample and
//! out-of-sample errors.

pub mod adam;
pub mod cost;
pub mod dropout;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzSpec, ParamVector};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::gradients::{batch_cost_and_gradient, check_finite, GradientMethod};
use crate::model::Program;
use crate::seeding::{rng_for, stream};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use cost::{cross_entropy_cost, mse_cost, regularization_penalty, CostKind, Regularizer};
pub use dropout::{expected_removed, sample_dropout_mask};

use cost::Batch;
use dropout::check_rate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub layer_dropout_rate: f64,
    pub gate_dropout_rate: f64,
    pub regularizer: Regularizer,
    pub lambda: f64,
    /// Seeds parameter initialization and the dropout stream.
    pub seed: u64,
    pub eval_every: usize,
    /// Keep a parameter snapshot every this many iterations (0 = never).
    pub snapshot_every: usize,
    pub gradient: GradientMethod,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            iterations: 1000,
            learning_rate: adam.learning_rate,
            adam_beta1: adam.beta1,
            adam_beta2: adam.beta2,
            adam_epsilon: adam.epsilon,
            layer_dropout_rate: 0.0,
            gate_dropout_rate: 0.0,
            regularizer: Regularizer::None,
            lambda: 0.0,
            seed: 0,
            eval_every: 1,
            snapshot_every: 0,
            gradient: GradientMethod::Adjoint,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn with_dropout(mut self, layer_rate: f64, gate_rate: f64) -> Self {
        self.layer_dropout_rate = layer_rate;
        self.gate_dropout_rate = gate_rate;
        self
    }

    pub fn with_regularizer(mut self, kind: Regularizer, lambda: f64) -> Self {
        self.regularizer = kind;
        self.lambda = lambda;
        self
    }

    pub fn dropout_enabled(&self) -> bool {
        self.layer_dropout_rate > 0.0 && self.gate_dropout_rate > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::field("train.iterations", "must be at least 1"));
        }
        if self.eval_every == 0 {
            return Err(Error::field("train.eval_every", "must be at least 1"));
        }
        check_rate("train.layer_dropout_rate", self.layer_dropout_rate)?;
        check_rate("train.gate_dropout_rate", self.gate_dropout_rate)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::field("train.lambda", format!("{} must be >= 0", self.lambda)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::field("train.learning_rate", "must be positive"));
        }
        for (name, b) in [("train.adam_beta1", self.adam_beta1), ("train.adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::field(name, format!("{b} is not in [0, 1)")));
            }
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::field("train.adam_epsilon", "must be positive"));
        }
        Ok(())
    }
}

/// Errors after `iteration` parameter updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Training cost on this iteration's dropout-masked circuit.
    pub in_sample: f64,
    /// Training cost on the full (evaluation) circuit.
    pub in_sample_full: f64,
    /// Test cost on the full circuit.
    pub out_of_sample: f64,
    /// Regularization penalty (0 without a regularizer).
    pub penalty: f64,
    pub removed_gates: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    pub initial_params: ParamVector,
    pub final_params: ParamVector,
    pub snapshots: Vec<(usize, ParamVector)>,
    /// Removed-entangler count of every iteration's mask.
    pub removed_per_iteration: Vec<usize>,
}

pub const TRACE_CSV_HEADER: &str = "iter,in_sample,in_sample_fullmask,out_sample,removed_gate_count";

impl TrainTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn out_of_sample(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.out_of_sample).collect()
    }

    pub fn in_sample(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.in_sample).collect()
    }

    pub fn in_sample_full(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.in_sample_full).collect()
    }

    /// Record with the smallest out-of-sample error (first on ties).
    pub fn best_out_of_sample(&self) -> Option<&TraceRecord> {
        self.records
            .iter()
            .fold(None, |best: Option<&TraceRecord>, r| match best {
                Some(b) if b.out_of_sample <= r.out_of_sample => Some(b),
                _ => Some(r),
            })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.iteration, r.in_sample, r.in_sample_full, r.out_of_sample, r.removed_gates
            );
        }
        out
    }

    pub fn summary(&self, config: &TrainConfig) -> TraceSummary {
        let last = self.last().copied();
        let best = self.best_out_of_sample().copied();
        TraceSummary {
            schema_version: SCHEMA_VERSION,
            seed: config.seed,
            iterations: config.iterations,
            final_in_sample: last.map(|r| r.in_sample),
            final_in_sample_full: last.map(|r| r.in_sample_full),
            final_out_of_sample: last.map(|r| r.out_of_sample),
            final_penalty: last.map(|r| r.penalty),
            min_out_of_sample: best.map(|r| r.out_of_sample),
            min_out_of_sample_iteration: best.map(|r| r.iteration),
            mean_removed_gates: mean_usize(&self.removed_per_iteration),
            config: config.clone(),
        }
    }
}

fn mean_usize(v: &[usize]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<usize>() as f64 / v.len() as f64
    }
}

pub const SCHEMA_VERSION: u32 = 1;

/// JSON-friendly digest of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub iterations: usize,
    pub final_in_sample: Option<f64>,
    pub final_in_sample_full: Option<f64>,
    pub final_out_of_sample: Option<f64>,
    pub final_penalty: Option<f64>,
    pub min_out_of_sample: Option<f64>,
    pub min_out_of_sample_iteration: Option<usize>,
    pub mean_removed_gates: f64,
    pub config: TrainConfig,
}

/// Initial parameters for a run: i.i.d. uniform on `[0, 2pi)` from the
/// seed's initialization stream.
pub fn init_params(spec: &AnsatzSpec, seed: u64) -> ParamVector {
    ParamVector::random_uniform(spec, &mut rng_for(seed, stream::INIT))
}

/// Runs the full training loop.
///
/// Iteration `j` samples a fresh mask, takes the cost gradient on the masked
/// circuit (plus the penalty subgradient), applies one Adam update, and then,
/// every `eval_every` iterations, records the errors of the updated
/// parameters. Iteration 0 records the initial parameters. Out-of-sample
/// errors always use the full circuit.
pub fn train(
    spec: &AnsatzSpec,
    init: &ParamVector,
    train_set: &Dataset,
    test_set: &Dataset,
    config: &TrainConfig,
) -> Result<TrainTrace> {
    match train_partial(spec, init, train_set, test_set, config)? {
        (trace, None) => Ok(trace),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`train`], but a failure after setup (a non-finite value mid-run)
/// comes back alongside the trace recorded up to that point.
pub fn train_partial(
    spec: &AnsatzSpec,
    init: &ParamVector,
    train_set: &Dataset,
    test_set: &Dataset,
    config: &TrainConfig,
) -> Result<(TrainTrace, Option<Error>)> {
    config.validate()?;
    spec.validate()?;
    init.check_len(spec)?;
    let kind = CostKind::for_dataset(train_set);
    if CostKind::for_dataset(test_set) != kind {
        return Err(Error::Config("train and test sets are of different kinds".into()));
    }
    let train_batch = Batch::new(spec, train_set, kind)?;
    let test_batch = Batch::new(spec, test_set, kind)?;
    let full = Program::new(spec, None)?;
    let adam_cfg = config.adam();
    let mut adam = AdamState::new(init.len());
    let mut mask_rng = rng_for(config.seed, stream::MASK);

    let mut trace = TrainTrace {
        records: Vec::with_capacity(config.iterations / config.eval_every + 1),
        initial_params: init.clone(),
        final_params: init.clone(),
        snapshots: Vec::new(),
        removed_per_iteration: Vec::with_capacity(config.iterations),
    };
    let params = &mut trace.final_params.values;

    let record = |j: usize, params: &[f64], masked: Option<&Program>, removed: usize| -> Result<TraceRecord> {
        let in_sample_full = train_batch.cost(&full, params);
        let in_sample = match masked {
            Some(p) => train_batch.cost(p, params),
            None => in_sample_full,
        };
        let out_of_sample = test_batch.cost(&full, params);
        if !(in_sample.is_finite() && in_sample_full.is_finite() && out_of_sample.is_finite()) {
            return Err(Error::NonFinite {
                iteration: j,
                what: "recorded error".into(),
            });
        }
        let penalty = if config.regularizer == Regularizer::None {
            0.0
        } else {
            let current = ParamVector { values: params.to_vec() };
            regularization_penalty(&current, config.regularizer, config.lambda).0
        };
        Ok(TraceRecord {
            iteration: j,
            in_sample,
            in_sample_full,
            out_of_sample,
            penalty,
            removed_gates: removed,
        })
    };

    match record(0, params, None, 0) {
        Ok(r) => trace.records.push(r),
        Err(e) => return Ok((trace, Some(e))),
    }

    for j in 1..=config.iterations {
        let step = (|| -> Result<()> {
            let (masked, removed) = if config.dropout_enabled() {
                let mask = sample_dropout_mask(
                    spec,
                    config.layer_dropout_rate,
                    config.gate_dropout_rate,
                    &mut mask_rng,
                )?;
                (Some(Program::new(spec, Some(&mask))?), mask.removed_count())
            } else {
                (None, 0)
            };
            let program = masked.as_ref().unwrap_or(&full);
            trace.removed_per_iteration.push(removed);

            let (cost, mut grad) = batch_cost_and_gradient(program, params, &train_batch, config.gradient);
            if !cost.is_finite() {
                return Err(Error::NonFinite {
                    iteration: j,
                    what: "in-sample cost".into(),
                });
            }
            if config.regularizer != Regularizer::None {
                let current = ParamVector { values: params.clone() };
                let (_, sub) = regularization_penalty(&current, config.regularizer, config.lambda);
                for (g, s) in grad.values.iter_mut().zip(&sub.values) {
                    *g += s;
                }
            }
            check_finite(&grad, j)?;
            adam_step(params, &grad.values, &mut adam, &adam_cfg).map_err(|e| match e {
                Error::NonFinite { what, .. } => Error::NonFinite { iteration: j, what },
                other => other,
            })?;

            if j % config.eval_every == 0 {
                trace.records.push(record(j, params, masked.as_ref(), removed)?);
            }
            if config.snapshot_every > 0 && j % config.snapshot_every == 0 {
                trace.snapshots.push((j, ParamVector { values: params.clone() }));
            }
            Ok(())
        })();
        if let Err(e) = step {
            return Ok((trace, Some(e)));
        }
    }
    Ok((trace, None))
}

/// Model outputs of the full circuit at each input, for plotting.
pub fn evaluate_outputs(spec: &AnsatzSpec, params: &ParamVector, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
    params.check_len(spec)?;
    let program = Program::new(spec, None)?;
    let angles = crate::model::batch_encoding_angles(spec, xs)?;
    Ok(angles.iter().map(|a| program.evaluate(&params.values, a)).collect())
}
