//! Entangling dropout mask sampling.
//!
//! Each layer is chosen with probability `layer_rate`; inside a chosen layer
//! every entangler slot is removed independently with probability
//! `gate_rate`. Unchosen layers keep all their entanglers.

use rand::Rng;

use crate::ansatz::{AnsatzSpec, DropoutMask};
use crate::error::{Error, Result};

pub fn sample_dropout_mask<R: Rng + ?Sized>(
    spec: &AnsatzSpec,
    layer_rate: f64,
    gate_rate: f64,
    rng: &mut R,
) -> Result<DropoutMask> {
    check_rate("layer_dropout_rate", layer_rate)?;
    check_rate("gate_dropout_rate", gate_rate)?;
    let slots = spec.slots_per_layer();
    let keep = (0..spec.n_layers)
        .map(|_| {
            if rng.gen::<f64>() < layer_rate {
                (0..slots).map(|_| rng.gen::<f64>() >= gate_rate).collect()
            } else {
                vec![true; slots]
            }
        })
        .collect();
    Ok(DropoutMask { keep })
}

/// Expected number of removed entanglers per sampled mask.
pub fn expected_removed(spec: &AnsatzSpec, layer_rate: f64, gate_rate: f64) -> f64 {
    spec.n_layers as f64 * layer_rate * spec.slots_per_layer() as f64 * gate_rate
}

pub(crate) fn check_rate(name: &str, rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::field(name, format!("{rate} is not in [0, 1]")));
    }
    Ok(())
}
