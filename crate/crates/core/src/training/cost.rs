//! In-sample / out-of-sample costs and parameter penalties.

use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzSpec, DropoutMask, ParamVector};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::gradients::GradientVector;
use crate::model::{batch_encoding_angles, check_two_class_observable, class_probabilities, Program};

/// Probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]` before the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// `(1/D) sum_k (y_k - f(x_k))^2`
    Mse,
    /// `-sum_k y_k . log F(x_k)`
    CrossEntropy,
}

impl CostKind {
    pub fn for_dataset(dataset: &Dataset) -> Self {
        match dataset {
            Dataset::Regression(_) => CostKind::Mse,
            Dataset::Classification(_) => CostKind::CrossEntropy,
        }
    }
}

#[derive(Clone, Debug)]
enum Targets {
    Scalar(Vec<f64>),
    OneHot(Vec<[f64; 2]>),
}

/// A dataset with encoding angles precomputed and targets checked against
/// the cost kind.
#[derive(Clone, Debug)]
pub(crate) struct Batch {
    angles: Vec<Vec<f64>>,
    targets: Targets,
}

impl Batch {
    pub(crate) fn new(spec: &AnsatzSpec, dataset: &Dataset, kind: CostKind) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::Config("dataset is empty".into()));
        }
        let angles = batch_encoding_angles(spec, &dataset.inputs())?;
        let targets = match (kind, dataset) {
            (CostKind::Mse, Dataset::Regression(d)) => {
                Targets::Scalar(d.points.iter().map(|p| p.1).collect())
            }
            (CostKind::CrossEntropy, Dataset::Classification(d)) => {
                check_two_class_observable(spec)?;
                for (k, (_, y)) in d.points.iter().enumerate() {
                    if *y != [1.0, 0.0] && *y != [0.0, 1.0] {
                        return Err(Error::Data(format!(
                            "target {k} = {y:?} is not one-hot"
                        )));
                    }
                }
                Targets::OneHot(d.points.iter().map(|p| p.1).collect())
            }
            (kind, _) => {
                return Err(Error::Config(format!(
                    "cost {kind:?} does not apply to this dataset kind"
                )))
            }
        };
        Ok(Batch { angles, targets })
    }

    pub(crate) fn len(&self) -> usize {
        self.angles.len()
    }

    pub(crate) fn angles(&self, k: usize) -> &[f64] {
        &self.angles[k]
    }

    /// Contribution of point `k` to the cost and its derivative with respect
    /// to the model output `f`.
    #[inline]
    pub(crate) fn point_loss(&self, k: usize, f: f64) -> (f64, f64) {
        match &self.targets {
            Targets::Scalar(y) => {
                let d = self.len() as f64;
                let r = f - y[k];
                (r * r / d, 2.0 * r / d)
            }
            Targets::OneHot(y) => {
                let p = class_probabilities(f);
                let lp0 = p[0].clamp(PROB_FLOOR, 1.0 - PROB_FLOOR).ln();
                let lp1 = p[1].clamp(PROB_FLOOR, 1.0 - PROB_FLOOR).ln();
                (-(y[k][0] * lp0 + y[k][1] * lp1), p[0] - y[k][0])
            }
        }
    }

    /// Cost at `params`, summed in dataset order.
    pub(crate) fn cost(&self, program: &Program, params: &[f64]) -> f64 {
        program
            .evaluate_many(params, self.angles.iter().map(|a| a.as_slice()))
            .into_iter()
            .enumerate()
            .map(|(k, f)| self.point_loss(k, f).0)
            .sum()
    }

}

fn dataset_cost(
    spec: &AnsatzSpec,
    params: &ParamVector,
    dataset: &Dataset,
    mask: Option<&DropoutMask>,
    kind: CostKind,
) -> Result<f64> {
    params.check_len(spec)?;
    let batch = Batch::new(spec, dataset, kind)?;
    let program = Program::new(spec, mask)?;
    Ok(batch.cost(&program, &params.values))
}

/// Mean squared error of the (masked) model over a regression dataset.
pub fn mse_cost(
    spec: &AnsatzSpec,
    params: &ParamVector,
    dataset: &Dataset,
    mask: Option<&DropoutMask>,
) -> Result<f64> {
    dataset_cost(spec, params, dataset, mask, CostKind::Mse)
}

/// Summed negative log-likelihood of the one-hot targets.
pub fn cross_entropy_cost(
    spec: &AnsatzSpec,
    params: &ParamVector,
    dataset: &Dataset,
    mask: Option<&DropoutMask>,
) -> Result<f64> {
    dataset_cost(spec, params, dataset, mask, CostKind::CrossEntropy)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    #[default]
    None,
    L1,
    L2,
}

/// `lambda * sum |theta_i|^p` and its subgradient. `sign(0)` is taken as 0.
pub fn regularization_penalty(
    params: &ParamVector,
    kind: Regularizer,
    lambda: f64,
) -> (f64, GradientVector) {
    let theta = &params.values;
    match kind {
        Regularizer::None => (0.0, GradientVector::zeros(theta.len())),
        Regularizer::L1 => (
            lambda * theta.iter().map(|t| t.abs()).sum::<f64>(),
            GradientVector {
                values: theta
                    .iter()
                    .map(|&t| if t == 0.0 { 0.0 } else { lambda * t.signum() })
                    .collect(),
            },
        ),
        Regularizer::L2 => (
            lambda * theta.iter().map(|t| t * t).sum::<f64>(),
            GradientVector {
                values: theta.iter().map(|t| 2.0 * lambda * t).collect(),
            },
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{ClassificationDataset, RegressionDataset};
    use crate::model::forward;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mse_examples() {
        let spec = AnsatzSpec::regression(5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = ParamVector::random_uniform(&spec, &mut rng);
        let f = |x: f64| forward(&spec, &params, &[x], None).unwrap();

        let exact = Dataset::Regression(RegressionDataset {
            points: vec![(0.1, f(0.1)), (-0.7, f(-0.7))],
        });
        assert_eq!(mse_cost(&spec, &params, &exact, None).unwrap(), 0.0);

        let single = Dataset::Regression(RegressionDataset {
            points: vec![(0.2, f(0.2) + 0.5)],
        });
        assert!((mse_cost(&spec, &params, &single, None).unwrap() - 0.25).abs() < 1e-15);

        // independent re-implementation over the gate-list route
        let pts: Vec<(f64, f64)> = (0..15)
            .map(|_| (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
            .collect();
        let mut mask = DropoutMask::full(&spec);
        mask.keep[0][3] = false;
        let mut acc = 0.0;
        for (x, y) in &pts {
            let gates = crate::model::circuit_gates(&spec, &params, &[*x], &mask).unwrap();
            let mut s = crate::StateVector::zero_state(5).unwrap();
            s.apply_gates(&gates).unwrap();
            let r = y - s.expectation(&spec.observable).unwrap();
            acc += r * r;
        }
        acc /= pts.len() as f64;
        let ds = Dataset::Regression(RegressionDataset { points: pts });
        let got = mse_cost(&spec, &params, &ds, Some(&mask)).unwrap();
        assert!((got - acc).abs() <= 1e-14, "{got} vs {acc}");

        let empty = Dataset::Regression(RegressionDataset::default());
        assert!(matches!(mse_cost(&spec, &params, &empty, None), Err(Error::Config(_))));
    }

    #[test]
    fn cross_entropy_examples() {
        let spec = AnsatzSpec::classification(5, 1);
        // theta = 0 and x = 0: both readout qubits stay |0>, so f = 0
        let zeros = ParamVector::zeros(&spec);
        let ds = Dataset::Classification(ClassificationDataset {
            points: vec![([0.0, 0.0], [1.0, 0.0]), ([0.0, 0.0], [0.0, 1.0]), ([0.0, 0.0], [1.0, 0.0])],
        });
        let c = cross_entropy_cost(&spec, &zeros, &ds, None).unwrap();
        assert!((c - 3.0 * 2f64.ln()).abs() < 1e-14);

        let bad = Dataset::Classification(ClassificationDataset {
            points: vec![([0.0, 0.0], [0.5, 0.5])],
        });
        assert!(matches!(cross_entropy_cost(&spec, &zeros, &bad, None), Err(Error::Data(_))));

        let reg = Dataset::Regression(RegressionDataset {
            points: vec![(0.0, 0.0)],
        });
        assert!(cross_entropy_cost(&spec, &zeros, &reg, None).is_err());
    }

    #[test]
    fn cross_entropy_limit_and_reimplementation() {
        // perfect-classification limit, evaluated on the point loss directly
        let spec = AnsatzSpec::classification(5, 1);
        let ds = Dataset::Classification(ClassificationDataset {
            points: vec![([0.0, 0.0], [1.0, 0.0])],
        });
        let batch = Batch::new(&spec, &ds, CostKind::CrossEntropy).unwrap();
        let (a, _) = batch.point_loss(0, 10.0);
        let (b, _) = batch.point_loss(0, 30.0);
        assert!(b < a && b >= 0.0 && b < 1e-12);

        let spec = AnsatzSpec::classification(5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = ParamVector::random_uniform(&spec, &mut rng);
        let pts: Vec<([f64; 2], [f64; 2])> = (0..12)
            .map(|i| {
                let x = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
                (x, if i % 3 == 0 { [1.0, 0.0] } else { [0.0, 1.0] })
            })
            .collect();
        let mut expect = 0.0;
        for (x, y) in &pts {
            let f = forward(&spec, &params, x, None).unwrap();
            let p1 = (1.0 / (1.0 + (-f).exp())).max(1e-12);
            let p2 = (1.0 / (1.0 + f.exp())).max(1e-12);
            expect -= y[0] * p1.ln() + y[1] * p2.ln();
        }
        let ds = Dataset::Classification(ClassificationDataset { points: pts });
        let got = cross_entropy_cost(&spec, &params, &ds, None).unwrap();
        assert!((got - expect).abs() <= 1e-12);
    }

    #[test]
    fn penalties() {
        let zero = ParamVector { values: vec![0.0; 4] };
        for k in [Regularizer::L1, Regularizer::L2] {
            let (p, g) = regularization_penalty(&zero, k, 0.3);
            assert_eq!(p, 0.0);
            assert!(g.values.iter().all(|v| *v == 0.0));
        }
        let t = ParamVector { values: vec![1.0, -2.0] };
        let (p, g) = regularization_penalty(&t, Regularizer::L2, 0.5);
        assert_eq!(p, 2.5);
        assert_eq!(g.values, vec![1.0, -2.0]);
        let (p, g) = regularization_penalty(&t, Regularizer::L1, 0.5);
        assert_eq!(p, 1.5);
        assert_eq!(g.values, vec![0.5, -0.5]);
    }
}
