//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::datasets::{gen_classification, gen_regression, Dataset, RegressionTarget, XSampling};
use crate::error::{Error, Result};
use crate::seeding::{derive_seed, stream};
use crate::training::{Regularizer, TrainConfig};

/// Either a named preset or a fully spelled-out ansatz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnsatzConfig {
    Full(AnsatzSpec),
    Preset {
        preset: AnsatzPreset,
        n_qubits: usize,
        n_layers: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzPreset {
    Regression,
    Classification,
}

impl AnsatzConfig {
    pub fn resolve(&self) -> AnsatzSpec {
        match self {
            AnsatzConfig::Full(spec) => spec.clone(),
            AnsatzConfig::Preset {
                preset: AnsatzPreset::Regression,
                n_qubits,
                n_layers,
            } => AnsatzSpec::regression(*n_qubits, *n_layers),
            AnsatzConfig::Preset {
                preset: AnsatzPreset::Classification,
                n_qubits,
                n_layers,
            } => AnsatzSpec::classification(*n_qubits, *n_layers),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Sine,
    Abs,
    Disk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub train_count: usize,
    pub test_count: usize,
    pub noise_std: f64,
    pub sampling: XSampling,
    /// Train and test sets come from distinct streams derived from this seed.
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            kind: DatasetKind::Sine,
            train_count: 20,
            test_count: 100,
            noise_std: 0.1,
            sampling: XSampling::UniformRandom,
            seed: 1,
        }
    }
}

impl DatasetConfig {
    pub fn generate(&self) -> Result<(Dataset, Dataset)> {
        let train_seed = derive_seed(self.seed, stream::TRAIN_DATA);
        let test_seed = derive_seed(self.seed, stream::TEST_DATA);
        let reg = |target, count, seed| {
            gen_regression(target, count, self.noise_std, self.sampling, seed).map(Dataset::Regression)
        };
        match self.kind {
            DatasetKind::Sine => Ok((
                reg(RegressionTarget::Sine, self.train_count, train_seed)?,
                reg(RegressionTarget::Sine, self.test_count, test_seed)?,
            )),
            DatasetKind::Abs => Ok((
                reg(RegressionTarget::Abs, self.train_count, train_seed)?,
                reg(RegressionTarget::Abs, self.test_count, test_seed)?,
            )),
            DatasetKind::Disk => Ok((
                Dataset::Classification(gen_classification(self.train_count, train_seed)?),
                Dataset::Classification(gen_classification(self.test_count, test_seed)?),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Points per axis of the model-evaluation grid.
    pub grid_points: usize,
    /// Trailing window (in records) averaged into the smoothed final errors.
    pub final_window: usize,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            grid_points: 201,
            final_window: 50,
            svg: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    LayerRate,
    GateRate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    None,
    Dropout,
    L1,
    L2,
}

/// One row of a regularizer comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub name: String,
    pub kind: VariantKind,
    pub iterations: usize,
    #[serde(default)]
    pub layer_rate: f64,
    #[serde(default)]
    pub gate_rate: f64,
    /// Penalty weights tried for L1/L2; the best by mean final test error wins.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Record every this many iterations (defaults to the train setting).
    #[serde(default)]
    pub eval_every: Option<usize>,
}

pub fn default_lambdas() -> Vec<f64> {
    vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub variants: Vec<VariantConfig>,
}

impl CompareConfig {
    /// Regularizer comparison: no regularization and dropout at 1000
    /// iterations, L1 and L2 at 10000.
    pub fn table_default() -> Self {
        let v = |name: &str, kind, iterations, rates: (f64, f64)| VariantConfig {
            name: name.into(),
            kind,
            iterations,
            layer_rate: rates.0,
            gate_rate: rates.1,
            lambdas: default_lambdas(),
            eval_every: None,
        };
        CompareConfig {
            variants: vec![
                v("none", VariantKind::None, 1000, (0.0, 0.0)),
                v("dropout", VariantKind::Dropout, 1000, (0.2, 0.2)),
                v("l1", VariantKind::L1, 10000, (0.0, 0.0)),
                v("l2", VariantKind::L2, 10000, (0.0, 0.0)),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_seeds")]
    pub ensemble_seeds: Vec<u64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
}

fn default_name() -> String {
    "experiment".into()
}

pub fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

impl ExperimentConfig {
    pub fn new(ansatz: AnsatzSpec, dataset: DatasetConfig, train: TrainConfig) -> Self {
        ExperimentConfig {
            name: default_name(),
            ansatz: AnsatzConfig::Full(ansatz),
            dataset,
            train,
            ensemble_seeds: default_seeds(),
            output: OutputConfig::default(),
            sweep: None,
            compare: None,
        }
    }

    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    /// The config with the ansatz spelled out in full, as echoed into outputs.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.ansatz = AnsatzConfig::Full(self.ansatz.resolve());
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("experiment config serializes to TOML")
    }

    pub fn spec(&self) -> AnsatzSpec {
        self.ansatz.resolve()
    }

    /// Per-seed training config: the ensemble seed replaces `train.seed`.
    pub fn train_for_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.train.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.spec();
        spec.validate().map_err(|e| Error::field("ansatz", e.to_string()))?;
        self.train.validate()?;
        if self.ensemble_seeds.is_empty() {
            return Err(Error::field("ensemble_seeds", "at least one seed is required"));
        }
        let d = &self.dataset;
        if d.train_count == 0 || d.test_count == 0 {
            return Err(Error::field("dataset.train_count", "train and test counts must be positive"));
        }
        if !(d.noise_std >= 0.0 && d.noise_std.is_finite()) {
            return Err(Error::field("dataset.noise_std", "must be >= 0"));
        }
        let features = spec.n_features();
        match (d.kind, features) {
            (DatasetKind::Disk, 2) | (DatasetKind::Sine | DatasetKind::Abs, 1) => {}
            (kind, n) => {
                return Err(Error::field(
                    "dataset.kind",
                    format!("{kind:?} data does not fit an ansatz reading {n} features"),
                ))
            }
        }
        if d.kind == DatasetKind::Disk && d.train_count < 2 {
            return Err(Error::field("dataset.train_count", "classification needs at least 2 points"));
        }
        if self.output.grid_points < 2 {
            return Err(Error::field("output.grid_points", "must be at least 2"));
        }
        if self.output.final_window == 0 {
            return Err(Error::field("output.final_window", "must be at least 1"));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::field("sweep.values", "empty"));
            }
            if let Some(v) = s.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::field("sweep.values", format!("{v} is not in [0, 1]")));
            }
        }
        if let Some(c) = &self.compare {
            if c.variants.is_empty() {
                return Err(Error::field("compare.variants", "empty"));
            }
            for (i, v) in c.variants.iter().enumerate() {
                let at = |f: &str| format!("compare.variants[{i}].{f}");
                if v.iterations == 0 {
                    return Err(Error::field(at("iterations"), "must be at least 1"));
                }
                if matches!(v.kind, VariantKind::L1 | VariantKind::L2) {
                    if v.lambdas.is_empty() {
                        return Err(Error::field(at("lambdas"), "empty"));
                    }
                    if let Some(l) = v.lambdas.iter().find(|l| !(**l >= 0.0)) {
                        return Err(Error::field(at("lambdas"), format!("{l} is negative")));
                    }
                }
                for (name, r) in [("layer_rate", v.layer_rate), ("gate_rate", v.gate_rate)] {
                    if !(0.0..=1.0).contains(&r) {
                        return Err(Error::field(at(name), format!("{r} is not in [0, 1]")));
                    }
                }
                if v.eval_every == Some(0) {
                    return Err(Error::field(at("eval_every"), "must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

impl VariantConfig {
    /// Training configs for this variant, one per penalty weight (a single
    /// entry for `none` and `dropout`).
    pub fn train_configs(&self, base: &TrainConfig) -> Vec<(Option<f64>, TrainConfig)> {
        let mut cfg = TrainConfig {
            iterations: self.iterations,
            eval_every: self.eval_every.unwrap_or(base.eval_every),
            ..base.clone()
        }
        .with_dropout(0.0, 0.0)
        .with_regularizer(Regularizer::None, 0.0);
        match self.kind {
            VariantKind::None => vec![(None, cfg)],
            VariantKind::Dropout => {
                cfg = cfg.with_dropout(self.layer_rate, self.gate_rate);
                vec![(None, cfg)]
            }
            VariantKind::L1 | VariantKind::L2 => {
                let kind = if self.kind == VariantKind::L1 {
                    Regularizer::L1
                } else {
                    Regularizer::L2
                };
                self.lambdas
                    .iter()
                    .map(|&l| (Some(l), cfg.clone().with_regularizer(kind, l)))
                    .collect()
            }
        }
    }
}
