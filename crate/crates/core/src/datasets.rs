//! Seeded synthetic datasets: noisy `sin(pi x)`, noisy `|x| - 1/2`, and a
//! two-class disk problem on `[-1, 1]^2`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::rng_for;

/// Squared radius of the class-0 disk.
pub const DISK_RADIUS_SQR: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionTarget {
    /// `sin(pi x)`
    Sine,
    /// `|x| - 1/2`
    Abs,
}

impl RegressionTarget {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            RegressionTarget::Sine => (PI * x).sin(),
            RegressionTarget::Abs => x.abs() - 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XSampling {
    UniformGrid,
    #[default]
    UniformRandom,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegressionDataset {
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassificationDataset {
    pub points: Vec<([f64; 2], [f64; 2])>,
}

/// Either kind of dataset; the variant decides which cost applies.
#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Regression(RegressionDataset),
    Classification(ClassificationDataset),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Regression(d) => d.points.len(),
            Dataset::Classification(d) => d.points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        match self {
            Dataset::Regression(d) => d.points.iter().map(|p| vec![p.0]).collect(),
            Dataset::Classification(d) => d.points.iter().map(|p| p.0.to_vec()).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Dataset::Regression(d) => {
                out.push_str("x,y\n");
                for (x, y) in &d.points {
                    let _ = writeln!(out, "{x},{y}");
                }
            }
            Dataset::Classification(d) => {
                out.push_str("x0,x1,y0,y1\n");
                for (x, y) in &d.points {
                    let _ = writeln!(out, "{},{},{},{}", x[0], x[1], y[0], y[1]);
                }
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses the format written by [`to_csv`](Self::to_csv); the header
    /// decides the dataset kind.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("empty dataset CSV".into()))?;
        let rows: Vec<Vec<f64>> = lines
            .enumerate()
            .map(|(i, l)| {
                l.split(',')
                    .map(|c| {
                        c.trim().parse::<f64>().map_err(|_| {
                            Error::Data(format!("row {}: cannot parse `{c}`", i + 1))
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        match header.trim() {
            "x,y" => Ok(Dataset::Regression(RegressionDataset {
                points: rows
                    .iter()
                    .map(|r| match r.as_slice() {
                        [x, y] => Ok((*x, *y)),
                        _ => Err(Error::Data("regression row needs 2 columns".into())),
                    })
                    .collect::<Result<_>>()?,
            })),
            "x0,x1,y0,y1" => Ok(Dataset::Classification(ClassificationDataset {
                points: rows
                    .iter()
                    .map(|r| match r.as_slice() {
                        [a, b, c, d] => Ok(([*a, *b], [*c, *d])),
                        _ => Err(Error::Data("classification row needs 4 columns".into())),
                    })
                    .collect::<Result<_>>()?,
            })),
            other => Err(Error::Data(format!("unknown dataset header `{other}`"))),
        }
    }
}

/// Noisy samples of a scalar target on `[-1, 1]`.
pub fn gen_regression(
    target: RegressionTarget,
    count: usize,
    noise_std: f64,
    sampling: XSampling,
    seed: u64,
) -> Result<RegressionDataset> {
    if count == 0 {
        return Err(Error::Config("dataset count must be at least 1".into()));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::Config(format!("noise_std = {noise_std} must be >= 0")));
    }
    let mut rng: ChaCha8Rng = rng_for(seed, 0);
    let noise = Normal::new(0.0, noise_std).expect("validated std");
    let points = (0..count)
        .map(|k| {
            let x = match sampling {
                XSampling::UniformGrid if count == 1 => 0.0,
                XSampling::UniformGrid => -1.0 + 2.0 * k as f64 / (count - 1) as f64,
                XSampling::UniformRandom => rng.gen_range(-1.0..=1.0),
            };
            let eps = if noise_std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            (x, target.eval(x) + eps)
        })
        .collect();
    Ok(RegressionDataset { points })
}

/// One-hot label of the disk problem: `(1, 0)` strictly inside the disk.
pub fn disk_label(x: [f64; 2]) -> [f64; 2] {
    if x[0] * x[0] + x[1] * x[1] < DISK_RADIUS_SQR {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    }
}

/// Uniform points on `[-1, 1]^2` labelled by [`disk_label`].
pub fn gen_classification(count: usize, seed: u64) -> Result<ClassificationDataset> {
    if count < 2 {
        return Err(Error::Config("classification count must be at least 2".into()));
    }
    let mut rng: ChaCha8Rng = rng_for(seed, 0);
    let points = (0..count)
        .map(|_| {
            let x = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
            (x, disk_label(x))
        })
        .collect();
    Ok(ClassificationDataset { points })
}
