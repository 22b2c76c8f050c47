//! Data re-uploading variational quantum models trained with entangling
//! dropout.
//!
//! The crate simulates the circuits exactly on a dense statevector, computes
//! exact gradients (parameter shift, plus an adjoint fast path), and trains
//! with Adam while randomly removing CNOT gates at every iteration. The
//! [`experiment`] module drives multi-seed runs, dropout-rate sweeps and
//! regularizer comparisons from TOML configs.

pub mod ansatz;
pub mod datasets;
pub mod error;
pub mod experiment;
pub mod fourier;
pub mod gradients;
pub mod model;
pub mod seeding;
pub mod statevector;
pub mod training;

pub use ansatz::{AnsatzSpec, DropoutMask, EncodingFn, EntanglerSlot, ParamVector};
pub use datasets::{ClassificationDataset, Dataset, RegressionDataset, RegressionTarget, XSampling};
pub use error::{Error, Result};
pub use fourier::{fourier_coefficients, FourierSpectrum};
pub use gradients::{adjoint_grad, cost_gradient, parameter_shift_grad, GradientMethod, GradientVector};
pub use model::{classifier_output, forward, Program};
pub use statevector::{Axis, Gate, Observable, StateVector};
pub use training::{train, TrainConfig, TrainTrace};
