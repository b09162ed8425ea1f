//! Cross-benchmark of missing-data imputation, feature selection, and
//! regression for FDC-based virtual metrology.
//!
//! The numeric core is generic over the scalar type (`f32` or `f64`) through
//! the [`scalar::Real`] trait; the aliases below pin the common choices.

pub mod bench;
pub mod datagen;
pub mod dataset;
pub mod impute;
pub mod matrix;
pub mod plot;
pub mod regress;
pub mod scalar;
pub mod seeding;
pub mod select;

mod linalg;
mod tree;

pub use scalar::Real;

/// FDC dataset in double precision, the default for the CLI and benchmark.
pub type Dataset64 = dataset::FdcDataset<f64>;
/// FDC dataset in single precision.
pub type Dataset32 = dataset::FdcDataset<f32>;
/// Imputation output in double precision.
pub type Imputed64 = impute::ImputedDataset<f64>;
/// Fitted regressor in double precision.
pub type Model64 = regress::TrainedModel<f64>;
