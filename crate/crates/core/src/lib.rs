//! Randomised non-linear feature selection by Monte-Carlo estimates of each
//! feature's contribution to centred kernel-target alignment, plus a
//! multiple-kernel boosting predictor built on the selected feature sets.

pub mod data;
pub mod error;
pub mod kernel;
pub mod lp;
pub mod mkl;
pub mod report;
pub mod sampling;
pub mod selector;

pub use data::{gen_xor, load_csv, write_csv, Dataset, Labels, NoiseKind};
pub use error::{Error, Result};
pub use kernel::{Bandwidth, LabelKernelKind};
pub use mkl::{fit_ensemble, EnsembleParams, MklModel};
pub use sampling::FeatureSet;
pub use selector::{run, RandSelConfig, RowMode, SelectionTrace};
