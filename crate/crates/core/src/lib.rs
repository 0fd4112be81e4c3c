//! Refined asymptotics of lossy compression with random Gaussian codebooks:
//! rate-distortion, dispersion, second-order and moderate-deviations
//! quantities, excess-distortion exponents for spherical and i.i.d. Gaussian
//! codebooks, and estimators of the ensemble excess-distortion probability.

pub mod asymptotics;
pub mod ensemble;
pub mod error;
pub mod extended;
pub mod rng;
pub mod shellprob;
pub mod sources;
pub mod specfun;

pub use asymptotics::{ExponentPoint, SecondOrderPoint};
pub use ensemble::{EnsembleEstimate, EstimateMethod, MdPoint, SimPlan};
pub use error::{Error, Result};
pub use extended::Extended;
pub use shellprob::{CodebookKind, DistortionSetup, ShellMethod, ShellProbability};
pub use sources::{MomentSummary, SourceConfig, SourceModel};
pub use specfun::{LogProbability, Probability};
