//! Stochastic gradient Langevin dynamics driven by dependent data streams:
//! samplers, explicit Wasserstein-1 bound constants and the tooling to
//! check them empirically.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod potentials;
pub mod quadrature;
pub mod reference;
pub mod sgld;
pub mod streams;
pub mod theory;
pub mod vector;
pub mod wasserstein;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use potentials::{builtin_problem, ProblemConstants, ProblemParams, ProblemSpec};
pub use reference::ReferenceTarget;
pub use sgld::{lambda_max, run_ensemble, InitLaw, SgldConfig};
pub use streams::{make_stream, StreamFamily, StreamSpec};
pub use wasserstein::SampleSet;
