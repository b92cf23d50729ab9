//! Theory-agnostic tomography of a three-level system.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`experiment`] builds Haar or fiducial designs and simulates Poissonian
//!    three-detector counts, giving train and test frequency matrices.
//! 2. [`lowrank_fit`] fits a rank-`k` probability matrix `D = S E` to each
//!    frequency matrix by weighted, constrained alternating least squares and
//!    picks the rank with the smallest test error.
//! 3. [`gauge`] factors the chosen `D` and aligns the state vectors with the
//!    quantum reference via a least-squares gauge transformation.
//! 4. [`geometry`] builds the realized (vertex) and consistent (dual,
//!    halfspace) bodies and measures them with ray shooting and 3D projections.
//! 5. [`cli`] orchestrates the stages through files.
//!
//! [`qutrit_ref`] holds the quantum reference model used to generate data and
//! to check the fitted geometry.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod gauge;
pub mod geometry;
pub mod io;
pub mod lowrank_fit;
mod qp;
pub mod qutrit_ref;
pub mod rng;

pub use error::{Error, Result};
pub use experiment::{CountTable, Design, DesignKind, FrequencyMatrix, SimulationParams};
pub use gauge::GaugeResult;
pub use geometry::{HPolytope, Projection3D, RayProbe, VPolytope};
pub use lowrank_fit::{FitOptions, FitReport, GptModel, RankSweep};
pub use qutrit_ref::{BlochEffectVector, BlochStateVector, HermitianOp3, StructureTensor};
