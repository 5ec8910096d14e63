//! Stochastic Burgers' equation on the real line driven by multiplicative
//! space-time white noise, solved three ways: a mild exponential-Euler scheme,
//! the integral equation for the Feynman-Kac process `psi`, and Monte Carlo
//! over backward Brownian motions. The statistics layer checks moment bounds
//! and Hölder exponents on ensembles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod feynman_kac;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod noise;
pub mod problem;
pub mod quad;
pub mod solver;
pub mod stats;

pub use error::{LabError, Result};
pub use kernel::{heat_kernel, HeatPropagator, Lemma1Params, Padding};
pub use lattice::{LatticeGrid, ScalarField};
pub use noise::NoiseField;
pub use problem::{build_spec, sigma_eval, Config, Family, Profile, ProblemSpec, SigmaKind};
