//! Discontinuous Galerkin discretizations of constant-coefficient hyperbolic
//! systems with penalty-parameterized numerical fluxes, and tools for analysing
//! how their spectra split into conforming and damped non-conforming parts as
//! the penalty parameter grows.

pub mod assembly;
pub mod conforming;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod pde;
pub mod refelem;
pub mod spectral;
pub mod tauanalysis;
pub mod timedomain;

pub use error::{Error, Result};
pub use faer::c64;
