//! Implicit finite volume solver for compressible Navier-Stokes-Fourier Rayleigh-Benard
//! convection, with structure monitors and long-time statistics.

pub mod compensated;
pub mod convergence;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod monitors;
pub mod operators;
pub mod scheme;
pub mod thermo;

pub use error::{Error, Result};
