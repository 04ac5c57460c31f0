//! Simulation of the Dirichlet-to-Neumann map of the magnetic Schrodinger
//! equation on the unit cube, together with the Fourier-domain
//! reconstruction of the magnetic field and the time-dependent electric
//! potential from boundary data, and an experiment harness measuring the
//! stability of both reconstructions under calibrated measurement noise.

pub mod error;
pub mod field;
pub mod forward;
pub mod grid;
pub mod go;
pub mod numerics;
pub mod transport;

pub use error::{CoreError, Result};
pub use grid::{Face, Grid, InteriorMap};
