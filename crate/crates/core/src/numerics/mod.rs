//! Shared numerical kernels: FFTs, sine transforms, interpolation and Krylov
//! solvers.

pub mod dst;
pub mod fft;
pub mod interp;
pub mod linsolve;
