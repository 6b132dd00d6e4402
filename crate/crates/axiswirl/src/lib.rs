//! Axially symmetric incompressible Navier-Stokes in a periodic cylinder,
//! formulated in the reduced variables (swirl u = r v_phi, angular
//! vorticity chi = v_{r,z} - v_{z,r}, stream function psi), together with
//! a verification harness that numerically monitors the energy estimates,
//! weighted Hardy inequalities, elliptic explicit-constant estimates,
//! smallness restrictions, and exponential decay envelopes attached to
//! this system.
//!
//! Modules:
//! * [`grid`] — annular cylindrical mesh and r-weighted quadrature;
//! * [`fields`] — scalar fields, stencils, cut-offs, evolution right-hand sides;
//! * [`elliptic`] — stream-function / eta solvers (FFT in z + banded in r);
//! * [`evolve`] — IMEX time integration of the coupled (u, chi, psi) system;
//! * [`monitors`] — norms, level-set functionals, smallness restrictions;
//! * [`estimates`] — inequality verification engine and decay envelopes;
//! * [`cli`] — configuration, run orchestration, report emission.

pub mod cli;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod estimates;
pub mod evolve;
pub mod fields;
pub mod grid;
pub mod mms;
pub mod monitors;
pub mod quad;

pub use error::{Error, Result};
