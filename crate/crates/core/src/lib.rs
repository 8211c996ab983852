//! Numerical and combinatorial machinery around closed orbits of a contact
//! flow: the linearized return dynamics and its rotation numbers, an exact
//! graded chain complex built from orbit data, planar vortex moduli spaces
//! with their Hamiltonian dynamics, an integrable local model for graphs,
//! and the cutoff/contraction toolbox used to certify deformed contact
//! forms.

pub mod approx;
pub mod ech;
pub mod local_model;
pub mod moduli;
pub mod error;
pub mod fourier;
pub mod reeb;
pub mod vortex;

pub use error::{Error, Result};
