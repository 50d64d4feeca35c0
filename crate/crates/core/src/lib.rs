//! Density-matrix dynamics under time-dependent Hamiltonians, vectorized in
//! the Pauli-string Lie algebra.
//!
//! The crate is organized bottom-up:
//! * [`pauli`]: basis, symplectic products, structure constants, projections.
//! * [`liouville`]: orthogonal generators and the three vectorized propagators.
//! * [`oracle`]: direct integration of the matrix von Neumann equation.
//! * [`circuit`]: statevector emulation of the phase-kickback circuit.
//! * [`models`]: drive terms, the two reference spin models, JSON model files.
//! * [`io`]: CSV writers shared by the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod coeffs;
pub mod error;
pub mod io;
pub mod linalg;
pub mod liouville;
pub mod models;
pub mod oracle;
pub mod pauli;

pub use coeffs::{AlphaVector, CoeffVector};
pub use error::{Error, Result};
pub use liouville::{
    AnchorPolicy, Drive, FnDrive, Method, Propagator, TimeGrid, Trajectory, TrajectoryMeta,
};
pub use pauli::{
    build_basis, build_structure_tensor, multiply, project, reconstruct, DenseOperator, PauliBasis,
    PauliString, Phase, StructureTensor,
};

pub use nalgebra;
pub use num_complex::Complex64;
