//! Representation machinery for reductive Lie groups and equivariant
//! cluster-expansion features for point clouds.
//!
//! The crate is organised in four layers:
//!
//! * [`algebra`] — Lie algebras as structure constants, representations as
//!   generator-matrix tuples, exponentiation, validation, sampling, and
//!   algebraic combination (tensor product, direct sum, product groups).
//! * [`irreps`] — explicit irreducible representations: SU(2) ladder
//!   operators, SO(3)/O(3), SO(1,3) from a double-SU(2) construction, and
//!   SU(N) through Gelfand-Tsetlin patterns.
//! * [`coupling`] — generalized Clebsch-Gordan intertwiners computed by a
//!   numerical null-space method, selection rules, symmetric tensor-product
//!   couplings, and block diagonalization of reducible representations.
//! * [`cluster`] — the equivariant cluster expansion: one-particle
//!   embeddings, pooled/product/symmetrized bases, tensor-reduced channel
//!   mixing, multi-layer message passing, readouts and linear fitting.

pub mod algebra;
pub mod cluster;
pub mod coupling;
pub mod demo;
pub mod error;
pub mod irreps;
pub mod linalg;
pub mod oracles;

pub use algebra::{ElementCoords, GroupElement, LieAlgebra, Rep, ValidationReport};
pub use coupling::{CouplingTensor, SelectionRule};
pub use error::{Error, Result};
pub use irreps::IrrepLabel;
