//! Exact symbolic computation in lattice vertex superalgebras.
//!
//! The crate is organised bottom up: [`foundation`] (scalars, partitions),
//! [`lattice`] (forms and the ε-cocycle), [`fock`] (the vertex algebra
//! V_Λ and all its n-products), [`conformal`] (presented conformal
//! algebras and their embeddings), [`bfc`] (the boson–fermion side) and
//! [`roots`] (closure and classification of root systems).

pub mod bfc;
pub mod conformal;
pub mod exec;
pub mod fock;
pub mod foundation;
pub mod lattice;
pub mod roots;

pub use exec::Exec;
pub use foundation::{IntPoly, Partition, Scalar};
pub use lattice::LatticeContext;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown algebra `{0}`")]
    UnknownAlgebra(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
