//! Finite-element Laplace eigenpairs on a basic domain with an attached branch,
//! and the analysis of how eigenfunctions decay along the branch.

pub mod geometry;
pub mod eigen;
pub mod fem;
pub mod mesh;
pub mod analysis;
pub mod oracle;
