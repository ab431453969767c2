//! Laplace–Beltrami discretization and truncated spectral decomposition.

mod eigen;
mod laplacian;
mod skyline;

pub use eigen::{solve_eigs, EigenOptions, EigenSolver, SpectralBasis};
pub use laplacian::{build_laplacian, Laplacian, LaplacianOptions, SymmetricSparse, COT_CLAMP};
