//! Dense complex linear algebra: matrices, a general eigensolver, the
//! biorthogonal eigensystem of a non-Hermitian matrix, and matrix functions.

mod biorth;
mod eigen;
mod funcs;
mod matrix;
mod sparse;

pub use biorth::{biorthogonalize, BiorthogonalEigensystem};
pub use eigen::{eigen_general, eigenvalues, Eigen};
pub use funcs::{expm, expm_vec, mat_function_via_eigen, mat_log_via_eigen, null_vector};
pub use sparse::Csr;
pub use matrix::{
    format_complex, format_matrix_text, parse_complex, parse_matrix_text, ComplexMatrix, Lu, C64, I, ONE, ZERO,
};
