//! Self-contained dense linear algebra and validation kernels.

pub mod dd;
mod decomp;
mod diff;
mod matrix;

pub use decomp::{
    condition_number, numerical_rank, numerical_rank_complex, singular_values,
    singular_values_complex, sym_inverse, symmetric_eigen, SymmetricEigen, RANK_TOL,
    SYMMETRY_TOL,
};
pub use diff::{central_diff, default_steps, DiffValue};
pub use matrix::{ComplexMatrix, Matrix, RealMatrix};
