//! Dense linear-algebra kernels: eigenstructure, matrix exponential,
//! operator norms and definiteness tests. Everything here is pure and
//! sized for desk-scale systems (n up to a few dozen).

mod eigen;
mod expm;
mod norm;

pub use eigen::{eigendecompose, EigenStructure, BASIS_CONDITION_LIMIT, CLUSTER_TOLERANCE};
pub use expm::{matrix_exp, matrix_exp_eigen, matrix_exp_pade, FlowMap, EIGEN_PATH_CONDITION_LIMIT};
pub use norm::{
    condition_number, is_positive_definite, min_eigenvalue_sym, max_eigenvalue_sym,
    operator_norm, operator_norm_real, spectral_norm, spectral_radius, symmetrize, vector_norm,
    EllipsoidalWeight, NormSpec,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense real matrix, row/column counts carried by the matrix itself.
pub type RealMatrix = DMatrix<f64>;
/// Dense complex matrix.
pub type ComplexMatrix = DMatrix<Complex64>;
/// Real state vector.
pub type RealVector = nalgebra::DVector<f64>;

/// Lift a real matrix into the complex field.
pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Real part of a complex matrix.
pub fn real_part(m: &ComplexMatrix) -> RealMatrix {
    m.map(|z| z.re)
}

/// Imaginary part of a complex matrix.
pub fn imag_part(m: &ComplexMatrix) -> RealMatrix {
    m.map(|z| z.im)
}

/// Build a real matrix from row slices. Panics on ragged rows; meant for
/// literals in tests and examples.
pub fn real_matrix(rows: &[&[f64]]) -> RealMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}
