use nalgebra::{Cholesky, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use super::{to_complex, ComplexMatrix, RealMatrix, RealVector};
use crate::error::{Error, Result};

/// Norm used for jump-map bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum NormSpec {
    /// Induced Euclidean 2-norm.
    #[default]
    Spectral,
    /// Norm induced by `‖x‖ = sqrt(xᵀ W x)` for a symmetric positive
    /// definite weight `W = L Lᵀ`.
    Ellipsoidal(EllipsoidalWeight),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidalWeight {
    weight: RealMatrix,
    // Lᵀ and L⁻ᵀ.
    upper: RealMatrix,
    upper_inv: RealMatrix,
}

impl EllipsoidalWeight {
    pub fn weight(&self) -> &RealMatrix {
        &self.weight
    }
}

impl NormSpec {
    pub fn ellipsoidal(weight: RealMatrix) -> Result<Self> {
        let n = weight.nrows();
        if n == 0 || weight.ncols() != n {
            return Err(Error::DimensionMismatch("norm weight must be square".into()));
        }
        let asym = (&weight - weight.transpose()).norm();
        if asym > 1e-10 * weight.norm() {
            return Err(Error::InvalidArgument("norm weight is not symmetric".into()));
        }
        let chol = Cholesky::new(symmetrize(&weight))
            .ok_or_else(|| Error::InvalidArgument("norm weight is not positive definite".into()))?;
        let upper = chol.l().transpose();
        let upper_inv = upper
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("norm weight is singular".into()))?;
        Ok(NormSpec::Ellipsoidal(EllipsoidalWeight {
            weight,
            upper,
            upper_inv,
        }))
    }

    pub fn weight(&self) -> Option<&RealMatrix> {
        match self {
            NormSpec::Spectral => None,
            NormSpec::Ellipsoidal(w) => Some(&w.weight),
        }
    }

    /// Matrix whose spectral norm equals the induced norm of `k`.
    pub fn to_spectral(&self, k: &ComplexMatrix) -> ComplexMatrix {
        match self {
            NormSpec::Spectral => k.clone(),
            NormSpec::Ellipsoidal(w) => to_complex(&w.upper) * k * to_complex(&w.upper_inv),
        }
    }

    /// Whether the weight is diagonal (always true for the spectral norm).
    pub fn is_diagonal(&self) -> bool {
        match self {
            NormSpec::Spectral => true,
            NormSpec::Ellipsoidal(w) => {
                let n = w.weight.nrows();
                (0..n).all(|i| (0..n).all(|j| i == j || w.weight[(i, j)] == 0.0))
            }
        }
    }

    /// Condition number of the weight; 1 for the spectral norm.
    pub fn weight_condition(&self) -> f64 {
        match self {
            NormSpec::Spectral => 1.0,
            NormSpec::Ellipsoidal(w) => {
                let e = SymmetricEigen::new(w.weight.clone()).eigenvalues;
                e.max() / e.min()
            }
        }
    }
}

/// Largest singular value.
pub fn spectral_norm(k: &ComplexMatrix) -> f64 {
    if k.is_empty() {
        return 0.0;
    }
    k.singular_values().max()
}

/// Induced norm of a complex matrix.
pub fn operator_norm(k: &ComplexMatrix, norm: &NormSpec) -> f64 {
    spectral_norm(&norm.to_spectral(k))
}

pub fn operator_norm_real(k: &RealMatrix, norm: &NormSpec) -> f64 {
    let m = match norm {
        NormSpec::Spectral => k.clone(),
        NormSpec::Ellipsoidal(w) => &w.upper * k * &w.upper_inv,
    };
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn vector_norm(x: &RealVector, norm: &NormSpec) -> f64 {
    match norm {
        NormSpec::Spectral => x.norm(),
        NormSpec::Ellipsoidal(w) => (&w.upper * x).norm(),
    }
}

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition_number(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    match SVD::try_new(m.clone(), false, false, f64::EPSILON, 10_000) {
        Some(svd) => {
            let s = svd.singular_values;
            let (max, min) = (s.max(), s.min());
            if min > 0.0 {
                max / min
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    }
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(k: &RealMatrix) -> Result<f64> {
    if k.nrows() != k.ncols() {
        return Err(Error::DimensionMismatch("spectral radius of non-square matrix".into()));
    }
    if k.is_empty() {
        return Ok(0.0);
    }
    let schur = Schur::try_new(k.clone(), f64::EPSILON, 10_000).ok_or(Error::NonConvergence)?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z: &Complex64| z.norm())
        .fold(0.0, f64::max))
}

pub fn symmetrize(q: &RealMatrix) -> RealMatrix {
    (q + q.transpose()) * 0.5
}

pub fn min_eigenvalue_sym(q: &RealMatrix) -> f64 {
    SymmetricEigen::new(symmetrize(q)).eigenvalues.min()
}

pub fn max_eigenvalue_sym(q: &RealMatrix) -> f64 {
    SymmetricEigen::new(symmetrize(q)).eigenvalues.max()
}

/// `true` when the symmetric part of `q` has every eigenvalue above `margin`.
pub fn is_positive_definite(q: &RealMatrix, margin: f64) -> bool {
    q.nrows() == q.ncols() && !q.is_empty() && min_eigenvalue_sym(q) > margin
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::real_matrix;

    #[test]
    fn spectral_norm_of_diagonal() {
        let k = to_complex(&real_matrix(&[&[3.0, 0.0], &[0.0, -4.0]]));
        assert!((spectral_norm(&k) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn ellipsoidal_norm_matches_generalized_eigenvalue_formula() {
        let w = real_matrix(&[&[2.0, 0.3, 0.0], &[0.3, 0.5, 0.1], &[0.0, 0.1, 1.0]]);
        let k = real_matrix(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        let spec = NormSpec::ellipsoidal(w.clone()).unwrap();
        // sqrt(λmax(W⁻¹ Kᵀ W K)).
        let m = w.clone().try_inverse().unwrap() * k.transpose() * &w * &k;
        let oracle = spectral_radius(&m).unwrap().sqrt();
        assert!((operator_norm_real(&k, &spec) - oracle).abs() < 1e-12);
        assert!((operator_norm(&to_complex(&k), &spec) - oracle).abs() < 1e-12);
    }

    #[test]
    fn ellipsoidal_rejects_indefinite_weight() {
        let w = real_matrix(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(NormSpec::ellipsoidal(w).is_err());
    }

    #[test]
    fn radius_and_definiteness() {
        let k = real_matrix(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert!((spectral_radius(&k).unwrap() - 1.0).abs() < 1e-14);
        assert!(is_positive_definite(&RealMatrix::identity(2, 2), 0.5));
        assert!(!is_positive_definite(&real_matrix(&[&[1.0, 2.0], &[2.0, 1.0]]), 0.0));
        assert!(condition_number(&to_complex(&real_matrix(&[&[1.0, 0.0], &[0.0, 0.0]]))).is_infinite());
    }
}
