use nalgebra::DMatrix;

use super::eigen::{eigendecompose, EigenStructure};
use super::{real_part, ComplexMatrix, RealMatrix};
use crate::error::{Error, Result};

/// Above this basis condition number the flow uses scaling and squaring.
pub const EIGEN_PATH_CONDITION_LIMIT: f64 = 1e8;

/// Precomputed flow `t ↦ e^{At}` for one matrix.
#[derive(Debug, Clone)]
pub struct FlowMap {
    kind: FlowKind,
}

#[derive(Debug, Clone)]
enum FlowKind {
    Eigen {
        eig: EigenStructure,
        inverse: ComplexMatrix,
    },
    Pade {
        a: RealMatrix,
    },
}

impl FlowMap {
    pub fn new(a: &RealMatrix) -> Result<Self> {
        match eigendecompose(a) {
            Ok(eig) => Self::from_eigen(a, eig),
            Err(Error::IllConditionedBasis(_)) => Ok(FlowMap {
                kind: FlowKind::Pade { a: a.clone() },
            }),
            Err(e) => Err(e),
        }
    }

    /// Use an already computed Jordan decomposition of `a` when it is well
    /// conditioned.
    pub fn from_eigen(a: &RealMatrix, eig: EigenStructure) -> Result<Self> {
        if eig.condition_number() <= EIGEN_PATH_CONDITION_LIMIT {
            if let Ok(inverse) = eig.basis_inverse() {
                return Ok(FlowMap {
                    kind: FlowKind::Eigen { eig, inverse },
                });
            }
        }
        Ok(FlowMap {
            kind: FlowKind::Pade { a: a.clone() },
        })
    }

    pub fn uses_eigen_path(&self) -> bool {
        matches!(self.kind, FlowKind::Eigen { .. })
    }

    pub fn at(&self, t: f64) -> RealMatrix {
        match &self.kind {
            FlowKind::Eigen { eig, inverse } => {
                real_part(&(&eig.basis * eig.exp_jordan(t) * inverse))
            }
            FlowKind::Pade { a } => matrix_exp_pade(&(a * t)),
        }
    }
}

/// `e^{At}`.
pub fn matrix_exp(a: &RealMatrix, t: f64) -> Result<RealMatrix> {
    Ok(FlowMap::new(a)?.at(t))
}

/// `e^{At}` through a given Jordan decomposition.
pub fn matrix_exp_eigen(eig: &EigenStructure, t: f64) -> Result<RealMatrix> {
    let inv = eig.basis_inverse()?;
    Ok(real_part(&(&eig.basis * eig.exp_jordan(t) * inv)))
}

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(a: &RealMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade_solve(u: RealMatrix, v: RealMatrix) -> RealMatrix {
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p).expect("Pade denominator is nonsingular")
}

fn pade_low(a: &RealMatrix, b: &[f64]) -> RealMatrix {
    let n = a.nrows();
    let a2 = a * a;
    let mut power = DMatrix::identity(n, n);
    let mut u = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for k in 0..b.len() / 2 {
        v += &power * b[2 * k];
        u += &power * b[2 * k + 1];
        power = &power * &a2;
    }
    pade_solve(a * u, v)
}

/// `e^{A}` by Padé approximation with scaling and squaring.
pub fn matrix_exp_pade(a: &RealMatrix) -> RealMatrix {
    let n = a.nrows();
    let norm = one_norm(a);
    for (m, theta) in THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return pade_low(a, b);
        }
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = B13;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let mut r = pade_solve(u, v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::real_matrix;

    fn taylor(a: &RealMatrix) -> RealMatrix {
        // Plain series on a scaled matrix, then squaring.
        let n = a.nrows();
        let s = 10;
        let a = a / 2f64.powi(s);
        let mut term = DMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &a / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn rotation_closed_form() {
        let a = real_matrix(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let t = 0.7;
        let e = matrix_exp(&a, t).unwrap();
        let expected = real_matrix(&[&[t.cos(), t.sin()], &[-t.sin(), t.cos()]]);
        assert!((e - expected).norm() < 1e-14);
    }

    #[test]
    fn jordan_closed_form() {
        let a = real_matrix(&[&[-1.0, 1.0], &[0.0, -1.0]]);
        let t = 2.5;
        let e = matrix_exp(&a, t).unwrap();
        let k = (-t).exp();
        let expected = real_matrix(&[&[k, t * k], &[0.0, k]]);
        assert!((e - expected).norm() < 1e-13);
    }

    #[test]
    fn pade_matches_series_across_norm_ranges() {
        let base = real_matrix(&[&[-2.0, 2.0, -1.0], &[4.0, 3.0, -4.0], &[7.0, 10.0, -10.0]]);
        for scale in [1e-3, 0.05, 0.3, 1.0, 3.0] {
            let a = &base * scale;
            let p = matrix_exp_pade(&a);
            let t = taylor(&a);
            assert!((&p - &t).norm() <= 1e-10 * t.norm(), "scale {scale}");
        }
    }

    #[test]
    fn eigen_and_pade_paths_agree() {
        let a = real_matrix(&[&[0.0, 2.0, 1.0], &[-2.0, 1.0, 0.0], &[1.0, -2.0, 0.0]]);
        let flow = FlowMap::new(&a).unwrap();
        assert!(flow.uses_eigen_path());
        for t in [0.0, 0.3, 1.7] {
            let e = flow.at(t);
            let p = matrix_exp_pade(&(&a * t));
            assert!((&e - &p).norm() <= 1e-10 * p.norm());
        }
    }
}
