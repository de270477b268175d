use nalgebra::DVector;

use crate::error::Result;
use crate::numlin::{spectral_norm, ComplexMatrix, RealMatrix};
use crate::sdp::{maximize, BarrierOptions, LmiBlock, Program};

/// One norm constraint `‖Σ_i w_i K_i‖₂ ≤ r · bound` over hull weights `w`.
#[derive(Debug, Clone)]
pub struct HullNormTerm {
    /// `K_i`, one per hull vertex.
    pub images: Vec<ComplexMatrix>,
    pub bound: f64,
}

/// `min_w max_e ‖Σ_i w_i K_{e,i}‖₂ / bound_e` over the probability simplex,
/// with a minimizing weight vector.
pub fn min_max_ratio(terms: &[HullNormTerm]) -> Result<(f64, Vec<f64>)> {
    let k = terms.first().map_or(0, |t| t.images.len());
    let ratio_at = |w: &[f64]| {
        terms
            .iter()
            .map(|t| spectral_norm(&combine(&t.images, w)) / t.bound)
            .fold(0.0, f64::max)
    };
    if k <= 1 {
        let w = vec![1.0; k];
        return Ok((ratio_at(&w), w));
    }
    // Variables: w_1..w_{k-1}, r; w_k = 1 - Σ w_i.
    let nv = k;
    let r_idx = k - 1;
    let mut blocks = Vec::new();
    for t in terms {
        let e: Vec<RealMatrix> = t.images.iter().map(embed).collect();
        let s = e[0].nrows();
        let dilate = |m: &RealMatrix| {
            let mut d = RealMatrix::zeros(2 * s, 2 * s);
            d.view_mut((0, s), (s, s)).copy_from(m);
            d.view_mut((s, 0), (s, s)).copy_from(&m.transpose());
            d
        };
        let mut terms_v = Vec::with_capacity(nv);
        for i in 0..k - 1 {
            terms_v.push((i, dilate(&(&e[i] - &e[k - 1]))));
        }
        terms_v.push((r_idx, RealMatrix::identity(2 * s, 2 * s) * t.bound));
        blocks.push(LmiBlock {
            constant: dilate(&e[k - 1]),
            terms: terms_v,
        });
    }
    for i in 0..k - 1 {
        blocks.push(LmiBlock {
            constant: RealMatrix::zeros(1, 1),
            terms: vec![(i, RealMatrix::identity(1, 1))],
        });
    }
    blocks.push(LmiBlock {
        constant: RealMatrix::from_element(1, 1, 1.0),
        terms: (0..k - 1).map(|i| (i, RealMatrix::from_element(1, 1, -1.0))).collect(),
    });
    let mut objective = DVector::zeros(nv);
    objective[r_idx] = -1.0;
    let program = Program {
        num_vars: nv,
        objective,
        blocks,
    };
    let w0 = vec![1.0 / k as f64; k];
    let mut y0 = DVector::zeros(nv);
    for i in 0..k - 1 {
        y0[i] = w0[i];
    }
    y0[r_idx] = ratio_at(&w0) * 1.5 + 1.0;
    let res = maximize(
        &program,
        y0,
        BarrierOptions {
            gap_tol: 1e-11,
            ..BarrierOptions::default()
        },
    )?;
    let mut w: Vec<f64> = (0..k - 1).map(|i| res.y[i].max(0.0)).collect();
    w.push((1.0 - w.iter().sum::<f64>()).max(0.0));
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    // A vertex can beat the barrier's interior point by rounding.
    let mut best = (ratio_at(&w), w);
    for v in 0..k {
        let mut e = vec![0.0; k];
        e[v] = 1.0;
        let r = ratio_at(&e);
        if r < best.0 {
            best = (r, e);
        }
    }
    Ok(best)
}

fn combine(images: &[ComplexMatrix], w: &[f64]) -> ComplexMatrix {
    let (r, c) = images[0].shape();
    images
        .iter()
        .zip(w)
        .fold(ComplexMatrix::zeros(r, c), |acc, (m, x)| acc + m * num_complex::Complex64::new(*x, 0.0))
}

/// Real matrix `[[Re, -Im], [Im, Re]]` with the singular values of `k`.
fn embed(k: &ComplexMatrix) -> RealMatrix {
    let (r, c) = k.shape();
    let mut out = RealMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = k[(i, j)];
            out[(i, j)] = z.re;
            out[(i + r, j + c)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::{real_matrix, to_complex};

    #[test]
    fn midpoint_of_opposite_matrices_is_zero() {
        let a = to_complex(&real_matrix(&[&[1.0, 0.0], &[0.0, 2.0]]));
        let term = HullNormTerm {
            images: vec![a.clone(), -a],
            bound: 1.0,
        };
        let (r, w) = min_max_ratio(&[term]).unwrap();
        assert!(r < 1e-6, "ratio {r}");
        assert!((w[0] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn matches_dense_scan_on_segment() {
        let a = to_complex(&real_matrix(&[&[2.0, 1.0], &[0.0, 1.0]]));
        let b = to_complex(&real_matrix(&[&[-1.0, 0.5], &[1.0, 0.5]]));
        let term = HullNormTerm {
            images: vec![a.clone(), b.clone()],
            bound: 2.0,
        };
        let (r, _) = min_max_ratio(&[term]).unwrap();
        let scan = (0..=100_000)
            .map(|i| {
                let s = i as f64 / 100_000.0;
                spectral_norm(&(&a * num_complex::Complex64::new(s, 0.0) + &b * num_complex::Complex64::new(1.0 - s, 0.0))) / 2.0
            })
            .fold(f64::INFINITY, f64::min);
        assert!(r <= scan + 1e-7 && r >= scan - 1e-6, "{r} vs {scan}");
    }

    #[test]
    fn complex_embedding_preserves_norm() {
        let k = ComplexMatrix::from_fn(2, 2, |i, j| num_complex::Complex64::new(i as f64 + 1.0, j as f64 - 0.5));
        let e = embed(&k);
        assert!((e.singular_values().max() - spectral_norm(&k)).abs() < 1e-12);
    }
}
