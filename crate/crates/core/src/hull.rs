//! Convex-hull utilities for impulse sets: membership by a phase-one
//! linear program, and random hull sampling.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::numlin::RealMatrix;

/// Whether the zero matrix lies in `conv{vertices}`.
pub fn zero_in_hull(vertices: &[RealMatrix]) -> bool {
    match vertices.first() {
        Some(v) => in_hull(vertices, &RealMatrix::zeros(v.nrows(), v.ncols()), 1e-9),
        None => false,
    }
}

/// Whether `m` lies in `conv{vertices}`, up to a residual of `tol` relative
/// to the largest vertex entry.
pub fn in_hull(vertices: &[RealMatrix], m: &RealMatrix, tol: f64) -> bool {
    if vertices.is_empty() || vertices.iter().any(|v| v.shape() != m.shape()) {
        return false;
    }
    let scale = vertices
        .iter()
        .chain(std::iter::once(m))
        .flat_map(|v| v.iter())
        .fold(0.0f64, |a, x| a.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let rows = m.len() + 1;
    let cols = vertices.len();
    // Σ w_i vec(M_i) = vec(m), Σ w_i = 1, w ≥ 0.
    let mut a = vec![vec![0.0; cols]; rows];
    let mut b = vec![0.0; rows];
    for (j, v) in vertices.iter().enumerate() {
        for (i, x) in v.iter().enumerate() {
            a[i][j] = x / scale;
        }
        a[rows - 1][j] = 1.0;
    }
    for (i, x) in m.iter().enumerate() {
        b[i] = x / scale;
    }
    b[rows - 1] = 1.0;
    phase_one_residual(a, b) <= tol.max(1e-12)
}

/// Minimum of `Σ |A w - b|` over `w ≥ 0`, by the phase-one simplex method
/// with Bland's rule.
fn phase_one_residual(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> f64 {
    const EPS: f64 = 1e-12;
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    for i in 0..rows {
        if b[i] < 0.0 {
            b[i] = -b[i];
            a[i].iter_mut().for_each(|x| *x = -*x);
        }
    }
    // Tableau columns: originals, then one artificial per row.
    let width = cols + rows;
    let mut t: Vec<Vec<f64>> = (0..rows)
        .map(|i| {
            let mut r = a[i].clone();
            r.extend((0..rows).map(|k| if k == i { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    let mut basis: Vec<usize> = (cols..width).collect();
    let mut cost: Vec<f64> = (0..width)
        .map(|j| if j < cols { -(0..rows).map(|i| t[i][j]).sum::<f64>() } else { 0.0 })
        .collect();
    let mut value: f64 = b.iter().sum();

    for _ in 0..10_000 {
        let Some(enter) = (0..width).find(|&j| cost[j] < -EPS) else {
            break;
        };
        let mut leave: Option<usize> = None;
        for i in 0..rows {
            if t[i][enter] > EPS {
                let ratio = b[i] / t[i][enter];
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let best = b[l] / t[l][enter];
                        if ratio < best - EPS || (ratio <= best + EPS && basis[i] < basis[l]) {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let Some(l) = leave else {
            break;
        };
        let pivot = t[l][enter];
        t[l].iter_mut().for_each(|x| *x /= pivot);
        b[l] /= pivot;
        let pivot_row = t[l].clone();
        for i in 0..rows {
            if i != l {
                let f = t[i][enter];
                if f != 0.0 {
                    for j in 0..width {
                        t[i][j] -= f * pivot_row[j];
                    }
                    b[i] -= f * b[l];
                }
            }
        }
        let f = cost[enter];
        for j in 0..width {
            cost[j] -= f * pivot_row[j];
        }
        value += f * b[l];
        basis[l] = enter;
    }
    value.max(0.0)
}

/// Random hull member with Dirichlet(1, ..., 1) weights.
pub fn sample_hull<R: Rng + ?Sized>(vertices: &[RealMatrix], rng: &mut R) -> RealMatrix {
    let weights = dirichlet_weights(vertices.len(), rng);
    combine(vertices, &weights)
}

pub fn dirichlet_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(1.0, 1.0).expect("valid gamma parameters");
    let mut w: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = w.iter().sum();
    if sum > 0.0 {
        w.iter_mut().for_each(|x| *x /= sum);
    } else {
        w.iter_mut().for_each(|x| *x = 1.0 / k as f64);
    }
    w
}

/// `Σ w_i M_i`.
pub fn combine(vertices: &[RealMatrix], weights: &[f64]) -> RealMatrix {
    let (r, c) = vertices[0].shape();
    vertices
        .iter()
        .zip(weights)
        .fold(RealMatrix::zeros(r, c), |acc, (m, w)| acc + m * *w)
}
