use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;

use super::norm::{condition_number, spectral_norm};
use super::{to_complex, ComplexMatrix, RealMatrix};
use crate::error::{Error, Result};

/// Eigenvalues closer than this (relative to the spectral norm of the
/// matrix) are treated as one cluster.
pub const CLUSTER_TOLERANCE: f64 = 1e-8;
/// Bases with a larger 2-norm condition number are rejected.
pub const BASIS_CONDITION_LIMIT: f64 = 1e12;

// Relative singular-value threshold for numerical null spaces.
const NULL_TOLERANCE: f64 = 1e-7;
// Eigenvalue pairs within this relative distance whose eigenvectors are
// numerically parallel belong to a perturbed Jordan block.
const LOOSE_CLUSTER: f64 = 1e-5;
const PARALLEL_SINE: f64 = 1e-6;
const MAX_ITER: usize = 10_000;

/// Complex Jordan data of a real square matrix `A = P J P⁻¹`.
///
/// `eigenvalues[j]` is the diagonal entry of `J` in column `j`; consecutive
/// columns are grouped into Jordan blocks of the sizes in `block_sizes`,
/// each block carrying ones on its superdiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenStructure {
    pub eigenvalues: Vec<Complex64>,
    pub basis: ComplexMatrix,
    pub block_sizes: Vec<usize>,
    pub defective: bool,
}

impl EigenStructure {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The Jordan form `J`.
    pub fn jordan(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut j = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        let mut start = 0;
        for &size in &self.block_sizes {
            for k in start..start + size {
                j[(k, k)] = self.eigenvalues[k];
                if k + 1 < start + size {
                    j[(k, k + 1)] = Complex64::new(1.0, 0.0);
                }
            }
            start += size;
        }
        j
    }

    /// `e^{Jt}`, block by block.
    pub fn exp_jordan(&self, t: f64) -> ComplexMatrix {
        let n = self.dim();
        let mut out = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        let mut start = 0;
        for &size in &self.block_sizes {
            let lambda = self.eigenvalues[start];
            let e = (lambda * t).exp();
            let mut coeff = 1.0;
            for d in 0..size {
                if d > 0 {
                    coeff *= t / d as f64;
                }
                for i in start..start + size - d {
                    out[(i, i + d)] = e * coeff;
                }
            }
            start += size;
        }
        out
    }

    pub fn basis_inverse(&self) -> Result<ComplexMatrix> {
        self.basis
            .clone()
            .try_inverse()
            .ok_or(Error::IllConditionedBasis(f64::INFINITY))
    }

    pub fn condition_number(&self) -> f64 {
        condition_number(&self.basis)
    }

    /// `P J P⁻¹`.
    pub fn reconstruct(&self) -> Result<ComplexMatrix> {
        Ok(&self.basis * self.jordan() * self.basis_inverse()?)
    }

    /// Largest real part over the spectrum.
    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Same Jordan form with the basis multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.basis *= Complex64::new(factor, 0.0);
        out
    }

    /// Adopt a caller-supplied diagonalizing basis for `a`. The eigenvalues
    /// are read off `P⁻¹ A P`, in the column order of `basis`.
    pub fn from_basis(a: &RealMatrix, basis: ComplexMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || basis.nrows() != n || basis.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "basis is {}x{}, matrix is {}x{}",
                basis.nrows(),
                basis.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        let cond = condition_number(&basis);
        if !(cond <= BASIS_CONDITION_LIMIT) {
            return Err(Error::IllConditionedBasis(cond));
        }
        let inv = basis
            .clone()
            .try_inverse()
            .ok_or(Error::IllConditionedBasis(f64::INFINITY))?;
        let ac = to_complex(a);
        let d = &inv * &ac * &basis;
        let eigenvalues: Vec<Complex64> = (0..n).map(|i| d[(i, i)]).collect();
        let diag = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
        let residual = (&ac * &basis - &basis * diag).norm();
        let scale = ac.norm().max(f64::MIN_POSITIVE) * basis.norm();
        if residual > 1e-8 * scale {
            return Err(Error::InvalidArgument(format!(
                "supplied basis does not diagonalize the matrix (residual {residual:.3e})"
            )));
        }
        Ok(EigenStructure {
            eigenvalues,
            basis,
            block_sizes: vec![1; n],
            defective: false,
        })
    }
}

/// Complex Jordan decomposition of a real square matrix.
///
/// Eigenvalues come out sorted by real part, then imaginary part. For
/// semisimple eigenvalues the basis columns have unit Euclidean norm, with
/// the phase fixed so the largest-magnitude component is real and positive.
/// Multi-dimensional eigenspaces use the reduced-row-echelon basis of the
/// eigenspace, so the result is deterministic. Defective clusters produce
/// Jordan chains whose eigenvector has unit norm.
pub fn eigendecompose(a: &RealMatrix) -> Result<EigenStructure> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let ac = to_complex(a);
    let scale = {
        let s = spectral_norm(&ac);
        if s > 0.0 {
            s
        } else {
            1.0
        }
    };

    let schur = Schur::try_new(a.clone(), f64::EPSILON, MAX_ITER).ok_or(Error::NonConvergence)?;
    let mut values: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));

    let groups = cluster(&ac, &values, scale)?;

    // Bases for the upper half-plane and the real axis first; lower
    // half-plane clusters mirror their conjugate partner so conjugate
    // columns are exact conjugates.
    let mut computed: Vec<Option<(ComplexMatrix, Vec<usize>)>> = vec![None; groups.len()];
    for (gi, g) in groups.iter().enumerate() {
        if g.mean.im >= 0.0 {
            computed[gi] = Some(group_basis(&ac, g.mean, g.members.len(), scale)?);
        }
    }
    for (gi, g) in groups.iter().enumerate() {
        if g.mean.im < 0.0 {
            let partner = groups
                .iter()
                .enumerate()
                .filter(|(_, h)| h.mean.im > 0.0 && h.members.len() == g.members.len())
                .min_by(|(_, x), (_, y)| {
                    (x.mean - g.mean.conj())
                        .norm()
                        .total_cmp(&(y.mean - g.mean.conj()).norm())
                })
                .map(|(i, _)| i);
            computed[gi] = Some(match partner.and_then(|p| computed[p].clone()) {
                Some((b, blocks)) => (b.map(|z| z.conj()), blocks),
                None => group_basis(&ac, g.mean, g.members.len(), scale)?,
            });
        }
    }

    let mut basis = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let mut eigenvalues = Vec::with_capacity(n);
    let mut block_sizes = Vec::new();
    let mut col = 0;
    for (g, data) in groups.iter().zip(computed) {
        let (b, blocks) = data.ok_or(Error::NonConvergence)?;
        for j in 0..b.ncols() {
            basis.set_column(col, &b.column(j));
            eigenvalues.push(g.mean);
            col += 1;
        }
        block_sizes.extend(blocks);
    }
    if col != n {
        return Err(Error::NonConvergence);
    }
    let defective = block_sizes.iter().any(|&s| s > 1);
    let cond = condition_number(&basis);
    if !(cond <= BASIS_CONDITION_LIMIT) {
        return Err(Error::IllConditionedBasis(cond));
    }
    Ok(EigenStructure {
        eigenvalues,
        basis,
        block_sizes,
        defective,
    })
}

struct Cluster {
    mean: Complex64,
    members: Vec<usize>,
}

fn cluster(ac: &ComplexMatrix, values: &[Complex64], scale: f64) -> Result<Vec<Cluster>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut k = i;
        while p[k] != r {
            let next = p[k];
            p[k] = r;
            k = next;
        }
        r
    }
    let tight = CLUSTER_TOLERANCE * scale;
    let loose = LOOSE_CLUSTER * scale;
    let mut vectors: Vec<Option<DVector<Complex64>>> = vec![None; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = (values[i] - values[j]).norm();
            let join = if d <= tight {
                true
            } else if d <= loose {
                for k in [i, j] {
                    if vectors[k].is_none() {
                        let b = shifted(ac, values[k]);
                        let ns = null_space(&b, 0.0, 1, 1)?;
                        vectors[k] = Some(ns.column(0).into_owned());
                    }
                }
                let (u, v) = (vectors[i].as_ref().unwrap(), vectors[j].as_ref().unwrap());
                let overlap = u.dotc(v).norm();
                (1.0 - overlap * overlap).max(0.0).sqrt() < PARALLEL_SINE
            } else {
                false
            };
            if join {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut root_index: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_index[r] {
            Some(c) => clusters[c].members.push(i),
            None => {
                root_index[r] = Some(clusters.len());
                clusters.push(Cluster {
                    mean: Complex64::new(0.0, 0.0),
                    members: vec![i],
                });
            }
        }
    }
    for c in &mut clusters {
        let sum: Complex64 = c.members.iter().map(|&i| values[i]).sum();
        c.mean = sum / c.members.len() as f64;
        if c.mean.im.abs() <= tight {
            c.mean.im = 0.0;
        }
    }
    Ok(clusters)
}

fn shifted(ac: &ComplexMatrix, lambda: Complex64) -> ComplexMatrix {
    let n = ac.nrows();
    ac - DMatrix::from_diagonal_element(n, n, lambda)
}

/// Orthonormal basis of the numerical null space of `b`: right singular
/// vectors with singular value at most `tol`, clamped to
/// `[min_dim, max_dim]` columns.
fn null_space(b: &ComplexMatrix, tol: f64, min_dim: usize, max_dim: usize) -> Result<ComplexMatrix> {
    let n = b.ncols();
    let svd = SVD::try_new(b.clone(), false, true, f64::EPSILON, MAX_ITER).ok_or(Error::NonConvergence)?;
    let v_t = svd.v_t.ok_or(Error::NonConvergence)?;
    let sv = svd.singular_values;
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let count = idx
        .iter()
        .filter(|&&i| sv[i] <= tol)
        .count()
        .clamp(min_dim, max_dim);
    Ok(DMatrix::from_fn(n, count, |r, c| v_t[(idx[c], r)].conj()))
}

/// Reduced-row-echelon basis of the column span of `v`, each vector
/// scaled to unit norm.
fn canonical_subspace(v: &ComplexMatrix) -> ComplexMatrix {
    let (n, g) = (v.nrows(), v.ncols());
    let mut m = v.transpose();
    let mut row = 0;
    for col in 0..n {
        if row == g {
            break;
        }
        let (best, mag) = (row..g)
            .map(|r| (r, m[(r, col)].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if mag < 1e-9 {
            continue;
        }
        m.swap_rows(row, best);
        let pivot = m[(row, col)];
        for c in 0..n {
            m[(row, c)] /= pivot;
        }
        for r in 0..g {
            if r != row {
                let f = m[(r, col)];
                if f.norm() > 0.0 {
                    for c in 0..n {
                        let delta = f * m[(row, c)];
                        m[(r, c)] -= delta;
                    }
                }
            }
        }
        row += 1;
    }
    let mut out = m.transpose();
    for mut c in out.column_iter_mut() {
        let norm = c.norm();
        if norm > 0.0 {
            c /= Complex64::new(norm, 0.0);
        }
    }
    out
}

/// Unit-modulus factor making the largest-magnitude entry of `v` real
/// positive. The first entry within a relative 1e-9 of the maximum wins,
/// so conjugate vectors receive conjugate factors.
fn phase_factor(v: &DVector<Complex64>) -> Complex64 {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let z = v
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap();
    z.conj() / z.norm()
}

fn group_basis(
    ac: &ComplexMatrix,
    lambda: Complex64,
    m: usize,
    scale: f64,
) -> Result<(ComplexMatrix, Vec<usize>)> {
    let n = ac.nrows();
    let b = shifted(ac, lambda);
    let eigvecs = null_space(&b, NULL_TOLERANCE * scale, 1, m)?;
    let real = lambda.im == 0.0;
    if eigvecs.ncols() == m {
        let mut basis = if m == 1 { eigvecs } else { canonical_subspace(&eigvecs) };
        for j in 0..m {
            let col = basis.column(j).into_owned();
            let f = phase_factor(&col);
            basis.set_column(j, &(col * f));
        }
        if real {
            basis.apply(|z| z.im = 0.0);
        }
        return Ok((basis, vec![1; m]));
    }

    // Defective: nested null spaces of (A - λI)^k and chains built from the top.
    let mut nulls: Vec<ComplexMatrix> = vec![DMatrix::zeros(n, 0)];
    let mut dims = vec![0usize];
    let mut power = DMatrix::identity(n, n);
    for k in 1..=m {
        power = &power * &b;
        let tol = NULL_TOLERANCE * scale.powi(k as i32);
        let lo = (dims[k - 1] + 1).min(m);
        let lo = if k == m { m } else { lo };
        let ns = canonical_subspace(&null_space(&power, tol, lo, m)?);
        dims.push(ns.ncols());
        nulls.push(ns);
        if dims[k] == m {
            break;
        }
    }
    let top = dims.len() - 1;
    let mut chains: Vec<(usize, DVector<Complex64>)> = Vec::new();
    for k in (1..=top).rev() {
        let longer = chains.iter().filter(|(s, _)| *s > k).count();
        let needed = (dims[k] - dims[k - 1]).saturating_sub(longer);
        if needed == 0 {
            continue;
        }
        let mut ortho: Vec<DVector<Complex64>> = Vec::new();
        let push = |v: DVector<Complex64>, ortho: &mut Vec<DVector<Complex64>>| -> bool {
            let mut r = v;
            for _ in 0..2 {
                for q in ortho.iter() {
                    let c = q.dotc(&r);
                    r -= q * c;
                }
            }
            let norm = r.norm();
            if norm > 1e-6 {
                ortho.push(r / Complex64::new(norm, 0.0));
                true
            } else {
                false
            }
        };
        for c in nulls[k - 1].column_iter() {
            push(c.into_owned(), &mut ortho);
        }
        for (s, v) in chains.iter().filter(|(s, _)| *s > k) {
            let mut w = v.clone();
            for _ in 0..(s - k) {
                w = &b * w;
            }
            push(w, &mut ortho);
        }
        let mut added = 0;
        for c in nulls[k].column_iter() {
            if added == needed {
                break;
            }
            let before = ortho.len();
            if push(c.into_owned(), &mut ortho) {
                chains.push((k, ortho[before].clone()));
                added += 1;
            }
        }
        if added < needed {
            return Err(Error::NonConvergence);
        }
    }

    let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(m);
    let mut blocks = Vec::new();
    for (size, v) in &chains {
        let mut chain = vec![v.clone()];
        for _ in 1..*size {
            let next = &b * chain.last().unwrap();
            chain.push(next);
        }
        chain.reverse();
        let eig = &chain[0];
        let norm = eig.norm();
        if norm == 0.0 {
            return Err(Error::NonConvergence);
        }
        let f = phase_factor(eig) / norm;
        for v in chain {
            let mut v = v * f;
            if real {
                v.apply(|z| z.im = 0.0);
            }
            cols.push(v);
        }
        blocks.push(*size);
    }
    if cols.len() != m {
        return Err(Error::NonConvergence);
    }
    Ok((DMatrix::from_columns(&cols), blocks))
}
