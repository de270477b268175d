//! Dense log-barrier method for small semidefinite programs
//!
//! ```text
//! maximize  cᵀy   subject to   F_i(y) = F_i0 + Σ_j y_j F_ij ≽ 0
//! ```
//!
//! Sized for a few dozen variables and blocks of dimension up to ~10. The
//! caller supplies a strictly feasible starting point.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numlin::{RealMatrix, RealVector};

/// One linear matrix inequality `F0 + Σ y_j F_j ≽ 0`.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    pub constant: RealMatrix,
    pub terms: Vec<(usize, RealMatrix)>,
}

impl LmiBlock {
    pub fn size(&self) -> usize {
        self.constant.nrows()
    }

    pub fn eval(&self, y: &RealVector) -> RealMatrix {
        let mut f = self.constant.clone();
        for (j, fj) in &self.terms {
            f += fj * y[*j];
        }
        f
    }
}

#[derive(Debug, Clone)]
pub struct Program {
    pub num_vars: usize,
    pub objective: RealVector,
    pub blocks: Vec<LmiBlock>,
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions {
    /// Stop once the duality-gap bound `m / t` falls below this.
    pub gap_tol: f64,
    pub max_newton: usize,
    pub t_init: f64,
    pub t_growth: f64,
    /// Stop as soon as the objective reaches this value.
    pub target: Option<f64>,
    /// Stop once the objective upper bound drops below this value.
    pub floor: Option<f64>,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions {
            gap_tol: 1e-9,
            max_newton: 2000,
            t_init: 1.0,
            t_growth: 8.0,
            target: None,
            floor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Converged,
    TargetReached,
    BelowFloor,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct BarrierResult {
    pub y: RealVector,
    pub objective: f64,
    /// Upper bound on the optimal value (exact up to the inner tolerance on
    /// the central path).
    pub upper_bound: f64,
    pub stop: Stop,
    pub newton_steps: usize,
}

struct Eval {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl Program {
    fn barrier_size(&self) -> f64 {
        self.blocks.iter().map(|b| b.size()).sum::<usize>() as f64
    }

    /// `-Σ log det F_i(y)`, or `None` outside the interior.
    fn barrier(&self, y: &RealVector) -> Option<f64> {
        let mut v = 0.0;
        for b in &self.blocks {
            let chol = Cholesky::new(b.eval(y))?;
            let ld: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
            if !ld.is_finite() {
                return None;
            }
            v -= 2.0 * ld;
        }
        Some(v)
    }

    fn evaluate(&self, y: &RealVector, t: f64) -> Option<Eval> {
        let n = self.num_vars;
        let mut grad = -&self.objective * t;
        let mut hess = DMatrix::zeros(n, n);
        let mut value = -t * self.objective.dot(y);
        for b in &self.blocks {
            let chol = Cholesky::new(b.eval(y))?;
            value -= 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let inv = chol.inverse();
            let w: Vec<(usize, RealMatrix)> = b.terms.iter().map(|(j, fj)| (*j, &inv * fj)).collect();
            for (a, (j, wj)) in w.iter().enumerate() {
                grad[*j] -= wj.trace();
                for (k, wk) in w.iter().skip(a) {
                    let h = wj.component_mul(&wk.transpose()).sum();
                    hess[(*j, *k)] += h;
                    if k != j {
                        hess[(*k, *j)] += h;
                    }
                }
            }
        }
        value.is_finite().then_some(Eval { value, grad, hess })
    }
}

fn newton_direction(e: &Eval) -> DVector<f64> {
    let n = e.grad.len();
    let scale = e.hess.diagonal().amax().max(1e-300);
    let mut reg = 0.0;
    for _ in 0..12 {
        let h = &e.hess + DMatrix::identity(n, n) * reg;
        if let Some(ch) = Cholesky::new(h) {
            return -ch.solve(&e.grad);
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    -&e.grad / scale
}

/// Maximize `cᵀy` from the strictly feasible point `y0`.
pub fn maximize(program: &Program, y0: RealVector, opts: BarrierOptions) -> Result<BarrierResult> {
    if y0.len() != program.num_vars {
        return Err(Error::DimensionMismatch(format!(
            "start point has {} entries, program has {} variables",
            y0.len(),
            program.num_vars
        )));
    }
    if program.barrier(&y0).is_none() {
        return Err(Error::InvalidArgument("start point is not strictly feasible".into()));
    }
    let m = program.barrier_size();
    let mut y = y0;
    let mut t = opts.t_init;
    let mut steps = 0;
    let objective = |y: &RealVector| program.objective.dot(y);
    loop {
        // Centering.
        loop {
            if let Some(target) = opts.target {
                if objective(&y) >= target {
                    return Ok(BarrierResult {
                        objective: objective(&y),
                        upper_bound: f64::INFINITY,
                        y,
                        stop: Stop::TargetReached,
                        newton_steps: steps,
                    });
                }
            }
            if steps >= opts.max_newton {
                return Ok(BarrierResult {
                    objective: objective(&y),
                    upper_bound: f64::INFINITY,
                    y,
                    stop: Stop::IterationLimit,
                    newton_steps: steps,
                });
            }
            let e = program.evaluate(&y, t).ok_or(Error::NonConvergence)?;
            let dy = newton_direction(&e);
            let decrement = -e.grad.dot(&dy);
            if !(decrement > 1e-10) {
                break;
            }
            steps += 1;
            let mut s = 1.0;
            let mut moved = false;
            while s > 1e-14 {
                let cand = &y + &dy * s;
                if let Some(b) = program.barrier(&cand) {
                    let v = b - t * objective(&cand);
                    if v <= e.value - 0.25 * s * decrement {
                        y = cand;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let upper = objective(&y) + m / t;
        if let Some(floor) = opts.floor {
            if upper < floor {
                return Ok(BarrierResult {
                    objective: objective(&y),
                    upper_bound: upper,
                    y,
                    stop: Stop::BelowFloor,
                    newton_steps: steps,
                });
            }
        }
        if m / t < opts.gap_tol {
            return Ok(BarrierResult {
                objective: objective(&y),
                upper_bound: upper,
                y,
                stop: Stop::Converged,
                newton_steps: steps,
            });
        }
        t *= opts.t_growth;
    }
}

/// Variable layout for symmetric unknowns: upper-triangular entries.
pub fn sym_basis(n: usize) -> Vec<RealMatrix> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in a..n {
            let mut e = DMatrix::zeros(n, n);
            e[(a, b)] = 1.0;
            e[(b, a)] = 1.0;
            out.push(e);
        }
    }
    out
}

/// Rebuild a symmetric matrix from its upper-triangular entries.
pub fn sym_from_vars(n: usize, vars: &[f64]) -> RealMatrix {
    let mut q = DMatrix::zeros(n, n);
    let mut idx = 0;
    for a in 0..n {
        for b in a..n {
            q[(a, b)] = vars[idx];
            q[(b, a)] = vars[idx];
            idx += 1;
        }
    }
    q
}

/// Upper-triangular entries of a symmetric matrix.
pub fn sym_to_vars(q: &RealMatrix) -> Vec<f64> {
    let n = q.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in a..n {
            out.push(0.5 * (q[(a, b)] + q[(b, a)]));
        }
    }
    out
}
