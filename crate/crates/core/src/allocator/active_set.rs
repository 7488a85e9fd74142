//! Primal active-set solver for `min ½xᵀHx + fᵀx  s.t.  A·x ≤ b` with `H ≻ 0`.
//!
//! One working-set change per iteration. Each equality subproblem is solved
//! through an LU factorization of the KKT matrix `[H A_Wᵀ; A_W 0]`.

use crate::numerics::{Lu, Mat, Vector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Hessian is not positive definite")]
    NotConvex,
    #[error("x = 0 violates row {row} by {violation:e}; no feasible start")]
    InfeasibleStart { row: usize, violation: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub h: Mat,
    pub f: Vector,
    pub a: Mat,
    pub b: Vector,
}

impl QpProblem {
    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn objective(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.f.dot(x)
    }

    fn validate(&self) -> Result<(), QpError> {
        let n = self.h.nrows();
        if self.h.ncols() != n || self.f.len() != n || self.a.ncols() != n || self.b.len() != self.a.nrows() {
            return Err(QpError::DimensionMismatch(format!(
                "H {:?}, f {}, A {:?}, b {}",
                self.h.shape(),
                self.f.len(),
                self.a.shape(),
                self.b.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vector,
    /// Working set at exit, ascending row indices.
    pub active: Vec<usize>,
    /// One multiplier per row, zero outside the working set.
    pub multipliers: Vector,
    pub iterations: usize,
    pub status: QpStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveSetOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for ActiveSetOptions {
    fn default() -> Self {
        Self { max_iterations: 50, tolerance: 1e-9 }
    }
}

/// KKT residuals of a candidate solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.dual).max(self.complementarity)
    }
}

pub fn kkt_report(qp: &QpProblem, x: &Vector, multipliers: &Vector) -> KktReport {
    let grad = &qp.h * x + &qp.f + qp.a.transpose() * multipliers;
    let slack = &qp.b - &qp.a * x;
    KktReport {
        stationarity: grad.amax(),
        primal: slack.iter().fold(0.0_f64, |m, s| m.max(-s)),
        dual: multipliers.iter().fold(0.0_f64, |m, l| m.max(-l)),
        complementarity: slack.iter().zip(multipliers.iter()).fold(0.0_f64, |m, (s, l)| m.max((s * l).abs())),
    }
}

/// Solver with a remembered working set for warm starts.
#[derive(Debug, Clone, Default)]
pub struct ActiveSetSolver {
    opts: ActiveSetOptions,
    warm: Vec<usize>,
}

impl ActiveSetSolver {
    pub fn new(opts: ActiveSetOptions) -> Self {
        Self { opts, warm: Vec::new() }
    }

    pub fn options(&self) -> &ActiveSetOptions {
        &self.opts
    }

    /// Forget the remembered working set.
    pub fn reset(&mut self) {
        self.warm.clear();
    }

    pub fn warm_set(&self) -> &[usize] {
        &self.warm
    }

    /// Solve, seeding from the previous working set when that yields a
    /// feasible point; otherwise start cold from `x = 0`.
    pub fn solve(&mut self, qp: &QpProblem) -> Result<QpSolution, QpError> {
        qp.validate()?;
        let scaled = Scaled::new(qp)?;
        let sol = match self.warm_start(&scaled.qp) {
            Some((x, w)) => self.iterate(&scaled.qp, x, w),
            None => self.cold(&scaled.qp)?,
        };
        self.warm = sol.active.clone();
        Ok(scaled.restore(sol))
    }

    /// Solve from `x = 0` with an empty working set, ignoring warm state.
    pub fn solve_cold(&self, qp: &QpProblem) -> Result<QpSolution, QpError> {
        qp.validate()?;
        let scaled = Scaled::new(qp)?;
        let sol = self.cold(&scaled.qp)?;
        Ok(scaled.restore(sol))
    }

    fn cold(&self, qp: &QpProblem) -> Result<QpSolution, QpError> {
        let tol = self.opts.tolerance;
        if let Some((row, v)) = qp.b.iter().enumerate().find(|(_, v)| **v < -tol) {
            return Err(QpError::InfeasibleStart { row, violation: -v });
        }
        Ok(self.iterate(qp, Vector::zeros(qp.n()), Vec::new()))
    }

    fn warm_start(&self, qp: &QpProblem) -> Option<(Vector, Vec<usize>)> {
        let w: Vec<usize> = self.warm.iter().copied().filter(|&i| i < qp.rows()).collect();
        if w.is_empty() {
            return None;
        }
        let n = qp.n();
        let aw = qp.a.select_rows(&w);
        let kkt = kkt_matrix(&qp.h, &aw);
        let lu = Lu::factor(&kkt).ok()?;
        let mut rhs = Vector::zeros(n + w.len());
        rhs.rows_mut(0, n).copy_from(&(-&qp.f));
        for (k, &i) in w.iter().enumerate() {
            rhs[n + k] = qp.b[i];
        }
        let x = lu.solve(&rhs).rows(0, n).into_owned();
        let feasible = (&qp.a * &x - &qp.b).iter().all(|v| *v <= self.opts.tolerance);
        feasible.then_some((x, w))
    }

    fn iterate(&self, qp: &QpProblem, mut x: Vector, mut w: Vec<usize>) -> QpSolution {
        let n = qp.n();
        let mut iterations = 0;
        let mut lambda_w = Vector::zeros(0);
        // After an unblocked full step the iterate minimizes over the working
        // set, so the next pass only inspects multipliers.
        let mut at_minimizer = false;
        let status = loop {
            if iterations >= self.opts.max_iterations {
                break QpStatus::IterationCap;
            }
            iterations += 1;
            let g = &qp.h * &x + &qp.f;
            let aw = qp.a.select_rows(&w);
            let lu = match Lu::factor(&kkt_matrix(&qp.h, &aw)) {
                Ok(lu) => lu,
                Err(_) => {
                    // The newest row is numerically dependent on the rest, which
                    // only happens when the step that added it had vanished:
                    // drop it and test multipliers at the current point.
                    w.pop();
                    at_minimizer = true;
                    continue;
                }
            };
            let mut rhs = Vector::zeros(n + w.len());
            rhs.rows_mut(0, n).copy_from(&(-&g));
            let sol = lu.solve(&rhs);
            let p = sol.rows(0, n).into_owned();
            lambda_w = sol.rows(n, w.len()).into_owned();

            if at_minimizer || p.amax() <= 1e-12 * (1.0 + x.amax()) {
                let scale = 1.0 + lambda_w.amax();
                let mut drop: Option<(usize, f64)> = None;
                for (k, &l) in lambda_w.iter().enumerate() {
                    if l < -self.opts.tolerance * scale {
                        let better = match drop {
                            None => true,
                            Some((kk, best)) => l < best || (l == best && w[k] < w[kk]),
                        };
                        if better {
                            drop = Some((k, l));
                        }
                    }
                }
                match drop {
                    None => break QpStatus::Optimal,
                    Some((k, _)) => {
                        w.remove(k);
                        at_minimizer = false;
                    }
                }
                continue;
            }

            let mut alpha = 1.0;
            let mut block = None;
            for i in 0..qp.rows() {
                if w.contains(&i) {
                    continue;
                }
                let ai = qp.a.row(i);
                let ap = ai.dot(&p.transpose());
                if ap <= 1e-14 * (1.0 + ai.amax() * p.amax()) {
                    continue;
                }
                let slack = (qp.b[i] - ai.dot(&x.transpose())).max(0.0);
                let ratio = slack / ap;
                if ratio < alpha {
                    alpha = ratio;
                    block = Some(i);
                }
            }
            x += &p * alpha;
            match block {
                Some(i) => w.push(i),
                None => at_minimizer = true,
            }
        };

        let mut multipliers = Vector::zeros(qp.rows());
        if lambda_w.len() == w.len() {
            for (k, &i) in w.iter().enumerate() {
                multipliers[i] = lambda_w[k];
            }
        }
        let mut active = w;
        active.sort_unstable();
        QpSolution { x, active, multipliers, iterations, status }
    }
}

fn kkt_matrix(h: &Mat, aw: &Mat) -> Mat {
    let n = h.nrows();
    let k = aw.nrows();
    let mut m = Mat::zeros(n + k, n + k);
    m.view_mut((0, 0), (n, n)).copy_from(h);
    m.view_mut((n, 0), (k, n)).copy_from(aw);
    m.view_mut((0, n), (n, k)).copy_from(&aw.transpose());
    m
}

/// Equivalent problem with `H` of unit max-norm and unit-norm constraint
/// rows, so KKT pivots of the objective and constraint blocks are comparable.
struct Scaled {
    qp: QpProblem,
    h_scale: f64,
    row_norms: Vec<f64>,
}

impl Scaled {
    fn new(qp: &QpProblem) -> Result<Self, QpError> {
        let mut qp = convexify(qp)?;
        let h_scale = qp.h.amax();
        qp.h /= h_scale;
        qp.f /= h_scale;
        let mut row_norms = Vec::with_capacity(qp.rows());
        for i in 0..qp.rows() {
            let norm = qp.a.row(i).norm();
            let norm = if norm > 0.0 { norm } else { 1.0 };
            qp.a.row_mut(i).unscale_mut(norm);
            qp.b[i] /= norm;
            row_norms.push(norm);
        }
        Ok(Self { qp, h_scale, row_norms })
    }

    fn restore(&self, mut sol: QpSolution) -> QpSolution {
        for (l, norm) in sol.multipliers.iter_mut().zip(&self.row_norms) {
            *l *= self.h_scale / norm;
        }
        sol
    }
}

/// Symmetrize `H`; add `1e-12·I` jitter only if the Cholesky factorization fails.
fn convexify(qp: &QpProblem) -> Result<QpProblem, QpError> {
    let mut out = qp.clone();
    out.h = (&qp.h + qp.h.transpose()) * 0.5;
    if out.h.clone().cholesky().is_none() {
        let n = out.h.nrows();
        let jitter = 1e-12 * (1.0 + out.h.amax());
        out.h += Mat::identity(n, n) * jitter;
        if out.h.clone().cholesky().is_none() {
            return Err(QpError::NotConvex);
        }
    }
    Ok(out)
}
