//! Per-step incremental control allocation: pseudo-inverse, constrained QP
//! in servo space, and constrained QP in the virtual shape space.

mod active_set;

pub use active_set::{
    kkt_report, ActiveSetOptions, ActiveSetSolver, KktReport, QpError, QpProblem, QpSolution, QpStatus,
};

use crate::constraints::{rate_rows, LinearInequality};
use crate::numerics::{pseudo_inverse, Mat, NumericsError, Vector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocError {
    #[error("effectiveness matrix is rank deficient")]
    RankDeficient,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("allocation weights do not give a convex problem")]
    NotConvex,
}

impl From<QpError> for AllocError {
    fn from(e: QpError) -> Self {
        match e {
            QpError::DimensionMismatch(s) => AllocError::DimensionMismatch(s),
            QpError::NotConvex => AllocError::NotConvex,
            QpError::InfeasibleStart { .. } => unreachable!("start feasibility is handled by the caller"),
        }
    }
}

/// One step's allocation: minimize
/// `½‖B·Δu − t‖²_W1 + ½σ‖u0 + Δu − u*‖²_W2` subject to `A·Δu ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    pub b_eff: Mat,
    pub target: Vector,
    pub w1: Mat,
    pub w2: Mat,
    pub sigma: f64,
    pub u0: Vector,
    pub u_star: Vector,
    pub ineq: LinearInequality,
}

impl AllocationProblem {
    pub fn m(&self) -> usize {
        self.b_eff.ncols()
    }

    pub fn p(&self) -> usize {
        self.b_eff.nrows()
    }

    fn validate(&self) -> Result<(), AllocError> {
        let (p, m) = self.b_eff.shape();
        let ok = self.target.len() == p
            && self.w1.shape() == (p, p)
            && self.w2.shape() == (m, m)
            && self.u0.len() == m
            && self.u_star.len() == m
            && self.ineq.a.ncols() == m
            && self.ineq.b.len() == self.ineq.a.nrows();
        if !ok {
            return Err(AllocError::DimensionMismatch(format!(
                "B {:?}, target {}, W1 {:?}, W2 {:?}, u0 {}, u* {}, A {:?}",
                self.b_eff.shape(),
                self.target.len(),
                self.w1.shape(),
                self.w2.shape(),
                self.u0.len(),
                self.u_star.len(),
                self.ineq.a.shape()
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(AllocError::NotConvex);
        }
        Ok(())
    }

    /// Objective value at `Δu`.
    pub fn objective(&self, du: &Vector) -> f64 {
        let e = &self.b_eff * du - &self.target;
        let d = &self.u0 + du - &self.u_star;
        0.5 * e.dot(&(&self.w1 * &e)) + 0.5 * self.sigma * d.dot(&(&self.w2 * &d))
    }

    /// Quadratic program in the decision variable `z`, where `Δu = T·z`.
    fn qp_in(&self, t: &Mat) -> QpProblem {
        let bt = &self.b_eff * t;
        let w2t = &self.w2 * t;
        let h = bt.transpose() * &self.w1 * &bt + t.transpose() * &w2t * self.sigma;
        let f = -(bt.transpose() * (&self.w1 * &self.target))
            + t.transpose() * (&self.w2 * (&self.u0 - &self.u_star)) * self.sigma;
        QpProblem { h, f, a: &self.ineq.a * t, b: self.ineq.b.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AllocStatus {
    Optimal,
    IterationCap,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub delta_u: Vector,
    /// `B·Δu − target`.
    pub eps_ca: Vector,
    pub iterations: usize,
    pub active_set: Vec<usize>,
    pub status: AllocStatus,
}

/// Virtual-space allocation: the result is in `q` coordinates and
/// `delta_u_servo = Φ·Δu_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualAllocation {
    pub result: AllocationResult,
    pub delta_u_servo: Vector,
}

/// Minimum-norm exact solution `B⁺·target`.
pub fn allocate_pseudo_inverse(b_eff: &Mat, target: &Vector) -> Result<Vector, AllocError> {
    if target.len() != b_eff.nrows() {
        return Err(AllocError::DimensionMismatch(format!(
            "B has {} rows, target has {}",
            b_eff.nrows(),
            target.len()
        )));
    }
    let pinv = pseudo_inverse(b_eff).map_err(|e| match e {
        NumericsError::RankDeficient | NumericsError::Singular { .. } => AllocError::RankDeficient,
        other => AllocError::DimensionMismatch(other.to_string()),
    })?;
    Ok(pinv * target)
}

/// Cold-start constrained allocation.
pub fn allocate_qp(problem: &AllocationProblem) -> Result<AllocationResult, AllocError> {
    QpAllocator::default().allocate_qp(problem)
}

/// Active-set allocator holding warm-start state across steps.
#[derive(Debug, Clone, Default)]
pub struct QpAllocator {
    solver: ActiveSetSolver,
}

impl QpAllocator {
    pub fn new(opts: ActiveSetOptions) -> Self {
        Self { solver: ActiveSetSolver::new(opts) }
    }

    pub fn reset(&mut self) {
        self.solver.reset();
    }

    pub fn allocate_qp(&mut self, problem: &AllocationProblem) -> Result<AllocationResult, AllocError> {
        problem.validate()?;
        let m = problem.m();
        self.solve_in(problem, &Mat::identity(m, m))
    }

    /// Allocate over `Δu = Φ·Δu_v`; the original servo inequality is
    /// enforced on `Φ·Δu_v`.
    pub fn allocate_qp_virtual(
        &mut self,
        problem: &AllocationProblem,
        phi: &Mat,
    ) -> Result<VirtualAllocation, AllocError> {
        problem.validate()?;
        if phi.nrows() != problem.m() {
            return Err(AllocError::DimensionMismatch(format!(
                "Φ has {} rows, expected {}",
                phi.nrows(),
                problem.m()
            )));
        }
        let bphi = &problem.b_eff * phi;
        if bphi.rank(1e-10 * (1.0 + bphi.amax())) < problem.p() {
            return Err(AllocError::RankDeficient);
        }
        let result = self.solve_in(problem, phi)?;
        let delta_u_servo = phi * &result.delta_u;
        Ok(VirtualAllocation { result, delta_u_servo })
    }

    fn solve_in(&mut self, problem: &AllocationProblem, t: &Mat) -> Result<AllocationResult, AllocError> {
        let qp = problem.qp_in(t);
        let tol = self.solver.options().tolerance;
        let zero_feasible = qp.b.iter().all(|v| *v >= -tol);
        let (sol, status) = if zero_feasible {
            let sol = self.solver.solve(&qp)?;
            let status = match sol.status {
                QpStatus::Optimal => AllocStatus::Optimal,
                QpStatus::IterationCap => AllocStatus::IterationCap,
            };
            (sol, status)
        } else {
            // Empty feasible set: fall back to the rate box alone.
            let rows = fallback_rows(problem, &qp.b, tol);
            let relaxed = QpProblem { a: qp.a.select_rows(&rows), b: qp.b.select_rows(&rows), ..qp };
            self.solver.reset();
            let mut sol = self.solver.solve_cold(&relaxed)?;
            sol.active = sol.active.iter().map(|&k| rows[k]).collect();
            (sol, AllocStatus::Infeasible)
        };
        let eps_ca = &problem.b_eff * (t * &sol.x) - &problem.target;
        Ok(AllocationResult {
            delta_u: sol.x,
            eps_ca,
            iterations: sol.iterations,
            active_set: sol.active,
            status,
        })
    }
}

fn fallback_rows(problem: &AllocationProblem, b: &Vector, tol: f64) -> Vec<usize> {
    let m = problem.m();
    if m >= 2 && problem.ineq.rows() == 4 * m + 2 * (m - 1) {
        rate_rows(m).collect()
    } else {
        (0..b.len()).filter(|&i| b[i] >= -tol).collect()
    }
}
