//! Servo position, rate and adjacent-pair limits compiled into one linear
//! inequality `A·Δu ≤ b` on the control increment.
//!
//! Row order: position upper, position lower, relative upper, relative
//! lower, rate upper, rate lower.

use crate::numerics::{Mat, Vector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on the current command before it counts as out of bounds.
pub const STATE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
    #[error("current command violates the relative limit of pair {pair} by {excess}")]
    InfeasibleCurrentState { pair: usize, excess: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputLimits {
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
    pub rate_min: Vec<f64>,
    pub rate_max: Vec<f64>,
    pub u_adj: Vec<f64>,
    pub dt: f64,
}

impl InputLimits {
    pub fn new(
        u_min: Vec<f64>,
        u_max: Vec<f64>,
        rate_min: Vec<f64>,
        rate_max: Vec<f64>,
        u_adj: Vec<f64>,
        dt: f64,
    ) -> Result<Self, ConstraintError> {
        let limits = Self { u_min, u_max, rate_min, rate_max, u_adj, dt };
        limits.validate()?;
        Ok(limits)
    }

    /// Same bounds on every servo.
    pub fn uniform(
        m: usize,
        position: f64,
        rate: f64,
        u_adj: Vec<f64>,
        dt: f64,
    ) -> Result<Self, ConstraintError> {
        Self::new(
            vec![-position; m],
            vec![position; m],
            vec![-rate; m],
            vec![rate; m],
            u_adj,
            dt,
        )
    }

    /// Twelve servos, ±30 deg, ±80 deg/s, adjacent limits alternating
    /// 55/10 deg starting at the root, 15 ms controller period.
    pub fn smartx() -> Self {
        Self::uniform(12, 30.0, 80.0, alternating_adjacent(12, 55.0, 10.0), 0.015)
            .expect("built-in limits are valid")
    }

    pub fn m(&self) -> usize {
        self.u_min.len()
    }

    /// Number of inequality rows, `4m + 2(m−1)`.
    pub fn rows(&self) -> usize {
        let m = self.m();
        4 * m + 2 * (m - 1)
    }

    pub fn validate(&self) -> Result<(), ConstraintError> {
        let m = self.u_min.len();
        if m < 2 {
            return Err(ConstraintError::BadDimension(format!("need m >= 2 servos, got {m}")));
        }
        for (name, len) in [
            ("u_max", self.u_max.len()),
            ("rate_min", self.rate_min.len()),
            ("rate_max", self.rate_max.len()),
        ] {
            if len != m {
                return Err(ConstraintError::BadDimension(format!("{name} has {len} entries, expected {m}")));
            }
        }
        if self.u_adj.len() != m - 1 {
            return Err(ConstraintError::BadDimension(format!(
                "u_adj has {} entries, expected {}",
                self.u_adj.len(),
                m - 1
            )));
        }
        let all = self
            .u_min
            .iter()
            .chain(&self.u_max)
            .chain(&self.rate_min)
            .chain(&self.rate_max)
            .chain(&self.u_adj);
        if !all.clone().all(|v| v.is_finite()) {
            return Err(ConstraintError::InvalidLimits("non-finite limit".into()));
        }
        for i in 0..m {
            if self.u_min[i] >= self.u_max[i] {
                return Err(ConstraintError::InvalidLimits(format!("u_min >= u_max at servo {i}")));
            }
            if !(self.rate_min[i] < 0.0 && self.rate_max[i] > 0.0) {
                return Err(ConstraintError::InvalidLimits(format!("rate limits must straddle 0 at servo {i}")));
            }
        }
        if self.u_adj.iter().any(|v| *v <= 0.0) {
            return Err(ConstraintError::InvalidLimits("u_adj must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ConstraintError::InvalidLimits("dt must be positive".into()));
        }
        Ok(())
    }

    /// Clamp a command into the position box.
    pub fn clamp_position(&self, u: &Vector) -> Vector {
        Vector::from_fn(u.len(), |i, _| u[i].clamp(self.u_min[i], self.u_max[i]))
    }

    /// Count the physical limit families a step `u_prev → u` breaks, each
    /// checked directly with tolerance `tol`: (position, relative, rate).
    pub fn violations(&self, u_prev: &Vector, u: &Vector, tol: f64) -> (usize, usize, usize) {
        let m = self.m();
        let pos = (0..m)
            .filter(|&i| u[i] > self.u_max[i] + tol || u[i] < self.u_min[i] - tol)
            .count();
        let rel = (0..m - 1)
            .filter(|&i| (u[i] - u[i + 1]).abs() > self.u_adj[i] + tol)
            .count();
        let rate = (0..m)
            .filter(|&i| {
                let du = u[i] - u_prev[i];
                du > self.rate_max[i] * self.dt + tol || du < self.rate_min[i] * self.dt - tol
            })
            .count();
        (pos, rel, rate)
    }
}

/// `[a, b, a, b, …]` of length `m − 1`.
pub fn alternating_adjacent(m: usize, first: f64, second: f64) -> Vec<f64> {
    (0..m.saturating_sub(1)).map(|i| if i % 2 == 0 { first } else { second }).collect()
}

/// `A·Δu ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearInequality {
    pub a: Mat,
    pub b: Vector,
}

impl LinearInequality {
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// Largest `a_i·x − b_i` (negative when strictly inside).
    pub fn max_violation(&self, x: &Vector) -> f64 {
        (&self.a * x - &self.b).iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    pub fn is_satisfied(&self, x: &Vector, tol: f64) -> bool {
        self.rows() == 0 || self.max_violation(x) <= tol
    }

    /// Keep only the listed rows.
    pub fn select_rows(&self, rows: &[usize]) -> LinearInequality {
        LinearInequality { a: self.a.select_rows(rows), b: self.b.select_rows(rows) }
    }

    /// Inequality on `z` where `Δu = T·z`.
    pub fn compose(&self, t: &Mat) -> LinearInequality {
        LinearInequality { a: &self.a * t, b: self.b.clone() }
    }
}

/// `(m−1)×m` first-difference matrix: `+1` at `(i,i)`, `−1` at `(i,i+1)`.
pub fn adjacency_matrix(m: usize) -> Result<Mat, ConstraintError> {
    if m < 2 {
        return Err(ConstraintError::BadDimension(format!("need m >= 2, got {m}")));
    }
    let mut c = Mat::zeros(m - 1, m);
    for i in 0..m - 1 {
        c[(i, i)] = 1.0;
        c[(i, i + 1)] = -1.0;
    }
    Ok(c)
}

/// Row indices of the rate block for `m` servos.
pub fn rate_rows(m: usize) -> std::ops::Range<usize> {
    let start = 2 * m + 2 * (m - 1);
    start..start + 2 * m
}

/// Build `A·Δu ≤ b` around the current command `u0`.
///
/// `u0` is first clamped into the position box. Fails when the clamped
/// command already breaks a relative limit by more than [`STATE_SLACK`].
pub fn assemble(limits: &InputLimits, u0: &Vector) -> Result<LinearInequality, ConstraintError> {
    limits.validate()?;
    let m = limits.m();
    if u0.len() != m {
        return Err(ConstraintError::BadDimension(format!("u0 has {} entries, expected {m}", u0.len())));
    }
    let u0 = limits.clamp_position(u0);
    let ineq = build(limits, &u0);
    for i in 0..m - 1 {
        let d = (u0[i] - u0[i + 1]).abs();
        let excess = d - limits.u_adj[i];
        if excess > STATE_SLACK {
            return Err(ConstraintError::InfeasibleCurrentState { pair: i, excess });
        }
    }
    Ok(ineq)
}

/// [`assemble`] without the relative-state check; `b` may exclude `Δu = 0`.
pub fn assemble_unchecked(limits: &InputLimits, u0: &Vector) -> LinearInequality {
    build(limits, &limits.clamp_position(u0))
}

fn build(limits: &InputLimits, u0: &Vector) -> LinearInequality {
    let m = limits.m();
    let c = adjacency_matrix(m).expect("validated m >= 2");
    let r = limits.rows();
    let eye = Mat::identity(m, m);
    let mut a = Mat::zeros(r, m);
    let mut b = Vector::zeros(r);
    let cu0 = &c * u0;

    let mut row = 0;
    a.view_mut((row, 0), (m, m)).copy_from(&eye);
    for i in 0..m {
        b[row + i] = limits.u_max[i] - u0[i];
    }
    row += m;
    a.view_mut((row, 0), (m, m)).copy_from(&(-&eye));
    for i in 0..m {
        b[row + i] = -limits.u_min[i] + u0[i];
    }
    row += m;
    a.view_mut((row, 0), (m - 1, m)).copy_from(&c);
    for i in 0..m - 1 {
        b[row + i] = limits.u_adj[i] - cu0[i];
    }
    row += m - 1;
    a.view_mut((row, 0), (m - 1, m)).copy_from(&(-&c));
    for i in 0..m - 1 {
        b[row + i] = limits.u_adj[i] + cu0[i];
    }
    row += m - 1;
    a.view_mut((row, 0), (m, m)).copy_from(&eye);
    for i in 0..m {
        b[row + i] = limits.rate_max[i] * limits.dt;
    }
    row += m;
    a.view_mut((row, 0), (m, m)).copy_from(&(-&eye));
    for i in 0..m {
        b[row + i] = -limits.rate_min[i] * limits.dt;
    }
    LinearInequality { a, b }
}
