//! Incremental controller on the integrated-load outputs `y = [∫F_y, ∫M_x]`.
//!
//! With relative degree one, `ẏ` is the measured load itself, so the
//! pseudo-control `ν_c = ẏ_r − K·e` is a load demand and no numerical
//! differentiation appears in the loop. Each tick the allocator realizes
//! `B̄·Δu = ν_c − y₀ + B̄·(u_meas − u_prev)`; the last term accounts for the
//! part of the previous command that has not yet reached the surfaces.
//!
//! The certificate half of the module evaluates the ultimate-bound and
//! recursive allocation-error bounds on a logged run.

use crate::allocator::{
    allocate_pseudo_inverse, AllocError, AllocStatus, AllocationProblem, QpAllocator,
};
use crate::constraints::{assemble, assemble_unchecked, InputLimits};
use crate::numerics::{pseudo_inverse, solve_lyapunov, spectral_norm, symmetric_eigen_range, Mat, NumericsError, Vector};
use crate::shapes::ShapeBasis;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Free parameter of the ultimate-bound construction, `θ₁ ∈ (0, 1)`.
pub const THETA1: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndiError {
    #[error("gain matrix does not make the error dynamics Hurwitz")]
    UnstableGain,
    #[error("model effectiveness: {0}")]
    Allocation(#[from] AllocError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("contraction bound b = {b_bar} is not below 1; certificate does not apply")]
    GainNotContractive { b_bar: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Allocation {
    PseudoInverse,
    Qp,
    QpVirtual,
}

/// Preferred command `u*` in the secondary objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreferredCommand {
    /// Neutral surfaces.
    Zero,
    /// The current command (penalizes the increment only).
    Current,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndiSettings {
    pub k: Mat,
    pub w1: Mat,
    pub w2: Mat,
    pub sigma: f64,
    pub preferred: PreferredCommand,
    /// Use servo read-back to account for commands still in flight.
    pub inflight_compensation: bool,
}

impl IndiSettings {
    pub fn standard(m: usize) -> Self {
        Self {
            k: Mat::from_diagonal_element(2, 2, 0.1),
            w1: Mat::identity(2, 2),
            w2: Mat::identity(m, m),
            sigma: 1e-3,
            preferred: PreferredCommand::Zero,
            inflight_compensation: true,
        }
    }
}

/// `ν_c = ẏ_r − K·e`.
pub fn pseudo_control(e: &Vector, y_r_dot: &Vector, k: &Mat) -> Vector {
    y_r_dot - k * e
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndiState {
    pub u_prev: Vector,
    /// Virtual coordinates of `u_prev` (servo coordinates without a basis).
    pub uv_prev: Vector,
    /// Integrated tracking error `∫(y₀ − ẏ_r)`.
    pub e: Vector,
}

/// Everything one tick produced.
#[derive(Debug, Clone, PartialEq)]
pub struct IndiTick {
    pub u: Vector,
    pub uv: Vector,
    pub delta_u: Vector,
    pub nu_c: Vector,
    pub target: Vector,
    /// `B̄·Δu − target` for the increment actually applied.
    pub eps_ca: Vector,
    /// `u_meas − u_prev` used in the target (zero without compensation).
    pub compensation: Vector,
    pub iterations: usize,
    pub status: Option<AllocStatus>,
    pub constrained: bool,
}

#[derive(Debug, Clone)]
pub struct IndiController {
    allocation: Allocation,
    b_model: Mat,
    limits: InputLimits,
    basis: Option<ShapeBasis>,
    settings: IndiSettings,
    allocator: QpAllocator,
    state: IndiState,
}

impl IndiController {
    pub fn new(
        allocation: Allocation,
        b_model: Mat,
        limits: InputLimits,
        basis: Option<ShapeBasis>,
        settings: IndiSettings,
    ) -> Result<Self, IndiError> {
        let (p, m) = b_model.shape();
        if limits.m() != m || settings.k.shape() != (p, p) || settings.w1.shape() != (p, p) || settings.w2.shape() != (m, m) {
            return Err(IndiError::DimensionMismatch(format!(
                "B̄ {:?}, limits for {} servos, K {:?}",
                b_model.shape(),
                limits.m(),
                settings.k.shape()
            )));
        }
        // Error dynamics ė = −K·e (+ ε) for unit relative degree.
        if crate::numerics::max_real_eigenvalue(&(-&settings.k)) >= 0.0 {
            return Err(IndiError::UnstableGain);
        }
        pseudo_inverse(&b_model).map_err(|_| AllocError::RankDeficient)?;
        if allocation == Allocation::QpVirtual {
            let b = basis.as_ref().ok_or_else(|| {
                IndiError::DimensionMismatch("virtual allocation needs a shape basis".into())
            })?;
            if b.m() != m {
                return Err(IndiError::DimensionMismatch(format!("basis has {} rows, expected {m}", b.m())));
            }
        }
        let q = match (&basis, allocation) {
            (Some(b), Allocation::QpVirtual) => b.q(),
            _ => m,
        };
        let state = IndiState { u_prev: Vector::zeros(m), uv_prev: Vector::zeros(q), e: Vector::zeros(p) };
        Ok(Self { allocation, b_model, limits, basis, settings, allocator: QpAllocator::default(), state })
    }

    pub fn state(&self) -> &IndiState {
        &self.state
    }

    pub fn b_model(&self) -> &Mat {
        &self.b_model
    }

    pub fn settings(&self) -> &IndiSettings {
        &self.settings
    }

    pub fn allocation(&self) -> Allocation {
        self.allocation
    }

    /// One controller tick.
    ///
    /// `y_meas` is the measured load vector, `y_ref` the load reference
    /// (`ẏ_r`), `u_meas` the servo read-back.
    pub fn step(&mut self, y_meas: &Vector, y_ref: &Vector, u_meas: Option<&Vector>) -> Result<IndiTick, IndiError> {
        let dt = self.limits.dt;
        let p = self.b_model.nrows();
        let m = self.b_model.ncols();
        if y_meas.len() != p || y_ref.len() != p {
            return Err(IndiError::DimensionMismatch("load vectors must have p entries".into()));
        }
        self.state.e += (y_meas - y_ref) * dt;
        let nu_c = pseudo_control(&self.state.e, y_ref, &self.settings.k);
        let compensation = match (self.settings.inflight_compensation, u_meas) {
            (true, Some(um)) => um - &self.state.u_prev,
            _ => Vector::zeros(m),
        };
        let target = &nu_c - y_meas + &self.b_model * &compensation;

        let u_prev = self.state.u_prev.clone();
        let (delta_u, delta_uv, iterations, status, constrained) = match self.allocation {
            Allocation::PseudoInverse => {
                let du = allocate_pseudo_inverse(&self.b_model, &target)?;
                (du.clone(), du, 0, None, false)
            }
            Allocation::Qp | Allocation::QpVirtual => {
                let problem = self.problem(&target, &u_prev);
                let (res, du) = match (&self.basis, self.allocation) {
                    (Some(b), Allocation::QpVirtual) => {
                        let v = self.allocator.allocate_qp_virtual(&problem, b.phi())?;
                        (v.result, v.delta_u_servo)
                    }
                    _ => {
                        let r = self.allocator.allocate_qp(&problem)?;
                        let du = r.delta_u.clone();
                        (r, du)
                    }
                };
                if res.status == AllocStatus::Infeasible {
                    let q = res.delta_u.len();
                    (Vector::zeros(m), Vector::zeros(q), res.iterations, Some(res.status), true)
                } else {
                    let constrained = !res.active_set.is_empty();
                    (du, res.delta_u, res.iterations, Some(res.status), constrained)
                }
            }
        };
        let eps_ca = &self.b_model * &delta_u - &target;
        let u = &u_prev + &delta_u;
        self.state.u_prev = u.clone();
        self.state.uv_prev += &delta_uv;
        Ok(IndiTick {
            u,
            uv: self.state.uv_prev.clone(),
            delta_u,
            nu_c,
            target,
            eps_ca,
            compensation,
            iterations,
            status,
            constrained,
        })
    }

    fn problem(&self, target: &Vector, u_prev: &Vector) -> AllocationProblem {
        let ineq = assemble(&self.limits, u_prev).unwrap_or_else(|_| assemble_unchecked(&self.limits, u_prev));
        let u_star = match self.settings.preferred {
            PreferredCommand::Zero => Vector::zeros(u_prev.len()),
            PreferredCommand::Current => u_prev.clone(),
        };
        AllocationProblem {
            b_eff: self.b_model.clone(),
            target: target.clone(),
            w1: self.settings.w1.clone(),
            w2: self.settings.w2.clone(),
            sigma: self.settings.sigma,
            u0: u_prev.clone(),
            u_star,
            ineq,
        }
    }
}

/// One logged controller tick, in the form the certificate needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertTick {
    pub t: f64,
    /// Noise-free loads at the tick.
    pub y_true: Vec<f64>,
    /// Loads the controller used.
    pub y_meas: Vec<f64>,
    pub nu_c: Vec<f64>,
    pub eps_ca: Vec<f64>,
    pub delta_u: Vec<f64>,
    pub compensation: Vec<f64>,
}

/// Log of a closed-loop run for offline certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateLog {
    pub k: Vec<Vec<f64>>,
    pub b_true: Vec<Vec<f64>>,
    pub b_model: Vec<Vec<f64>>,
    pub ticks: Vec<CertTick>,
    /// Plant-rate `‖(y − ẏ_r) + K·e‖` on truth loads.
    pub eps_cont: Vec<f64>,
    /// Plant-rate `‖e‖` on truth loads.
    pub e_norm: Vec<f64>,
}

pub fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn rows_to_mat(rows: &[Vec<f64>]) -> Result<Mat, IndiError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(IndiError::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub p: Vec<Vec<f64>>,
    pub mu1: f64,
    pub eps_bar_estimate: f64,
    pub ultimate_bound: f64,
    pub b_bar: f64,
    pub delta_bar: f64,
    pub delta_d_bar: f64,
    pub delta_nu_bar: f64,
    pub eps_ca_bar: f64,
    pub recursion_bound: f64,
    /// Largest mismatch between the logged error and the recursion.
    pub recursion_residual: f64,
    pub max_eps_indi_tail: f64,
    pub max_e_tail: f64,
    pub eps_indi_within_bound: bool,
    pub e_within_bound: bool,
}

impl BoundCertificate {
    pub fn passed(&self) -> bool {
        self.eps_indi_within_bound && self.e_within_bound
    }
}

/// `E = I − K_B` with `K_B = B_true·B̄⁺`.
pub fn contraction_matrix(b_true: &Mat, b_model: &Mat) -> Result<Mat, IndiError> {
    let kb = b_true * pseudo_inverse(b_model)?;
    let p = kb.nrows();
    Ok(Mat::identity(p, p) - kb)
}

/// Lyapunov data of the error dynamics for unit relative degree:
/// `P` from `P(−K) + (−K)ᵀP = −I` and `μ₁ = 2‖P‖/(1 − θ₁)`.
pub fn lyapunov_certificate(k: &Mat) -> Result<(Mat, f64, f64), IndiError> {
    let p_dim = k.nrows();
    let p = solve_lyapunov(&(-k), &Mat::identity(p_dim, p_dim)).map_err(|e| match e {
        NumericsError::NotHurwitz { .. } => IndiError::UnstableGain,
        other => IndiError::Numerics(other),
    })?;
    // B_c = I for this output structure.
    let mu1 = 2.0 * spectral_norm(&p) / (1.0 - THETA1);
    let (lo, hi) = symmetric_eigen_range(&p);
    Ok((p, mu1, (hi / lo).sqrt()))
}

/// Evaluate both bounds on a logged run. The tail is the final half.
pub fn certify_bounds(k: &Mat, b_true: &Mat, b_model: &Mat, log: &CertificateLog) -> Result<BoundCertificate, IndiError> {
    let (p_mat, mu1, cond) = lyapunov_certificate(k)?;
    let e_mat = contraction_matrix(b_true, b_model)?;
    let b_bar = spectral_norm(&e_mat);
    if b_bar >= 1.0 {
        return Err(IndiError::GainNotContractive { b_bar });
    }
    let p = b_model.nrows();
    let kb = Mat::identity(p, p) - &e_mat;
    let v = |x: &Vec<f64>| Vector::from_column_slice(x);

    let eps_bar = log.eps_cont.iter().fold(0.0_f64, |a, b| a.max(*b));
    let ultimate_bound = cond * mu1 * eps_bar;

    // ε(k) = y(k+1) − ν(k); δ(k) is the part of the load change not
    // explained by the applied increment through K_B·B̄.
    let n = log.ticks.len();
    let mut eps = Vec::with_capacity(n.saturating_sub(1));
    let (mut delta_bar, mut dd_bar, mut dnu_bar, mut eca_bar, mut residual) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for kk in 0..n.saturating_sub(1) {
        let tick = &log.ticks[kk];
        let y_k = v(&tick.y_true);
        let y_next = v(&log.ticks[kk + 1].y_true);
        let nu = v(&tick.nu_c);
        let du = v(&tick.delta_u);
        let comp = v(&tick.compensation);
        let eca = v(&tick.eps_ca);
        let eps_k = &y_next - &nu;
        let delta = &y_next - &y_k - &kb * (b_model * (&du - &comp));
        let dd = &kb * (&y_k - v(&tick.y_meas));
        delta_bar = delta_bar.max(delta.norm());
        dd_bar = dd_bar.max(dd.norm());
        eca_bar = eca_bar.max(eca.norm());
        if kk > 0 {
            let dnu = &nu - v(&log.ticks[kk - 1].nu_c);
            dnu_bar = dnu_bar.max(dnu.norm());
            let prev: &Vector = &eps[kk - 1];
            let predicted = &e_mat * (prev - &dnu) + &kb * &eca + &dd + &delta;
            let scale = 1.0 + eps_k.amax();
            residual = residual.max((&predicted - &eps_k).amax() / scale);
        }
        eps.push(eps_k);
    }
    let recursion_bound = (dnu_bar * b_bar + delta_bar + dd_bar + (b_bar + 1.0) * eca_bar) / (1.0 - b_bar);
    let tail_start = eps.len() / 2;
    let max_eps_indi_tail = eps[tail_start..].iter().map(|e| e.norm()).fold(0.0, f64::max);
    let e_tail = log.e_norm.len() / 2;
    let max_e_tail = log.e_norm[e_tail..].iter().copied().fold(0.0, f64::max);
    Ok(BoundCertificate {
        p: mat_to_rows(&p_mat),
        mu1,
        eps_bar_estimate: eps_bar,
        ultimate_bound,
        b_bar,
        delta_bar,
        delta_d_bar: dd_bar,
        delta_nu_bar: dnu_bar,
        eps_ca_bar: eca_bar,
        recursion_bound,
        recursion_residual: residual,
        max_eps_indi_tail,
        max_e_tail,
        eps_indi_within_bound: max_eps_indi_tail <= recursion_bound,
        e_within_bound: max_e_tail <= ultimate_bound,
    })
}

/// [`certify_bounds`] with the matrices stored in the log.
pub fn certify_log(log: &CertificateLog) -> Result<BoundCertificate, IndiError> {
    certify_bounds(&rows_to_mat(&log.k)?, &rows_to_mat(&log.b_true)?, &rows_to_mat(&log.b_model)?, log)
}
