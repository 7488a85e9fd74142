//! Integral-augmented LQR acting through the shape basis, a steady-state
//! Kalman filter, and the LQG loop that combines them.

use crate::numerics::{integrate_step, is_hurwitz, max_real_eigenvalue, solve_care, Lu, Mat, NumericsError, Vector};
use crate::plant::WingModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LqgError {
    #[error("augmented pair is not stabilizable: {0}")]
    NotStabilizable(NumericsError),
    #[error("output pair is not detectable: {0}")]
    NotDetectable(NumericsError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{0} must be positive definite")]
    NotPositiveDefinite(&'static str),
}

/// Stabilizing Riccati solution and gain `K = R⁻¹BᵀS` for `u = −K·x`.
pub fn lqr_gain(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<(Mat, Mat), LqgError> {
    let s = solve_care(a, b, q, r).map_err(LqgError::NotStabilizable)?;
    let r_lu = Lu::factor(r).map_err(|_| LqgError::NotPositiveDefinite("R"))?;
    let k = r_lu.solve_mat(&(b.transpose() * &s));
    Ok((s, k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqrDesign {
    pub a_aug: Mat,
    pub b_aug: Mat,
    pub q: Mat,
    pub r: Mat,
    pub s: Mat,
    /// `u_v = K_X·X + K_r·y_r,aug`.
    pub k_x: Mat,
    pub k_r: Mat,
}

/// State weight `blockdiag(CᵀC, 10·I)` and input weight `260·I_q`.
pub fn default_weights(c: &Mat, q_inputs: usize) -> (Mat, Mat) {
    let n = c.ncols();
    let p = c.nrows();
    let mut q = Mat::zeros(n + p, n + p);
    q.view_mut((0, 0), (n, n)).copy_from(&(c.transpose() * c));
    q.view_mut((n, n), (p, p)).copy_from(&(Mat::identity(p, p) * 10.0));
    (q, Mat::identity(q_inputs, q_inputs) * 260.0)
}

/// Augment the wing model with integrated outputs and solve the LQR.
pub fn design_lqr(model: &WingModel, phi: &Mat, q: &Mat, r: &Mat) -> Result<LqrDesign, LqgError> {
    let n = model.n();
    let p = model.c.nrows();
    let qv = phi.ncols();
    if phi.nrows() != model.m() || q.shape() != (n + p, n + p) || r.shape() != (qv, qv) {
        return Err(LqgError::DimensionMismatch(format!(
            "Φ {:?}, Q {:?}, R {:?} for n={n}, p={p}",
            phi.shape(),
            q.shape(),
            r.shape()
        )));
    }
    let mut a_aug = Mat::zeros(n + p, n + p);
    a_aug.view_mut((0, 0), (n, n)).copy_from(&model.a);
    a_aug.view_mut((n, 0), (p, n)).copy_from(&model.c);
    let mut b_aug = Mat::zeros(n + p, qv);
    b_aug.view_mut((0, 0), (n, qv)).copy_from(&(&model.b * phi));
    b_aug.view_mut((n, 0), (p, qv)).copy_from(&(&model.d * phi));

    let (s, k) = lqr_gain(&a_aug, &b_aug, q, r)?;
    let k_x = -k;
    let r_lu = Lu::factor(r).map_err(|_| LqgError::NotPositiveDefinite("R"))?;
    let g = &b_aug * r_lu.solve_mat(&b_aug.transpose());
    let m = &s * &g - a_aug.transpose();
    let m_inv = Lu::factor(&m).map_err(LqgError::NotStabilizable)?.inverse();
    let k_r = -r_lu.solve_mat(&b_aug.transpose()) * m_inv * &s;
    let closed = &a_aug + &b_aug * &k_x;
    if !is_hurwitz(&closed, 0.0) {
        return Err(LqgError::NotStabilizable(NumericsError::NotHurwitz {
            max_real: max_real_eigenvalue(&closed),
        }));
    }
    Ok(LqrDesign { a_aug, b_aug, q: q.clone(), r: r.clone(), s, k_x, k_r })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanDesign {
    pub l: Mat,
    /// Steady-state estimate error covariance.
    pub p: Mat,
    pub q_k: Mat,
    pub r_k: Mat,
    pub n_k: Mat,
}

/// Steady-state Kalman gain for `ẋ = Ax + … + G·w`, `y = Cx + … + v` with
/// `E[wwᵀ] = Q_k`, `E[vvᵀ] = R_k`, `E[wvᵀ] = N_k`. The cross term is removed
/// by the usual shift `A − G·N·R⁻¹·C`, `Q − N·R⁻¹·Nᵀ` before the dual CARE.
pub fn design_kalman(a: &Mat, g: &Mat, c: &Mat, q_k: &Mat, r_k: &Mat, n_k: &Mat) -> Result<KalmanDesign, LqgError> {
    let n = a.nrows();
    let (p, w) = (c.nrows(), g.ncols());
    if g.nrows() != n || c.ncols() != n || q_k.shape() != (w, w) || r_k.shape() != (p, p) || n_k.shape() != (w, p) {
        return Err(LqgError::DimensionMismatch(format!(
            "A {:?}, G {:?}, C {:?}, Q {:?}, R {:?}, N {:?}",
            a.shape(),
            g.shape(),
            c.shape(),
            q_k.shape(),
            r_k.shape(),
            n_k.shape()
        )));
    }
    if r_k.clone().cholesky().is_none() {
        return Err(LqgError::NotPositiveDefinite("R_k"));
    }
    let r_lu = Lu::factor(r_k).map_err(|_| LqgError::NotPositiveDefinite("R_k"))?;
    let nr = r_lu.solve_mat(&n_k.transpose()).transpose();
    let a_t = a - g * &nr * c;
    let q_t = q_k - &nr * n_k.transpose();
    let q_t = (&q_t + q_t.transpose()) * 0.5;
    let qn = g * q_t * g.transpose();
    let pcov = solve_care(&a_t.transpose(), &c.transpose(), &qn, r_k).map_err(LqgError::NotDetectable)?;
    let l = r_lu.solve_mat(&(c * &pcov + n_k.transpose() * g.transpose())).transpose();
    if !is_hurwitz(&(a - &l * c), 0.0) {
        return Err(LqgError::NotDetectable(NumericsError::NotHurwitz {
            max_real: max_real_eigenvalue(&(a - &l * c)),
        }));
    }
    Ok(KalmanDesign { l, p: pcov, q_k: q_k.clone(), r_k: r_k.clone(), n_k: n_k.clone() })
}

/// Noise covariances for the load-output filter.
///
/// The process noise is the gust channel (one input through `B_g`). The
/// default cross-covariance lists more entries than there are load outputs;
/// the first `p` are used. `R_k` is the applied noise variance.
pub fn kalman_noise_wiring(q_k: f64, n_k: &[f64], noise_std: &[f64]) -> (Mat, Mat, Mat) {
    let p = noise_std.len();
    let q = Mat::from_element(1, 1, q_k);
    let r = Mat::from_fn(p, p, |i, j| if i == j { noise_std[i] * noise_std[i] } else { 0.0 });
    let n = Mat::from_fn(1, p, |_, j| n_k.get(j).copied().unwrap_or(0.0));
    (q, r, n)
}

/// Process-noise scalar of the gust channel.
pub const DEFAULT_Q_K: f64 = 1.02e-5;
/// Cross-covariance entries; the wiring uses the first `p`.
pub const DEFAULT_N_K: [f64; 6] = [3.16e-5, 3.16e-5, 6.41e-5, 6.41e-5, 87.1e-5, 87.1e-5];

/// Copy of `model` with every entry scaled by an independent factor drawn
/// uniformly from `[1 − rel, 1 + rel]`.
pub fn perturb_model(model: &WingModel, rel: f64, seed: u64) -> WingModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scale = |m: &Mat| m.map(|v| v * (1.0 + rel * (2.0 * rng.random::<f64>() - 1.0)));
    let a = scale(&model.a);
    let b = scale(&model.b);
    let c = scale(&model.c);
    let d = scale(&model.d);
    WingModel { a, b, b_g: model.b_g.clone(), c, d }
}

/// How the loop obtains its state.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    /// Use the plant state directly.
    FullState,
    Kalman(KalmanDesign),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqgTick {
    /// Command after clamping to the position box.
    pub u: Vector,
    pub uv: Vector,
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub struct LqgController {
    lqr: LqrDesign,
    estimator: Estimator,
    model: WingModel,
    phi: Mat,
    u_min: Vec<f64>,
    u_max: Vec<f64>,
    dt: f64,
    substeps: usize,
    x_hat: Vector,
    integral: Vector,
    z_prev: Vector,
    u_prev: Vector,
}

impl LqgController {
    /// `model` is the design (estimated) model; `dt` the controller period.
    pub fn new(
        lqr: LqrDesign,
        estimator: Estimator,
        model: WingModel,
        phi: Mat,
        u_min: Vec<f64>,
        u_max: Vec<f64>,
        dt: f64,
        substeps: usize,
    ) -> Self {
        let (n, p, m) = (model.n(), model.c.nrows(), model.m());
        Self {
            lqr,
            estimator,
            model,
            phi,
            u_min,
            u_max,
            dt,
            substeps: substeps.max(1),
            x_hat: Vector::zeros(n),
            integral: Vector::zeros(p),
            z_prev: Vector::zeros(p),
            u_prev: Vector::zeros(m),
        }
    }

    pub fn lqr(&self) -> &LqrDesign {
        &self.lqr
    }

    pub fn x_hat(&self) -> &Vector {
        &self.x_hat
    }

    /// One controller tick: update the state estimate over the last period,
    /// advance the output integral by the trapezoid rule, then apply the
    /// feedback and feedforward gains.
    pub fn step(&mut self, y_meas: &Vector, y_ref: &Vector, x_true: Option<&Vector>) -> LqgTick {
        match (&self.estimator, x_true) {
            (Estimator::FullState, Some(x)) => self.x_hat = x.clone(),
            (Estimator::FullState, None) => {}
            (Estimator::Kalman(k), _) => {
                let h = self.dt / self.substeps as f64;
                let model = &self.model;
                let l = &k.l;
                let drive = &model.b * &self.u_prev + l * (y_meas - &model.d * &self.u_prev);
                let a_est = &model.a - l * &model.c;
                for _ in 0..self.substeps {
                    // Linear dynamics with finite inputs cannot blow up in one substep.
                    self.x_hat = integrate_step(|x, d| &a_est * x + d, &self.x_hat, &drive, h)
                        .unwrap_or_else(|_| self.x_hat.clone());
                }
            }
        }
        // With the state known the integral state is the physical one; with a
        // filter it runs on the estimated output.
        let z = match (&self.estimator, x_true) {
            (Estimator::FullState, Some(_)) => y_meas - y_ref,
            _ => &self.model.c * &self.x_hat + &self.model.d * &self.u_prev - y_ref,
        };
        self.integral += (&self.z_prev + &z) * (0.5 * self.dt);
        self.z_prev = z;

        let n = self.model.n();
        let p = self.integral.len();
        let mut big_x = Vector::zeros(n + p);
        big_x.rows_mut(0, n).copy_from(&self.x_hat);
        big_x.rows_mut(n, p).copy_from(&self.integral);
        let mut r_aug = Vector::zeros(n + p);
        r_aug.rows_mut(n, p).copy_from(&(-y_ref));
        let uv = &self.lqr.k_x * big_x + &self.lqr.k_r * r_aug;
        let raw = &self.phi * &uv;
        let m = raw.len();
        let u = Vector::from_fn(m, |i, _| raw[i].clamp(self.u_min[i], self.u_max[i]));
        let saturated = (0..m).any(|i| u[i] != raw[i]);
        self.u_prev = u.clone();
        LqgTick { u, uv, saturated }
    }
}
