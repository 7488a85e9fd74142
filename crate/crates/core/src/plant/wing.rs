//! Modal state-space wing model and the synthetic twin parameters.

use crate::numerics::{is_hurwitz, pseudo_inverse, Lu, Mat, Vector};
use serde::{Deserialize, Serialize};

use super::PlantError;

/// `ẋ = A·x + B·u + B_g·α_g`, `y = C·x + D·u` with `y = [F_y, M_x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WingModel {
    pub a: Mat,
    pub b: Mat,
    pub b_g: Vector,
    pub c: Mat,
    pub d: Mat,
}

impl WingModel {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// `C(−A)⁻¹B + D`.
    pub fn static_gain(&self) -> Mat {
        let lu = Lu::factor(&(-&self.a)).expect("Hurwitz A is invertible");
        &self.c * lu.solve_mat(&self.b) + &self.d
    }

    /// Steady loads per degree of gust angle.
    pub fn gust_static_gain(&self) -> Vector {
        let lu = Lu::factor(&(-&self.a)).expect("Hurwitz A is invertible");
        &self.c * lu.solve(&self.b_g)
    }

    pub fn derivative(&self, x: &Vector, u: &Vector, alpha_g: f64) -> Vector {
        &self.a * x + &self.b * u + &self.b_g * alpha_g
    }

    pub fn output(&self, x: &Vector, u: &Vector) -> Vector {
        &self.c * x + &self.d * u
    }

    pub fn check(&self) -> Result<(), PlantError> {
        let (n, m) = (self.a.nrows(), self.b.ncols());
        if self.a.ncols() != n
            || self.b.nrows() != n
            || self.b_g.len() != n
            || self.c.shape() != (2, n)
            || self.d.shape() != (2, m)
        {
            return Err(PlantError::InvalidModel("inconsistent state-space shapes".into()));
        }
        if !is_hurwitz(&self.a, 0.0) {
            return Err(PlantError::InvalidModel("A is not Hurwitz".into()));
        }
        if self.static_gain().rank(1e-9) < 2 {
            return Err(PlantError::InvalidModel("static gain is not full row rank".into()));
        }
        Ok(())
    }
}

/// Parameters of the synthetic twin. There is no identified model to load,
/// so these are fixed, versioned defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwinParams {
    pub version: u32,
    /// Half span (m).
    pub half_span: f64,
    /// Servo stations (m from root), strictly increasing.
    pub locations: Vec<f64>,
    /// Root servo shear effectiveness (load units per deg).
    pub fy_root: f64,
    /// Fractional loss of shear effectiveness from root to tip.
    pub fy_taper: f64,
    /// Structural modes (Hz).
    pub mode_freq_hz: Vec<f64>,
    pub mode_damping: Vec<f64>,
    /// Spanwise load centre of each mode as a fraction of the half span.
    pub mode_arm: Vec<f64>,
    /// Share of the servo static gain that passes through the modes; the
    /// remainder is direct feedthrough.
    pub modal_fraction: f64,
    /// Steady shear per degree of gust angle (load units per deg).
    pub gust_fy: f64,
    /// Gust load centre as a fraction of the half span.
    pub gust_arm: f64,
    /// Nominal loads that percentage commands refer to.
    pub fy_nominal: f64,
    pub mx_nominal: f64,
}

impl Default for TwinParams {
    fn default() -> Self {
        let half_span = 1.6;
        let m = 12;
        Self {
            version: 1,
            half_span,
            locations: (0..m).map(|i| half_span * (i as f64 + 0.5) / m as f64).collect(),
            fy_root: 100.0,
            fy_taper: 0.4,
            mode_freq_hz: vec![3.0, 5.5, 8.0],
            mode_damping: vec![0.35, 0.4, 0.45],
            mode_arm: vec![0.3, 0.45, 0.6],
            modal_fraction: 0.2,
            gust_fy: 1800.0,
            gust_arm: 0.6,
            fy_nominal: 24000.0,
            mx_nominal: 16000.0,
        }
    }
}

impl TwinParams {
    pub fn m(&self) -> usize {
        self.locations.len()
    }

    /// Static servo effectiveness: shear row tapers with span, moment row
    /// is shear times arm.
    pub fn static_effectiveness(&self) -> Mat {
        let m = self.m();
        Mat::from_fn(2, m, |r, i| {
            let x = self.locations[i];
            let fy = self.fy_root * (1.0 - self.fy_taper * x / self.half_span);
            if r == 0 {
                fy
            } else {
                fy * x
            }
        })
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let k = self.mode_freq_hz.len();
        if k == 0 || self.mode_damping.len() != k || self.mode_arm.len() != k {
            return Err(PlantError::InvalidModel("mode lists must be non-empty and equal length".into()));
        }
        if self.m() < 2 {
            return Err(PlantError::InvalidModel("need at least two servos".into()));
        }
        if !(0.0..=1.0).contains(&self.modal_fraction) {
            return Err(PlantError::InvalidModel("modal_fraction must be in [0, 1]".into()));
        }
        if self.mode_freq_hz.iter().chain(&self.mode_damping).any(|v| *v <= 0.0) {
            return Err(PlantError::InvalidModel("mode frequencies and damping must be positive".into()));
        }
        if !(self.half_span > 0.0) || self.locations.iter().any(|x| *x <= 0.0 || *x > self.half_span) {
            return Err(PlantError::InvalidModel("servo stations must lie in (0, half_span]".into()));
        }
        Ok(())
    }
}

/// Build the modal model: each mode is a damped oscillator whose
/// displacement loads the root with `[1, arm]`. Input matrices are chosen so
/// the static servo gain equals the effectiveness matrix and the static gust
/// gain equals `gust_fy·[1, gust_arm·L]`.
pub fn synthesize_wing_model(params: &TwinParams) -> Result<WingModel, PlantError> {
    params.validate()?;
    let k = params.mode_freq_hz.len();
    let n = 2 * k;
    let m = params.m();
    let s = params.static_effectiveness();

    let omega: Vec<f64> = params.mode_freq_hz.iter().map(|f| 2.0 * std::f64::consts::PI * f).collect();
    let mut a = Mat::zeros(n, n);
    let mut c = Mat::zeros(2, n);
    for j in 0..k {
        let (w, z) = (omega[j], params.mode_damping[j]);
        a[(2 * j, 2 * j + 1)] = 1.0;
        a[(2 * j + 1, 2 * j)] = -w * w;
        a[(2 * j + 1, 2 * j + 1)] = -2.0 * z * w;
        c[(0, 2 * j)] = 1.0;
        c[(1, 2 * j)] = params.mode_arm[j] * params.half_span;
    }
    // Static modal displacement is (input row)/ω², so the static map from
    // modal input rows to loads is C_m·diag(1/ω²).
    let cm = Mat::from_fn(2, k, |r, j| c[(r, 2 * j)] / (omega[j] * omega[j]));
    let cm_pinv = pseudo_inverse(&cm).map_err(|_| {
        PlantError::InvalidModel("modes need at least two distinct arms".into())
    })?;
    let modal_in = &cm_pinv * (&s * params.modal_fraction);
    let gust_static = Vector::from_vec(vec![params.gust_fy, params.gust_fy * params.gust_arm * params.half_span]);
    let gust_in = &cm_pinv * gust_static;

    let mut b = Mat::zeros(n, m);
    let mut b_g = Vector::zeros(n);
    for j in 0..k {
        b.row_mut(2 * j + 1).copy_from(&modal_in.row(j));
        b_g[2 * j + 1] = gust_in[j];
    }
    let d = &s * (1.0 - params.modal_fraction);
    let model = WingModel { a, b, b_g, c, d };
    model.check()?;
    Ok(model)
}
