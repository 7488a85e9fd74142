//! Digital twin of the wing: modal wing dynamics, servo
//! channels with delay, lag, backlash and fault, gust input, colored
//! measurement noise and the measurement low-pass filter.
//!
//! The plant runs at the sensor rate. Commands are held between controller
//! ticks and travel `delay → servo filter → backlash → effectiveness scale →
//! wing`.

mod actuator;
mod gust;
mod noise;
mod wing;

pub use actuator::{backlash_step, fault_scales, freeplay, Backlash, BacklashParams};
pub use gust::{gust_angle, GustProfile};
pub use noise::{white_noise_gain, NoiseConfig, NoiseModel};
pub use wing::{synthesize_wing_model, TwinParams, WingModel};

use crate::numerics::{integrate_step, Mat, NumericsError, SecondOrderFilter, Vector};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("invalid plant model: {0}")]
    InvalidModel(String),
    #[error("invalid plant option: {0}")]
    InvalidOption(String),
    #[error("plant state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Second-order low-pass parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterParams {
    pub zeta: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantOptions {
    /// Plant and sensor step (s).
    pub dt: f64,
    /// Command transport delay (s).
    pub delay: f64,
    pub servo: FilterParams,
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
    pub backlash: Option<BacklashParams>,
    pub effectiveness_scale: Vec<f64>,
    pub noise: Option<NoiseConfig>,
    /// Low-pass applied to measured loads and, for synchronization, to the
    /// servo position read-back.
    pub measurement_filter: Option<FilterParams>,
}

impl PlantOptions {
    pub fn nominal(m: usize) -> Self {
        Self {
            dt: 0.001,
            delay: 0.015,
            servo: FilterParams { zeta: 0.71, omega: 16.52 },
            u_min: vec![-30.0; m],
            u_max: vec![30.0; m],
            backlash: None,
            effectiveness_scale: vec![1.0; m],
            noise: None,
            measurement_filter: None,
        }
    }

    pub fn delay_steps(&self) -> usize {
        (self.delay / self.dt).round() as usize
    }
}

/// Loads and servo read-back after one plant step.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSample {
    pub t: f64,
    /// Noise-free loads `[F_y, M_x]`.
    pub truth: Vector,
    /// Truth plus noise.
    pub raw: Vector,
    /// `raw` after the measurement filter (equal to `raw` without one).
    pub filtered: Vector,
    /// Servo output angles before backlash.
    pub servo: Vector,
    /// Servo read-back passed through the measurement filter when present.
    pub servo_measured: Vector,
    /// Effective surface deflection seen by the wing.
    pub u_eff: Vector,
}

#[derive(Debug, Clone)]
pub struct WingPlant {
    model: WingModel,
    opts: PlantOptions,
    x: Vector,
    queue: VecDeque<Vector>,
    servos: Vec<SecondOrderFilter>,
    backlash: Option<Vec<Backlash>>,
    noise: Option<NoiseModel>,
    load_filters: Option<Vec<SecondOrderFilter>>,
    servo_filters: Option<Vec<SecondOrderFilter>>,
    steps: u64,
    sample: LoadSample,
}

impl WingPlant {
    pub fn new(model: WingModel, opts: PlantOptions, seed: u64) -> Result<Self, PlantError> {
        model.check()?;
        let m = model.m();
        if opts.u_min.len() != m || opts.u_max.len() != m || opts.effectiveness_scale.len() != m {
            return Err(PlantError::InvalidOption("per-servo option lengths must equal m".into()));
        }
        if !(opts.dt > 0.0) || !(opts.delay >= 0.0) {
            return Err(PlantError::InvalidOption("dt must be > 0 and delay >= 0".into()));
        }
        let servo = SecondOrderFilter::new(opts.servo.zeta, opts.servo.omega, opts.dt)?;
        let noise = match &opts.noise {
            Some(cfg) => Some(NoiseModel::new(cfg, opts.dt, seed)?),
            None => None,
        };
        let (load_filters, servo_filters) = match opts.measurement_filter {
            Some(f) => {
                let proto = SecondOrderFilter::new(f.zeta, f.omega, opts.dt)?;
                (Some(vec![proto.clone(); 2]), Some(vec![proto; m]))
            }
            None => (None, None),
        };
        let zero_m = Vector::zeros(m);
        let zero_p = Vector::zeros(2);
        let queue = std::iter::repeat_n(zero_m.clone(), opts.delay_steps()).collect();
        let backlash = opts
            .backlash
            .map(|p| (0..m).map(|_| Backlash::new(p, 0.0, 0.0)).collect());
        Ok(Self {
            x: Vector::zeros(model.n()),
            queue,
            servos: vec![servo; m],
            backlash,
            noise,
            load_filters,
            servo_filters,
            steps: 0,
            sample: LoadSample {
                t: 0.0,
                truth: zero_p.clone(),
                raw: zero_p.clone(),
                filtered: zero_p,
                servo: zero_m.clone(),
                servo_measured: zero_m.clone(),
                u_eff: zero_m,
            },
            model,
            opts,
        })
    }

    pub fn model(&self) -> &WingModel {
        &self.model
    }

    pub fn options(&self) -> &PlantOptions {
        &self.opts
    }

    pub fn state(&self) -> &Vector {
        &self.x
    }

    pub fn sample(&self) -> &LoadSample {
        &self.sample
    }

    pub fn time(&self) -> f64 {
        self.sample.t
    }

    /// Static effectiveness of the plant as built, including fault scales.
    pub fn true_effectiveness(&self) -> Mat {
        let mut s = self.model.static_gain();
        for (j, k) in self.opts.effectiveness_scale.iter().enumerate() {
            s.column_mut(j).scale_mut(*k);
        }
        s
    }

    /// Advance one plant step with `command` held and gust angle `alpha_g`.
    pub fn step(&mut self, command: &Vector, alpha_g: f64) -> Result<&LoadSample, PlantError> {
        let m = self.model.m();
        let clamped =
            Vector::from_fn(m, |i, _| command[i].clamp(self.opts.u_min[i], self.opts.u_max[i]));
        let delayed = if self.queue.is_empty() {
            clamped
        } else {
            self.queue.push_back(clamped);
            self.queue.pop_front().expect("queue is non-empty")
        };
        let servo = Vector::from_fn(m, |i, _| self.servos[i].step(delayed[i]));
        let mut u_eff = match &mut self.backlash {
            Some(b) => Vector::from_fn(m, |i, _| b[i].step(servo[i])),
            None => servo.clone(),
        };
        for i in 0..m {
            u_eff[i] *= self.opts.effectiveness_scale[i];
        }

        let model = &self.model;
        let x = integrate_step(|x, u| model.derivative(x, u, alpha_g), &self.x, &u_eff, self.opts.dt);
        self.steps += 1;
        let t = self.steps as f64 * self.opts.dt;
        self.x = x.map_err(|_| PlantError::NonFiniteState { t })?;

        let truth = self.model.output(&self.x, &u_eff);
        let mut raw = truth.clone();
        if let Some(n) = &mut self.noise {
            let w = n.sample();
            raw[0] += w[0];
            raw[1] += w[1];
        }
        let filtered = match &mut self.load_filters {
            Some(f) => Vector::from_fn(2, |i, _| f[i].step(raw[i])),
            None => raw.clone(),
        };
        let servo_measured = match &mut self.servo_filters {
            Some(f) => Vector::from_fn(m, |i, _| f[i].step(servo[i])),
            None => servo.clone(),
        };
        if !truth.iter().chain(raw.iter()).all(|v| v.is_finite()) {
            return Err(PlantError::NonFiniteState { t });
        }
        self.sample = LoadSample { t, truth, raw, filtered, servo, servo_measured, u_eff };
        Ok(&self.sample)
    }
}
