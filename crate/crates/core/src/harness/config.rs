//! Scenario configuration. TOML on disk; every field has a default so a
//! file only needs the keys it changes. Unknown keys are rejected.

use crate::constraints::InputLimits;
use crate::plant::{BacklashParams, FilterParams, GustProfile, NoiseConfig, TwinParams};
use crate::indi::PreferredCommand;
use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    OpenLoop,
    IndiPi,
    IndiQp,
    IndiQpV,
    Lqg,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] = [
        ControllerKind::OpenLoop,
        ControllerKind::IndiPi,
        ControllerKind::IndiQp,
        ControllerKind::IndiQpV,
        ControllerKind::Lqg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::OpenLoop => "open-loop",
            ControllerKind::IndiPi => "indi-pi",
            ControllerKind::IndiQp => "indi-qp",
            ControllerKind::IndiQpV => "indi-qp-v",
            ControllerKind::Lqg => "lqg",
        }
    }

    pub fn is_indi(self) -> bool {
        matches!(self, ControllerKind::IndiPi | ControllerKind::IndiQp | ControllerKind::IndiQpV)
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown controller '{s}' (expected one of open-loop, indi-pi, indi-qp, indi-qp-v, lqg)"))
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Load command as fractions of the nominal loads, ramped by a logistic
/// curve that rises over `[t_start, t_start + duration]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CommandProfile {
    #[default]
    None,
    Fy30,
    Fy35,
    Sigmoid { fy_level: f64, mx_level: f64, t_start: f64, duration: f64 },
}

/// Start of the preset ramps (s).
pub const PRESET_START: f64 = 2.0;
/// Length of the preset ramps (s).
pub const PRESET_RAMP: f64 = 5.0;

/// Ramp length of the combined gust and maneuver preset (s).
pub const GMLA_RAMP: f64 = 15.0;

impl CommandProfile {
    /// `(fy_level, mx_level, t_start, duration)`.
    pub fn parameters(&self) -> (f64, f64, f64, f64) {
        match *self {
            CommandProfile::None => (0.0, 0.0, 0.0, PRESET_RAMP),
            CommandProfile::Fy30 => (0.30, 0.0, PRESET_START, PRESET_RAMP),
            CommandProfile::Fy35 => (0.35, 0.0, PRESET_START, PRESET_RAMP),
            CommandProfile::Sigmoid { fy_level, mx_level, t_start, duration } => (fy_level, mx_level, t_start, duration),
        }
    }

    /// Ramp fraction in `(0, 1)`.
    pub fn ramp(&self, t: f64) -> f64 {
        let (_, _, t_start, duration) = self.parameters();
        let mid = t_start + 0.5 * duration;
        1.0 / (1.0 + (-10.0 * (t - mid) / duration).exp())
    }

    /// Reference loads `[F_y*, M_x*]` at time `t`.
    pub fn reference(&self, t: f64, fy_nominal: f64, mx_nominal: f64) -> [f64; 2] {
        let (fy, mx, _, _) = self.parameters();
        if fy == 0.0 && mx == 0.0 {
            return [0.0, 0.0];
        }
        let s = self.ramp(t);
        [fy * fy_nominal * s, mx * mx_nominal * s]
    }
}

/// Twin load units per unit of the loads the default LQG weights refer to.
/// Output weights scale with its square, cross-covariances linearly. It is a
/// calibration of the twin, not a physical conversion.
pub const TWIN_LOAD_SCALE: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Weights {
    /// Diagonal of the error gain `K` (1/s).
    pub k: [f64; 2],
    /// Diagonal of `W1`.
    pub w1: [f64; 2],
    /// Scalar diagonal of `W2`.
    pub w2: f64,
    pub sigma: f64,
    pub preferred: PreferredCommand,
    pub inflight_compensation: bool,
    /// LQR weight on the integrated output error.
    pub lqr_integral: f64,
    /// LQR weight per virtual input.
    pub lqr_input: f64,
    pub q_k: f64,
    pub n_k: Vec<f64>,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            k: [0.1, 0.1],
            w1: [1.0, 1.0],
            w2: 1.0,
            sigma: 1e-3,
            preferred: PreferredCommand::Zero,
            inflight_compensation: true,
            lqr_integral: 10.0,
            lqr_input: 260.0 * TWIN_LOAD_SCALE * TWIN_LOAD_SCALE,
            q_k: crate::lqg::DEFAULT_Q_K,
            n_k: crate::lqg::DEFAULT_N_K.iter().map(|v| v * TWIN_LOAD_SCALE).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorChoice {
    /// Kalman filter when noise is on, measured plant state otherwise.
    Auto,
    Kalman,
    FullState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LqgSettings {
    pub estimator: EstimatorChoice,
    /// Relative multiplicative error on every design-model entry.
    pub model_error: f64,
    pub model_seed: u64,
    /// Measurement covariance floor used when no noise is applied.
    pub quiet_sensor_std: f64,
}

impl Default for LqgSettings {
    fn default() -> Self {
        Self { estimator: EstimatorChoice::Auto, model_error: 0.1, model_seed: 11, quiet_sensor_std: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantSettings {
    pub dt: f64,
    pub delay: f64,
    pub servo: FilterParams,
    pub backlash: BacklashParams,
    pub noise: NoiseConfig,
    pub measurement_filter: FilterParams,
    /// Apply the measurement filter even when no noise is injected.
    pub filter_without_noise: bool,
}

impl Default for PlantSettings {
    fn default() -> Self {
        Self {
            dt: 0.001,
            delay: 0.015,
            servo: FilterParams { zeta: 0.71, omega: 16.52 },
            backlash: BacklashParams::default(),
            noise: NoiseConfig::default(),
            measurement_filter: FilterParams { zeta: 0.8, omega: 10.0 },
            filter_without_noise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub controller: ControllerKind,
    pub command: CommandProfile,
    pub gust: Option<GustProfile>,
    pub fault: bool,
    pub backlash: bool,
    pub noise: bool,
    pub seed: u64,
    /// Simulated time (s).
    pub duration: f64,
    pub limits: InputLimits,
    /// Virtual basis order.
    pub q: usize,
    pub weights: Weights,
    pub lqg: LqgSettings,
    pub plant: PlantSettings,
    pub twin: TwinParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            controller: ControllerKind::IndiQpV,
            command: CommandProfile::None,
            gust: None,
            fault: false,
            backlash: false,
            noise: false,
            seed: 1,
            duration: 20.0,
            limits: InputLimits::smartx(),
            q: crate::shapes::DEFAULT_ORDER,
            weights: Weights::default(),
            lqg: LqgSettings::default(),
            plant: PlantSettings::default(),
            twin: TwinParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg = |s: String| Err(HarnessError::Config(s));
        self.limits.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.twin.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.limits.m() != self.twin.m() {
            return cfg(format!("limits cover {} servos, twin has {}", self.limits.m(), self.twin.m()));
        }
        if self.q == 0 || self.q > self.twin.m() {
            return cfg(format!("q = {} must be in 1..={}", self.q, self.twin.m()));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return cfg("duration must be positive".into());
        }
        if !(self.plant.dt > 0.0) || self.limits.dt < self.plant.dt {
            return cfg("plant dt must be positive and no longer than the controller period".into());
        }
        let ratio = self.limits.dt / self.plant.dt;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return cfg("controller period must be a whole number of plant steps".into());
        }
        if let Some(g) = &self.gust {
            g.validate().map_err(HarnessError::Config)?;
        }
        if let CommandProfile::Sigmoid { duration, .. } = self.command {
            if !(duration > 0.0) {
                return cfg("sigmoid duration must be positive".into());
            }
        }
        if !(self.weights.sigma > 0.0) {
            return cfg("sigma must be positive".into());
        }
        if self.weights.k.iter().any(|k| *k <= 0.0) {
            return cfg("error gains must be positive".into());
        }
        Ok(())
    }

    /// Plant steps per controller tick.
    pub fn steps_per_tick(&self) -> usize {
        (self.limits.dt / self.plant.dt).round() as usize
    }

    pub fn total_steps(&self) -> usize {
        (self.duration / self.plant.dt).round() as usize
    }

    pub fn measurement_filter_active(&self) -> bool {
        self.noise || self.plant.filter_without_noise
    }

    /// Same scenario with a different controller.
    pub fn with_controller(&self, controller: ControllerKind) -> Self {
        Self { controller, ..self.clone() }
    }

    /// Maneuver preset: shear +30 % or +35 % with bending held.
    pub fn mla(level_percent: u32) -> Self {
        let command = match level_percent {
            30 => CommandProfile::Fy30,
            35 => CommandProfile::Fy35,
            other => CommandProfile::Sigmoid {
                fy_level: other as f64 / 100.0,
                mx_level: 0.0,
                t_start: PRESET_START,
                duration: PRESET_RAMP,
            },
        };
        Self { name: format!("mla{level_percent}"), command, duration: 15.0, ..Self::default() }
    }

    /// Gust preset: three 1−cos cycles of 3.5 deg at `frequency` Hz.
    pub fn gla(frequency: f64) -> Self {
        let gust = GustProfile { frequency, ..GustProfile::default() };
        let duration = (gust.end_time() + 2.0).ceil();
        Self { name: format!("gla_{frequency}hz"), gust: Some(gust), duration, ..Self::default() }
    }

    /// Combined preset: shear +35 % while a train of 1 deg, 1 Hz gusts passes.
    pub fn gmla() -> Self {
        let gust = GustProfile {
            amplitude: 1.0,
            frequency: 1.0,
            repeat: 53,
            gap: 0.0,
            start: 5.0,
            ..GustProfile::default()
        };
        Self {
            name: "gmla".into(),
            command: CommandProfile::Sigmoid { fy_level: 0.35, mx_level: 0.0, t_start: 5.0, duration: GMLA_RAMP },
            gust: Some(gust),
            duration: 60.0,
            ..Self::default()
        }
    }
}
