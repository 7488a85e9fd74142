//! Repeated "1 − cos" gust-vane angle.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GustProfile {
    /// Vane amplitude (deg).
    pub amplitude: f64,
    /// Gust frequency (Hz).
    pub frequency: f64,
    /// Phase (rad).
    pub phase: f64,
    /// Vane-to-wing travel distance (m).
    pub travel_distance: f64,
    /// Wind speed (m/s).
    pub wind_speed: f64,
    /// Number of gust cycles.
    pub repeat: u32,
    /// Quiet time between cycles (s).
    pub gap: f64,
    /// Time the vane starts its first cycle (s).
    pub start: f64,
}

impl Default for GustProfile {
    fn default() -> Self {
        Self {
            amplitude: 3.5,
            frequency: 0.5,
            phase: 0.0,
            travel_distance: 1.5,
            wind_speed: 15.0,
            repeat: 3,
            gap: 2.0,
            start: 2.0,
        }
    }
}

impl GustProfile {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.amplitude >= 0.0) {
            return Err("gust amplitude must be >= 0".into());
        }
        if !(self.frequency > 0.0) {
            return Err("gust frequency must be > 0".into());
        }
        if !(self.wind_speed > 0.0) {
            return Err("wind speed must be > 0".into());
        }
        if !(self.gap >= 0.0 && self.start >= 0.0 && self.travel_distance >= 0.0) {
            return Err("gap, start and travel distance must be >= 0".into());
        }
        Ok(())
    }

    /// Time at which the last cycle has passed the wing.
    pub fn end_time(&self) -> f64 {
        let period = 1.0 / self.frequency;
        self.start + self.travel_distance / self.wind_speed + self.repeat as f64 * (period + self.gap)
    }
}

/// Gust angle at the wing at time `t` (deg).
pub fn gust_angle(profile: &GustProfile, t: f64) -> f64 {
    let period = 1.0 / profile.frequency;
    let local = t - profile.start - profile.travel_distance / profile.wind_speed;
    if local < 0.0 {
        return 0.0;
    }
    let cycle = period + profile.gap;
    let k = (local / cycle).floor();
    if k >= profile.repeat as f64 {
        return 0.0;
    }
    let s = local - k * cycle;
    if s > period {
        return 0.0;
    }
    0.5 * profile.amplitude
        * (1.0 - (2.0 * std::f64::consts::PI * profile.frequency * s + profile.phase).cos())
}
