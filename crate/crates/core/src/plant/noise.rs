//! Colored measurement noise: unit white noise through a second-order
//! shaping filter, scaled to a target standard deviation.

use crate::numerics::{NumericsError, SecondOrderFilter};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Target standard deviation per load channel `[F_y, M_x]`.
    pub std: [f64; 2],
    pub shaping_zeta: f64,
    pub shaping_omega: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { std: [150.0, 100.0], shaping_zeta: 0.7, shaping_omega: 150.0 }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseModel {
    filters: Vec<SecondOrderFilter>,
    gains: Vec<f64>,
    rng: ChaCha8Rng,
}

/// Stationary output standard deviation of a filter driven by unit white
/// noise, from the energy of its impulse response.
pub fn white_noise_gain(filter: &SecondOrderFilter) -> f64 {
    let mut f = filter.clone();
    f.reset();
    let mut energy = 0.0;
    let mut h = f.step(1.0);
    energy += h * h;
    let mut quiet = 0;
    for _ in 0..1_000_000 {
        h = f.step(0.0);
        energy += h * h;
        quiet = if h.abs() < 1e-14 { quiet + 1 } else { 0 };
        if quiet > 100 {
            break;
        }
    }
    energy.sqrt()
}

impl NoiseModel {
    pub fn new(config: &NoiseConfig, dt: f64, seed: u64) -> Result<Self, NumericsError> {
        let proto = SecondOrderFilter::new(config.shaping_zeta, config.shaping_omega, dt)?;
        let g = white_noise_gain(&proto);
        Ok(Self {
            filters: vec![proto.clone(), proto],
            gains: config.std.iter().map(|s| s / g).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Next noise sample for each channel.
    pub fn sample(&mut self) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            let w: f64 = StandardNormal.sample(&mut self.rng);
            *o = self.gains[k] * self.filters[k].step(w);
        }
        out
    }
}
