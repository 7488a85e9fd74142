//! Load-deviation statistics and reduction rates.

use serde::{Deserialize, Serialize};

use super::config::ControllerKind;

/// Max and rms of a deviation signal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub max: f64,
    pub rms: f64,
}

/// Running accumulator for [`ChannelStats`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ChannelAccumulator {
    max: f64,
    sum_sq: f64,
    n: usize,
}

impl ChannelAccumulator {
    pub fn push(&mut self, deviation: f64) {
        self.max = self.max.max(deviation.abs());
        self.sum_sq += deviation * deviation;
        self.n += 1;
    }

    pub fn finish(&self) -> ChannelStats {
        let rms = if self.n == 0 { 0.0 } else { (self.sum_sq / self.n as f64).sqrt() };
        ChannelStats { max: self.max, rms }
    }
}

/// Statistics of `F_y − F_y*` and `M_x − M_x*` on the noise-free loads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadStats {
    pub fy: ChannelStats,
    pub mx: ChannelStats,
}

/// Reduction rates (%) of the four metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub fy_max: f64,
    pub fy_rms: f64,
    pub mx_max: f64,
    pub mx_rms: f64,
}

impl Reduction {
    pub fn between(open: &LoadStats, closed: &LoadStats) -> Self {
        Self {
            fy_max: reduction_rate(open.fy.max, closed.fy.max),
            fy_rms: reduction_rate(open.fy.rms, closed.fy.rms),
            mx_max: reduction_rate(open.mx.max, closed.mx.max),
            mx_rms: reduction_rate(open.mx.rms, closed.mx.rms),
        }
    }

    /// `[fy_max, fy_rms, mx_max, mx_rms]`.
    pub fn as_array(&self) -> [f64; 4] {
        [self.fy_max, self.fy_rms, self.mx_max, self.mx_rms]
    }

    pub fn all_positive(&self) -> bool {
        self.as_array().iter().all(|v| *v > 0.0)
    }
}

/// `(open − closed)/open` in percent; zero when both are zero.
pub fn reduction_rate(open: f64, closed: f64) -> f64 {
    if open == closed {
        return 0.0;
    }
    100.0 * (open - closed) / open
}

/// Allocator diagnostics over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AllocStats {
    pub ticks: usize,
    /// Ticks with at least one active inequality.
    pub constrained_ticks: usize,
    pub max_eps_ca: f64,
    pub max_eps_ca_unconstrained: f64,
    pub max_eps_ca_constrained: f64,
    pub max_iterations: usize,
    pub iteration_cap_ticks: usize,
    pub infeasible_ticks: usize,
}

/// Ticks whose issued command broke a servo constraint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationCounts {
    pub position: usize,
    pub relative: usize,
    pub rate: usize,
}

impl ViolationCounts {
    pub fn total(&self) -> usize {
        self.position + self.relative + self.rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub controller: ControllerKind,
    pub closed_loop: LoadStats,
    pub open_loop: LoadStats,
    pub reduction: Reduction,
    pub allocation: AllocStats,
    pub violations: ViolationCounts,
    /// Ticks with at least one servo at a position limit.
    pub saturated_ticks: usize,
}
