//! Servo channel: transport delay, second-order servo dynamics, backlash and
//! effectiveness scaling.

use serde::{Deserialize, Serialize};

/// Static free-play map: zero inside `[u_f_minus, u_f_plus]`, slopes `k1`
/// below and `k2` above.
pub fn freeplay(u: f64, k1: f64, k2: f64, u_f_plus: f64, u_f_minus: f64) -> f64 {
    if u >= u_f_plus {
        k2 * (u - u_f_plus)
    } else if u <= u_f_minus {
        k1 * (u - u_f_minus)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacklashParams {
    pub k1: f64,
    pub k2: f64,
    pub u_f_plus: f64,
    pub u_f_minus: f64,
}

impl Default for BacklashParams {
    fn default() -> Self {
        Self { k1: 1.0, k2: 1.0, u_f_plus: 0.6, u_f_minus: -0.6 }
    }
}

/// Velocity-driven backlash: the output follows the upper engagement line
/// `k2(u − u_f+)` while `u` rises, the lower line `k1(u − u_f−)` while it
/// falls, and holds otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Backlash {
    params: BacklashParams,
    u_prev: f64,
    tau: f64,
}

impl Backlash {
    pub fn new(params: BacklashParams, u0: f64, tau0: f64) -> Self {
        Self { params, u_prev: u0, tau: tau0 }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn step(&mut self, u: f64) -> f64 {
        let p = &self.params;
        if u > self.u_prev {
            self.tau = self.tau.max(p.k2 * (u - p.u_f_plus));
        } else if u < self.u_prev {
            self.tau = self.tau.min(p.k1 * (u - p.u_f_minus));
        }
        self.u_prev = u;
        self.tau
    }
}

/// One step of backlash from `u_prev` to `u`, starting at output `tau`.
pub fn backlash_step(params: &BacklashParams, tau: f64, u_prev: f64, u: f64) -> f64 {
    Backlash::new(*params, u_prev, tau).step(u)
}

/// Effectiveness scales for the broken-pickup fault on twelve servos:
/// servo 9 lost, servo 8 at 46.8 %, servo 10 at 73.48 %.
pub fn fault_scales(m: usize, fault: bool) -> Vec<f64> {
    let mut s = vec![1.0; m];
    if fault && m >= 10 {
        s[7] = 0.468;
        s[8] = 0.0;
        s[9] = 0.7348;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn freeplay_examples() {
        assert_eq!(freeplay(0.3, 1.0, 1.0, 0.6, -0.6), 0.0);
        assert!((freeplay(1.0, 1.0, 1.0, 0.6, -0.6) - 0.4).abs() < 1e-15);
        assert!((freeplay(-1.0, 2.0, 1.0, 0.6, -0.6) + 0.8).abs() < 1e-15);
    }

    #[test]
    fn ramp_up_and_down() {
        let mut b = Backlash::new(BacklashParams::default(), 0.0, 0.0);
        let mut peak: f64 = 0.0;
        for k in 0..=200 {
            peak = peak.max(b.step(k as f64 * 0.01));
        }
        assert!((peak - 1.4).abs() < 1e-12);
        for k in (0..200).rev() {
            let u = k as f64 * 0.01;
            let tau = b.step(u);
            if u > 0.8 + 1e-9 {
                assert!((tau - 1.4).abs() < 1e-12);
            }
        }
        assert!((b.tau() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn constant_input_holds() {
        let mut b = Backlash::new(BacklashParams::default(), 1.0, 0.2);
        for _ in 0..10 {
            assert_eq!(b.step(1.0), 0.2);
        }
    }

    #[test]
    fn zero_deadband_passes_through() {
        let p = BacklashParams { k1: 1.0, k2: 1.0, u_f_plus: 0.0, u_f_minus: 0.0 };
        let mut b = Backlash::new(p, 0.0, 0.0);
        for k in 0..100 {
            let u = (k as f64 * 0.3).sin() * 5.0;
            assert!((b.step(u) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn fault_pattern() {
        assert_eq!(fault_scales(12, false), vec![1.0; 12]);
        let s = fault_scales(12, true);
        assert_eq!(s[8], 0.0);
        assert_eq!(s[7], 0.468);
        assert_eq!(s[9], 0.7348);
    }
}
