use super::{NumericsError, Result};

/// Unit-DC-gain second-order low-pass `ω²/(s² + 2ζωs + ω²)`, discretized with
/// the bilinear map and run in transposed direct form II.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderFilter {
    zeta: f64,
    omega: f64,
    dt: f64,
    b: [f64; 3],
    a: [f64; 2],
    state: [f64; 2],
}

pub fn discretize_filter(zeta: f64, omega: f64, dt: f64) -> Result<SecondOrderFilter> {
    SecondOrderFilter::new(zeta, omega, dt)
}

impl SecondOrderFilter {
    pub fn new(zeta: f64, omega: f64, dt: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(NumericsError::BadParameter("zeta must be positive"));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(NumericsError::BadParameter("omega must be positive"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(NumericsError::BadParameter("dt must be positive"));
        }
        if omega * dt >= 1.0 {
            return Err(NumericsError::BadSampling { omega_dt: omega * dt });
        }
        let k = 2.0 / dt;
        let w2 = omega * omega;
        let a0 = k * k + 2.0 * zeta * omega * k + w2;
        let a1 = 2.0 * (w2 - k * k);
        let a2 = k * k - 2.0 * zeta * omega * k + w2;
        let b0 = w2 / a0;
        Ok(Self {
            zeta,
            omega,
            dt,
            b: [b0, 2.0 * b0, b0],
            a: [a1 / a0, a2 / a0],
            state: [0.0; 2],
        })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Numerator `[b0, b1, b2]` and denominator `[1, a1, a2]` in powers of `z⁻¹`.
    pub fn coefficients(&self) -> ([f64; 3], [f64; 3]) {
        (self.b, [1.0, self.a[0], self.a[1]])
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.state[0];
        self.state[0] = self.b[1] * x - self.a[0] * y + self.state[1];
        self.state[1] = self.b[2] * x - self.a[1] * y;
        y
    }

    pub fn reset(&mut self) {
        self.state = [0.0; 2];
    }

    /// Put the filter in steady state at constant input/output `value`.
    pub fn settle_at(&mut self, value: f64) {
        // Fixed point of the recursion with x = y = value.
        self.state[1] = (self.b[2] - self.a[1]) * value;
        self.state[0] = (self.b[1] - self.a[0]) * value + self.state[1];
    }

    /// Magnitude of the discrete frequency response at `omega` rad/s.
    pub fn magnitude_at(&self, omega: f64) -> f64 {
        let th = omega * self.dt;
        let (c1, s1) = (th.cos(), -th.sin());
        let (c2, s2) = ((2.0 * th).cos(), -(2.0 * th).sin());
        let num = (self.b[0] + self.b[1] * c1 + self.b[2] * c2, self.b[1] * s1 + self.b[2] * s2);
        let den = (1.0 + self.a[0] * c1 + self.a[1] * c2, self.a[0] * s1 + self.a[1] * s2);
        num.0.hypot(num.1) / den.0.hypot(den.1)
    }
}
