//! Chebyshev shape functions sampled at the servo stations.
//!
//! Normalized span `x̄ ∈ [0, 1]` is mapped to `ξ = 2x̄ − 1` before evaluating
//! `T_k`, so every basis entry lies in `[−1, 1]`. Column 0 is `T₀ ≡ 1`.

use crate::numerics::{Mat, Vector};
use thiserror::Error;

pub const DEFAULT_ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error("invalid servo locations: {0}")]
    BadLocations(String),
    #[error("basis order {q} must be in 1..={m}")]
    BadOrder { q: usize, m: usize },
    #[error("shape matrix lost rank (singular value ratio {ratio:e})")]
    RankLoss { ratio: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// `[T₀(x), …, T_{q−1}(x)]` by the three-term recurrence.
pub fn chebyshev_eval(x: f64, q: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(q);
    for k in 0..q {
        let v = match k {
            0 => 1.0,
            1 => x,
            _ => 2.0 * x * t[k - 1] - t[k - 2],
        };
        t.push(v);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeBasis {
    q: usize,
    xs_norm: Vec<f64>,
    phi: Mat,
}

impl ShapeBasis {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn m(&self) -> usize {
        self.phi.nrows()
    }

    pub fn xs_norm(&self) -> &[f64] {
        &self.xs_norm
    }

    pub fn phi(&self) -> &Mat {
        &self.phi
    }

    /// `u = Φ·u_v`.
    pub fn to_servo_space(&self, u_v: &Vector) -> Result<Vector, ShapeError> {
        if u_v.len() != self.q {
            return Err(ShapeError::DimensionMismatch { expected: self.q, got: u_v.len() });
        }
        Ok(&self.phi * u_v)
    }

    /// Least-squares virtual coordinates of a servo command.
    pub fn fit(&self, u: &Vector) -> Result<Vector, ShapeError> {
        if u.len() != self.m() {
            return Err(ShapeError::DimensionMismatch { expected: self.m(), got: u.len() });
        }
        let svd = self.phi.clone().svd(true, true);
        Ok(svd.solve(u, 1e-12).expect("both factors were computed"))
    }
}

/// Sample the first `q` Chebyshev polynomials at the servo stations.
pub fn build_basis(locations: &[f64], half_span: f64, q: usize) -> Result<ShapeBasis, ShapeError> {
    let m = locations.len();
    if !(half_span > 0.0 && half_span.is_finite()) {
        return Err(ShapeError::BadLocations("half span must be positive".into()));
    }
    if q == 0 || q > m {
        return Err(ShapeError::BadOrder { q, m });
    }
    for (i, &x) in locations.iter().enumerate() {
        if !(x > 0.0 && x <= half_span) {
            return Err(ShapeError::BadLocations(format!("station {i} at {x} outside (0, {half_span}]")));
        }
        if i > 0 && x <= locations[i - 1] {
            return Err(ShapeError::BadLocations(format!("stations not strictly increasing at {i}")));
        }
    }
    let xs_norm: Vec<f64> = locations.iter().map(|x| x / half_span).collect();
    let mut phi = Mat::zeros(m, q);
    for (i, xn) in xs_norm.iter().enumerate() {
        for (j, t) in chebyshev_eval(2.0 * xn - 1.0, q).into_iter().enumerate() {
            phi[(i, j)] = t;
        }
    }
    let sv = phi.clone().singular_values();
    let hi = sv.max();
    let lo = sv.min();
    let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if ratio < 1e-10 {
        return Err(ShapeError::RankLoss { ratio });
    }
    Ok(ShapeBasis { q, xs_norm, phi })
}

/// Identity basis (`q = m`, `Φ = I`), which turns virtual allocation into
/// plain servo-space allocation.
pub fn identity_basis(m: usize) -> ShapeBasis {
    ShapeBasis {
        q: m,
        xs_norm: (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect(),
        phi: Mat::identity(m, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equal_stations(m: usize, l: f64) -> Vec<f64> {
        (0..m).map(|i| l * (i as f64 + 0.5) / m as f64).collect()
    }

    #[test]
    fn recurrence_values() {
        assert_eq!(chebyshev_eval(0.5, 5), vec![1.0, 0.5, -0.5, -1.0, -0.5]);
        assert_eq!(chebyshev_eval(0.0, 6), vec![1.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        assert_eq!(chebyshev_eval(1.0, 4), vec![1.0; 4]);
    }

    #[test]
    fn default_basis_shape() {
        let b = build_basis(&equal_stations(12, 2.0), 2.0, 5).unwrap();
        assert_eq!(b.phi().shape(), (12, 5));
        assert!(b.phi().column(0).iter().all(|v| *v == 1.0));
        assert!(b.phi().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn constant_basis() {
        let b = build_basis(&equal_stations(12, 2.0), 2.0, 1).unwrap();
        let u = b.to_servo_space(&Vector::from_element(1, 3.0)).unwrap();
        assert!(u.iter().all(|v| *v == 3.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(build_basis(&[0.5, 0.5, 1.0], 1.0, 2), Err(ShapeError::BadLocations(_))));
        assert!(matches!(build_basis(&[0.5, 1.0], 1.0, 3), Err(ShapeError::BadOrder { .. })));
        assert!(matches!(build_basis(&[0.5, 1.5], 1.0, 1), Err(ShapeError::BadLocations(_))));
        let b = build_basis(&equal_stations(12, 2.0), 2.0, 5).unwrap();
        assert!(matches!(b.to_servo_space(&Vector::zeros(4)), Err(ShapeError::DimensionMismatch { .. })));
    }

    #[test]
    fn fit_recovers_coordinates() {
        let b = build_basis(&equal_stations(12, 2.0), 2.0, 5).unwrap();
        let uv = Vector::from_vec(vec![1.0, -2.0, 0.5, 0.25, -0.75]);
        let u = b.to_servo_space(&uv).unwrap();
        assert!((b.fit(&u).unwrap() - uv).amax() < 1e-12);
    }
}
