use super::{NumericsError, Result, Vector};

/// One classical RK4 step of `ẋ = f(x, u)` with `u` held over the step.
pub fn integrate_step<F>(f: F, x: &Vector, u: &Vector, dt: f64) -> Result<Vector>
where
    F: Fn(&Vector, &Vector) -> Vector,
{
    let k1 = f(x, u);
    let k2 = f(&(x + &k1 * (0.5 * dt)), u);
    let k3 = f(&(x + &k2 * (0.5 * dt)), u);
    let k4 = f(&(x + &k3 * dt), u);
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(NumericsError::NonFiniteState)
    }
}
