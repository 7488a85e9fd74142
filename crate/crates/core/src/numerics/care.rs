use super::linalg::{is_hurwitz, max_abs, Lu};
use super::lyapunov::lyapunov_kron;
use super::{Mat, NumericsError, Result};

pub const CARE_MAX_ITERATIONS: usize = 200;
pub const CARE_TOLERANCE: f64 = 1e-10;

/// Stabilizing solution of `AᵀS + SA − S·B·R⁻¹·Bᵀ·S + Q = 0`.
///
/// Newton–Kleinman iteration. When `A` is not already Hurwitz the first
/// gain comes from the Bass shift: with `A + βI` anti-stable,
/// `(A+βI)Z + Z(A+βI)ᵀ = 2·B·R⁻¹·Bᵀ` gives `A − B·R⁻¹·Bᵀ·Z⁻¹` Hurwitz.
pub fn solve_care(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(NumericsError::DimensionMismatch(format!(
            "CARE shapes A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    let r_sym = (r + r.transpose()) * 0.5;
    let r_chol = r_sym.cholesky().ok_or(NumericsError::NotPositiveDefinite)?;
    let g = b * r_chol.solve(&b.transpose());
    let g = (&g + g.transpose()) * 0.5;
    let q = (q + q.transpose()) * 0.5;

    let fail = |iterations| NumericsError::NoStabilizingSolution { iterations };
    let mut s = initial_guess(a, &g).ok_or_else(|| fail(0))?;
    let scale = 1.0 + max_abs(&q) + max_abs(a);
    for it in 1..=CARE_MAX_ITERATIONS {
        let ak = a - &g * &s;
        if !is_hurwitz(&ak, 0.0) {
            return Err(fail(it));
        }
        let rhs = &q + &s * &g * &s;
        let next = lyapunov_kron(&ak, &rhs).map_err(|_| fail(it))?;
        let step = max_abs(&(&next - &s));
        s = next;
        if !s.iter().all(|v| v.is_finite()) {
            return Err(fail(it));
        }
        if step <= CARE_TOLERANCE * scale.max(max_abs(&s)) {
            return Ok(s);
        }
    }
    Err(fail(CARE_MAX_ITERATIONS))
}

/// A matrix `S0` such that `A − G·S0` is Hurwitz.
fn initial_guess(a: &Mat, g: &Mat) -> Option<Mat> {
    let n = a.nrows();
    if is_hurwitz(a, 1e-9) {
        return Some(Mat::zeros(n, n));
    }
    // Smallest comfortable shift that makes every eigenvalue of A + βI
    // lie in the open right half plane; larger shifts degrade Z's conditioning.
    let min_re = a
        .clone()
        .complex_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, z| m.min(z.re));
    let beta = 1.2 * (-min_re).max(0.0) + 1.0;
    let shifted = a + Mat::identity(n, n) * beta;
    // (A+βI)Z + Z(A+βI)ᵀ = 2G  ⇔  Z·M + Mᵀ·Z = −2G with M = −(A+βI)ᵀ.
    let z = lyapunov_kron(&(-shifted.transpose()), &(g * 2.0)).ok()?;
    let z_inv = Lu::factor(&z).ok()?.inverse();
    let z_inv = (&z_inv + z_inv.transpose()) * 0.5;
    if is_hurwitz(&(a - g * &z_inv), 0.0) {
        Some(z_inv)
    } else {
        None
    }
}
