use super::linalg::{max_real_eigenvalue, Lu};
use super::{Mat, NumericsError, Result, Vector};

/// Solve `P·A + Aᵀ·P = −Q` for a Hurwitz `A`.
pub fn solve_lyapunov(a: &Mat, q: &Mat) -> Result<Mat> {
    check_square(a, q)?;
    let max_real = max_real_eigenvalue(a);
    if max_real >= -1e-12 {
        return Err(NumericsError::NotHurwitz { max_real });
    }
    lyapunov_kron(a, q)
}

fn check_square(a: &Mat, q: &Mat) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(NumericsError::DimensionMismatch(format!(
            "Lyapunov needs square A and Q of equal size, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    Ok(())
}

/// Kronecker solve without the stability check; any `A` with
/// `λi + λj ≠ 0` for all eigenvalue pairs gives a unique answer.
pub(crate) fn lyapunov_kron(a: &Mat, q: &Mat) -> Result<Mat> {
    check_square(a, q)?;
    let n = a.nrows();
    let eye = Mat::identity(n, n);
    let at = a.transpose();
    // vec(P·A) = (Aᵀ ⊗ I)·vec(P), vec(Aᵀ·P) = (I ⊗ Aᵀ)·vec(P), column-major vec.
    let m = at.kronecker(&eye) + eye.kronecker(&at);
    let rhs = Vector::from_iterator(n * n, q.iter().map(|v| -v));
    let sol = Lu::factor(&m)?.solve(&rhs);
    let p = Mat::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}
