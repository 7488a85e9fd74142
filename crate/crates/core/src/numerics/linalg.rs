use super::{Mat, NumericsError, Result, Vector};

/// Relative pivot threshold for declaring a matrix singular.
const PIVOT_RTOL: f64 = 1e-12;

/// Partial-pivot LU factorization `P·A = L·U` stored compactly.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

impl Lu {
    /// Factor a square matrix. Fails when a pivot falls below `1e-12·max|A|`.
    pub fn factor(a: &Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(NumericsError::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = max_abs(a);
        let threshold = PIVOT_RTOL * scale;
        if n > 0 && scale == 0.0 {
            return Err(NumericsError::Singular { pivot: 0.0, threshold });
        }
        for k in 0..n {
            let mut piv = k;
            let mut best = lu[(k, k)].abs();
            for i in (k + 1)..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best <= threshold {
                return Err(NumericsError::Singular { pivot: best, threshold });
            }
            if piv != k {
                lu.swap_rows(k, piv);
                perm.swap(k, piv);
            }
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        let ukj = lu[(k, j)];
                        lu[(i, j)] -= f * ukj;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &Vector) -> Vector {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length must match the factored matrix");
        let mut x = Vector::from_fn(n, |i, _| b[self.perm[i]]);
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn solve_mat(&self, b: &Mat) -> Mat {
        let mut out = Mat::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let col = self.solve(&b.column(j).into_owned());
            out.set_column(j, &col);
        }
        out
    }

    pub fn inverse(&self) -> Mat {
        self.solve_mat(&Mat::identity(self.dim(), self.dim()))
    }
}

/// Largest absolute entry.
pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Right pseudo-inverse `Bᵀ(BBᵀ)⁻¹` of a full-row-rank matrix.
pub fn pseudo_inverse(b: &Mat) -> Result<Mat> {
    let bbt = b * b.transpose();
    let lu = Lu::factor(&bbt).map_err(|e| match e {
        NumericsError::Singular { .. } => NumericsError::RankDeficient,
        other => other,
    })?;
    // A pivot test alone misses badly conditioned Gram matrices.
    let (lo, hi) = symmetric_eigen_range(&bbt);
    if hi <= 0.0 || lo <= hi * 1e-12 {
        return Err(NumericsError::RankDeficient);
    }
    Ok(b.transpose() * lu.inverse())
}

/// Induced 2-norm (largest singular value).
pub fn spectral_norm(a: &Mat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |m, v| m.max(*v))
}

/// Largest real part among the eigenvalues of a square matrix.
pub fn max_real_eigenvalue(a: &Mat) -> f64 {
    a.clone()
        .complex_eigenvalues()
        .iter()
        .fold(f64::NEG_INFINITY, |m, z| m.max(z.re))
}

/// All eigenvalues have real part below `-margin`.
pub fn is_hurwitz(a: &Mat, margin: f64) -> bool {
    max_real_eigenvalue(a) < -margin
}

/// (min, max) eigenvalue of the symmetric part of `a`.
pub fn symmetric_eigen_range(a: &Mat) -> (f64, f64) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let lo = eig.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let hi = eig.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    (lo, hi)
}
