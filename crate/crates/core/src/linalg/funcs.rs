use super::eigen::eigen_general;
use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// `f(A) = V f(Λ) V^-1` through the eigendecomposition of `A`.
pub fn mat_function_via_eigen(a: &ComplexMatrix, f: impl Fn(C64) -> Result<C64>) -> Result<ComplexMatrix> {
    let eig = eigen_general(a)?;
    let v = &eig.vectors;
    let cond = v.condition_estimate();
    if cond > 1e12 {
        return Err(Error::SingularBasis { condition: cond });
    }
    let vinv = v.inverse()?;

    let lam = ComplexMatrix::diag(&eig.values);
    let recon = v.matmul(&lam).matmul(&vinv);
    let scale = a.max_entry_norm().max(1.0);
    let res = (&recon - a).max_entry_norm();
    if res > 1e-8 * scale {
        return Err(Error::SingularBasis { condition: cond });
    }

    let fvals = eig.values.iter().map(|&z| f(z)).collect::<Result<Vec<_>>>()?;
    Ok(v.matmul(&ComplexMatrix::diag(&fvals)).matmul(&vinv))
}

/// Principal matrix logarithm of a diagonalizable matrix with eigenvalues in
/// the right half plane.
pub fn mat_log_via_eigen(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    mat_function_via_eigen(rho, |z| {
        if z.re <= 1e-14 {
            Err(Error::NonPositiveEigenvalue { value: z.re })
        } else {
            Ok(z.ln())
        }
    })
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor series.
pub fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    assert!(a.is_square());
    let n = a.rows();
    let norm = a.one_norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a.scale_real(0.5f64.powi(squarings as i32));
    let mut result = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=18 {
        term = term.matmul(&scaled).scale_real(1.0 / k as f64);
        result.add_scaled(ONE, &term);
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// `exp(t A) v`.
pub fn expm_vec(a: &ComplexMatrix, t: f64, v: &[C64]) -> Vec<C64> {
    expm(&a.scale_real(t)).matvec(v)
}

/// Right null vector of a square matrix with a one-dimensional kernel,
/// normalized so that its entries sum to one.
///
/// The kernel is found by replacing the row with the largest leverage by the
/// normalization constraint and solving the resulting square system.
pub fn null_vector(a: &ComplexMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("null vector of a non-square matrix".into()));
    }
    let n = a.rows();
    if n == 1 {
        return Ok(vec![ONE]);
    }
    let mut best: Option<(f64, Vec<C64>)> = None;
    for drop in 0..n {
        let mut m = a.clone();
        for j in 0..n {
            m[(drop, j)] = ONE;
        }
        let mut rhs = ComplexMatrix::zeros(n, 1);
        rhs[(drop, 0)] = ONE;
        let Ok(x) = m.solve(&rhs) else { continue };
        let x = x.column(0);
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            continue;
        }
        let res: f64 = a.matvec(&x).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if best.as_ref().map_or(true, |(r, _)| res < *r) {
            best = Some((res, x));
        }
        if res <= 1e-15 * a.max_entry_norm().max(1e-300) {
            break;
        }
    }
    let (_, x) = best.ok_or(Error::NoNullVector { smallest: f64::NAN })?;
    let s: C64 = x.iter().sum();
    if s == ZERO {
        return Ok(x);
    }
    Ok(x.into_iter().map(|z| z / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_of_diagonal() {
        let rho = ComplexMatrix::diag_real(&[0.5, 0.5]);
        let l = mat_log_via_eigen(&rho).unwrap();
        let want = ComplexMatrix::diag_real(&[0.5f64.ln(), 0.5f64.ln()]);
        assert!((&l - &want).max_entry_norm() < 1e-14);
    }

    #[test]
    fn log_refuses_nonpositive() {
        let rho = ComplexMatrix::diag_real(&[1.0, 0.0]);
        assert!(matches!(mat_log_via_eigen(&rho), Err(Error::NonPositiveEigenvalue { .. })));
    }

    #[test]
    fn log_then_exp_roundtrip() {
        let rho = ComplexMatrix::from_real_rows(&[&[0.7, 0.2], &[0.1, 0.3]]);
        let l = mat_log_via_eigen(&rho).unwrap();
        let back = expm(&l);
        assert!((&back - &rho).max_entry_norm() < 1e-12);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let g = ComplexMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let t = 2.3f64;
        let e = expm(&g.scale_real(t));
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-13);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn null_vector_of_rate_matrix() {
        let l = ComplexMatrix::from_real_rows(&[&[-2.0, 1.0], &[2.0, -1.0]]);
        let c = null_vector(&l).unwrap();
        assert!((c[0].re - 1.0 / 3.0).abs() < 1e-14);
        assert!((c[1].re - 2.0 / 3.0).abs() < 1e-14);
    }
}
