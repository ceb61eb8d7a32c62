//! General complex eigensolver.
//!
//! Balancing, Householder reduction to upper Hessenberg form, single-shift
//! QR iteration with Wilkinson shifts to complex Schur form, and eigenvectors
//! by back-substitution on the triangular factor.

use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;
const SAFE_MIN: f64 = f64::MIN_POSITIVE;

/// Eigenvalues and right eigenvectors (columns, unit Euclidean norm).
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    pub vectors: ComplexMatrix,
}

#[inline]
fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

fn check_input(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigenproblem needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("eigenproblem input".into()));
    }
    if m.rows() > 4096 {
        return Err(Error::DimensionMismatch(format!("dimension {} exceeds 4096", m.rows())));
    }
    Ok(())
}

/// Diagonal similarity scaling (powers of two) that equalizes row and column norms.
/// Returns the scaled matrix and the scaling vector `D` with `A' = D^-1 A D`.
pub(crate) fn balance(m: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>) {
    let n = m.rows();
    let mut a = m.clone();
    let mut scale = vec![1.0; n];
    let radix = 2.0;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[(j, i)]);
                    r += abs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / radix {
                c *= radix;
                r /= radix;
                f *= radix;
            }
            while c >= r * radix {
                c /= radix;
                r *= radix;
                f /= radix;
            }
            if c + r < 0.95 * s {
                done = false;
                scale[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    (a, scale)
}

/// Householder reduction `A = Q H Q^H`. Returns `(H, Q)`; `Q` is only
/// accumulated when requested.
pub(crate) fn hessenberg(m: &ComplexMatrix, want_q: bool) -> (ComplexMatrix, Option<ComplexMatrix>) {
    let n = m.rows();
    let mut h = m.clone();
    let mut q = want_q.then(|| ComplexMatrix::identity(n));
    if n < 3 {
        return (h, q);
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let norm_x: f64 = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * norm_x;
        for i in 0..n {
            v[i] = ZERO;
        }
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = h[(i, k)];
        }
        let vnorm: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for x in v[k + 1..n].iter_mut() {
            *x /= vnorm;
        }
        // H <- (I - 2 v v^H) H
        for j in 0..n {
            let mut s = ZERO;
            for i in k + 1..n {
                s += v[i].conj() * h[(i, j)];
            }
            let s2 = s * 2.0;
            for i in k + 1..n {
                h[(i, j)] -= v[i] * s2;
            }
        }
        // H <- H (I - 2 v v^H)
        for i in 0..n {
            let mut s = ZERO;
            for j in k + 1..n {
                s += h[(i, j)] * v[j];
            }
            let s2 = s * 2.0;
            for j in k + 1..n {
                h[(i, j)] -= s2 * v[j].conj();
            }
        }
        if let Some(q) = q.as_mut() {
            for i in 0..n {
                let mut s = ZERO;
                for j in k + 1..n {
                    s += q[(i, j)] * v[j];
                }
                let s2 = s * 2.0;
                for j in k + 1..n {
                    q[(i, j)] -= s2 * v[j].conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(a, b)` to `(r, 0)`.
#[inline]
fn givens(a: C64, b: C64) -> (f64, C64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    if a == ZERO {
        return (0.0, b.conj() / b.norm());
    }
    let an = a.norm();
    let nrm = an.hypot(b.norm());
    (an / nrm, (a / an) * b.conj() / nrm)
}

/// Reduces an upper Hessenberg matrix to upper triangular (Schur) form in place,
/// accumulating the rotations into `z` when given.
pub(crate) fn schur_from_hessenberg(h: &mut ComplexMatrix, mut z: Option<&mut ComplexMatrix>) -> Result<()> {
    let n = h.rows();
    if n == 1 {
        return Ok(());
    }
    let hnorm = h.frobenius_norm().max(SAFE_MIN);
    let max_iter_per_value = 30 * n.max(10);
    let mut rots: Vec<(f64, C64)> = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iter = 0usize;
    loop {
        // locate a negligible subdiagonal entry
        let mut l = hi;
        while l > 0 {
            let tst = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
            let tst = if tst == 0.0 { hnorm } else { tst };
            if abs1(h[(l, l - 1)]) <= EPS * tst || abs1(h[(l, l - 1)]) <= SAFE_MIN {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            if hi == 0 {
                break;
            }
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > max_iter_per_value {
            return Err(Error::NonConvergence { dim: n, iterations: iter });
        }

        let shift = if iter % 10 == 0 {
            // exceptional shift to break cycles
            let s = h[(hi, hi - 1)].re.abs() + if hi >= 2 { h[(hi - 1, hi - 2)].re.abs() } else { 0.0 };
            h[(hi, hi)] + C64::new(0.75 * s, -0.4375 * s)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let half_tr = (a + d) * 0.5;
            let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
            let l1 = half_tr + disc;
            let l2 = half_tr - disc;
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        for k in l..=hi {
            h[(k, k)] -= shift;
        }
        rots.clear();
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rots.push((c, s));
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = l + idx;
            let top = (k + 2).min(hi);
            for i in 0..=top {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
            if let Some(z) = z.as_deref_mut() {
                for i in 0..n {
                    let x = z[(i, k)];
                    let y = z[(i, k + 1)];
                    z[(i, k)] = x * c + y * s.conj();
                    z[(i, k + 1)] = -x * s + y * c;
                }
            }
        }
        for k in l..=hi {
            h[(k, k)] += shift;
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(())
}

/// Eigenvalues only, in Schur order.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    check_input(m)?;
    let (b, _) = balance(m);
    let (mut h, _) = hessenberg(&b, false);
    schur_from_hessenberg(&mut h, None)?;
    Ok((0..h.rows()).map(|i| h[(i, i)]).collect())
}

/// All eigenvalues and right eigenvectors of a square complex matrix.
///
/// Eigenvectors are normalized to unit Euclidean norm. Defective input
/// (coincident eigenvalues with parallel eigenvectors) is refused with
/// [`Error::DegenerateSpectrum`].
pub fn eigen_general(m: &ComplexMatrix) -> Result<Eigen> {
    check_input(m)?;
    let n = m.rows();
    let (b, scale) = balance(m);
    let (mut t, q) = hessenberg(&b, true);
    let mut z = q.expect("Q requested");
    schur_from_hessenberg(&mut t, Some(&mut z))?;

    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let tnorm = t.frobenius_norm().max(SAFE_MIN);
    let smin = (EPS * tnorm).max(SAFE_MIN * 1e10);

    let mut vectors = ComplexMatrix::zeros(n, n);
    let mut y = vec![ZERO; n];
    for k in 0..n {
        for x in y.iter_mut() {
            *x = ZERO;
        }
        y[k] = ONE;
        let lambda = values[k];
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in i + 1..=k {
                s += t[(i, j)] * y[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < smin {
                denom = C64::new(smin, 0.0);
            }
            y[i] = -s / denom;
            let ymax = y[i..=k].iter().map(|z| z.norm()).fold(0.0, f64::max);
            if ymax > 1e150 {
                for x in y[i..=k].iter_mut() {
                    *x /= ymax;
                }
            }
        }
        let mut v = vec![ZERO; n];
        for (r, vr) in v.iter_mut().enumerate() {
            let mut s = ZERO;
            for j in 0..=k {
                s += z[(r, j)] * y[j];
            }
            *vr = s * scale[r];
        }
        let nrm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= nrm;
        }
        vectors.set_column(k, &v);
    }

    let mnorm = m.frobenius_norm().max(SAFE_MIN);
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= 1e-7 * mnorm {
                let overlap: C64 = (0..n).map(|r| vectors[(r, i)].conj() * vectors[(r, j)]).sum();
                if overlap.norm() > 1.0 - 1e-10 {
                    return Err(Error::DegenerateSpectrum { i, j, tol: 1e-7 });
                }
            }
        }
    }

    Ok(Eigen { values, vectors })
}
