use std::cmp::Ordering;

use super::eigen::eigen_general;
use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Energies with paired right and left eigenvectors, `<m_L|n_R> = δ_mn`.
///
/// Columns of `right` are `|m_R>`, columns of `left` are `|m_L>`. After
/// [`biorthogonalize`] every right vector has unit norm; [`rescaled`]
/// produces other normalizations of the same basis.
///
/// [`rescaled`]: BiorthogonalEigensystem::rescaled
#[derive(Debug, Clone)]
pub struct BiorthogonalEigensystem {
    energies: Vec<C64>,
    right: ComplexMatrix,
    left: ComplexMatrix,
    pt_unbroken: bool,
    degeneracy_tol: f64,
    self_normalized: bool,
}

fn sort_key(a: &(C64, usize), b: &(C64, usize)) -> Ordering {
    a.0.re
        .total_cmp(&b.0.re)
        .then(a.0.im.total_cmp(&b.0.im))
        .then(a.1.cmp(&b.1))
}

/// Rotates `v` so that its first non-negligible component is real positive.
fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = v.iter().copied().find(|z| z.norm() >= 1e-3 * max) {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Builds the biorthogonal eigensystem of `h`.
///
/// `tol` is both the relative separation below which two eigenvalues count as
/// degenerate and the relative imaginary part below which the spectrum counts
/// as real.
pub fn biorthogonalize(h: &ComplexMatrix, tol: f64) -> Result<BiorthogonalEigensystem> {
    let eig = eigen_general(h)?;
    let d = h.rows();

    let mut order: Vec<(C64, usize)> = eig.values.iter().copied().zip(0..).collect();
    order.sort_by(sort_key);

    let radius = order.iter().map(|(e, _)| e.norm()).fold(0.0, f64::max);
    for i in 0..d {
        for j in i + 1..d {
            if (order[i].0 - order[j].0).norm() <= tol * radius {
                return Err(Error::DegenerateSpectrum { i, j, tol });
            }
        }
    }

    let mut right = ComplexMatrix::zeros(d, d);
    for (m, &(_, src)) in order.iter().enumerate() {
        let mut v = eig.vectors.column(src);
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= n;
        }
        fix_phase(&mut v);
        right.set_column(m, &v);
    }

    let condition = right.condition_estimate();
    if !(condition <= 1e12) {
        return Err(Error::SingularBasis { condition });
    }
    // Rows of R^-1 are <m_L|.
    let left = right.inverse()?.adjoint();

    let energies: Vec<C64> = order.iter().map(|(e, _)| *e).collect();
    let max_imag = energies.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    Ok(BiorthogonalEigensystem {
        pt_unbroken: max_imag < tol * radius || radius == 0.0,
        energies,
        right,
        left,
        degeneracy_tol: tol,
        self_normalized: true,
    })
}

impl BiorthogonalEigensystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[C64] {
        &self.energies
    }

    /// Real parts of the energies.
    pub fn real_energies(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e.re).collect()
    }

    pub fn energy(&self, m: usize) -> C64 {
        self.energies[m]
    }

    pub fn right_vectors(&self) -> &ComplexMatrix {
        &self.right
    }

    pub fn left_vectors(&self) -> &ComplexMatrix {
        &self.left
    }

    pub fn right(&self, m: usize) -> Vec<C64> {
        self.right.column(m)
    }

    pub fn left(&self, m: usize) -> Vec<C64> {
        self.left.column(m)
    }

    pub fn pt_unbroken(&self) -> bool {
        self.pt_unbroken
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    /// Whether every right vector has unit norm.
    pub fn self_normalized(&self) -> bool {
        self.self_normalized
    }

    pub fn max_imag(&self) -> f64 {
        self.energies.iter().map(|e| e.im.abs()).fold(0.0, f64::max)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.energies.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// `L†`, whose rows are the bras `<m_L|`.
    pub fn left_adjoint(&self) -> ComplexMatrix {
        self.left.adjoint()
    }

    /// Matrix elements `<m_L|A|n_R>`.
    pub fn coefficients(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(a)?;
        Ok(self.left_adjoint().matmul(a).matmul(&self.right))
    }

    /// Expansion coefficients `c_mn` of `ρ = Σ c_mn |m_R><n_L|`, i.e. `<m_L|ρ|n_R>`.
    pub fn expansion(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.coefficients(rho)
    }

    /// Inverse of [`expansion`](Self::expansion): `Σ c_mn |m_R><n_L|`.
    pub fn assemble(&self, c: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(c)?;
        Ok(self.right.matmul(c).matmul(&self.left_adjoint()))
    }

    /// `|m_R><n_L|`.
    pub fn projector(&self, m: usize, n: usize) -> ComplexMatrix {
        ComplexMatrix::outer(&self.right(m), &self.left(n))
    }

    /// `|m_R><m_R|`.
    pub fn right_projector(&self, m: usize) -> ComplexMatrix {
        let r = self.right(m);
        ComplexMatrix::outer(&r, &r)
    }

    /// `Σ_m e_m |m_R><m_L|`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let c = ComplexMatrix::diag(&self.energies);
        self.right.matmul(&c).matmul(&self.left_adjoint())
    }

    /// The same basis with `|m_R> -> s_m |m_R>` and `|m_L> -> |m_L> / conj(s_m)`,
    /// which keeps `<m_L|n_R> = δ_mn`.
    pub fn rescaled(&self, scales: &[C64]) -> Result<Self> {
        if scales.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} scale factors for dimension {}",
                scales.len(),
                self.dim()
            )));
        }
        if scales.iter().any(|s| *s == ZERO || !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::NonFinite("basis rescaling factors".into()));
        }
        let d = self.dim();
        let mut out = self.clone();
        for m in 0..d {
            let s = scales[m];
            for i in 0..d {
                out.right[(i, m)] *= s;
                out.left[(i, m)] /= s.conj();
            }
        }
        out.self_normalized = scales.iter().all(|s| (s.norm() - 1.0).abs() < 1e-14);
        Ok(out)
    }

    fn check_dim(&self, a: &ComplexMatrix) -> Result<()> {
        if a.rows() != self.dim() || a.cols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, basis has dimension {}",
                a.rows(),
                a.cols(),
                self.dim()
            )));
        }
        Ok(())
    }
}
