//! Boltzmann reference states, distance to them, and thermal entropies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, BiorthogonalEigensystem, ComplexMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceKind {
    /// `Σ χ_m |m_R><m_L|`.
    BBS,
    /// `Σ χ_m |m_R><m_R|`.
    BRS,
}

#[derive(Debug, Clone)]
pub struct ReferenceState {
    pub kind: ReferenceKind,
    pub matrix: ComplexMatrix,
    /// `χ_m = e^{−β e_m} / Z_s`, in energy order.
    pub weights: Vec<f64>,
    /// `Z_s = Σ e^{−β e_m}`.
    pub partition: f64,
}

/// Boltzmann weights of real energies, computed with a shifted exponent.
pub fn boltzmann_weights(energies: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let emin = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = energies.iter().map(|e| (-beta * (e - emin)).exp()).collect();
    let z: f64 = raw.iter().sum();
    let partition = z * (-beta * emin).exp();
    (raw.into_iter().map(|w| w / z).collect(), partition)
}

pub fn reference_state(kind: ReferenceKind, eig: &BiorthogonalEigensystem, beta: f64) -> Result<ReferenceState> {
    if !eig.pt_unbroken() {
        return Err(Error::PtBroken { max_imag: eig.max_imag() });
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidBath(format!("beta must be non-negative and finite, got {beta}")));
    }
    let (weights, partition) = boltzmann_weights(&eig.real_energies(), beta);
    let chi: Vec<C64> = weights.iter().map(|&w| C64::new(w, 0.0)).collect();
    let r = eig.right_vectors();
    let rd = r.matmul(&ComplexMatrix::diag(&chi));
    let mut matrix = match kind {
        ReferenceKind::BBS => rd.matmul(&eig.left_adjoint()),
        ReferenceKind::BRS => rd.matmul(&r.adjoint()),
    };
    if kind == ReferenceKind::BRS && !eig.self_normalized() {
        let t = matrix.trace();
        matrix = matrix.scale(t.inv());
    }
    Ok(ReferenceState { kind, matrix, weights, partition })
}

/// `ρ / tr ρ`.
pub fn normalize_trace(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let t = rho.trace();
    if t.norm() < 1e-300 || !t.re.is_finite() || !t.im.is_finite() {
        return Err(Error::ZeroTrace);
    }
    Ok(rho.scale(t.inv()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variance {
    /// Induced ∞-norm (max absolute row sum) of `ρ − ρ̄`.
    pub induced: f64,
    /// Largest entry of `|ρ − ρ̄|`.
    pub max_entry: f64,
}

pub fn variance(rho: &ComplexMatrix, reference: &ComplexMatrix) -> Result<Variance> {
    if rho.rows() != reference.rows() || rho.cols() != reference.cols() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, reference is {}x{}",
            rho.rows(),
            rho.cols(),
            reference.rows(),
            reference.cols()
        )));
    }
    let diff = rho - reference;
    Ok(Variance { induced: diff.inf_norm(), max_entry: diff.max_entry_norm() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entropies {
    pub s_von: f64,
    pub s_gib: f64,
    pub delta_s: f64,
}

/// `−Σ x ln x`, with `0 ln 0 = 0`.
pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// `−tr ρ ln ρ` of the trace-normalized state, from its eigenvalues.
pub fn von_neumann(rho: &ComplexMatrix) -> Result<f64> {
    let rho = normalize_trace(rho)?;
    let lam = eigenvalues(&rho)?;
    let max_imag = lam.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_imag >= 1e-10 {
        return Err(Error::ComplexSpectrum { max_imag });
    }
    let mut s = 0.0;
    for z in lam {
        if z.re < -1e-12 {
            return Err(Error::NonPositiveEigenvalue { value: z.re });
        }
        if z.re > 1e-14 {
            s -= z.re * z.re.ln();
        }
    }
    Ok(s)
}

/// Entropies of a general state against the Boltzmann weights `weights`.
pub fn entropies(rho: &ComplexMatrix, weights: &[f64]) -> Result<Entropies> {
    let s_von = von_neumann(rho)?;
    let s_gib = shannon(weights);
    Ok(Entropies { s_von, s_gib, delta_s: s_von - s_gib })
}

/// Entropies of a reference state. For BBS the spectrum is exactly the
/// weights, so `S_von` is taken from them; use [`entropies`] on the matrix
/// for the numerical cross-check.
pub fn reference_entropies(reference: &ReferenceState) -> Result<Entropies> {
    let s_gib = shannon(&reference.weights);
    let s_von = match reference.kind {
        ReferenceKind::BBS => s_gib,
        ReferenceKind::BRS => von_neumann(&reference.matrix)?,
    };
    Ok(Entropies { s_von, s_gib, delta_s: s_von - s_gib })
}
