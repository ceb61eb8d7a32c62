//! Bohr-frequency sectors of the BTE generator as Pauli master equations.
//!
//! In the biorthogonal eigenbasis the BTE generator maps the projectors
//! `|m_R><n_L|` with a fixed bias `Δ = e_n − e_m` into each other, so each
//! sector evolves as `dc/dt = (𝕃 + iΔ) c`. [`Sector::lmat`] holds the
//! dissipative part `𝕃`; the coherent phase `iΔ` is left out, as it does not
//! affect decay.

use rayon::prelude::*;
use serde::Serialize;

use crate::bath::SpectralFunction;
use crate::diagnostics::boltzmann_weights;
use crate::error::{Error, Result};
use crate::generator::{group_spacings, thermalization_gauge, JumpDecomposition};
use crate::linalg::{eigenvalues, null_vector, ComplexMatrix, C64, I, ZERO};

/// Right-eigenvector normalization the sector matrices are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Gauge {
    /// Unit-norm right eigenvectors, as decomposed.
    #[default]
    SelfNormalized,
    /// Rescaled so that `|𝔸_mn| = |𝔸_nm|` as closely as possible across all
    /// couplings. Spectra do not depend on this choice, Gershgorin margins do.
    Balanced,
}

#[derive(Debug, Clone)]
pub struct Sector {
    pub delta: f64,
    pub pairs: Vec<(usize, usize)>,
    pub lmat: ComplexMatrix,
    /// `|𝕃_pp| − Σ_{q≠p} |𝕃_qp|`.
    pub gershgorin_margins: Vec<f64>,
    pub in_sector_diag: Vec<C64>,
    pub out_sector_diag: Vec<C64>,
    /// `Σ_{q≠p} γ(ω_{m_q m_p}) (|𝔸_{m_p m_q}| − |𝔸_{n_p n_q}|)² / 2`.
    pub margin_bounds: Vec<f64>,
    pub spectrum: Vec<C64>,
}

impl Sector {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_diagonal(&self) -> bool {
        self.pairs.iter().all(|(m, n)| m == n)
    }

    /// `𝕃 + iΔ`, the full sector generator.
    pub fn coherent(&self) -> ComplexMatrix {
        let mut out = self.lmat.clone();
        for p in 0..self.len() {
            out[(p, p)] += I * self.delta;
        }
        out
    }

    pub fn max_re_lambda(&self) -> f64 {
        self.spectrum.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Coefficients `c_p = <m_p L|ρ|n_p R>` from the full biorthogonal
    /// coefficient matrix `c = L†ρR`.
    pub fn extract(&self, c: &ComplexMatrix) -> Vec<C64> {
        self.pairs.iter().map(|&(m, n)| c[(m, n)]).collect()
    }
}

/// Sectors with the gauge they were built in.
#[derive(Debug, Clone)]
pub struct SectorSet {
    pub sectors: Vec<Sector>,
    /// Right-eigenvector scale factors `r_m` of the gauge (all ones when
    /// self-normalized). Sector coefficients are `c_p r_{n_p} / r_{m_p}`.
    pub gauge: Vec<f64>,
    pub energies: Vec<f64>,
}

impl SectorSet {
    pub fn zero_sector(&self) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.is_diagonal())
    }

    /// Sector coefficients of `c = L†ρR` (self-normalized basis) in this gauge.
    pub fn extract(&self, sector: &Sector, c: &ComplexMatrix) -> Vec<C64> {
        sector
            .pairs
            .iter()
            .map(|&(m, n)| c[(m, n)] * (self.gauge[n] / self.gauge[m]))
            .collect()
    }
}

/// Builds every sector of the BTE generator for the couplings `decomps`,
/// summing their contributions.
pub fn build_sectors(
    decomps: &[JumpDecomposition],
    sf: &SpectralFunction,
    freq_tol: f64,
    gauge: Gauge,
) -> Result<SectorSet> {
    let first = decomps.first().ok_or_else(|| Error::InvalidSpec("no coupling operators".into()))?;
    let d = first.dim();
    let energies = first.basis().energies.clone();

    // Jump group and rate of every off-diagonal pair; all couplings share
    // the eigenbasis, hence the grouping.
    let mut group_of = vec![usize::MAX; d * d];
    let mut rates = Vec::with_capacity(first.groups().len());
    for (k, g) in first.groups().iter().enumerate() {
        for &(m, n) in &g.pairs {
            group_of[m * d + n] = k;
        }
        rates.push(sf.gamma(g.omega)?);
    }
    let scales = match gauge {
        Gauge::SelfNormalized => vec![1.0; d],
        Gauge::Balanced => {
            let cs: Vec<&ComplexMatrix> = decomps.iter().map(|x| x.coeffs()).collect();
            thermalization_gauge(&cs)
        }
    };
    let coeffs: Vec<ComplexMatrix> = decomps
        .iter()
        .map(|x| ComplexMatrix::from_fn(d, d, |m, n| x.coeffs()[(m, n)] * (scales[n] / scales[m])))
        .collect();

    // Rate of the jump m → m', i.e. of pair (m', m) with ω = e_m − e_{m'}.
    let rate = |to: usize, from: usize| -> Option<f64> {
        let k = group_of[to * d + from];
        (k != usize::MAX).then(|| rates[k])
    };
    // K_m = Σ_k Σ_{m'} γ(ω_{m'm}) 𝔸_{mm'} 𝔸_{m'm}.
    let mut big_k = vec![ZERO; d];
    for (m, km) in big_k.iter_mut().enumerate() {
        for mp in (0..d).filter(|&mp| mp != m) {
            if let Some(g) = rate(mp, m) {
                for a in &coeffs {
                    *km += a[(m, mp)] * a[(mp, m)] * g;
                }
            }
        }
    }

    let groups = group_spacings(&energies, freq_tol);
    let mut sectors: Vec<Sector> = groups
        .par_iter()
        .map(|g| -> Result<Sector> {
            let pairs = g.pairs.clone();
            let mm = pairs.len();
            let mut lmat = ComplexMatrix::zeros(mm, mm);
            let mut in_diag = vec![ZERO; mm];
            let mut bounds = vec![0.0; mm];
            for (p, &(mp, np)) in pairs.iter().enumerate() {
                lmat[(p, p)] = -(big_k[mp] + big_k[np]) * 0.5;
                for (q, &(mq, nq)) in pairs.iter().enumerate() {
                    if q == p {
                        continue;
                    }
                    let (Some(gamma), k1, k2) = (rate(mq, mp), group_of[mq * d + mp], group_of[np * d + nq]) else {
                        continue;
                    };
                    // The ket jumps m_p → m_q with A_ω, the bra n_p → n_q with A_{−ω}.
                    if k2 != first.mirror(k1) {
                        continue;
                    }
                    let mut off = ZERO;
                    let mut ins = ZERO;
                    let mut bound = 0.0;
                    for a in &coeffs {
                        off += a[(mq, mp)] * a[(np, nq)];
                        ins += a[(mp, mq)] * a[(mq, mp)] + a[(np, nq)] * a[(nq, np)];
                        bound += (a[(mp, mq)].norm() - a[(np, nq)].norm()).powi(2);
                    }
                    lmat[(q, p)] = off * gamma;
                    in_diag[p] -= ins * (gamma * 0.5);
                    bounds[p] += gamma * bound * 0.5;
                }
            }
            let out_diag: Vec<C64> = (0..mm).map(|p| lmat[(p, p)] - in_diag[p]).collect();
            let margins = (0..mm)
                .map(|p| lmat[(p, p)].norm() - (0..mm).filter(|&q| q != p).map(|q| lmat[(q, p)].norm()).sum::<f64>())
                .collect();
            let spectrum = if mm == 1 { vec![lmat[(0, 0)]] } else { eigenvalues(&lmat)? };
            Ok(Sector {
                delta: g.omega,
                pairs,
                lmat,
                gershgorin_margins: margins,
                in_sector_diag: in_diag,
                out_sector_diag: out_diag,
                margin_bounds: bounds,
                spectrum,
            })
        })
        .collect::<Result<_>>()?;
    sectors.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    Ok(SectorSet { sectors, gauge: scales, energies })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dominance {
    pub strictly_dominant: bool,
    pub min_margin: f64,
    pub all_re_negative: bool,
}

pub fn dominance_report(sector: &Sector) -> Dominance {
    let min_margin = sector.gershgorin_margins.iter().copied().fold(f64::INFINITY, f64::min);
    let norm = sector.lmat.max_entry_norm();
    Dominance {
        strictly_dominant: min_margin > 0.0,
        min_margin,
        all_re_negative: sector.max_re_lambda() < -1e-12 * norm,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyWeights {
    pub weights: Vec<f64>,
    /// `max |𝕃 c̄|`.
    pub residual: f64,
    /// Largest deviation from `e^{−β e_m} / Z_s`.
    pub boltzmann_deviation: f64,
}

/// Null right vector of the `Δ = 0` sector, normalized to unit sum.
pub fn steady_weights(sector0: &Sector, beta: f64, energies: &[f64]) -> Result<SteadyWeights> {
    if !sector0.is_diagonal() {
        return Err(Error::InvalidSpec("steady weights need the Δ = 0 sector".into()));
    }
    let norm = sector0.lmat.max_entry_norm();
    let smallest = sector0.spectrum.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if smallest > 1e-8 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NoNullVector { smallest });
    }
    let v = null_vector(&sector0.lmat)?;
    let weights: Vec<f64> = v.iter().map(|z| z.re).collect();
    let residual = sector0.lmat.matvec(&v).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let level_energies: Vec<f64> = sector0.pairs.iter().map(|&(m, _)| energies[m]).collect();
    let (chi, _) = boltzmann_weights(&level_energies, beta);
    let boltzmann_deviation = weights.iter().zip(&chi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(SteadyWeights { weights, residual, boltzmann_deviation })
}

/// Largest relative violation of `𝕃_qp c̄_p = 𝕃_pq c̄_q` over level pairs.
pub fn detailed_balance_residual(sector0: &Sector, weights: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for p in 0..sector0.len() {
        for q in p + 1..sector0.len() {
            let fwd = sector0.lmat[(q, p)] * weights[p];
            let bwd = sector0.lmat[(p, q)] * weights[q];
            let scale = fwd.norm().max(bwd.norm());
            if scale > 0.0 {
                worst = worst.max((fwd - bwd).norm() / scale);
            }
        }
    }
    worst
}

/// The largest modulus of `Σ_q 𝕃_qp` over columns of the `Δ = 0` sector.
pub fn column_sum_residual(sector0: &Sector) -> f64 {
    (0..sector0.len())
        .map(|p| (0..sector0.len()).map(|q| sector0.lmat[(q, p)]).sum::<C64>().norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelReport {
    /// RTE Pauli matrix on `(c_m, c_n)` with unit-norm right vectors.
    pub lmat: ComplexMatrix,
    /// Null vector normalized to unit sum.
    pub weights: [f64; 2],
    /// `(e^{βω}, 1) / (1 + e^{βω})` with `ω = e_n − e_m`.
    pub boltzmann: [f64; 2],
    /// Normalized steady state `c_m |m_R><m_R| + c_n |n_R><n_R|`.
    pub steady: ComplexMatrix,
    /// Largest change of the normalized steady state over the rescalings.
    pub rescaling_deviation: f64,
    pub alphas: Vec<f64>,
}

/// Two-level RTE Pauli equation for levels `m`, `n` of one coupling, with the
/// steady state recomputed after `|n_R> → α|n_R>`, `|n_L> → |n_L>/α`.
pub fn rte_two_level_check(
    decomp: &JumpDecomposition,
    sf: &SpectralFunction,
    m: usize,
    n: usize,
    alphas: &[f64],
) -> Result<TwoLevelReport> {
    let d = decomp.dim();
    if m >= d || n >= d || m == n {
        return Err(Error::InvalidSpec(format!("need two distinct levels below {d}, got ({m}, {n})")));
    }
    let basis = decomp.basis();
    let a_mn = decomp.coeffs()[(m, n)];
    let a_nm = decomp.coeffs()[(n, m)];
    let kappa = a_mn * a_nm;
    if kappa.norm() == 0.0 || kappa.re <= 0.0 || kappa.im.abs() > 1e-10 * kappa.norm() {
        // No rescaling makes 𝔸_mn = (𝔸_nm)* unless κ is real positive.
        return Err(Error::ConditionViolated { m, n, residual: (a_mn - a_nm.conj()).norm() });
    }
    let omega = basis.energies[n] - basis.energies[m];
    let g_mn = sf.gamma(omega)?;
    let g_nm = sf.gamma(-omega)?;
    let rm = basis.right.column(m);
    let rn = basis.right.column(n);

    let build = |alpha: f64| -> Result<(ComplexMatrix, [f64; 2], ComplexMatrix)> {
        let a = a_mn * alpha;
        let b = a_nm / alpha;
        let lmat = ComplexMatrix::from_rows(&[
            vec![-(a.conj() * b.conj()) * g_nm, a.norm_sqr() * g_mn * C64::new(1.0, 0.0)],
            vec![b.norm_sqr() * g_nm * C64::new(1.0, 0.0), -(b * a) * g_mn],
        ])?;
        let v = null_vector(&lmat)?;
        let w = [v[0].re, v[1].re];
        let rn_a: Vec<C64> = rn.iter().map(|z| z * alpha).collect();
        let mut rho = ComplexMatrix::outer(&rm, &rm).scale_real(w[0]);
        rho.add_scaled(C64::new(w[1], 0.0), &ComplexMatrix::outer(&rn_a, &rn_a));
        let t = rho.trace();
        Ok((lmat, w, rho.scale(t.inv())))
    };

    let (lmat, weights, steady) = build(1.0)?;
    let mut dev = 0.0f64;
    for &alpha in alphas {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidSpec(format!("rescaling factor must be positive, got {alpha}")));
        }
        let (_, _, rho) = build(alpha)?;
        dev = dev.max((&rho - &steady).max_entry_norm());
    }
    let x = (sf.beta() * omega).exp();
    Ok(TwoLevelReport {
        lmat,
        weights,
        boltzmann: [x / (1.0 + x), 1.0 / (1.0 + x)],
        steady,
        rescaling_deviation: dev,
        alphas: alphas.to_vec(),
    })
}

/// One record of the sector report export.
#[derive(Debug, Clone, Serialize)]
pub struct SectorRecord {
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub margins: Vec<f64>,
    pub spectrum: Vec<[f64; 2]>,
    pub dominant: bool,
    pub all_re_negative: bool,
}

impl From<&Sector> for SectorRecord {
    fn from(s: &Sector) -> Self {
        let dom = dominance_report(s);
        SectorRecord {
            delta: s.delta,
            m: s.len(),
            margins: s.gershgorin_margins.clone(),
            spectrum: s.spectrum.iter().map(|z| [z.re, z.im]).collect(),
            dominant: dom.strictly_dominant,
            all_re_negative: dom.all_re_negative,
        }
    }
}
