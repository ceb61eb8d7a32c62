//! Frequency-resolved jump operators and the BTE/RTE GKSL generators.

use serde::{Deserialize, Serialize};

use crate::bath::SpectralFunction;
use crate::error::{Error, Result};
use crate::linalg::{BiorthogonalEigensystem, ComplexMatrix, Csr, C64, I, ONE, ZERO};

/// Default relative tolerance for merging Bohr frequencies.
pub const DEFAULT_FREQ_TOL: f64 = 1e-9;

/// Largest `d²` for which the dense superoperator is built.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvolutionKind {
    /// Biorthogonal evolution, `ρ = |Ψ><Φ|`.
    BTE,
    /// Right-state evolution, `ρ = |Ψ><Ψ|`.
    RTE,
}

/// Ordered level pairs `(m, n)` sharing the spacing `ω = e_n − e_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGroup {
    pub omega: f64,
    pub pairs: Vec<(usize, usize)>,
}

/// Groups all ordered pairs `(m, n)` of `energies` (diagonal included) by
/// `e_n − e_m`, merging spacings within `freq_tol · max|e|`. Groups come out
/// sorted by frequency.
pub fn group_spacings(energies: &[f64], freq_tol: f64) -> Vec<FrequencyGroup> {
    let d = energies.len();
    let scale = energies.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let tol = freq_tol * scale;
    let mut all: Vec<(f64, usize, usize)> = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            let w = if m == n { 0.0 } else { energies[n] - energies[m] };
            all.push((w, m, n));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut groups: Vec<(f64, Vec<(f64, usize, usize)>)> = Vec::new();
    for item in all {
        match groups.last_mut() {
            Some((start, members)) if item.0 - *start <= tol => members.push(item),
            _ => groups.push((item.0, vec![item])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let omega = members.iter().map(|x| x.0).sum::<f64>() / members.len() as f64;
            let mut pairs: Vec<(usize, usize)> = members.iter().map(|x| (x.1, x.2)).collect();
            pairs.sort();
            FrequencyGroup { omega, pairs }
        })
        .collect()
}

/// Expansion of one coupling operator in the biorthogonal eigenbasis.
#[derive(Debug, Clone)]
pub struct JumpDecomposition {
    coeffs: ComplexMatrix,
    groups: Vec<FrequencyGroup>,
    mirrors: Vec<usize>,
    jump_ops: Vec<ComplexMatrix>,
    diagonal_part: ComplexMatrix,
    residual_self_normalized: f64,
    therm_residual: f64,
    basis: Basis,
}

/// Eigenbasis a decomposition was built in.
#[derive(Debug, Clone)]
pub struct Basis {
    pub energies: Vec<f64>,
    pub right: ComplexMatrix,
    pub left_adjoint: ComplexMatrix,
}

/// Coefficients `𝔸_mn = <m_L|A|n_R>` grouped by Bohr frequency, with the jump
/// operators `A_ω = Σ 𝔸_mn |m_R><n_L|` over pairs with `e_n − e_m = ω ≠ 0`.
pub fn decompose(eig: &BiorthogonalEigensystem, a: &ComplexMatrix, freq_tol: f64) -> Result<JumpDecomposition> {
    if !eig.pt_unbroken() {
        return Err(Error::PtBroken { max_imag: eig.max_imag() });
    }
    let coeffs = eig.coefficients(a)?;
    let d = eig.dim();
    let energies = eig.real_energies();

    let mut groups = Vec::new();
    for g in group_spacings(&energies, freq_tol) {
        let off: Vec<(usize, usize)> = g.pairs.iter().copied().filter(|(m, n)| m != n).collect();
        if off.len() < g.pairs.len() {
            if !off.is_empty() {
                return Err(Error::ZeroFrequency);
            }
            continue;
        }
        groups.push(FrequencyGroup { omega: g.omega, pairs: off });
    }

    let scale = energies.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let tol = (freq_tol * scale).max(f64::MIN_POSITIVE);
    let mut mirrors = Vec::with_capacity(groups.len());
    for g in &groups {
        let (k, dist) = groups
            .iter()
            .enumerate()
            .map(|(k, h)| (k, (h.omega + g.omega).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if dist > 2.0 * tol {
            return Err(Error::MismatchedBasis(format!("no mirror frequency for ω = {}", g.omega)));
        }
        mirrors.push(k);
    }

    let l_adj = eig.left_adjoint();
    let right = eig.right_vectors();
    let build = |pairs: &mut dyn Iterator<Item = (usize, usize)>| {
        let mut c = ComplexMatrix::zeros(d, d);
        for (m, n) in pairs {
            c[(m, n)] = coeffs[(m, n)];
        }
        right.matmul(&c).matmul(&l_adj)
    };
    let jump_ops = groups.iter().map(|g| build(&mut g.pairs.iter().copied())).collect();
    let diagonal_part = build(&mut (0..d).map(|m| (m, m)));

    let residual_self_normalized = condition_residual(&coeffs, None);
    let gauge = thermalization_gauge(&[&coeffs]);
    let therm_residual = condition_residual(&coeffs, Some(&gauge));

    Ok(JumpDecomposition {
        coeffs,
        groups,
        mirrors,
        jump_ops,
        diagonal_part,
        residual_self_normalized,
        therm_residual,
        basis: Basis { energies, right: right.clone(), left_adjoint: l_adj },
    })
}

/// `max_{m≠n} |𝔸'_mn − conj(𝔸'_nm)|` with `𝔸'_mn = 𝔸_mn r_n / r_m`.
fn condition_residual(coeffs: &ComplexMatrix, gauge: Option<&[f64]>) -> f64 {
    let d = coeffs.rows();
    let mut worst = 0.0f64;
    for m in 0..d {
        for n in 0..d {
            if m == n {
                continue;
            }
            let (amn, anm) = match gauge {
                Some(r) => (coeffs[(m, n)] * (r[n] / r[m]), coeffs[(n, m)] * (r[m] / r[n])),
                None => (coeffs[(m, n)], coeffs[(n, m)]),
            };
            worst = worst.max((amn - anm.conj()).norm());
        }
    }
    worst
}

/// Positive rescalings `r_m` of the right eigenvectors (left vectors scale by
/// `1/r_m`) that best equalize `|𝔸_mn|` and `|𝔸_nm|` across all given
/// coefficient matrices.
///
/// The condition `𝔸_mn = conj(𝔸_nm)` is not invariant under such rescalings,
/// while the phase of `𝔸_mn 𝔸_nm` is. The moduli are matched by weighted
/// least squares on `x = ln r`, `2(x_m − x_n) = ln|𝔸_mn| − ln|𝔸_nm|`, with
/// weights `|𝔸_mn||𝔸_nm|`; the result has geometric mean one.
pub fn thermalization_gauge(coeffs: &[&ComplexMatrix]) -> Vec<f64> {
    let d = coeffs.first().map_or(0, |c| c.rows());
    let mut lap = vec![0.0f64; d * d];
    let mut rhs = vec![0.0f64; d];
    let mut wmax = 0.0f64;
    for c in coeffs {
        for m in 0..d {
            for n in m + 1..d {
                let (a, b) = (c[(m, n)].norm(), c[(n, m)].norm());
                let w = a * b;
                if !(w > 0.0) || !w.is_finite() {
                    continue;
                }
                let t = (a / b).ln();
                // Residual 2(x_m − x_n) − t, weight w.
                lap[m * d + m] += 4.0 * w;
                lap[n * d + n] += 4.0 * w;
                lap[m * d + n] -= 4.0 * w;
                lap[n * d + m] -= 4.0 * w;
                rhs[m] += 2.0 * w * t;
                rhs[n] -= 2.0 * w * t;
                wmax = wmax.max(w);
            }
        }
    }
    if wmax == 0.0 {
        return vec![1.0; d];
    }
    // The Laplacian is singular along constants; a small ridge pins the mean
    // of each connected component to zero.
    let ridge = 1e-12 * wmax;
    let sys = ComplexMatrix::from_fn(d, d, |i, j| C64::new(lap[i * d + j] + if i == j { ridge } else { 0.0 }, 0.0));
    let b = ComplexMatrix::from_fn(d, 1, |i, _| C64::new(rhs[i], 0.0));
    let x = match sys.solve(&b) {
        Ok(x) => x.column(0).into_iter().map(|z| z.re).collect::<Vec<_>>(),
        Err(_) => return vec![1.0; d],
    };
    let mean = x.iter().sum::<f64>() / d as f64;
    x.iter().map(|v| (v - mean).exp()).collect()
}

impl JumpDecomposition {
    pub fn dim(&self) -> usize {
        self.coeffs.rows()
    }

    /// `𝔸_mn = <m_L|A|n_R>`.
    pub fn coeffs(&self) -> &ComplexMatrix {
        &self.coeffs
    }

    /// Nonzero-frequency groups, sorted by frequency.
    pub fn groups(&self) -> &[FrequencyGroup] {
        &self.groups
    }

    /// Index of the group at `−ω` for each group.
    pub fn mirror(&self, k: usize) -> usize {
        self.mirrors[k]
    }

    pub fn jump_op(&self, k: usize) -> &ComplexMatrix {
        &self.jump_ops[k]
    }

    /// `Σ_m 𝔸_mm |m_R><m_L|`, the part of `A` not in any jump operator.
    pub fn diagonal_part(&self) -> &ComplexMatrix {
        &self.diagonal_part
    }

    /// `Σ_ω A_ω + diagonal part`, which equals `A`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut out = self.diagonal_part.clone();
        for a in &self.jump_ops {
            out.add_scaled(ONE, a);
        }
        out
    }

    /// `κ_mn = 𝔸_mn 𝔸_nm`.
    pub fn kappa(&self, m: usize, n: usize) -> C64 {
        self.coeffs[(m, n)] * self.coeffs[(n, m)]
    }

    /// Thermalization residual `max_{m≠n} |𝔸_mn − conj(𝔸_nm)|` in the
    /// eigenvector normalization that best balances this operator.
    pub fn therm_residual(&self) -> f64 {
        self.therm_residual
    }

    /// The same residual with unit-norm right eigenvectors.
    pub fn residual_self_normalized(&self) -> f64 {
        self.residual_self_normalized
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum ThermalizationVerdict {
    Satisfied { max_residual: f64 },
    Violated { max_residual: f64, worst_operator: usize },
}

impl ThermalizationVerdict {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, ThermalizationVerdict::Satisfied { .. })
    }

    pub fn max_residual(&self) -> f64 {
        match *self {
            ThermalizationVerdict::Satisfied { max_residual } | ThermalizationVerdict::Violated { max_residual, .. } => {
                max_residual
            }
        }
    }
}

/// Thermalization check over all coupling operators in one shared gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalizationReport {
    pub verdict: ThermalizationVerdict,
    /// Per-operator residual in the shared gauge.
    pub residuals: Vec<f64>,
    /// Per-operator residual with unit-norm right eigenvectors.
    pub residuals_self_normalized: Vec<f64>,
    /// Right-eigenvector rescalings of the shared gauge.
    pub gauge: Vec<f64>,
}

pub fn check_thermalization(decomps: &[JumpDecomposition], tol: f64) -> Result<ThermalizationReport> {
    if decomps.is_empty() {
        return Err(Error::InvalidSpec("no coupling operators to check".into()));
    }
    let cs: Vec<&ComplexMatrix> = decomps.iter().map(|d| &d.coeffs).collect();
    let gauge = thermalization_gauge(&cs);
    let residuals: Vec<f64> = decomps.iter().map(|d| condition_residual(&d.coeffs, Some(&gauge))).collect();
    let (worst_operator, max_residual) = residuals
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0f64), |acc, (k, r)| if r > acc.1 { (k, r) } else { acc });
    let verdict = if residuals.iter().all(|&r| r <= tol) {
        ThermalizationVerdict::Satisfied { max_residual }
    } else {
        ThermalizationVerdict::Violated { max_residual, worst_operator }
    };
    Ok(ThermalizationReport {
        verdict,
        residuals,
        residuals_self_normalized: decomps.iter().map(|d| d.residual_self_normalized).collect(),
        gauge,
    })
}

#[derive(Debug, Clone)]
struct JumpTerm {
    rate: f64,
    left: ComplexMatrix,
    right: ComplexMatrix,
}

/// GKSL generator written as `dρ/dt = X ρ + ρ Y + Σ γ J ρ J'`.
///
/// BTE: `X = −iH − K/2`, `Y = iH − K/2`, `J' = A_{−ω}`.
/// RTE: `X = −iH − K/2`, `Y = iH† − K†/2`, `J' = A_ω†`.
/// Here `K = Σ_k Σ_ω γ(ω) A_{−ω} A_ω`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    kind: EvolutionKind,
    dim: usize,
    heff_left: ComplexMatrix,
    heff_right: ComplexMatrix,
    jumps: Vec<JumpTerm>,
    basis: Option<Basis>,
    dense: Option<ComplexMatrix>,
    frame: Option<EigenFrame>,
}

pub fn build_liouvillian(
    kind: EvolutionKind,
    h: &ComplexMatrix,
    decomps: &[JumpDecomposition],
    sf: &SpectralFunction,
) -> Result<Liouvillian> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch("Hamiltonian must be square".into()));
    }
    let d = h.rows();
    for (k, dec) in decomps.iter().enumerate() {
        if dec.dim() != d {
            return Err(Error::MismatchedBasis(format!(
                "decomposition {k} has dimension {}, Hamiltonian has {d}",
                dec.dim()
            )));
        }
    }
    let basis = decomps.first().map(|dec| dec.basis.clone());
    if let Some(b) = &basis {
        let diag = ComplexMatrix::diag_real(&b.energies);
        let off = (&b.left_adjoint.matmul(h).matmul(&b.right) - &diag).max_entry_norm();
        if off > 1e-8 * h.max_entry_norm().max(1.0) {
            return Err(Error::MismatchedBasis(format!(
                "eigenbasis does not diagonalize the Hamiltonian (residual {off:e})"
            )));
        }
        for (k, dec) in decomps.iter().enumerate().skip(1) {
            if (&dec.basis.right - &b.right).max_entry_norm() > 1e-12 {
                return Err(Error::MismatchedBasis(format!("decomposition {k} uses a different eigenbasis")));
            }
        }
    }

    let mut k_sum = ComplexMatrix::zeros(d, d);
    let mut jumps = Vec::new();
    for dec in decomps {
        for (g, group) in dec.groups.iter().enumerate() {
            let rate = sf.gamma(group.omega)?;
            let a = &dec.jump_ops[g];
            let a_minus = &dec.jump_ops[dec.mirrors[g]];
            k_sum.add_scaled(C64::new(rate, 0.0), &a_minus.matmul(a));
            let right = match kind {
                EvolutionKind::BTE => a_minus.clone(),
                EvolutionKind::RTE => a.adjoint(),
            };
            jumps.push(JumpTerm { rate, left: a.clone(), right });
        }
    }

    let mut heff_left = h.scale(-I);
    heff_left.add_scaled(C64::new(-0.5, 0.0), &k_sum);
    let (mut heff_right, k_right) = match kind {
        EvolutionKind::BTE => (h.scale(I), k_sum),
        EvolutionKind::RTE => (h.adjoint().scale(I), k_sum.adjoint()),
    };
    heff_right.add_scaled(C64::new(-0.5, 0.0), &k_right);

    Ok(Liouvillian { kind, dim: d, heff_left, heff_right, jumps, basis, dense: None, frame: None })
}

impl Liouvillian {
    pub fn kind(&self) -> EvolutionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dense(&self) -> Option<&ComplexMatrix> {
        self.dense.as_ref()
    }

    /// `dρ/dt`, computed from the operator form.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.dim || rho.cols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{}, generator acts on dimension {}",
                rho.rows(),
                rho.cols(),
                self.dim
            )));
        }
        let mut out = self.heff_left.matmul(rho);
        out.add_scaled(ONE, &rho.matmul(&self.heff_right));
        for j in &self.jumps {
            out.add_scaled(C64::new(j.rate, 0.0), &j.left.matmul(rho).matmul(&j.right));
        }
        Ok(out)
    }

    /// `vec(dρ/dt)` for a column-stacked state; uses the dense superoperator
    /// when it has been built.
    pub fn apply_vec(&self, v: &[C64], out: &mut [C64]) {
        match &self.dense {
            Some(s) => s.matvec_into(v, out),
            None => {
                let rho = ComplexMatrix::unvectorize(v, self.dim, self.dim);
                let r = self.apply(&rho).expect("dimension checked by caller");
                out.copy_from_slice(&r.vectorize());
            }
        }
    }

    /// The `d² × d²` matrix `S` with `vec(dρ/dt) = S vec(ρ)` (column stacking).
    pub fn superoperator(&self) -> Result<ComplexMatrix> {
        if let Some(s) = &self.dense {
            return Ok(s.clone());
        }
        let d = self.dim;
        let n = d * d;
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge { dim: n, limit: DENSE_LIMIT });
        }
        // vec(X ρ Y) = (Yᵀ ⊗ X) vec(ρ).
        let mut s = ComplexMatrix::zeros(n, n);
        let eye = ComplexMatrix::identity(d);
        s.add_scaled(ONE, &eye.kron(&self.heff_left));
        s.add_scaled(ONE, &self.heff_right.transpose().kron(&eye));
        let data = s.as_mut_slice();
        for j in &self.jumps {
            let yt = j.right.transpose();
            let x = &j.left;
            for a in 0..d {
                for b in 0..d {
                    let y = yt[(a, b)] * j.rate;
                    if y == ZERO {
                        continue;
                    }
                    for i in 0..d {
                        let row = (a * d + i) * n + b * d;
                        let xr = x.row(i);
                        for k in 0..d {
                            data[row + k] += y * xr[k];
                        }
                    }
                }
            }
        }
        Ok(s)
    }

    /// Builds and caches the dense superoperator and, when the generator was
    /// built from decompositions, its sparse eigenbasis form.
    pub fn materialize(&mut self) -> Result<&ComplexMatrix> {
        if self.dense.is_none() {
            self.dense = Some(self.superoperator()?);
        }
        if self.frame.is_none() {
            self.frame = self.eigen_frame();
        }
        Ok(self.dense.as_ref().expect("just built"))
    }

    /// The cached eigenbasis form, if [`materialize`](Self::materialize) built one.
    pub fn frame(&self) -> Option<&EigenFrame> {
        self.frame.as_ref()
    }

    /// The generator acting on eigenbasis coefficients: `ρ = R c L†` for BTE
    /// and `ρ = R c R†` for RTE. In these coordinates the Hamiltonian part is
    /// diagonal and each jump channel touches only its own level pairs, so the
    /// superoperator is sparse.
    pub fn eigen_frame(&self) -> Option<EigenFrame> {
        let b = self.basis.as_ref()?;
        let d = self.dim;
        let (r, la) = (&b.right, &b.left_adjoint);
        // R† and L = (L†)†.
        let (ra, l) = (r.adjoint(), la.adjoint());
        let left_side = |x: &ComplexMatrix| la.matmul(x).matmul(r);
        let right_side = |y: &ComplexMatrix| match self.kind {
            EvolutionKind::BTE => la.matmul(y).matmul(r),
            EvolutionKind::RTE => ra.matmul(y).matmul(&l),
        };
        let sparse = |m: ComplexMatrix| {
            let cut = 1e-13 * m.max_entry_norm();
            let mut out = Vec::new();
            for i in 0..d {
                for (j, &z) in m.row(i).iter().enumerate() {
                    if z.norm() > cut {
                        out.push((i, j, z));
                    }
                }
            }
            out
        };

        // vec(X c Y) = (Yᵀ ⊗ X) vec(c): entry (a d + i, b d + k) += Y[b, a] X[i, k].
        let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
        let mut push_kron = |y: &[(usize, usize, C64)], x: &[(usize, usize, C64)], w: C64| {
            for &(b_, a_, yv) in y {
                for &(i, k, xv) in x {
                    triplets.push((a_ * d + i, b_ * d + k, w * yv * xv));
                }
            }
        };
        let eye: Vec<(usize, usize, C64)> = (0..d).map(|i| (i, i, ONE)).collect();
        push_kron(&eye, &sparse(left_side(&self.heff_left)), ONE);
        push_kron(&sparse(right_side(&self.heff_right)), &eye, ONE);
        for j in &self.jumps {
            push_kron(&sparse(right_side(&j.right)), &sparse(left_side(&j.left)), C64::new(j.rate, 0.0));
        }
        triplets.sort_by(|p, q| (p.0, p.1).cmp(&(q.0, q.1)));

        let n = d * d;
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        let csr = Csr::from_triplets(n, n, &merged);

        // Interaction picture: c_i = e^{−i ω_i t} c̃_i with ω_i = e_m − e_n at
        // i = n d + m. Removing the rotation leaves entries multiplied by
        // e^{−i(ω_j − ω_i)t}, which is 1 wherever a jump connects pairs of
        // equal spacing.
        let e = &b.energies;
        let rotation: Vec<f64> = (0..n).map(|i| e[i % d] - e[i / d]).collect();
        let mut slow = Vec::with_capacity(merged.len());
        let mut theta = Vec::with_capacity(merged.len());
        for &(i, j, v) in &merged {
            let v = if i == j { v + I * rotation[i] } else { v };
            slow.push((i, j, v));
            theta.push(rotation[j] - rotation[i]);
        }
        Some(EigenFrame {
            kind: self.kind,
            dim: d,
            right: r.clone(),
            left_adjoint: la.clone(),
            generator: csr,
            slow: Csr::from_triplets(n, n, &slow),
            theta,
            rotation,
        })
    }

    /// Number of `(coupling, frequency)` jump channels.
    pub fn channel_count(&self) -> usize {
        self.jumps.len()
    }
}

/// A Liouvillian in eigenbasis coordinates; see [`Liouvillian::eigen_frame`].
#[derive(Debug, Clone)]
pub struct EigenFrame {
    kind: EvolutionKind,
    dim: usize,
    right: ComplexMatrix,
    left_adjoint: ComplexMatrix,
    generator: Csr,
    slow: Csr,
    theta: Vec<f64>,
    rotation: Vec<f64>,
}

impl EigenFrame {
    /// Superoperator acting on column-stacked eigenbasis coefficients.
    pub fn generator(&self) -> &Csr {
        &self.generator
    }

    /// Interaction-picture generator and the phase rate of each stored entry.
    pub fn interaction(&self) -> (&Csr, &[f64]) {
        (&self.slow, &self.theta)
    }

    /// `ω_i` of the rotation `c_i(t) = e^{−i ω_i t} c̃_i(t)`.
    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    /// Column-stacked coefficients of `ρ`.
    pub fn to_frame(&self, rho: &ComplexMatrix) -> Vec<C64> {
        let la = &self.left_adjoint;
        let c = match self.kind {
            EvolutionKind::BTE => la.matmul(rho).matmul(&self.right),
            EvolutionKind::RTE => la.matmul(rho).matmul(&la.adjoint()),
        };
        c.vectorize()
    }

    pub fn from_frame(&self, v: &[C64]) -> ComplexMatrix {
        let c = ComplexMatrix::unvectorize(v, self.dim, self.dim);
        match self.kind {
            EvolutionKind::BTE => self.right.matmul(&c).matmul(&self.left_adjoint),
            EvolutionKind::RTE => self.right.matmul(&c).matmul(&self.right.adjoint()),
        }
    }
}

/// The dense superoperator of `liou` in the column-stacking convention.
pub fn materialize_superoperator(liou: &Liouvillian) -> Result<ComplexMatrix> {
    liou.superoperator()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathShape;
    use crate::linalg::biorthogonalize;
    use crate::models::{build_hamiltonian, coupling_operators, Coupling, ModelSpec};

    fn qubit_setup() -> (ComplexMatrix, BiorthogonalEigensystem, Vec<JumpDecomposition>) {
        let spec = ModelSpec::Qubit { h_x: 1.0, h_y: 0.5, coupling: Coupling::SigmaZ };
        let h = build_hamiltonian(&spec).unwrap();
        let eig = biorthogonalize(&h, 1e-9).unwrap();
        let decs = coupling_operators(&spec)
            .unwrap()
            .iter()
            .map(|a| decompose(&eig, a, DEFAULT_FREQ_TOL).unwrap())
            .collect();
        (h, eig, decs)
    }

    #[test]
    fn qubit_coefficients_are_real_units() {
        let (_, _, decs) = qubit_setup();
        let c = decs[0].coeffs();
        assert!((c[(0, 1)] - ONE).norm() < 1e-12, "{:?}", c[(0, 1)]);
        assert!((c[(1, 0)] - ONE).norm() < 1e-12);
        assert!(decs[0].therm_residual() < 1e-10);
        assert!(decs[0].residual_self_normalized() < 1e-10);
    }

    #[test]
    fn qubit_groups_mirror() {
        let (_, _, decs) = qubit_setup();
        let g = decs[0].groups();
        assert_eq!(g.len(), 2);
        assert!((g[0].omega + 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(decs[0].mirror(0), 1);
        assert_eq!(decs[0].mirror(1), 0);
    }

    #[test]
    fn reconstruction() {
        let (_, _, decs) = qubit_setup();
        let a = ComplexMatrix::diag_real(&[1.0, -1.0]);
        assert!((&decs[0].reconstruct() - &a).max_entry_norm() < 1e-12);
    }

    #[test]
    fn spacing_groups_merge_equal_gaps() {
        let g = group_spacings(&[-1.0, 0.0, 1.0], 1e-9);
        // ω ∈ {−2, −1, 0, 1, 2}.
        assert_eq!(g.len(), 5);
        assert_eq!(g[1].pairs, vec![(1, 0), (2, 1)]);
        assert_eq!(g[2].pairs, vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn degenerate_gap_is_refused() {
        let eig = biorthogonalize(&ComplexMatrix::diag_real(&[0.0, 1.0]), 1e-9).unwrap();
        let a = crate::models::sigma_x();
        assert!(decompose(&eig, &a, 1e-9).is_ok());
        assert_eq!(group_spacings(&[0.0, 0.0], 1e-9).len(), 1);
    }

    #[test]
    fn gauge_balances_moduli() {
        let c = ComplexMatrix::from_real_rows(&[&[0.0, 4.0], &[1.0, 0.0]]);
        let r = thermalization_gauge(&[&c]);
        let a01 = 4.0 * r[1] / r[0];
        let a10 = 1.0 * r[0] / r[1];
        assert!((a01 - a10).abs() < 1e-9);
        assert!((r[0] * r[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn superoperator_matches_apply() {
        let (h, _, decs) = qubit_setup();
        let sf = SpectralFunction::new(BathShape::Ohmic, 0.1, 1.0).unwrap();
        for kind in [EvolutionKind::BTE, EvolutionKind::RTE] {
            let l = build_liouvillian(kind, &h, &decs, &sf).unwrap();
            let s = l.superoperator().unwrap();
            let rho = ComplexMatrix::from_rows(&[
                vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.4)],
                vec![C64::new(0.5, -0.7), C64::new(0.7, 0.0)],
            ])
            .unwrap();
            let direct = l.apply(&rho).unwrap().vectorize();
            let via = s.matvec(&rho.vectorize());
            for (a, b) in direct.iter().zip(&via) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bath_off_is_commutator() {
        let (h, _, _) = qubit_setup();
        let sf = SpectralFunction::new(BathShape::Ohmic, 0.1, 1.0).unwrap();
        let l = build_liouvillian(EvolutionKind::BTE, &h, &[], &sf).unwrap();
        let s = l.superoperator().unwrap();
        let eye = ComplexMatrix::identity(2);
        let mut want = eye.kron(&h).scale(-I);
        want.add_scaled(I, &h.transpose().kron(&eye));
        assert!((&s - &want).max_entry_norm() < 1e-15);
    }

    #[test]
    fn mismatched_dimension() {
        let (_, _, decs) = qubit_setup();
        let sf = SpectralFunction::new(BathShape::Ohmic, 0.1, 1.0).unwrap();
        let h4 = ComplexMatrix::identity(4);
        assert!(matches!(
            build_liouvillian(EvolutionKind::BTE, &h4, &decs, &sf),
            Err(Error::MismatchedBasis(_))
        ));
    }

    #[test]
    fn too_large_refused() {
        let h = ComplexMatrix::identity(128);
        let sf = SpectralFunction::new(BathShape::Ohmic, 0.1, 1.0).unwrap();
        let l = build_liouvillian(EvolutionKind::BTE, &h, &[], &sf).unwrap();
        assert!(matches!(l.superoperator(), Err(Error::TooLarge { .. })));
    }
}
