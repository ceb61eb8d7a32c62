//! The PT-symmetric qubit and the transverse-field Ising chain with an
//! imaginary field, plus their bath coupling operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BiorthogonalEigensystem, ComplexMatrix, C64, I, ONE, ZERO};

/// Which Pauli operator couples to the bath (per site for the chain).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coupling {
    SigmaZ,
    SigmaX,
}

/// `Qubit`: `H = h_x σ^x − i h_y σ^y`.
/// `IsingChain`: `H = J Σ σ^x_l σ^x_{l+1} + Σ (i h_y σ^y_l + h_z σ^z_l)`, open boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ModelSpec {
    Qubit {
        h_x: f64,
        h_y: f64,
        coupling: Coupling,
    },
    IsingChain {
        sites: usize,
        #[serde(rename = "J")]
        j: f64,
        h_y: f64,
        h_z: f64,
        coupling: Coupling,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PtPhase {
    Unbroken,
    Broken,
}

/// Spectral PT classification with an optional warning when the analytic
/// rule (`|h_y| < |h_x|` for the qubit, `|h_z| > |h_y|` for the chain)
/// disagrees or the point sits close to the exceptional line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtReport {
    pub phase: PtPhase,
    pub max_imag: f64,
    pub warning: Option<String>,
}

/// Relative distance to the exceptional line below which a warning is attached.
pub const EXCEPTIONAL_BAND: f64 = 0.05;

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap()
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::diag_real(&[1.0, -1.0])
}

/// `op` acting on `site` (0-based, site 0 leftmost factor) of an `sites`-qubit register.
pub fn embed(op: &ComplexMatrix, site: usize, sites: usize) -> ComplexMatrix {
    assert!(site < sites);
    let mut out = ComplexMatrix::identity(1);
    for s in 0..sites {
        out = if s == site { out.kron(op) } else { out.kron(&ComplexMatrix::identity(2)) };
    }
    out
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} must be finite, got {x}")))
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Qubit { h_x, h_y, .. } => {
                finite("h_x", h_x)?;
                finite("h_y", h_y)
            }
            ModelSpec::IsingChain { sites, j, h_y, h_z, .. } => {
                if sites < 2 {
                    return Err(Error::InvalidSpec(format!("chain needs at least 2 sites, got {sites}")));
                }
                if sites > 12 {
                    return Err(Error::InvalidSpec(format!("chain of {sites} sites exceeds the dense limit of 12")));
                }
                finite("J", j)?;
                finite("h_y", h_y)?;
                finite("h_z", h_z)
            }
        }
    }

    /// Number of sites (1 for the qubit).
    pub fn sites(&self) -> usize {
        match *self {
            ModelSpec::Qubit { .. } => 1,
            ModelSpec::IsingChain { sites, .. } => sites,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.sites()
    }

    pub fn coupling(&self) -> Coupling {
        match *self {
            ModelSpec::Qubit { coupling, .. } | ModelSpec::IsingChain { coupling, .. } => coupling,
        }
    }

    /// Same model with a different coupling choice.
    pub fn with_coupling(&self, c: Coupling) -> Self {
        let mut out = self.clone();
        match &mut out {
            ModelSpec::Qubit { coupling, .. } | ModelSpec::IsingChain { coupling, .. } => *coupling = c,
        }
        out
    }

    /// Same chain with new imaginary and longitudinal fields; the qubit maps
    /// `h_y` to its `h_y` and `h_z` to `h_x`.
    pub fn with_fields(&self, hy: f64, hz: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            ModelSpec::Qubit { h_x, h_y, .. } => {
                *h_x = hz;
                *h_y = hy;
            }
            ModelSpec::IsingChain { h_y, h_z, .. } => {
                *h_y = hy;
                *h_z = hz;
            }
        }
        out
    }

    /// Whether `h_y = 0`, where the Hamiltonian is Hermitian.
    pub fn is_hermitian_limit(&self) -> bool {
        match *self {
            ModelSpec::Qubit { h_y, .. } | ModelSpec::IsingChain { h_y, .. } => h_y == 0.0,
        }
    }
}

pub fn build_hamiltonian(spec: &ModelSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    match *spec {
        ModelSpec::Qubit { h_x, h_y, .. } => Ok(ComplexMatrix::from_real_rows(&[&[0.0, h_x - h_y], &[h_x + h_y, 0.0]])),
        ModelSpec::IsingChain { sites, j, h_y, h_z, .. } => {
            let d = 1 << sites;
            let mut h = ComplexMatrix::zeros(d, d);
            let (sx, sy, sz) = (sigma_x(), sigma_y(), sigma_z());
            for l in 0..sites - 1 {
                let bond = embed(&sx, l, sites).matmul(&embed(&sx, l + 1, sites));
                h.add_scaled(C64::new(j, 0.0), &bond);
            }
            for l in 0..sites {
                h.add_scaled(C64::new(0.0, h_y), &embed(&sy, l, sites));
                h.add_scaled(C64::new(h_z, 0.0), &embed(&sz, l, sites));
            }
            Ok(h)
        }
    }
}

pub fn coupling_operators(spec: &ModelSpec) -> Result<Vec<ComplexMatrix>> {
    spec.validate()?;
    let pauli = match spec.coupling() {
        Coupling::SigmaZ => sigma_z(),
        Coupling::SigmaX => sigma_x(),
    };
    let n = spec.sites();
    Ok((0..n).map(|l| embed(&pauli, l, n)).collect())
}

/// Per-site `σ^z` operators, used for the average polarization.
pub fn site_sigma_z(sites: usize) -> Vec<ComplexMatrix> {
    (0..sites).map(|l| embed(&sigma_z(), l, sites)).collect()
}

pub fn pt_classify(spec: &ModelSpec, eig: &BiorthogonalEigensystem) -> PtReport {
    let phase = if eig.pt_unbroken() { PtPhase::Unbroken } else { PtPhase::Broken };
    let (real_axis, imag) = match *spec {
        ModelSpec::Qubit { h_x, h_y, .. } => (h_x.abs(), h_y.abs()),
        ModelSpec::IsingChain { h_y, h_z, .. } => (h_z.abs(), h_y.abs()),
    };
    let rule = if imag < real_axis { PtPhase::Unbroken } else { PtPhase::Broken };
    let scale = real_axis.max(imag).max(f64::MIN_POSITIVE);
    let warning = if rule != phase {
        Some(format!(
            "spectrum says {phase:?} but the field rule says {rule:?} (|real field| = {real_axis}, |h_y| = {imag})"
        ))
    } else if (real_axis - imag).abs() < EXCEPTIONAL_BAND * scale {
        Some(format!(
            "within {EXCEPTIONAL_BAND} of the exceptional line (|real field| = {real_axis}, |h_y| = {imag})"
        ))
    } else {
        None
    };
    PtReport { phase, max_imag: eig.max_imag(), warning }
}

/// `|↑...↑><↑...↑|`, the first computational basis state.
pub fn all_up_projector(dim: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    m[(0, 0)] = ONE;
    m
}
