//! Browser bindings: qubit trajectories, the steady spin vector against
//! temperature, and chain sector summaries. Every call returns a JSON string.

use nhtherm::bath::{BathShape, SpectralFunction, DEFAULT_GAMMA0};
use nhtherm::diagnostics::{variance, ReferenceKind};
use nhtherm::dynamics::{evolve, EvolveOptions};
use nhtherm::experiments::{spin_vector, System};
use nhtherm::generator::{EvolutionKind, DEFAULT_FREQ_TOL};
use nhtherm::models::{all_up_projector, Coupling, ModelSpec};
use nhtherm::pauli::{build_sectors, dominance_report, Gauge};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn kind(name: &str) -> Result<EvolutionKind, String> {
    match name {
        "BTE" | "bte" => Ok(EvolutionKind::BTE),
        "RTE" | "rte" => Ok(EvolutionKind::RTE),
        other => Err(format!("unknown evolution `{other}`, expected BTE or RTE")),
    }
}

fn coupling(name: &str) -> Result<Coupling, String> {
    match name {
        "x" | "SigmaX" => Ok(Coupling::SigmaX),
        "z" | "SigmaZ" => Ok(Coupling::SigmaZ),
        other => Err(format!("unknown coupling `{other}`, expected x or z")),
    }
}

fn qubit_system(h_x: f64, h_y: f64, temperature: f64) -> Result<System, String> {
    let spec = ModelSpec::Qubit { h_x, h_y, coupling: Coupling::SigmaZ };
    let sf = SpectralFunction::from_temperature(BathShape::Ohmic, DEFAULT_GAMMA0, temperature).map_err(|e| e.to_string())?;
    System::new(&spec, sf, DEFAULT_FREQ_TOL).map_err(|e| e.to_string())
}

/// Evolution of `|↑><↑|` for `H = h_x σ^x − i h_y σ^y` with `σ^z` coupling.
pub fn qubit_trajectory_json(h_x: f64, h_y: f64, temperature: f64, evolution: &str, t_end: f64) -> Result<String, String> {
    let k = kind(evolution)?;
    let sys = qubit_system(h_x, h_y, temperature)?;
    let liou = sys.liouvillian(k).map_err(|e| e.to_string())?;
    let dt = (t_end / 400.0).max(1e-3);
    let tr = evolve(&all_up_projector(2), &liou, t_end, dt, &EvolveOptions::default()).map_err(|e| e.to_string())?;
    let mut coeffs = Vec::with_capacity(tr.times.len());
    let mut spins = Vec::with_capacity(tr.times.len());
    for rho in &tr.states {
        let norm = nhtherm::diagnostics::normalize_trace(rho).map_err(|e| e.to_string())?;
        coeffs.push([norm[(0, 0)].re, norm[(1, 1)].re, norm[(0, 1)].re, norm[(0, 1)].im]);
        let s = spin_vector(&norm).map_err(|e| e.to_string())?;
        spins.push([s[0].re, s[1].re, s[2].re]);
    }
    let fin = tr.final_normalized().map_err(|e| e.to_string())?;
    let v = |kind| -> Result<f64, String> {
        let r = sys.reference(kind).map_err(|e| e.to_string())?;
        Ok(variance(&fin, &r.matrix).map_err(|e| e.to_string())?.max_entry)
    };
    Ok(json!({
        "times": tr.times,
        "rho": coeffs,
        "spin": spins,
        "converged_at": tr.converged_at,
        "variance_bbs": v(ReferenceKind::BBS)?,
        "variance_brs": v(ReferenceKind::BRS)?,
    })
    .to_string())
}

/// Long-term `Re <σ>` of the qubit at each temperature.
pub fn qubit_spin_vs_temperature_json(h_x: f64, h_y: f64, evolution: &str, temperatures: &[f64]) -> Result<String, String> {
    let k = kind(evolution)?;
    let mut out = Vec::with_capacity(temperatures.len());
    for &t in temperatures {
        let sys = qubit_system(h_x, h_y, t)?;
        let liou = sys.liouvillian(k).map_err(|e| e.to_string())?;
        let opts = EvolveOptions { stop_when_converged: true, record_states: false, ..EvolveOptions::default() };
        let t_end = 200.0 / DEFAULT_GAMMA0;
        let tr = evolve(&all_up_projector(2), &liou, t_end, 1.0, &opts).map_err(|e| e.to_string())?;
        let s = spin_vector(&tr.final_normalized().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        out.push(json!({
            "temperature": t,
            "spin": [s[0].re, s[1].re, s[2].re],
            "norm": (s[0].re.powi(2) + s[1].re.powi(2) + s[2].re.powi(2)).sqrt(),
            "converged_at": tr.converged_at,
        }));
    }
    Ok(serde_json::Value::Array(out).to_string())
}

/// Sector summary of the BTE generator for an Ising chain.
pub fn chain_sectors_json(sites: usize, h_y: f64, h_z: f64, coupling_name: &str, temperature: f64) -> Result<String, String> {
    let spec = ModelSpec::IsingChain { sites, j: 1.0, h_y, h_z, coupling: coupling(coupling_name)? };
    if sites > 6 {
        return Err("the demo is limited to 6 sites".into());
    }
    let sf = SpectralFunction::from_temperature(BathShape::Ohmic, DEFAULT_GAMMA0, temperature).map_err(|e| e.to_string())?;
    let sys = System::new(&spec, sf, DEFAULT_FREQ_TOL).map_err(|e| e.to_string())?;
    let set = build_sectors(&sys.decomps, &sf, DEFAULT_FREQ_TOL, Gauge::Balanced).map_err(|e| e.to_string())?;
    let sectors: Vec<_> = set
        .sectors
        .iter()
        .map(|s| {
            let d = dominance_report(s);
            json!({
                "delta": s.delta,
                "M": s.len(),
                "max_re_lambda": s.max_re_lambda(),
                "min_margin": d.min_margin,
                "dominant": d.strictly_dominant,
            })
        })
        .collect();
    Ok(json!({
        "condition_residual": sys.thermalization.verdict.max_residual(),
        "condition_satisfied": sys.thermalization.verdict.is_satisfied(),
        "sectors": sectors,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn qubit_trajectory(h_x: f64, h_y: f64, temperature: f64, evolution: &str, t_end: f64) -> Result<String, JsError> {
    qubit_trajectory_json(h_x, h_y, temperature, evolution, t_end).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn qubit_spin_vs_temperature(h_x: f64, h_y: f64, evolution: &str, temperatures: Vec<f64>) -> Result<String, JsError> {
    qubit_spin_vs_temperature_json(h_x, h_y, evolution, &temperatures).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn chain_sectors(sites: usize, h_y: f64, h_z: f64, coupling: &str, temperature: f64) -> Result<String, JsError> {
    chain_sectors_json(sites, h_y, h_z, coupling, temperature).map_err(|e| JsError::new(&e))
}
