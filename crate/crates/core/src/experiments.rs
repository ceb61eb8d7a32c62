//! Experiment runners behind the `evolve`, `scan` and `sectors` commands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bath::SpectralFunction;
use crate::config::{InitialState, OutputFormat, SimulationConfig};
use crate::diagnostics::{entropies, reference_entropies, reference_state, variance, ReferenceKind, ReferenceState, Variance};
use crate::dynamics::{avg_polarization_z, evolve, expectation, EvolveOptions, Trajectory};
use crate::dynamics::csv_err;
use crate::error::{Error, Result};
use crate::generator::{
    build_liouvillian, check_thermalization, decompose, EvolutionKind, JumpDecomposition, Liouvillian,
    ThermalizationReport, ThermalizationVerdict, DENSE_LIMIT,
};
use crate::linalg::{biorthogonalize, parse_matrix_text, BiorthogonalEigensystem, ComplexMatrix, C64};
use crate::models::{
    build_hamiltonian, coupling_operators, pt_classify, sigma_x, sigma_y, sigma_z, ModelSpec, PtPhase, PtReport,
};
use crate::pauli::{
    build_sectors, column_sum_residual, detailed_balance_residual, dominance_report, steady_weights, Gauge,
    SectorRecord,
};

/// Relative tolerance for eigenvalue degeneracy and a real spectrum.
pub const SPECTRAL_TOL: f64 = 1e-9;

/// Gauge residual below which the thermalization condition counts as met.
pub const THERMALIZATION_TOL: f64 = 1e-8;

/// Distance to the exceptional line, in units of `J` (or `h_x`), excluded from scans.
pub const GUARD_BAND: f64 = 0.05;

/// A model point with its eigensystem and coupling decompositions.
#[derive(Debug, Clone)]
pub struct System {
    pub spec: ModelSpec,
    pub hamiltonian: ComplexMatrix,
    pub eig: BiorthogonalEigensystem,
    pub decomps: Vec<JumpDecomposition>,
    pub sf: SpectralFunction,
    pub pt: PtReport,
    pub thermalization: ThermalizationReport,
}

impl System {
    pub fn new(spec: &ModelSpec, sf: SpectralFunction, freq_tol: f64) -> Result<Self> {
        spec.validate()?;
        let hamiltonian = build_hamiltonian(spec)?;
        let eig = biorthogonalize(&hamiltonian, SPECTRAL_TOL)?;
        let pt = pt_classify(spec, &eig);
        if pt.phase == PtPhase::Broken {
            return Err(Error::PtBroken { max_imag: pt.max_imag });
        }
        let decomps = coupling_operators(spec)?
            .iter()
            .map(|a| decompose(&eig, a, freq_tol))
            .collect::<Result<Vec<_>>>()?;
        let thermalization = check_thermalization(&decomps, THERMALIZATION_TOL)?;
        Ok(System { spec: spec.clone(), hamiltonian, eig, decomps, sf, pt, thermalization })
    }

    /// The generator, with its eigenbasis form when small enough.
    pub fn liouvillian(&self, kind: EvolutionKind) -> Result<Liouvillian> {
        let mut l = build_liouvillian(kind, &self.hamiltonian, &self.decomps, &self.sf)?;
        let d = self.eig.dim();
        if d * d <= DENSE_LIMIT {
            l.materialize()?;
        }
        Ok(l)
    }

    pub fn reference(&self, kind: ReferenceKind) -> Result<ReferenceState> {
        reference_state(kind, &self.eig, self.sf.beta())
    }

    /// BRS built from right eigenvectors rescaled by the thermalization gauge.
    pub fn balanced_brs(&self) -> Result<ReferenceState> {
        let s: Vec<C64> = self.thermalization.gauge.iter().map(|&r| C64::new(r, 0.0)).collect();
        reference_state(ReferenceKind::BRS, &self.eig.rescaled(&s)?, self.sf.beta())
    }

    pub fn initial_state(&self, init: &InitialState, kind: EvolutionKind) -> Result<ComplexMatrix> {
        let d = self.eig.dim();
        let eig = &self.eig;
        let rho = match init {
            InitialState::FullyPolarizedUp => crate::models::all_up_projector(d),
            InitialState::InfiniteTemperature => {
                let mut rho = ComplexMatrix::zeros(d, d);
                for m in 0..d {
                    let p = match kind {
                        EvolutionKind::BTE => eig.projector(m, m),
                        EvolutionKind::RTE => eig.right_projector(m),
                    };
                    rho.add_scaled(C64::new(1.0, 0.0), &p);
                }
                crate::diagnostics::normalize_trace(&rho)?
            }
            InitialState::GroundProjectorBiorthogonal => match kind {
                EvolutionKind::BTE => eig.projector(0, 0),
                EvolutionKind::RTE => eig.right_projector(0),
            },
            InitialState::FileMatrix(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
                    key: "initial_state.FileMatrix".into(),
                    message: format!("cannot read {}: {e}", path.display()),
                })?;
                let m = parse_matrix_text(&text).map_err(|e| Error::Config {
                    key: "initial_state.FileMatrix".into(),
                    message: e.to_string(),
                })?;
                if m.rows() != d || m.cols() != d {
                    return Err(Error::Config {
                        key: "initial_state.FileMatrix".into(),
                        message: format!("matrix is {}x{}, model dimension is {d}", m.rows(), m.cols()),
                    });
                }
                m
            }
        };
        Ok(rho)
    }

    /// `c = L†ρR` (BTE, `ρ = Σ c |m_R><n_L|`) or `c = L†ρL` (RTE, `ρ = Σ c |m_R><n_R|`).
    pub fn eigen_coefficients(&self, kind: EvolutionKind, rho: &ComplexMatrix) -> ComplexMatrix {
        let la = self.eig.left_adjoint();
        match kind {
            EvolutionKind::BTE => la.matmul(rho).matmul(self.eig.right_vectors()),
            EvolutionKind::RTE => la.matmul(rho).matmul(self.eig.left_vectors()),
        }
    }
}

fn spin_observables(spec: &ModelSpec) -> Vec<(String, ComplexMatrix)> {
    match spec {
        ModelSpec::Qubit { .. } => vec![
            ("sigma_x".into(), sigma_x()),
            ("sigma_y".into(), sigma_y()),
            ("sigma_z".into(), sigma_z()),
        ],
        ModelSpec::IsingChain { .. } => Vec::new(),
    }
}

fn evolve_options(cfg: &SimulationConfig, record_states: bool) -> EvolveOptions {
    EvolveOptions {
        steady_tol: cfg.run.steady_tol,
        stop_when_converged: true,
        record_states,
        observables: spin_observables(&cfg.model),
        ..EvolveOptions::default()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceSummary {
    pub induced: f64,
    pub max_entry: f64,
}

impl From<Variance> for VarianceSummary {
    fn from(v: Variance) -> Self {
        VarianceSummary { induced: v.induced, max_entry: v.max_entry }
    }
}

pub struct EvolveOutcome {
    pub system: System,
    pub kind: EvolutionKind,
    pub trajectory: Trajectory,
    pub summary: Value,
}

impl EvolveOutcome {
    pub fn converged(&self) -> bool {
        self.trajectory.converged_at.is_some()
    }
}

fn verdict_json(r: &ThermalizationReport) -> Value {
    json!({
        "verdict": r.verdict,
        "residuals": r.residuals,
        "residuals_self_normalized": r.residuals_self_normalized,
    })
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    Value::Array((0..m.rows()).map(|i| Value::Array(m.row(i).iter().map(|&z| complex_json(z)).collect())).collect())
}

/// Runs one trajectory as configured.
pub fn run_evolve(cfg: &SimulationConfig) -> Result<EvolveOutcome> {
    let sf = cfg.spectral_function()?;
    let system = System::new(&cfg.model, sf, cfg.run.freq_tol)?;
    let kind = cfg.evolution;
    let liou = system.liouvillian(kind)?;
    let rho0 = system.initial_state(&cfg.initial_state, kind)?;
    let t_end = cfg.t_end();
    let trajectory = evolve(&rho0, &liou, t_end, cfg.run.sample_dt, &evolve_options(cfg, true))?;

    let fin = trajectory.final_normalized()?;
    let bbs = system.reference(ReferenceKind::BBS)?;
    let brs = system.reference(ReferenceKind::BRS)?;
    let brs_bal = system.balanced_brs()?;
    let status = if trajectory.converged_at.is_some() { "Thermalized" } else { "NotThermalized" };
    let coeffs = system.eigen_coefficients(kind, &fin);
    let summary = json!({
        "model": cfg.model,
        "evolution": kind,
        "status": status,
        "converged_at": trajectory.converged_at,
        "t_end": trajectory.times.last(),
        "t_end_cap": t_end,
        "samples": trajectory.times.len(),
        "final_trace": complex_json(*trajectory.trace_log.last().expect("at least one sample")),
        "final_eigen_coefficients": matrix_json(&coeffs),
        "variance_bbs": VarianceSummary::from(variance(&fin, &bbs.matrix)?),
        "variance_brs": VarianceSummary::from(variance(&fin, &brs.matrix)?),
        "variance_brs_balanced": VarianceSummary::from(variance(&fin, &brs_bal.matrix)?),
        "boltzmann_weights": bbs.weights,
        "thermalization": verdict_json(&system.thermalization),
        "pt": system.pt,
        "integrator": trajectory.stats,
    });
    Ok(EvolveOutcome { system, kind, trajectory, summary })
}

/// Header and rows of the trajectory CSV.
pub fn trajectory_table(out: &EvolveOutcome) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let sys = &out.system;
    let tr = &out.trajectory;
    let d = sys.eig.dim();
    let qubit = matches!(sys.spec, ModelSpec::Qubit { .. });
    let mut header = vec!["time".to_string(), "trace_re".into(), "trace_im".into()];
    for (name, _) in &tr.observables {
        header.push(format!("{name}_re"));
        header.push(format!("{name}_im"));
    }
    if !qubit {
        header.extend(["sigma_z_avg_re".into(), "sigma_z_avg_im".into()]);
    }
    let coeff_pairs: Vec<(usize, usize)> =
        if qubit { vec![(0, 0), (0, 1), (1, 0), (1, 1)] } else { (0..d).map(|m| (m, m)).collect() };
    if qubit {
        for (a, b) in [("up", "up"), ("up", "down"), ("down", "up"), ("down", "down")] {
            header.push(format!("rho_{a}_{b}_re"));
            header.push(format!("rho_{a}_{b}_im"));
        }
    }
    for (m, n) in &coeff_pairs {
        header.push(format!("c_{m}_{n}_re"));
        header.push(format!("c_{m}_{n}_im"));
    }
    let f = |x: f64| format!("{x:.12e}");
    let mut rows = Vec::with_capacity(tr.times.len());
    for (k, &t) in tr.times.iter().enumerate() {
        let rho = &tr.states[k];
        let mut row = vec![f(t), f(tr.trace_log[k].re), f(tr.trace_log[k].im)];
        for (_, series) in &tr.observables {
            row.push(f(series[k].re));
            row.push(f(series[k].im));
        }
        if !qubit {
            let z = avg_polarization_z(rho, sys.spec.sites())?;
            row.push(f(z.re));
            row.push(f(z.im));
        }
        let norm = crate::diagnostics::normalize_trace(rho)?;
        if qubit {
            for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                row.push(f(norm[(i, j)].re));
                row.push(f(norm[(i, j)].im));
            }
        }
        let c = sys.eigen_coefficients(out.kind, &norm);
        for &(m, n) in &coeff_pairs {
            row.push(f(c[(m, n)].re));
            row.push(f(c[(m, n)].im));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn write_csv(path: &PathBuf, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &PathBuf, v: &Value) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?.as_bytes())?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// Writes `trajectory.csv` and `summary.json` as requested; returns the paths.
pub fn write_evolve(cfg: &SimulationConfig, out: &EvolveOutcome) -> Result<Vec<PathBuf>> {
    let dir = cfg.prepare_output()?;
    let mut written = Vec::new();
    if cfg.output.wants(OutputFormat::Csv) {
        let (header, rows) = trajectory_table(out)?;
        let p = dir.join("trajectory.csv");
        write_csv(&p, &header, &rows)?;
        written.push(p);
    }
    if cfg.output.wants(OutputFormat::Json) {
        let p = dir.join("summary.json");
        write_json(&p, &out.summary)?;
        written.push(p);
    }
    Ok(written)
}

/// `a:b:n`, `n` evenly spaced points from `a` to `b` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl GridRange {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Parse(format!("expected a:b:n, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let end: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if steps == 0 || !start.is_finite() || !end.is_finite() {
            return Err(bad());
        }
        Ok(GridRange { start, end, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.end - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.end } else { self.start + h * i as f64 }).collect()
    }
}

/// One grid point of a scan. Missing values mean the point was skipped or failed.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ScanRow {
    pub h_y: f64,
    pub h_z: f64,
    pub v_lr: Option<f64>,
    pub v_rr: Option<f64>,
    pub s_von_lr: Option<f64>,
    pub s_von_rr: Option<f64>,
    pub s_gib: Option<f64>,
    pub delta_s_lr: Option<f64>,
    pub delta_s_rr: Option<f64>,
    pub pt_flag: String,
    /// Entrywise maxima of the same differences.
    pub v_lr_max_entry: Option<f64>,
    pub v_rr_max_entry: Option<f64>,
    /// Long-term RTE state against BRS built in the thermalization gauge.
    pub v_rr_balanced: Option<f64>,
    /// `δS` of `ρ̄^lr` with the entropy from a numerical spectrum.
    pub delta_s_lr_numeric: Option<f64>,
    pub converged_lr: Option<f64>,
    pub converged_rr: Option<f64>,
    pub therm_residual: Option<f64>,
    pub errors: String,
}

pub const SCAN_HEADER: [&str; 20] = [
    "h_y",
    "h_z",
    "V_lr",
    "V_rr",
    "S_von_lr",
    "S_von_rr",
    "S_gib",
    "delta_S_lr",
    "delta_S_rr",
    "pt_flag",
    "V_lr_max_entry",
    "V_rr_max_entry",
    "V_rr_balanced",
    "delta_S_lr_numeric",
    "converged_lr",
    "converged_rr",
    "therm_residual",
    "errors",
    "t_end",
    "sample_dt",
];

impl ScanRow {
    fn record(&self, t_end: f64, sample_dt: f64) -> Vec<String> {
        let f = |x: f64| format!("{x:.12e}");
        let o = |x: Option<f64>| x.map(f).unwrap_or_default();
        vec![
            f(self.h_y),
            f(self.h_z),
            o(self.v_lr),
            o(self.v_rr),
            o(self.s_von_lr),
            o(self.s_von_rr),
            o(self.s_gib),
            o(self.delta_s_lr),
            o(self.delta_s_rr),
            self.pt_flag.clone(),
            o(self.v_lr_max_entry),
            o(self.v_rr_max_entry),
            o(self.v_rr_balanced),
            o(self.delta_s_lr_numeric),
            o(self.converged_lr),
            o(self.converged_rr),
            o(self.therm_residual),
            self.errors.clone(),
            f(t_end),
            f(sample_dt),
        ]
    }
}

/// Fields `(real, imaginary)` that decide the PT phase of a model.
fn field_split(spec: &ModelSpec) -> (f64, f64, f64) {
    match *spec {
        ModelSpec::Qubit { h_x, h_y, .. } => (h_x.abs(), h_y.abs(), 1.0),
        ModelSpec::IsingChain { j, h_y, h_z, .. } => (h_z.abs(), h_y.abs(), j.abs()),
    }
}

fn scan_point(cfg: &SimulationConfig, sf: SpectralFunction, hy: f64, hz: f64, include_exceptional: bool) -> ScanRow {
    let spec = cfg.model.with_fields(hy, hz);
    let mut row = ScanRow { h_y: hy, h_z: hz, ..Default::default() };
    let (re, im, unit) = field_split(&spec);
    if re - im < GUARD_BAND * unit && !include_exceptional {
        row.pt_flag = if im >= re { "broken".into() } else { "exceptional".into() };
        row.errors = "skipped: outside the unbroken wedge or inside the guard band".into();
        return row;
    }
    row.pt_flag = if im >= re {
        "broken".into()
    } else if re - im < GUARD_BAND * unit {
        "exceptional".into()
    } else {
        "unbroken".into()
    };
    let mut errors: Vec<String> = Vec::new();
    let system = match System::new(&spec, sf, cfg.run.freq_tol) {
        Ok(s) => s,
        Err(e) => {
            if matches!(e, Error::PtBroken { .. }) {
                row.pt_flag = "broken".into();
            }
            row.errors = e.to_string();
            return row;
        }
    };
    row.therm_residual = Some(system.thermalization.verdict.max_residual());
    let opts = EvolveOptions { observables: Vec::new(), ..evolve_options(cfg, false) };
    let t_end = cfg.t_end();

    let run_kind = |kind: EvolutionKind| -> Result<(ComplexMatrix, Option<f64>)> {
        let liou = system.liouvillian(kind)?;
        let rho0 = system.initial_state(&cfg.initial_state, kind)?;
        let tr = evolve(&rho0, &liou, t_end, cfg.run.sample_dt, &opts)?;
        Ok((tr.final_normalized()?, tr.converged_at))
    };

    match system.reference(ReferenceKind::BBS) {
        Ok(bbs) => {
            if let Ok(s) = reference_entropies(&bbs) {
                row.s_von_lr = Some(s.s_von);
                row.s_gib = Some(s.s_gib);
                row.delta_s_lr = Some(s.delta_s);
            }
            match entropies(&bbs.matrix, &bbs.weights) {
                Ok(s) => row.delta_s_lr_numeric = Some(s.delta_s),
                Err(e) => errors.push(format!("BBS spectrum: {e}")),
            }
            match run_kind(EvolutionKind::BTE) {
                Ok((rho, conv)) => {
                    if let Ok(v) = variance(&rho, &bbs.matrix) {
                        row.v_lr = Some(v.induced);
                        row.v_lr_max_entry = Some(v.max_entry);
                    }
                    row.converged_lr = conv;
                    if conv.is_none() {
                        errors.push("BTE did not converge".into());
                    }
                }
                Err(e) => errors.push(format!("BTE: {e}")),
            }
        }
        Err(e) => errors.push(format!("BBS: {e}")),
    }
    match system.reference(ReferenceKind::BRS) {
        Ok(brs) => {
            match reference_entropies(&brs) {
                Ok(s) => {
                    row.s_von_rr = Some(s.s_von);
                    row.delta_s_rr = Some(s.delta_s);
                }
                Err(e) => errors.push(format!("BRS entropy: {e}")),
            }
            match run_kind(EvolutionKind::RTE) {
                Ok((rho, conv)) => {
                    if let Ok(v) = variance(&rho, &brs.matrix) {
                        row.v_rr = Some(v.induced);
                        row.v_rr_max_entry = Some(v.max_entry);
                    }
                    if let Ok(v) = system.balanced_brs().and_then(|b| variance(&rho, &b.matrix)) {
                        row.v_rr_balanced = Some(v.induced);
                    }
                    row.converged_rr = conv;
                    if conv.is_none() {
                        errors.push("RTE did not converge".into());
                    }
                }
                Err(e) => errors.push(format!("RTE: {e}")),
            }
        }
        Err(e) => errors.push(format!("BRS: {e}")),
    }
    row.errors = errors.join("; ");
    row
}

pub struct ScanOutcome {
    pub rows: Vec<ScanRow>,
    pub t_end: f64,
    pub sample_dt: f64,
}

impl ScanOutcome {
    pub fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = SCAN_HEADER.iter().map(|s| s.to_string()).collect();
        let rows = self.rows.iter().map(|r| r.record(self.t_end, self.sample_dt)).collect();
        (header, rows)
    }
}

/// Long-term BTE and RTE states over an `(h_y, h_z)` grid; rows are ordered
/// by `h_y`, then `h_z`. For the qubit `h_z` stands for `h_x`.
pub fn run_scan(cfg: &SimulationConfig, hy: GridRange, hz: GridRange, include_exceptional: bool) -> Result<ScanOutcome> {
    let sf = cfg.spectral_function()?;
    let points: Vec<(f64, f64)> =
        hy.points().into_iter().flat_map(|y| hz.points().into_iter().map(move |z| (y, z))).collect();
    let rows = points.par_iter().map(|&(y, z)| scan_point(cfg, sf, y, z, include_exceptional)).collect();
    Ok(ScanOutcome { rows, t_end: cfg.t_end(), sample_dt: cfg.run.sample_dt })
}

pub fn write_scan(cfg: &SimulationConfig, out: &ScanOutcome) -> Result<Vec<PathBuf>> {
    let dir = cfg.prepare_output()?;
    let mut written = Vec::new();
    if cfg.output.wants(OutputFormat::Csv) {
        let (header, rows) = out.table();
        let p = dir.join("scan.csv");
        write_csv(&p, &header, &rows)?;
        written.push(p);
    }
    if cfg.output.wants(OutputFormat::Json) {
        let p = dir.join("scan.json");
        let v = serde_json::to_value(&out.rows).map_err(|e| Error::Io(e.to_string()))?;
        write_json(&p, &v)?;
        written.push(p);
    }
    Ok(written)
}

/// Sector report of the BTE generator in the thermalization gauge.
pub fn run_sectors(cfg: &SimulationConfig) -> Result<Value> {
    let sf = cfg.spectral_function()?;
    let system = System::new(&cfg.model, sf, cfg.run.freq_tol)?;
    let set = build_sectors(&system.decomps, &sf, cfg.run.freq_tol, Gauge::Balanced)?;
    let mut records = Vec::with_capacity(set.sectors.len());
    for s in &set.sectors {
        let mut v = serde_json::to_value(SectorRecord::from(s)).map_err(|e| Error::Io(e.to_string()))?;
        let dom = dominance_report(s);
        let extra = json!({
            "pairs": s.pairs,
            "L": matrix_json(&s.lmat),
            "margin_bounds": s.margin_bounds,
            "min_margin": dom.min_margin,
            "max_re_lambda": s.max_re_lambda(),
        });
        if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
            a.extend(b);
        }
        records.push(v);
    }
    let zero = set.zero_sector().ok_or_else(|| Error::InvalidSpec("no Δ = 0 sector".into()))?;
    let steady = match steady_weights(zero, sf.beta(), &set.energies) {
        Ok(w) => json!({
            "weights": w.weights,
            "residual": w.residual,
            "boltzmann_deviation": w.boltzmann_deviation,
            "detailed_balance_residual": detailed_balance_residual(zero, &w.weights),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let off: Vec<_> = set.sectors.iter().filter(|s| !s.is_diagonal()).collect();
    let satisfied = matches!(system.thermalization.verdict, ThermalizationVerdict::Satisfied { .. });
    Ok(json!({
        "model": cfg.model,
        "energies": set.energies,
        "gauge": set.gauge,
        "thermalization": verdict_json(&system.thermalization),
        "condition_satisfied": satisfied,
        "sectors": records,
        "zero_sector": {
            "column_sum_residual": column_sum_residual(zero),
            "max_re_lambda": zero.max_re_lambda(),
            "steady": steady,
        },
        "off_diagonal": {
            "count": off.len(),
            "all_dominant": off.iter().all(|s| dominance_report(s).strictly_dominant),
            "all_re_negative": off.iter().all(|s| dominance_report(s).all_re_negative),
            "max_re_lambda": off.iter().map(|s| s.max_re_lambda()).fold(f64::NEG_INFINITY, f64::max),
        },
    }))
}

pub fn write_sectors(cfg: &SimulationConfig, report: &Value) -> Result<PathBuf> {
    let dir = cfg.prepare_output()?;
    let p = dir.join("sectors.json");
    write_json(&p, report)?;
    Ok(p)
}

/// `<σ>` of the trace-normalized state, for the qubit.
pub fn spin_vector(rho: &ComplexMatrix) -> Result<[C64; 3]> {
    Ok([expectation(rho, &sigma_x())?, expectation(rho, &sigma_y())?, expectation(rho, &sigma_z())?])
}
