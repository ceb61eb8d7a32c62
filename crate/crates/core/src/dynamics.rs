//! Time integration of `dρ/dt = 𝓛[ρ]` with observable recording and
//! steady-state detection.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{EvolutionKind, Liouvillian};
use crate::linalg::{ComplexMatrix, Csr, C64};
use crate::models::site_sigma_z;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// Adaptive Dormand–Prince 5(4).
    DormandPrince,
    /// Classical fixed-step RK4, for reference and order checks.
    Rk4 { step: f64 },
}

/// Coordinates the state is integrated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Representation {
    /// Eigenbasis coefficients when the Liouvillian has a materialized
    /// eigenbasis form, otherwise the computational basis.
    #[default]
    Auto,
    /// Always the computational basis.
    Computational,
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub method: Method,
    pub representation: Representation,
    pub atol: f64,
    pub rtol: f64,
    /// Convergence threshold on `‖ρ(t) − ρ(t − dt)‖_max / dt` of trace-normalized
    /// samples, and on the trace log-growth rate.
    pub steady_tol: f64,
    /// Consecutive samples that must meet `steady_tol`.
    pub hold: usize,
    /// Stop integrating once converged.
    pub stop_when_converged: bool,
    pub record_states: bool,
    pub observables: Vec<(String, ComplexMatrix)>,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            method: Method::DormandPrince,
            representation: Representation::Auto,
            atol: 1e-10,
            rtol: 1e-8,
            steady_tol: 1e-10,
            hold: 3,
            stop_when_converged: false,
            record_states: true,
            observables: Vec::new(),
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: EvolutionKind,
    pub times: Vec<f64>,
    /// Recorded states: as integrated for BTE, trace-normalized for RTE.
    pub states: Vec<ComplexMatrix>,
    /// Trace of the unnormalized solution at each sample.
    pub trace_log: Vec<C64>,
    pub observables: Vec<(String, Vec<C64>)>,
    pub converged_at: Option<f64>,
    pub stats: IntegratorStats,
    /// Final state, always kept (trace-normalized for RTE).
    pub final_state: ComplexMatrix,
}

impl Trajectory {
    /// Trace-normalized final state.
    pub fn final_normalized(&self) -> Result<ComplexMatrix> {
        crate::diagnostics::normalize_trace(&self.final_state)
    }

    /// Writes `time`, `<name>_re`, `<name>_im` per observable, `trace_re`, `trace_im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string()];
        for (name, _) in &self.observables {
            header.push(format!("{name}_re"));
            header.push(format!("{name}_im"));
        }
        header.push("trace_re".into());
        header.push("trace_im".into());
        w.write_record(&header).map_err(csv_err)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.12e}")];
            for (_, series) in &self.observables {
                row.push(format!("{:.12e}", series[k].re));
                row.push(format!("{:.12e}", series[k].im));
            }
            row.push(format!("{:.12e}", self.trace_log[k].re));
            row.push(format!("{:.12e}", self.trace_log[k].im));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `tr(ρO) / tr(ρ)`.
pub fn expectation(rho: &ComplexMatrix, o: &ComplexMatrix) -> Result<C64> {
    if rho.rows() != o.rows() || rho.cols() != o.cols() || !rho.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, observable is {}x{}",
            rho.rows(),
            rho.cols(),
            o.rows(),
            o.cols()
        )));
    }
    let t = rho.trace();
    if t.norm() < 1e-300 {
        return Err(Error::ZeroTrace);
    }
    let d = rho.rows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..d {
        let r = rho.row(i);
        for k in 0..d {
            s += r[k] * o[(k, i)];
        }
    }
    Ok(s / t)
}

/// `Σ_l <σ^z_l> / L`.
pub fn avg_polarization_z(rho: &ComplexMatrix, sites: usize) -> Result<C64> {
    if sites == 0 || sites > 30 || rho.rows() != 1 << sites {
        return Err(Error::DimensionMismatch(format!("dimension {} is not 2^{sites}", rho.rows())));
    }
    let mut s = C64::new(0.0, 0.0);
    for z in site_sigma_z(sites) {
        s += expectation(rho, &z)?;
    }
    Ok(s / sites as f64)
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Right-hand side `dy/dt = f(t, y)` in the chosen coordinates.
#[derive(Clone, Copy)]
enum Rhs<'a> {
    /// Interaction-picture eigenbasis coefficients.
    Interaction { slow: &'a Csr, theta: &'a [f64] },
    /// Column-stacked `ρ`.
    Computational(&'a Liouvillian),
}

impl Rhs<'_> {
    fn eval(&self, t: f64, v: &[C64], out: &mut [C64]) {
        match self {
            Rhs::Interaction { slow, theta } => slow.phased_matvec_into(theta, t, v, out),
            Rhs::Computational(l) => l.apply_vec(v, out),
        }
    }
}

struct Integrator<'a> {
    rhs: Rhs<'a>,
    n: usize,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    ynew: Vec<C64>,
    stats: IntegratorStats,
}

fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

impl<'a> Integrator<'a> {
    fn new(rhs: Rhs<'a>, n: usize) -> Self {
        let z = || vec![C64::new(0.0, 0.0); n];
        Integrator {
            rhs,
            n,
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            ynew: z(),
            stats: IntegratorStats::default(),
        }
    }

    /// `k[idx] = f(t, y)`.
    fn eval(&mut self, idx: usize, t: f64, y: &[C64]) {
        let mut out = std::mem::take(&mut self.k[idx]);
        self.rhs.eval(t, y, &mut out);
        self.k[idx] = out;
        self.stats.rhs_evals += 1;
    }

    /// `k[idx] = f(t, y + h Σ c_j k[j])`.
    fn stage(&mut self, idx: usize, t: f64, y: &[C64], h: f64, coeffs: &[(f64, usize)]) {
        let mut tmp = std::mem::take(&mut self.tmp);
        {
            let terms: Vec<(f64, &[C64])> = coeffs.iter().map(|&(c, j)| (c, &self.k[j][..])).collect();
            axpy_into(&mut tmp, y, h, &terms);
        }
        self.eval(idx, t, &tmp);
        self.tmp = tmp;
    }

    /// One DP5 trial step from `(t, y)` with `k[0] = f(t, y)`; the candidate
    /// lands in `ynew`, `f` there in `k[6]`. Returns the scaled error norm.
    fn dp_step(&mut self, t: f64, y: &[C64], h: f64, atol: f64, rtol: f64) -> f64 {
        self.stage(1, t + C2 * h, y, h, &[(A21, 0)]);
        self.stage(2, t + C3 * h, y, h, &[(A31, 0), (A32, 1)]);
        self.stage(3, t + C4 * h, y, h, &[(A41, 0), (A42, 1), (A43, 2)]);
        self.stage(4, t + C5 * h, y, h, &[(A51, 0), (A52, 1), (A53, 2), (A54, 3)]);
        self.stage(5, t + h, y, h, &[(A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4)]);
        let mut ynew = std::mem::take(&mut self.ynew);
        {
            let k = &self.k;
            let terms = [(B1, &k[0][..]), (B3, &k[2][..]), (B4, &k[3][..]), (B5, &k[4][..]), (B6, &k[5][..])];
            axpy_into(&mut ynew, y, h, &terms);
        }
        self.eval(6, t + h, &ynew);
        self.ynew = ynew;

        let k = &self.k;
        let mut sum = 0.0;
        for i in 0..self.n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
            let sr = atol + rtol * y[i].re.abs().max(self.ynew[i].re.abs());
            let si = atol + rtol * y[i].im.abs().max(self.ynew[i].im.abs());
            sum += (e.re / sr).powi(2) + (e.im / si).powi(2);
        }
        (sum / (2 * self.n) as f64).sqrt()
    }

    fn rk4_step(&mut self, t: f64, y: &mut [C64], h: f64) {
        self.eval(0, t, y);
        self.stage(1, t + 0.5 * h, y, h, &[(0.5, 0)]);
        self.stage(2, t + 0.5 * h, y, h, &[(0.5, 1)]);
        self.stage(3, t + h, y, h, &[(1.0, 2)]);
        let k = &self.k;
        for i in 0..self.n {
            y[i] += (k[0][i] + k[1][i] * 2.0 + k[2][i] * 2.0 + k[3][i]) * (h / 6.0);
        }
        self.stats.accepted += 1;
    }

    /// Hairer's starting step heuristic; expects `k[0] = f(0, y)`.
    fn initial_step(&mut self, y: &[C64], atol: f64, rtol: f64, span: f64) -> f64 {
        let norm = |v: &[C64], y: &[C64]| {
            let mut s = 0.0;
            for i in 0..v.len() {
                let sr = atol + rtol * y[i].re.abs();
                let si = atol + rtol * y[i].im.abs();
                s += (v[i].re / sr).powi(2) + (v[i].im / si).powi(2);
            }
            (s / (2 * v.len()) as f64).sqrt()
        };
        let d0 = norm(y, y);
        let d1 = norm(&self.k[0], y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        self.stage(1, h0, y, h0, &[(1.0, 0)]);
        let diff: Vec<C64> = self.k[1].iter().zip(&self.k[0]).map(|(a, b)| (a - b) / h0).collect();
        let d2 = norm(&diff, y);
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }
}

fn is_finite(v: &[C64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Integrates from `ρ0` up to `t_end`, sampling every `sample_dt`.
///
/// After [`Liouvillian::materialize`] the state is integrated as
/// interaction-picture eigenbasis coefficients `c̃_mn = e^{i(e_m − e_n)t} c_mn`.
/// Both generators conserve `e_m − e_n` within a jump channel, so this removes
/// the fast Hamiltonian rotation exactly and leaves only phases of mismatched
/// spacings, kept as time-dependent factors. Otherwise, or with
/// `Representation::Computational`, `vec ρ` is integrated directly.
///
/// RTE states are renormalized to unit trace at every sample point; the
/// equation is linear, so this only rescales the solution. The unnormalized
/// trace is tracked in `trace_log`.
pub fn evolve(
    rho0: &ComplexMatrix,
    liou: &Liouvillian,
    t_end: f64,
    sample_dt: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let d = liou.dim();
    if rho0.rows() != d || rho0.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "initial state is {}x{}, generator acts on dimension {d}",
            rho0.rows(),
            rho0.cols()
        )));
    }
    if !(t_end > 0.0) || !(sample_dt > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidSpec(format!("need t_end > 0 and sample_dt > 0, got {t_end}, {sample_dt}")));
    }
    if rho0.trace().norm() < 1e-300 {
        return Err(Error::ZeroTrace);
    }
    for (name, o) in &opts.observables {
        if o.rows() != d || o.cols() != d {
            return Err(Error::DimensionMismatch(format!("observable {name} has the wrong dimension")));
        }
    }

    let kind = liou.kind();
    let renormalize = kind == EvolutionKind::RTE;
    let frame = match opts.representation {
        Representation::Auto => liou.frame(),
        Representation::Computational => None,
    };
    let rhs = match frame {
        Some(f) => {
            let (slow, theta) = f.interaction();
            Rhs::Interaction { slow, theta }
        }
        None => Rhs::Computational(liou),
    };
    let n = d * d;
    let to_state = |t: f64, y: &[C64]| match frame {
        Some(f) => {
            let c: Vec<C64> = y.iter().zip(f.rotation()).map(|(z, w)| z * C64::from_polar(1.0, -w * t)).collect();
            f.from_frame(&c)
        }
        None => ComplexMatrix::unvectorize(y, d, d),
    };
    let mut y = match frame {
        Some(f) => f.to_frame(rho0),
        None => rho0.vectorize(),
    };
    let mut log_scale = C64::new(0.0, 0.0);

    let mut traj = Trajectory {
        kind,
        times: Vec::new(),
        states: Vec::new(),
        trace_log: Vec::new(),
        observables: opts.observables.iter().map(|(n, _)| (n.clone(), Vec::new())).collect(),
        converged_at: None,
        stats: IntegratorStats::default(),
        final_state: rho0.clone(),
    };

    let mut prev_normalized: Option<(ComplexMatrix, f64)> = None;
    let mut streak = 0usize;
    // Records a sample; returns (converged, factor the state was divided by).
    let mut record = |t: f64, y: &mut Vec<C64>, log_scale: &mut C64, traj: &mut Trajectory| -> Result<(bool, C64)> {
        if !is_finite(y) {
            return Err(Error::NonFiniteState { time: t });
        }
        let state = to_state(t, y);
        let tr = state.trace();
        let (true_trace, normalized, divided) = if renormalize {
            if tr.norm() < 1e-300 {
                return Err(Error::ZeroTrace);
            }
            *log_scale += tr.ln();
            y.iter_mut().for_each(|z| *z /= tr);
            (log_scale.exp(), state.scale(tr.inv()), tr)
        } else {
            let n = if tr.norm() < 1e-300 { state.clone() } else { state.scale(tr.inv()) };
            (tr, n, C64::new(1.0, 0.0))
        };
        let recorded = if renormalize { normalized.clone() } else { state };
        traj.times.push(t);
        traj.trace_log.push(true_trace);
        for (k, (_, o)) in opts.observables.iter().enumerate() {
            traj.observables[k].1.push(expectation(&recorded, o)?);
        }
        let log_abs = if renormalize { log_scale.re } else { tr.norm().ln() };
        if let Some((prev, prev_log)) = &prev_normalized {
            let dt = t - traj.times[traj.times.len() - 2];
            let change = (&normalized - prev).max_entry_norm() / dt;
            let growth = (log_abs - prev_log).abs() / dt;
            if change < opts.steady_tol && growth < opts.steady_tol {
                streak += 1;
            } else {
                streak = 0;
                traj.converged_at = None;
            }
            if streak >= opts.hold.max(1) && traj.converged_at.is_none() {
                traj.converged_at = Some(t);
            }
        }
        if opts.record_states {
            traj.states.push(recorded.clone());
        }
        traj.final_state = recorded;
        prev_normalized = Some((normalized, log_abs));
        Ok((traj.converged_at.is_some(), divided))
    };

    record(0.0, &mut y, &mut log_scale, &mut traj)?;

    let mut integ = Integrator::new(rhs, n);
    let n_samples = (t_end / sample_dt - 1e-9).ceil().max(1.0) as usize;
    let mut t = 0.0f64;
    let mut steps = 0usize;

    match opts.method {
        Method::Rk4 { step } => {
            if !(step > 0.0) {
                return Err(Error::InvalidSpec("RK4 step must be positive".into()));
            }
            for s in 1..=n_samples {
                let target = (s as f64 * sample_dt).min(t_end);
                while t < target - 1e-12 * target.max(1.0) {
                    let h = step.min(target - t);
                    integ.rk4_step(t, &mut y, h);
                    t += h;
                    steps += 1;
                    if steps > opts.max_steps {
                        return Err(Error::StepSizeUnderflow { time: t });
                    }
                }
                t = target;
                let (done, _) = record(t, &mut y, &mut log_scale, &mut traj)?;
                if done && opts.stop_when_converged {
                    break;
                }
            }
        }
        Method::DormandPrince => {
            integ.eval(0, 0.0, &y);
            let mut h = integ.initial_step(&y, opts.atol, opts.rtol, sample_dt);
            let mut last_rejected = false;
            for s in 1..=n_samples {
                let target = (s as f64 * sample_dt).min(t_end);
                while t < target {
                    let remaining = target - t;
                    let clamped = h >= remaining;
                    let step = if clamped { remaining } else { h };
                    if step < 1e-14 * t.abs().max(1.0) && !clamped {
                        return Err(Error::StepSizeUnderflow { time: t });
                    }
                    let err = integ.dp_step(t, &y, step, opts.atol, opts.rtol);
                    steps += 1;
                    if steps > opts.max_steps {
                        return Err(Error::StepSizeUnderflow { time: t });
                    }
                    if !err.is_finite() {
                        if step < 1e-14 * t.abs().max(1.0) {
                            return Err(Error::NonFiniteState { time: t });
                        }
                        h = step * 0.2;
                        integ.stats.rejected += 1;
                        last_rejected = true;
                        continue;
                    }
                    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if err <= 1.0 {
                        std::mem::swap(&mut y, &mut integ.ynew);
                        integ.k.swap(0, 6);
                        t = if clamped { target } else { t + step };
                        integ.stats.accepted += 1;
                        let grow = if last_rejected { factor.min(1.0) } else { factor };
                        // A step shortened to hit a sample keeps the earlier proposal.
                        h = if clamped { h.max(step * grow) } else { step * grow };
                        last_rejected = false;
                    } else {
                        integ.stats.rejected += 1;
                        h = step * factor;
                        last_rejected = true;
                    }
                }
                let (done, divided) = record(t, &mut y, &mut log_scale, &mut traj)?;
                if renormalize {
                    // The stored derivative follows the rescaled state.
                    let inv = divided.inv();
                    integ.k[0].iter_mut().for_each(|z| *z *= inv);
                }
                if done && opts.stop_when_converged {
                    break;
                }
            }
        }
    }
    traj.stats = integ.stats;
    Ok(traj)
}
