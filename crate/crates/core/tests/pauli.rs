use nhtherm::bath::{BathShape, SpectralFunction};
use nhtherm::dynamics::{evolve, EvolveOptions};
use nhtherm::experiments::System;
use nhtherm::generator::{EvolutionKind, DEFAULT_FREQ_TOL};
use nhtherm::linalg::{expm, C64};
use nhtherm::models::{all_up_projector, Coupling, ModelSpec};
use nhtherm::pauli::{
    build_sectors, column_sum_residual, detailed_balance_residual, dominance_report, rte_two_level_check,
    steady_weights, Gauge,
};

fn system(spec: ModelSpec, temperature: f64) -> System {
    let sf = SpectralFunction::from_temperature(BathShape::Ohmic, 0.1, temperature).unwrap();
    System::new(&spec, sf, DEFAULT_FREQ_TOL).unwrap()
}

fn qubit() -> System {
    system(ModelSpec::Qubit { h_x: 1.0, h_y: 0.5, coupling: Coupling::SigmaZ }, 1.0)
}

fn chain(sites: usize, coupling: Coupling) -> System {
    system(ModelSpec::IsingChain { sites, j: 1.0, h_y: 0.2, h_z: 0.75, coupling }, 1.0)
}

/// Max deviation between `exp((𝕃 + iΔ)t) c(0)` and the sector coefficients
/// of the full BTE trajectory, over every sector and several times.
fn oracle_deviation(sys: &System, gauge: Gauge) -> f64 {
    let set = build_sectors(&sys.decomps, &sys.sf, DEFAULT_FREQ_TOL, gauge).unwrap();
    let liou = sys.liouvillian(EvolutionKind::BTE).unwrap();
    let d = sys.eig.dim();
    let mut rho0 = all_up_projector(d);
    // Add coherences so that every sector starts populated.
    for i in 0..d {
        for j in 0..d {
            if i != j {
                rho0[(i, j)] = C64::new(0.05, 0.02 * (i as f64 - j as f64));
            }
        }
    }
    let tr = evolve(&rho0, &liou, 30.0, 10.0, &EvolveOptions::default()).unwrap();
    let c0 = sys.eigen_coefficients(EvolutionKind::BTE, &rho0);
    let mut worst = 0.0f64;
    for (t, rho) in tr.times.iter().zip(&tr.states) {
        let c = sys.eigen_coefficients(EvolutionKind::BTE, rho);
        for s in &set.sectors {
            let want = expm(&s.coherent().scale_real(*t)).matvec(&set.extract(s, &c0));
            let got = set.extract(s, &c);
            for (a, b) in want.iter().zip(&got) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    worst
}

#[test]
fn sector_dynamics_match_full_evolution() {
    for sys in [qubit(), chain(2, Coupling::SigmaX), chain(2, Coupling::SigmaZ), chain(3, Coupling::SigmaX)] {
        for gauge in [Gauge::SelfNormalized, Gauge::Balanced] {
            let dev = oracle_deviation(&sys, gauge);
            assert!(dev < 1e-8, "{:?} {gauge:?}: {dev:e}", sys.spec);
        }
    }
}

#[test]
fn sectors_partition_all_pairs() {
    let sys = chain(3, Coupling::SigmaX);
    let set = build_sectors(&sys.decomps, &sys.sf, DEFAULT_FREQ_TOL, Gauge::SelfNormalized).unwrap();
    let d = sys.eig.dim();
    let mut seen = vec![false; d * d];
    for s in &set.sectors {
        for &(m, n) in &s.pairs {
            assert!(!seen[m * d + n]);
            seen[m * d + n] = true;
            assert!((set.energies[n] - set.energies[m] - s.delta).abs() < 1e-8);
        }
    }
    assert!(seen.iter().all(|&x| x));
}

#[test]
fn spectra_do_not_depend_on_gauge() {
    let sys = chain(2, Coupling::SigmaX);
    let a = build_sectors(&sys.decomps, &sys.sf, DEFAULT_FREQ_TOL, Gauge::SelfNormalized).unwrap();
    let b = build_sectors(&sys.decomps, &sys.sf, DEFAULT_FREQ_TOL, Gauge::Balanced).unwrap();
    for (x, y) in a.sectors.iter().zip(&b.sectors) {
        let mut sx: Vec<_> = x.spectrum.clone();
        let mut sy: Vec<_> = y.spectrum.clone();
        sx.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
        sy.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
        for (p, q) in sx.iter().zip(&sy) {
            assert!((p - q).norm() < 1e-10);
        }
    }
}

#[test]
fn off_diagonal_sectors_are_dominant_when_condition_holds() {
    for sys in [qubit(), chain(2, Coupling::SigmaX), chain(3, Coupling::SigmaX), chain(4, Coupling::SigmaX)] {
        assert!(sys.thermalization.verdict.is_satisfied());
        let set = build_sectors(&sys.decomps, &sys.sf, DEFAULT_FREQ_TOL, Gauge::Balanced).unwrap();
        for s in set.sectors.iter().filter(|s| !s.is_diagonal()) {
            let dom = dominance_report(s);
            assert!(dom.strictly_dominant && dom.all_re_negative, "Δ = {}: {dom:?}", s.delta);
            for (m, b) in s.gershgorin_margins.iter().zip(&s.margin_bounds) {
                assert!(*m >= b - 1e-12, "margin {m} below bound {b}");
            }
        }
    }
}

#[test]
fn zero_sector_has_boltzmann_null_vector() {
    for sys in [qubit(), chain(2, Coupling::SigmaX), chain(4, Coupling::SigmaX), chain(4, Coupling::SigmaZ)] {
        let set = build_sectors(&sys.decomps, &sys.sf, DEFAULT_FREQ_TOL, Gauge::Balanced).unwrap();
        let zero = set.zero_sector().unwrap();
        assert!(column_sum_residual(zero) < 1e-12);
        let w = steady_weights(zero, sys.sf.beta(), &set.energies).unwrap();
        assert!(w.boltzmann_deviation < 1e-9, "{:?}: {}", sys.spec, w.boltzmann_deviation);
        assert!(detailed_balance_residual(zero, &w.weights) < 1e-9);
    }
}

#[test]
fn qubit_zero_sector_is_two_rate_matrix() {
    let sys = qubit();
    let set = build_sectors(&sys.decomps, &sys.sf, DEFAULT_FREQ_TOL, Gauge::SelfNormalized).unwrap();
    let zero = set.zero_sector().unwrap();
    let w = set.energies[1] - set.energies[0];
    let k = sys.decomps[0].kappa(0, 1).re;
    let up = sys.sf.gamma(w).unwrap() * k;
    let down = sys.sf.gamma(-w).unwrap() * k;
    assert!((zero.lmat[(0, 0)].re + down).abs() < 1e-12);
    assert!((zero.lmat[(0, 1)].re - up).abs() < 1e-12);
    assert!((zero.lmat[(1, 0)].re - down).abs() < 1e-12);
    assert!((zero.lmat[(1, 1)].re + up).abs() < 1e-12);
}

#[test]
fn two_level_rte_steady_state_survives_rescaling() {
    let sys = qubit();
    let r = rte_two_level_check(&sys.decomps[0], &sys.sf, 0, 1, &[0.5, 2.0, 10.0]).unwrap();
    assert!(r.rescaling_deviation < 1e-10);
    assert!((r.weights[0] - r.boltzmann[0]).abs() < 1e-12);
    assert!((r.steady.trace() - C64::new(1.0, 0.0)).norm() < 1e-14);
}
