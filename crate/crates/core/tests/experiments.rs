use std::fs;

use nhtherm::config::{InitialState, SimulationConfig};
use nhtherm::experiments::{run_evolve, run_scan, run_sectors, write_evolve, write_scan, write_sectors, GridRange};
use nhtherm::linalg::{format_matrix_text, ComplexMatrix, C64};
use nhtherm::Error;

fn qubit_config(dir: &std::path::Path, evolution: &str) -> SimulationConfig {
    let text = format!(
        r#"{{
        "model": {{"kind": "Qubit", "h_x": 1.0, "h_y": 0.5, "coupling": "SigmaZ"}},
        "bath": {{"temperature": 1.0}},
        "evolution": "{evolution}",
        "initial_state": "FullyPolarizedUp",
        "output": {{"directory": {:?}}}
    }}"#,
        dir.display().to_string()
    );
    SimulationConfig::from_json(&text).unwrap()
}

fn chain_config(dir: &std::path::Path, coupling: &str) -> SimulationConfig {
    let text = format!(
        r#"{{
        "model": {{"kind": "IsingChain", "sites": 2, "J": 1.0, "h_y": 0.2, "h_z": 0.75, "coupling": "{coupling}"}},
        "bath": {{"temperature": 1.0}},
        "evolution": "BTE",
        "output": {{"directory": {:?}}}
    }}"#,
        dir.display().to_string()
    );
    SimulationConfig::from_json(&text).unwrap()
}

#[test]
fn grid_range_parses_and_spans_endpoints() {
    let g = GridRange::parse("0:0.45:10").unwrap();
    let p = g.points();
    assert_eq!(p.len(), 10);
    assert_eq!(p[0], 0.0);
    assert_eq!(p[9], 0.45);
    assert!((p[1] - 0.05).abs() < 1e-15);
    assert_eq!(GridRange::parse("-1:1:1").unwrap().points(), vec![-1.0]);
    for bad in ["0:1", "0:1:0", "a:1:2", "0:1:2:3", "0:inf:3"] {
        assert!(GridRange::parse(bad).is_err(), "{bad}");
    }
}

#[test]
fn config_errors_name_the_key() {
    let bad_temp = r#"{"model": {"kind": "Qubit", "h_x": 1.0, "h_y": 0.5, "coupling": "SigmaZ"},
        "bath": {"temperature": -1.0}, "evolution": "BTE"}"#;
    match SimulationConfig::from_json(bad_temp) {
        Err(Error::Config { key, .. }) => assert_eq!(key, "bath.temperature"),
        other => panic!("{other:?}"),
    }
    let unknown = r#"{"model": {"kind": "Qubit", "h_x": 1.0, "h_y": 0.5, "coupling": "SigmaZ"},
        "bath": {"temperature": 1.0}, "evolution": "BTE", "extra": 1}"#;
    assert!(matches!(SimulationConfig::from_json(unknown), Err(Error::Config { .. })));
    assert!(matches!(SimulationConfig::from_json("{"), Err(Error::Config { .. })));
}

#[test]
fn config_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = qubit_config(dir.path(), "RTE");
    assert_eq!(SimulationConfig::from_json(&cfg.to_json()).unwrap(), cfg);
}

#[test]
fn evolve_writes_summary_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = qubit_config(dir.path(), "BTE");
    let out = run_evolve(&cfg).unwrap();
    assert!(out.converged());
    let paths = write_evolve(&cfg, &out).unwrap();
    assert_eq!(paths.len(), 2);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "Thermalized");
    assert!(summary["variance_bbs"]["max_entry"].as_f64().unwrap() < 1e-6);
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("time,"));
    assert!(header.contains("sigma_x"));
}

#[test]
fn evolve_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let cfg = qubit_config(d.path(), "RTE");
        write_evolve(&cfg, &run_evolve(&cfg).unwrap()).unwrap();
    }
    for f in ["summary.json", "trajectory.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn file_matrix_initial_state_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let rho = ComplexMatrix::from_rows(&[
        vec![C64::new(0.5, 0.0), C64::new(0.0, 0.5)],
        vec![C64::new(0.0, -0.5), C64::new(0.5, 0.0)],
    ])
    .unwrap();
    fs::write(dir.path().join("rho.txt"), format_matrix_text(&rho)).unwrap();
    let mut cfg = qubit_config(dir.path(), "BTE");
    cfg.initial_state = InitialState::FileMatrix(dir.path().join("rho.txt"));
    let out = run_evolve(&cfg).unwrap();
    let mut diff = out.trajectory.states[0].clone();
    diff.add_scaled(C64::new(-1.0, 0.0), &rho);
    assert!(diff.max_entry_norm() < 1e-14);

    let wrong = ComplexMatrix::identity(3);
    fs::write(dir.path().join("rho3.txt"), format_matrix_text(&wrong)).unwrap();
    cfg.initial_state = InitialState::FileMatrix(dir.path().join("rho3.txt"));
    assert!(matches!(run_evolve(&cfg), Err(Error::Config { .. })));
}

#[test]
fn broken_phase_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = qubit_config(dir.path(), "BTE");
    cfg.model = nhtherm::models::ModelSpec::Qubit { h_x: 0.5, h_y: 1.0, coupling: nhtherm::models::Coupling::SigmaZ };
    assert!(matches!(run_evolve(&cfg), Err(Error::PtBroken { .. })));
}

#[test]
fn scan_rows_follow_grid_order_and_flag_the_wedge() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = chain_config(dir.path(), "SigmaX");
    cfg.run.t_end_cap = Some(400.0);
    let out = run_scan(&cfg, GridRange::parse("0:0.8:3").unwrap(), GridRange::parse("0.6:0.9:2").unwrap(), false).unwrap();
    let coords: Vec<_> = out.rows.iter().map(|r| (r.h_y, r.h_z)).collect();
    assert_eq!(coords, vec![(0.0, 0.6), (0.0, 0.9), (0.4, 0.6), (0.4, 0.9), (0.8, 0.6), (0.8, 0.9)]);
    // (0.8, 0.6) lies outside the wedge; (0.8, 0.9) is 0.1 from its edge, outside the guard band.
    assert_eq!(out.rows[4].pt_flag, "broken");
    assert!(out.rows[4].v_lr.is_none());
    assert_eq!(out.rows[5].pt_flag, "unbroken");
    for r in out.rows.iter().filter(|r| r.pt_flag == "unbroken") {
        assert!(r.v_lr.unwrap() < 1e-6, "{r:?}");
        assert!(r.errors.is_empty(), "{r:?}");
    }
}

#[test]
fn scan_output_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let mut cfg = chain_config(d.path(), "SigmaX");
        cfg.run.t_end_cap = Some(300.0);
        let out = run_scan(&cfg, GridRange::parse("0:0.3:2").unwrap(), GridRange::parse("0.6:0.9:2").unwrap(), false).unwrap();
        write_scan(&cfg, &out).unwrap();
    }
    for f in ["scan.csv", "scan.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.path().join("scan.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("h_y,h_z,V_lr,V_rr,S_von_lr,S_von_rr,S_gib,delta_S_lr,delta_S_rr,pt_flag"));
    assert!(csv.lines().nth(1).unwrap().starts_with("0.000000000000e0,6.000000000000e-1,"));
}

#[test]
fn sectors_report_lists_every_sector() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = chain_config(dir.path(), "SigmaX");
    let report = run_sectors(&cfg).unwrap();
    let sectors = report["sectors"].as_array().unwrap();
    let pairs: usize = sectors.iter().map(|s| s["M"].as_u64().unwrap() as usize).sum();
    assert_eq!(pairs, 16);
    assert_eq!(report["condition_satisfied"], true);
    assert_eq!(report["off_diagonal"]["all_dominant"], true);
    let p = write_sectors(&cfg, &report).unwrap();
    let back: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
    assert_eq!(back["sectors"].as_array().unwrap().len(), sectors.len());
    assert_eq!(back["zero_sector"]["steady"]["weights"].as_array().unwrap().len(), 4);
}
