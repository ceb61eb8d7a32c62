use nhtherm_web::{chain_sectors_json, qubit_spin_vs_temperature_json, qubit_trajectory_json};
use serde_json::Value;

#[test]
fn qubit_trajectory_reaches_bbs() {
    let r: Value = serde_json::from_str(&qubit_trajectory_json(1.0, 0.5, 1.0, "BTE", 300.0).unwrap()).unwrap();
    let times = r["times"].as_array().unwrap();
    assert_eq!(times.len(), r["rho"].as_array().unwrap().len());
    assert!(r["variance_bbs"].as_f64().unwrap() < 1e-6);
    let first = &r["rho"][0];
    assert_eq!(first[0].as_f64().unwrap(), 1.0);
}

#[test]
fn spin_vector_leaves_the_bloch_sphere_at_low_temperature() {
    let rows: Value = serde_json::from_str(&qubit_spin_vs_temperature_json(1.0, 0.5, "BTE", &[0.1, 5.0]).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert!(rows[0]["norm"].as_f64().unwrap() > 1.0);
    assert!(rows[1]["norm"].as_f64().unwrap() < 1.0);
}

#[test]
fn chain_sectors_report_dominance() {
    let r: Value = serde_json::from_str(&chain_sectors_json(3, 0.2, 0.75, "x", 1.0).unwrap()).unwrap();
    assert_eq!(r["condition_satisfied"], true);
    let sectors = r["sectors"].as_array().unwrap();
    let total: u64 = sectors.iter().map(|s| s["M"].as_u64().unwrap()).sum();
    assert_eq!(total, 64);
}

#[test]
fn bad_inputs_are_reported() {
    assert!(qubit_trajectory_json(1.0, 0.5, 1.0, "XTE", 10.0).is_err());
    assert!(qubit_trajectory_json(0.5, 1.0, 1.0, "BTE", 10.0).unwrap_err().contains("PT"));
    assert!(chain_sectors_json(7, 0.2, 0.75, "x", 1.0).is_err());
    assert!(chain_sectors_json(3, 0.2, 0.75, "y", 1.0).is_err());
}
