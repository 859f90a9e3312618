use std::path::Path;
use std::process::Command;

use meqforge::config::{Model, SymmetryConfig};
use meqforge::export::{read_matrix_market, write_matrix_market};
use meqforge::{parse_config_str, run, CliError};
use meqforge_core::models::{build_chain, Mode};
use meqforge_core::secular::SecularPolicy;
use meqforge_core::{c64, Mat};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_meqforge"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

const QUBIT: &str = r#"{
  "model": "custom",
  "dims": [2],
  "hamiltonian": [{"coefficient": 0.5, "factors": [[0, "sz"]]}],
  "baths": [
    {"label": "b", "T": 0.5, "alpha": 0.1,
     "coupling": [[{"coefficient": 1.0, "factors": [[0, "sp"]]}, {"coefficient": 1.0, "factors": [[0, "sm"]]}]]}
  ]
}"#;

#[test]
fn chain_defaults() {
    let cfg = parse_config_str(r#"{"model": "chain"}"#).unwrap();
    let Model::Chain(p) = &cfg.model else { panic!("not a chain") };
    assert_eq!((p.omega1, p.omega2, p.n), (1.0, 1.0, 4));
    assert_eq!((p.alpha_l, p.alpha_r, p.chi, p.omega_c), (0.01, 0.01, 0.1, 100.0));
    assert_eq!(cfg.policy, SecularPolicy::FullSecular);
    assert_eq!(cfg.mode, Mode::Global);
    assert!(cfg.include_lamb_shift);
    assert_eq!(cfg.symmetry, SymmetryConfig::Number);

    let cfg = parse_config_str(
        r#"{"model": "chain", "chain": {"Omega": 1.5, "g": 0.02, "g12": 0.5, "N": 3},
            "policy": {"kind": "unified", "w": 0.01}, "mode": "local"}"#,
    )
    .unwrap();
    let Model::Chain(p) = &cfg.model else { panic!("not a chain") };
    assert_eq!((p.omega_l, p.omega_r, p.g1, p.g2, p.g12, p.n), (1.5, 1.5, 0.02, 0.02, 0.5, 3));
    assert_eq!(cfg.policy, SecularPolicy::Unified(0.01));
    assert_eq!(cfg.cluster_width, 0.01);
    assert_eq!(cfg.mode, Mode::Local);
}

#[test]
fn custom_qubit() {
    let cfg = parse_config_str(QUBIT).unwrap();
    let Model::Custom(c) = &cfg.model else { panic!("not custom") };
    assert_eq!(c.baths.len(), 1);
    assert_eq!(c.baths[0].coupling_ops[0], meqforge_core::operators::pauli(meqforge_core::operators::Pauli::X));
    assert_eq!(cfg.symmetry, SymmetryConfig::Hamiltonian);
}

fn config_error(text: &str) -> (String, String) {
    match parse_config_str(text) {
        Err(CliError::Config { path, message }) => (path, message),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn config_errors() {
    let missing_t = QUBIT.replace(r#""T": 0.5, "#, "");
    let (path, msg) = config_error(&missing_t);
    assert_eq!(path, "baths[0].T");
    assert!(msg.contains("missing field"));

    let (path, _) = config_error(&QUBIT.replace(r#""T": 0.5"#, r#""T": "hot""#));
    assert_eq!(path, "baths[0].T");

    let (path, _) = config_error(&QUBIT.replace(r#""T": 0.5"#, r#""T": -1.0"#));
    assert_eq!(path, "baths[0]");

    let non_hermitian = QUBIT.replace(r#"[[0, "sz"]]"#, r#"[[0, "sp"]]"#);
    let (path, msg) = config_error(&non_hermitian);
    assert_eq!(path, "hamiltonian");
    assert!(msg.contains("not Hermitian"));

    let (path, _) = config_error(&QUBIT.replace(r#"[[0, "sz"]]"#, r#"[[0, "zz"]]"#));
    assert!(path.starts_with("hamiltonian[0].factors"), "{path}");

    let (path, _) = config_error(&QUBIT.replace(r#"[[0, "sz"]]"#, r#"[[3, "sz"]]"#));
    assert_eq!(path, "hamiltonian[0].factors[0]");

    let (path, _) = config_error(r#"{"model": "chain", "chain": {"gg": 1}}"#);
    assert!(path.starts_with("chain"), "{path}");
    let (path, _) = config_error(r#"{"model": "chain", "chain": {"N": 1}}"#);
    assert_eq!(path, "chain");
    let (path, _) = config_error(r#"{"model": "chain", "policy": {"kind": "partial", "c": -1}}"#);
    assert_eq!(path, "policy");
    let (path, _) = config_error(r#"{"model": "chain", "sweep": {"param1": {"name": "g", "values": [0.1, 0.05, 0.2]}}}"#);
    assert_eq!(path, "sweep.param1");
    let (path, _) = config_error(r#"{"model": "chain", "sweep": {"param1": {"name": "gamma", "values": [0.1]}}}"#);
    assert_eq!(path, "sweep.param1.name");
    let (path, _) = config_error(r#"{"model": "chain", "dims": [2]}"#);
    assert_eq!(path, "dims");
    let (path, _) = config_error(&QUBIT.replace(r#""model": "custom","#, r#""model": "custom", "mode": "local","#));
    assert_eq!(path, "bare_hamiltonian");
}

#[test]
fn matrix_market_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = Mat::from_fn(3, 2, |i, j| if (i + j) % 2 == 0 { c64::new(i as f64 + 0.1, -(j as f64) / 3.0) } else { c64::new(0.0, 0.0) });
    let p = dir.path().join("m.mtx");
    write_matrix_market(&p, &m).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate complex general"));
    assert_eq!(lines.next(), Some("3 2 3"));
    assert_eq!(lines.next(), Some("1 1 0.1 -0"));
    assert_eq!(read_matrix_market(&p).unwrap(), m);
}

#[test]
fn liouvillian_export() {
    let dir = tempfile::tempdir().unwrap();
    let mut kept = Vec::new();
    for policy in [r#"{"kind": "partial", "c": 0}"#, r#"{"kind": "full_secular"}"#] {
        let cfg = parse_config_str(&format!(r#"{{"model": "chain", "chain": {{"N": 2}}, "policy": {policy}}}"#)).unwrap();
        assert_eq!(run(meqforge::Command::Liouvillian, &cfg, Some(dir.path()), 1).unwrap(), 0);
        let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("liouvillian.json")).unwrap()).unwrap();
        kept.push((report["kept_pairs"].clone(), report["dropped_pairs"].clone()));
        let Model::Chain(p) = &cfg.model else { unreachable!() };
        let (_, build) = build_chain(p, cfg.policy, cfg.mode, &Default::default()).unwrap();
        assert_eq!(read_matrix_market(&dir.path().join("liouvillian.mtx")).unwrap(), build.total);
        assert_eq!(read_matrix_market(&dir.path().join("dissipator_R.mtx")).unwrap(), build.per_bath[1].matrix);
    }
    assert_eq!(kept[0], kept[1]);
}

#[test]
fn spectrum_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": "chain", "chain": {"Omega": 1.5, "g": 0.01, "g12": 0.01, "N": 4}, "cluster_width": 0.05}"#,
    );
    let out = bin().args(["spectrum", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("clusters.csv"));
    assert!(rows.len() > 5);
    for r in &rows {
        let width: f64 = r[3].parse().unwrap();
        for gap in [&r[4], &r[5]] {
            if !gap.is_empty() {
                assert!(gap.parse::<f64>().unwrap() > width);
            }
        }
        assert_eq!(r[6], "false");
    }
    let members = read_csv(&dir.path().join("spectrum.csv"));
    let total: usize = rows.iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
    assert_eq!(members.len(), total);
}

#[test]
fn steady_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "q.json", QUBIT);
    let out = bin().args(["steady", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("steady.json")).unwrap()).unwrap();
    assert!(v["heat_flows"]["b"].as_f64().unwrap().abs() < 1e-14);
    let rho = v["rho"].as_array().unwrap();
    let p_excited = rho[0][0][0].as_f64().unwrap();
    let p_ground = rho[1][1][0].as_f64().unwrap();
    assert!((p_excited / p_ground - (-2f64).exp()).abs() < 1e-10);
    assert!(v["flags"].as_array().unwrap().is_empty());
}

#[test]
fn blocks_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"model": "chain", "chain": {"N": 2}, "policy": {"kind": "partial", "c": 1e4}}"#);
    let out = bin().args(["blocks", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("blocks.json")).unwrap()).unwrap();
    assert_eq!(v["symmetric"], Value::Bool(true));
    assert!(v["hamiltonian_residual"].as_f64().unwrap() > 1e-9);
    let sizes: usize = v["blocks"].as_array().unwrap().iter().map(|b| b["size"].as_u64().unwrap() as usize).sum();
    assert_eq!(sizes, 256);

    // the partial-secular generator has no Hamiltonian symmetry
    let cfg = write(
        dir.path(),
        "h.json",
        r#"{"model": "chain", "chain": {"N": 2}, "policy": {"kind": "partial", "c": 1e4}, "symmetry": "hamiltonian"}"#,
    );
    let out = bin().args(["blocks", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("blocks.json")).unwrap()).unwrap();
    assert_eq!(v["symmetric"], Value::Bool(false));
    assert!(v["error"].is_string());
}

#[test]
fn sweep_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"model": "chain", "chain": {"Omega": 1.5, "N": 2},
            "policy": {"kind": "unified", "w": 0.01}, "energy_operator": "system_with_lamb_shift",
            "sweep": {"param1": {"name": "g", "linspace": [0.01, 0.05, 3]},
                      "param2": {"name": "g12", "values": [0.3, 0.5]}}}"#,
    );
    let out = bin().args(["sweep", "--jobs", "2", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("param1,param2,J_L,J_R,imbalance,residual,min_eig_rho,flag"));
    let rows = read_csv(&dir.path().join("sweep.csv"));
    let grid: Vec<(&str, &str)> = rows.iter().map(|r| (r[0].as_str(), r[1].as_str())).collect();
    assert_eq!(
        grid,
        [("0.01", "0.3"), ("0.01", "0.5"), ("0.03", "0.3"), ("0.03", "0.5"), ("0.05", "0.3"), ("0.05", "0.5")]
    );
    for r in &rows {
        assert!(r[7].is_empty(), "{r:?}");
        let (jl, jr): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!(jl > 0.0 && (jl + jr).abs() < 1e-10 * jl);
    }

    // with H_S alone the Lamb shift leaves an imbalance, which is flagged
    let plain = std::fs::read_to_string(&cfg).unwrap().replace(r#""energy_operator": "system_with_lamb_shift","#, "");
    let plain_cfg = write(dir.path(), "plain.json", &plain);
    let plain_dir = dir.path().join("plain");
    let out = bin().args(["sweep", "--config"]).arg(&plain_cfg).arg("--out").arg(&plain_dir).output().unwrap();
    assert!(out.status.success());
    let rows = read_csv(&plain_dir.join("sweep.csv"));
    assert!(rows.iter().filter(|r| r[7] == "imbalance").count() >= 3);
    assert!(rows.iter().all(|r| r[7].is_empty() || r[2] == "NaN"));

    // the same bytes on one worker
    let single = dir.path().join("single");
    let out = bin().args(["sweep", "--jobs", "1", "--config"]).arg(&cfg).arg("--out").arg(&single).output().unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(single.join("sweep.csv")).unwrap(), text.into_bytes());
}

#[test]
fn sweep_failures_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"model": "chain", "chain": {"N": 2}, "sweep": {"param1": {"name": "alpha", "values": [0.0, 0.01]}}}"#,
    );
    let out = bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not unique"));
    let rows = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][2].as_str(), rows[0][3].as_str()), ("NaN", "NaN"));
    assert!(rows[0][7].starts_with("nonconverged"));
    assert_eq!(rows[1][1], "");
    assert!(rows[1][2].parse::<f64>().unwrap() > 0.0);
    assert!(rows[1][7].is_empty());
}

#[test]
fn custom_sweep_over_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let two = r#"{
      "model": "custom",
      "dims": [2, 2],
      "hamiltonian": [
        {"coefficient": 0.5, "factors": [[0, "sz"]]},
        {"coefficient": 0.6, "factors": [[1, "sz"]]},
        {"coefficient": 0.05, "factors": [[0, "sp"], [1, "sm"]]},
        {"coefficient": 0.05, "factors": [[0, "sm"], [1, "sp"]]}
      ],
      "baths": [
        {"label": "L", "T": 0.5, "alpha": 0.05, "coupling": [[{"coefficient": 1, "factors": [[0, "sp"]]}, {"coefficient": 1, "factors": [[0, "sm"]]}]]},
        {"label": "R", "T": 0.1, "alpha": 0.05, "coupling": [[{"coefficient": 1, "factors": [[1, "sp"]]}, {"coefficient": 1, "factors": [[1, "sm"]]}]]}
      ],
      "include_lamb_shift": false,
      "sweep": {"param1": {"name": "L.T", "values": [0.1, 0.3, 0.6]}}
    }"#;
    let cfg = write(dir.path(), "two.json", two);
    let out = bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("sweep.csv"));
    let j: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(j[0].abs() < 1e-14);
    assert!(j[1] > 0.0 && j[2] > j[1]);
}

#[test]
fn usage_errors() {
    let out = bin().arg("steady").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["steady", "--config", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", &QUBIT.replace(r#""T": 0.5, "#, ""));
    let out = bin().args(["steady", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("baths[0].T"));
    let out = bin().args(["sweep", "--config"]).arg(write(dir.path(), "q.json", QUBIT)).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        meqforge::parse_config(&path).unwrap_or_else(|e| panic!("{e}"));
        n += 1;
    }
    assert!(n >= 2);
}
