use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucc-vqe")).args(args).output().unwrap()
}

fn data(rel: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "data", rel].iter().collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_vqe_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = bin(&["run-vqe", &data("fcidump/h2_sto3g.fcidump"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((v["correlation_kj_per_mol"].as_f64().unwrap() + 54.085).abs() < 0.01);
    assert!((v["correlation_hartree"].as_f64().unwrap() + 0.0206).abs() < 1e-4);
    assert_eq!(v["n_qubits"], 4);
    assert_eq!(v["fixture_sha256"].as_str().unwrap().len(), 64);
    assert!(v["two_qubit_gates"].as_u64().unwrap() > 0);
}

#[test]
fn fci_and_mp2_print_both_units() {
    let o = bin(&["fci", &data("fcidump/h2o_sto3g.fcidump"), "--freeze", "1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("-130.47"), "{s}");
    assert!(s.contains("Eh") && s.contains("kJ/mol"));
    let o = bin(&["mp2", &data("fcidump/h2_sto3g.fcidump")]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("mp2 corr"));
}

#[test]
fn react_reports_reaction_energy() {
    let o = bin(&["react", &data("reactions/h2o_diss.toml"), "--fixtures", &data("fcidump")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let vqe: f64 = s
        .lines()
        .find(|l| l.starts_with("E_react(UCCSD-VQE)"))
        .and_then(|l| l.split_whitespace().nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!((vqe - 415.875).abs() < 0.2, "{s}");
    assert!(s.contains("E_react(FCI)"));
}

#[test]
fn count_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("counts.csv");
    let o = bin(&[
        "count-gates",
        &data("fcidump/lih_ccpvdz.fcidump"),
        "--qubits-list",
        "12,16,20,24",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);
    let o = bin(&["fit-extrapolate", csv.to_str().unwrap(), "--predict", "38,292"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("r^2") && s.contains("292 qubits"), "{s}");
}

#[test]
fn bracket_flags_accuracy_basis() {
    let o = bin(&["bracket", "--reaction", "h2o_diss"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let flagged = s.lines().find(|l| l.contains("<-")).unwrap();
    assert!(flagged.starts_with("cc-pvqz") && flagged.contains("228"), "{s}");
    let o = bin(&["bracket", "--reaction", "ch2_gap", "--bases", "sto-3g"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(bin(&["run-vqe", "x.fcidump", "--bogus"]).status.code(), Some(2));
    assert_eq!(bin(&["fci", "/nonexistent/file.fcidump"]).status.code(), Some(1));
    assert_eq!(bin(&["bracket", "--reaction", "unknown"]).status.code(), Some(1));
}
