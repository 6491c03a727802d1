use std::fs;
use std::path::Path;
use std::process::Command;

fn hva_lab(sub: &str, config: &str, dir: &Path, name: &str, extra: &[&str]) -> (i32, String) {
    let cfg = dir.join(format!("{name}.json"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("{name}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_hva-lab"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    let text = fs::read_to_string(&out).unwrap_or_default();
    (status.status.code().unwrap(), text)
}

fn header(csv: &str) -> &str {
    csv.lines().nth(1).unwrap()
}

#[test]
fn bounds_defaults_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let (code, a) = hva_lab("bounds", "{}", dir.path(), "a", &[]);
    assert_eq!(code, 0);
    assert!(a.starts_with(&format!("# hva-lab {} config={{", env!("CARGO_PKG_VERSION"))));
    assert_eq!(header(&a), "quantity,inputs,value,measured,dominated");
    assert!(a.lines().any(|l| l.starts_with("mu,") && l.contains(",1.015625,")));
    assert!(a.lines().any(|l| l.starts_with("t_c,") && l.contains(",0.0125,")));
    assert!(!a.contains(",false"));
    let (_, b) = hva_lab("bounds", "{}", dir.path(), "b", &[]);
    assert_eq!(a, b);
}

#[test]
fn grad_scan_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"sizes":[4,6],"p":2,"samples":8,"seed":7}"#;
    let (code, a) = hva_lab("grad-scan", cfg, dir.path(), "a", &[]);
    assert_eq!(code, 0);
    assert_eq!(header(&a), "n_sites,depth_p,repetitions,scheme,scheme_param,mean_sq_grad,rel_std,std_err,n_samples");
    assert_eq!(a.lines().count(), 2 + 2 * 3);
    let (_, b) = hva_lab("grad-scan", cfg, dir.path(), "b", &[]);
    assert_eq!(a, b);
    let (_, c) = hva_lab("grad-scan", cfg, dir.path(), "c", &["--seed", "8"]);
    assert_ne!(a, c);
    assert!(c.lines().next().unwrap().contains("\"seed\":8"));
}

#[test]
fn repeated_ansatz_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"sizes":[4],"p":2,"samples":4,"repetitions":"quarter_n_squared","schemes":[{"kind":"constrained"}]}"#;
    let (code, a) = hva_lab("grad-scan", cfg, dir.path(), "a", &[]);
    assert_eq!(code, 0);
    assert!(a.lines().nth(2).unwrap().starts_with("4,2,4,constrained,"));
}

#[test]
fn eps_scan_schema() {
    let dir = tempfile::tempdir().unwrap();
    let (code, a) = hva_lab("eps-scan", r#"{"sizes":[4],"p":2,"eps":[0.1,2.0],"samples":4}"#, dir.path(), "a", &[]);
    assert_eq!(code, 0);
    assert!(header(&a).contains("eps_over_logN"));
    assert_eq!(a.lines().count(), 4);
}

#[test]
fn vqe_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"n_sites":4,"p":2,"instances":2,"iterations":5,"schemes":[{"kind":"constant","v":3.141592653589793}]}"#;
    let (code, a) = hva_lab("vqe", cfg, dir.path(), "v", &[]);
    assert_eq!(code, 0);
    assert_eq!(a.lines().count(), 2 + 2 * 6);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    let finals = summary["groups"][0]["final_energies"].as_array().unwrap();
    assert_eq!(finals[0], finals[1]);
    assert!(summary["e_gs"].as_f64().unwrap() < 0.0);
}

#[test]
fn vqe_shots_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"n_sites":4,"p":2,"instances":1,"iterations":2,"mode":"shots","n_shots":[128]}"#;
    let (code, a) = hva_lab("vqe", cfg, dir.path(), "v", &[]);
    assert_eq!(code, 0);
    // 18 N p n_shot state preparations per iteration.
    assert!(a.lines().any(|l| l.ends_with(&format!(",{}", 2 * 18 * 4 * 2 * 128))));
}

#[test]
fn fh_scan_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"sizes":[4],"k":2,"time_reversal":[false,true],"instances":3,"time_average":{"t_max":100.0,"n_times":200}}"#;
    let (code, a) = hva_lab("fh-scan", cfg, dir.path(), "f", &[]);
    assert_eq!(code, 0);
    assert_eq!(header(&a), "n_sites,k,time_reversal,instance_seed,f_h,time_avg,diag_term,min_gap");
    assert_eq!(a.lines().filter(|l| l.contains(",true,")).count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hva_lab("grad-scan", r#"{"sizes":"x"}"#, dir.path(), "bad", &[]).0, 2);
    assert_eq!(hva_lab("grad-scan", r#"{"sizes":[3],"p":1,"samples":2}"#, dir.path(), "odd", &[]).0, 2);
    assert_eq!(hva_lab("fh-scan", r#"{"sizes":[13],"instances":1}"#, dir.path(), "big", &[]).0, 1);
    let beyond = r#"{"requests":[{"kind":"fm_verify","n_sites":4,"p":1,"tau":0.01,"orders":[1]}]}"#;
    assert_eq!(hva_lab("bounds", beyond, dir.path(), "n0", &[]).0, 2);
    let status = Command::new(env!("CARGO_BIN_EXE_hva-lab"))
        .args(["bounds", "--config", "/nonexistent.json", "--out"])
        .arg(dir.path().join("x.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
