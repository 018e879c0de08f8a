use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

const GAUSSIAN: &str = r#"{"lambda": 1, "T": "inf",
  "u": {"preset": "gaussian_bump", "params": {"amplitude": 0.3, "center": 6, "width": 1}}}"#;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfline-ist"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HALFLINE_IST_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("input.json");
    fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_values(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn zero_config_forward_gives_empty_data_and_hashed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"lambda": -1, "T": 4}"#);
    let o = run(&["forward", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let data = json(&dir.path().join("scattering_data.json"));
    assert!(data["eigenvalues_x"].as_array().unwrap().is_empty());
    assert!(data["eigenvalues_bc"].as_array().unwrap().is_empty());
    for s in data["r_samples"].as_array().unwrap() {
        assert_eq!(s[1], serde_json::json!([0.0, 0.0]));
    }
    let manifest = json(&dir.path().join("run_manifest_forward.json"));
    assert_eq!(manifest["command"], "forward");
    let emitted = manifest["emitted"].as_array().unwrap();
    assert!(!emitted.is_empty());
    for f in emitted {
        let bytes = fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(f["sha256"], hex.as_str());
    }
}

#[test]
fn zero_data_solve_gives_zero_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"lambda": -1, "T": "inf"}"#);
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&run(&["forward", "--config", c], dir.path())), 0);
    let o = run(&["solve", "--config", c], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let q = csv_values(&dir.path().join("q_grid.csv"));
    assert_eq!(q.len(), 33 * 5);
    assert!(q.iter().all(|v| *v == 0.0));
    assert_eq!(code(&run(&["verify", "--config", c], dir.path())), 0);
}

#[test]
fn malformed_config_exits_1_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"lambda": -1, "T": "soon"}"#);
    let o = run(&["forward", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
    let diag = json(&dir.path().join("error.json"));
    assert_eq!(diag["kind"], "invalid_config");
    assert_eq!(diag["exit_code"], 1);
}

#[test]
fn soliton_pipeline_and_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(&["soliton", "--kappa", "0.5", "--x0", "2"], d)), 0);
    let c = d.join("config.json");
    let c = c.to_str().unwrap();

    assert_eq!(code(&run(&["forward", "--config", c], d)), 0);
    let data = json(&d.join("scattering_data.json"));
    // The boundary traces of the full soliton carry z = iκ exactly; the
    // truncated initial function has its own x-eigenvalue below iκ.
    let z = data["eigenvalues_bc"].as_array().unwrap();
    assert_eq!(z.len(), 1);
    assert!(z[0][0].as_f64().unwrap().abs() < 1e-6);
    assert!((z[0][1].as_f64().unwrap() - 0.5).abs() < 1e-6);
    let k = data["eigenvalues_x"].as_array().unwrap();
    assert_eq!(k.len(), 1);
    assert!(k[0][1].as_f64().unwrap() > 0.0 && k[0][1].as_f64().unwrap() < 0.5);

    let o = run(&["solve", "--config", c, "--emit-kernel"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let q = csv_values(&d.join("q_grid.csv"));
    let peak = q.iter().cloned().fold(0.0, f64::max);
    assert!((peak - 1.0).abs() < 1e-4, "peak {peak}");
    assert!(d.join("kernel_grid.csv").exists());
    let exact = csv_values(&d.join("q_exact.csv"));
    let err = q.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-4, "max error {err}");

    let o = run(&["verify", "--config", c], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&d.join("verify_report.json"))["overall"], true);

    // Perturb one interior value by 0.1.
    let text = fs::read_to_string(d.join("q_grid.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut parts: Vec<String> = lines[70].split(',').map(String::from).collect();
    parts[2] = format!("{:.16e}", parts[2].parse::<f64>().unwrap() + 0.1);
    lines[70] = parts.join(",");
    fs::write(d.join("bad.csv"), lines.join("\n") + "\n").unwrap();
    let bad = d.join("bad.csv");
    let o = run(&["verify", "--config", c, "--solution", bad.to_str().unwrap()], d);
    assert_eq!(code(&o), 4);
    let report = json(&d.join("verify_report.json"));
    let pde = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "pde_residual").unwrap();
    assert_eq!(pde["passed"], false);
}

#[test]
fn validate_flags_broken_symmetry_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"lambda": -1, "T": 4}"#);
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&run(&["forward", "--config", c], dir.path())), 0);
    let path = dir.path().join("scattering_data.json");
    let mut data = json(&path);
    data["r_samples"][5][1] = serde_json::json!([1e-3, 0.0]);
    fs::write(&path, serde_json::to_string(&data).unwrap()).unwrap();
    let o = run(&["validate", "--config", c], dir.path());
    assert_eq!(code(&o), 2);
    let report = json(&dir.path().join("validation_report.json"));
    assert_eq!(report["overall"], false);
    // solve refuses the same data unless validation is skipped
    assert_eq!(code(&run(&["solve", "--config", c], dir.path())), 2);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GAUSSIAN);
    let c = cfg.to_str().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("run{threads}"));
        let o = Command::new(env!("CARGO_BIN_EXE_halfline-ist"))
            .args(["forward", "--config", c, "--out", out.to_str().unwrap()])
            .env("HALFLINE_IST_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        let o = Command::new(env!("CARGO_BIN_EXE_halfline-ist"))
            .args(["solve", "--skip-validate", "--config", c, "--out", out.to_str().unwrap()])
            .env("HALFLINE_IST_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(
            ["scattering_data.json", "validation_report.json", "q_grid.csv", "diagnostics.json"]
                .map(|f| fs::read(out.join(f)).unwrap()),
        );
    }
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn nystrom_refinement_lowers_error_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GAUSSIAN);
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&run(&["forward", "--config", c], dir.path())), 0);
    let mut est = Vec::new();
    for n in ["16", "32"] {
        let o = run(&["solve", "--skip-validate", "--nystrom-n", n, "--config", c], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let diag = json(&dir.path().join("diagnostics.json"));
        assert_eq!(diag["nystrom_n"].as_u64().unwrap().to_string(), n);
        est.push(diag["error_estimate"].as_f64().unwrap());
    }
    assert!(est[1] < 0.1 * est[0], "{est:?}");
}
