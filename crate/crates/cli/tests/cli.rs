use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wavekin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavekin")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

const KWE: &str = "kind = \"kwe\"\n[kwe]\ngrid = 65\nq = 16\n[integrator]\nt = 0.2\ndt = 0.1\n";
const RIGIDITY: &str = "kind = \"rigidity\"\n[model]\nn_sweep = [8, 16, 24]\n[ensemble]\nsamples = 40\nseed = 9\n";

#[test]
fn run_writes_report_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "kwe.toml", KWE);
    let out = tmp.path().join("out");
    let o = wavekin(&["run", &cfg, "--out", out.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["inputs"]["ensemble"]["seed"], 5);
    assert!(report["metrics"].as_array().unwrap().len() >= 5);
    assert!(report["provenance"].as_str().unwrap().contains("seed:5"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert!(out.join("kwe_solution.csv").exists() && out.join("kwe_functionals.csv").exists());
}

#[test]
fn same_seed_gives_identical_csv_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "r.toml", RIGIDITY);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = wavekin(&["rigidity", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]);
    assert!(o.status.code().unwrap() <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let o = wavekin(&["rigidity", "--config", &cfg, "--out", b.to_str().unwrap(), "--threads", "3"]);
    assert!(o.status.code().unwrap() <= 1);
    for f in ["rigidity.csv", "histogram.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn invalid_beta_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "kind = \"lot\"\n[model]\nbeta = 0.6\n");
    let o = wavekin(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("model.beta") && err.contains("(1/4, 1/2)"), "{err}");
}

#[test]
fn schema_and_request_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write_config(tmp.path(), "u.toml", "kind = \"kwe\"\n[kwe]\ngird = 33\n");
    assert_eq!(wavekin(&["run", &unknown]).status.code(), Some(2));
    let kwe = write_config(tmp.path(), "k.toml", KWE);
    assert_eq!(wavekin(&["lot", "--config", &kwe]).status.code(), Some(2));
    let small = write_config(tmp.path(), "s.toml", "kind = \"lot\"\n[ensemble]\nsamples = 8\n");
    let o = wavekin(&["run", &small]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("statistical power"));
}

#[test]
fn io_errors_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    assert_eq!(wavekin(&["run", missing.to_str().unwrap()]).status.code(), Some(3));
    let cfg = write_config(tmp.path(), "k.toml", KWE);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    assert_eq!(wavekin(&["run", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn json_summary_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "k.toml", KWE);
    let out = tmp.path().join("o");
    let o = wavekin(&["kwe", "--config", &cfg, "--out", out.to_str().unwrap(), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["kind"], "kwe");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}
