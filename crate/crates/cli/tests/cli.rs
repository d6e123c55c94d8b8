use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_salab");

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, body).unwrap();
    path
}

fn salab(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

const LINEAR: &str = "drift = grad_quadratic\nalphas = 0.01\nscaling = 0.5\nn_chains = 8\nsamples_per_chain = 256\nseed = 5\n";

#[test]
fn simulate_writes_headed_csvs_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), LINEAR);
    let out = tmp.path().join("out");
    let res = salab(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "simulate",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let samples = fs::read_to_string(out.join("samples_0.01.csv")).unwrap();
    let mut lines = samples.lines();
    assert_eq!(lines.next(), Some("chain,step,y_1"));
    assert_eq!(lines.count(), 8 * 256);
    let moments = fs::read_to_string(out.join("moments_0.01.csv")).unwrap();
    assert!(moments.starts_with("quantity,i,j,value"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 5);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let bad = write_config(tmp.path(), "drift = grad_quadratic\nalphas = -1\n");
    let res = salab(&["--config", bad.to_str().unwrap(), "simulate"]);
    assert_eq!(res.status.code(), Some(2));
    let res = salab(&["simulate"]);
    assert_eq!(res.status.code(), Some(2));
    let res = salab(&["figure", "fig6"]);
    assert_eq!(res.status.code(), Some(2));
    let garbled = write_config(tmp.path(), "drift grad_quadratic\n");
    let res = salab(&["--config", garbled.to_str().unwrap(), "simulate"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "drift = quartic\nalphas = 0.01\nscaling = 0.25\n",
    );
    let out = tmp.path().join("out");
    let res = salab(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "predict",
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), LINEAR);
    let run = |name: &str, threads: &str| {
        let out = tmp.path().join(name);
        let res = salab(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
            "test",
        ]);
        assert!(res.status.success());
        out
    };
    let (a, b) = (run("a", "1"), run("b", "2"));
    for f in [
        "gof.csv",
        "cf_residual.csv",
        "density_0.01.csv",
        "prediction.csv",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn dry_run_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), LINEAR);
    let out = tmp.path().join("out");
    let res = salab(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--dry-run",
        "pipeline",
    ]);
    assert_eq!(
        res.status.code(),
        Some(2),
        "fixed scaling is rejected before planning"
    );
    let cfg = write_config(
        tmp.path(),
        &LINEAR.replace("scaling = 0.5", "scaling = auto"),
    );
    let res = salab(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--dry-run",
        "pipeline",
    ]);
    assert!(res.status.success());
    let res = salab(&[
        "--out",
        out.to_str().unwrap(),
        "--dry-run",
        "figure",
        "fig2",
    ]);
    assert!(res.status.success());
    assert!(!out.exists());
}

#[test]
fn pipeline_predicts_half_for_unit_quadratic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "drift = grad_quadratic\nalphas = 0.01\nscaling = auto\nn_chains = 16\nsamples_per_chain = 512\nseed = 1\n",
    );
    let out = tmp.path().join("out");
    let res = salab(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "pipeline",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let report = fs::read_to_string(out.join("scaling_report.csv")).unwrap();
    let footer = report.lines().last().unwrap();
    assert!(footer.ends_with(",p_star"));
    let p_star: f64 = footer.split(',').next().unwrap().parse().unwrap();
    assert!((p_star - 0.5).abs() <= 1e-3);
    let pred = fs::read_to_string(out.join("prediction.csv")).unwrap();
    let sigma: f64 = pred
        .lines()
        .find(|l| l.starts_with("sigma_y,1,1,"))
        .and_then(|l| l.rsplit(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((sigma - 0.5).abs() <= 1e-12, "{pred}");
    for f in [
        "gof.csv",
        "cf_residual.csv",
        "logfit.csv",
        "samples_0.01.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn quartic_pipeline_reports_no_gaussian_prediction() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "drift = quartic\nalphas = 0.01\nscaling = auto\nn_chains = 16\nsamples_per_chain = 256\n",
    );
    let out = tmp.path().join("out");
    let res = salab(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "pipeline",
    ]);
    assert!(res.status.success());
    assert!(!out.join("prediction.csv").exists());
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("no Gaussian prediction"));
    assert!(out.join("logfit.csv").exists());
}
