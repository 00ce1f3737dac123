//! End-to-end checks of the `epi-lab` binary: exit codes, output formats,
//! and byte-level determinism across runs and worker counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_epi-lab")
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const MI_CONFIG: &str = r#"{
    "experiment": "mi_sweep",
    "signal": {"type": "uniform_box", "lo": [0.0], "hi": [1.0]},
    "noise": {"type": "gaussian", "mean": [0.0], "cov": [[1.0]]},
    "gamma_grid": [0.5, 1.0, 2.0],
    "seed": 3
}"#;

#[test]
fn mi_sweep_writes_all_formats_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mi.json", MI_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let out_c = dir.path().join("c");

    for (out, envs) in [
        (&out_a, vec![]),
        (&out_b, vec![]),
        (&out_c, vec![("EPI_LAB_THREADS", "3")]),
    ] {
        let r = run(
            &[
                "mi-sweep",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ],
            &envs,
        );
        assert!(
            r.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&r.stderr)
        );
    }

    let csv_a = std::fs::read(format!("{}.csv", out_a.display())).unwrap();
    let csv_b = std::fs::read(format!("{}.csv", out_b.display())).unwrap();
    let csv_c = std::fs::read(format!("{}.csv", out_c.display())).unwrap();
    assert_eq!(csv_a, csv_b, "same seed must give identical bytes");
    assert_eq!(csv_a, csv_c, "worker count must not change bytes");

    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with("gamma,I,h_x_given_y,mmse,residual,error_estimate\n"));
    assert_eq!(text.lines().count(), 4, "3 gammas -> 4 csv lines");

    // I(0.5) < I(1) < I(2), all positive
    let is: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(is[0] > 0.0 && is[0] < is[1] && is[1] < is[2], "{is:?}");

    let json = std::fs::read_to_string(format!("{}.json", out_a.display())).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    let svg = std::fs::read_to_string(format!("{}.svg", out_a.display())).unwrap();
    assert!(svg.contains("<svg") && svg.contains("</svg>"));
}

#[test]
fn different_seed_changes_monte_carlo_output() {
    let dir = tempfile::tempdir().unwrap();
    // 2-d channel forces the Monte Carlo path, so the seed matters
    let cfg = write_config(
        dir.path(),
        "mi2.json",
        r#"{
            "experiment": "mi_sweep",
            "signal": {"type": "uniform_box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]},
            "noise": {"type": "uniform_box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]},
            "gamma_grid": [100.0],
            "quadrature": {"mcSamples": 20000}
        }"#,
    );
    let out1 = dir.path().join("s1");
    let out2 = dir.path().join("s2");
    for (out, seed) in [(&out1, "1"), (&out2, "2")] {
        let r = run(
            &[
                "mi-sweep",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                seed,
            ],
            &[],
        );
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let a = std::fs::read(format!("{}.csv", out1.display())).unwrap();
    let b = std::fs::read(format!("{}.csv", out2.display())).unwrap();
    assert_ne!(a, b, "different seeds should perturb the MC estimate");
}

#[test]
fn invalid_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{
            "experiment": "mi_sweep",
            "signal": {"type": "uniform_box", "lo": [1.0], "hi": [0.0]},
            "noise": {"type": "gaussian", "mean": [0.0], "cov": [[1.0]]},
            "gamma_grid": [1.0]
        }"#,
    );
    let r = run(&["mi-sweep", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("signal"), "stderr should name the field: {err}");
}

#[test]
fn subcommand_config_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mi.json", MI_CONFIG);
    let r = run(&["epi", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("experiment"));
}

#[test]
fn numerical_failure_exits_3_with_gamma() {
    let dir = tempfile::tempdir().unwrap();
    // fd_step wider than the smallest gamma breaks the derivative stencil
    let cfg = write_config(
        dir.path(),
        "db.json",
        r#"{
            "experiment": "debruijn",
            "signal": {"type": "gaussian", "mean": [0.0], "cov": [[1.0]]},
            "noise": {"type": "gaussian", "mean": [0.0], "cov": [[1.0]]},
            "gamma_grid": [0.0005],
            "fd_step": 0.001
        }"#,
    );
    let r = run(
        &[
            "debruijn",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("x").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("gamma"));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mi.json", MI_CONFIG);
    let r = run(
        &[
            "mi-sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "/dev/null/nested/prefix",
        ],
        &[],
    );
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn pyramid_j_agreement_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pj.json",
        r#"{
            "experiment": "pyramid_j",
            "noise": {"type": "pyramid", "scale": [0.5], "center": [0.0]},
            "gamma_grid": [100.0],
            "probe_points": 30,
            "seed": 5
        }"#,
    );
    let out = dir.path().join("pj");
    let r = run(
        &[
            "pyramid-j",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{}.json", out.display())).unwrap())
            .unwrap();
    let v = &json["verdicts"][0];
    assert_eq!(v["kind"], "pyramid_agreement");
    assert!(v["max_abs_diff"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["points"].as_i64().unwrap(), 30);
}

#[test]
fn epi_with_discrete_signal_demonstrates_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "epi_disc.json",
        r#"{
            "experiment": "epi",
            "signal": {"type": "atoms+density",
                       "atoms": [{"location": [0.0], "mass": 0.5},
                                 {"location": [1.0], "mass": 0.5}],
                       "density_mass": 0.0}
        }"#,
    );
    let out = dir.path().join("epi");
    let r = run(
        &[
            "epi",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(r.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{}.json", out.display())).unwrap())
            .unwrap();
    let verdicts = json["verdicts"].as_array().unwrap();
    assert!(!verdicts.is_empty());
    for v in verdicts {
        assert_eq!(v["kind"], "discrete_violation");
        assert_eq!(v["verdict"]["holds"], false);
    }
}

#[test]
fn shipped_example_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            let text = std::fs::read_to_string(&path).unwrap();
            epi_lab_cli::config::ExperimentConfig::from_json(&text)
                .unwrap_or_else(|e| panic!("{path:?} fails to parse: {e}"));
            n += 1;
        }
    }
    assert!(n >= 9, "expected the shipped configs, found {n}");
}
