use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nondini(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nondini"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("failed to launch nondini")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn construct_round_trips_through_its_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = nondini(&["construct", "--out", &out_arg(a.path())], &[]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let cfg = a.path().join("config.toml");
    let second = nondini(
        &[
            "construct",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            &out_arg(b.path()),
        ],
        &[],
    );
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    for f in ["profile.json", "boundary.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
    let csv = fs::read_to_string(a.path().join("boundary.csv")).unwrap();
    assert!(csv.starts_with("x,re_phi,im_phi,abs_dphi,is_singular\n"));
    assert!(csv.lines().any(|l| l.ends_with(",inf,true")));
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "c_prime_target = 1.6\n").unwrap();
    let out = nondini(
        &[
            "verify",
            "--suite",
            "modulus",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            &out_arg(dir.path()),
        ],
        &[],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("c_prime_target"));
    assert!(!dir.path().join("report.json").exists());

    fs::write(&cfg, "[theta]\nkind = \"power\"\ngamma = -0.5\n").unwrap();
    let out = nondini(
        &[
            "construct",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            &out_arg(dir.path()),
        ],
        &[],
    );
    assert!(!out.status.success());
}

#[test]
fn verify_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = nondini(&["verify", "--suite", "modulus", "--out", &out_arg(dir.path())], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], true);
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for c in checks {
        for key in ["name", "anchor", "measured", "tolerance", "verdict"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn monte_carlo_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mc.toml");
    fs::write(&cfg, "[mc]\nn_walkers = 1500\nseed = 11\n").unwrap();
    let run = |threads: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = nondini(
            &[
                "mc-oracle",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
            ],
            &[("RAYON_NUM_THREADS", threads)],
        );
        assert!(
            out.status.code().is_some_and(|c| c <= 1),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        fs::read(out_dir.join("mc.json")).unwrap()
    };
    assert_eq!(run("1", "a"), run("3", "b"));
    let other = dir.path().join("c");
    let out = nondini(
        &[
            "mc-oracle",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "12",
            "--out",
            other.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.code().is_some_and(|c| c <= 1));
    assert_ne!(fs::read(other.join("mc.json")).unwrap(), run("1", "a"));
}

#[test]
fn appendix_check_reports_exponent_sum() {
    let dir = tempfile::tempdir().unwrap();
    let out = nondini(
        &["appendix-check", "--b", "0.1,0.2", "--out", &out_arg(dir.path())],
        &[],
    );
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("appendix.json")).unwrap()).unwrap();
    assert!((r["exponent_sum"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    let bad = nondini(
        &["appendix-check", "--b", "0.6,0.6", "--out", &out_arg(dir.path())],
        &[],
    );
    assert!(!bad.status.success());
}
