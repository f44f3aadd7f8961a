use std::path::Path;
use std::process::{Command, Output};

fn bin(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monge-dirichlet")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("small.json");
    std::fs::write(
        &p,
        r#"{"n_r": 80, "n_theta": 41, "patch_n": 32, "anneal_n": 300, "anneal_proposals_per_point": 20,
            "anneal_eps_list": [0.001, 0.003, 0.01, 0.03, 0.1], "eps_list": [0.1, 0.01]}"#,
    )
    .unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_and_w1_on_the_default_preset() {
    let d = tempfile::tempdir().unwrap();
    let o = bin(d.path(), &["validate"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("compatibility defect"));
    let o = bin(d.path(), &["w1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let v: f64 = text.strip_prefix("W1 = ").and_then(|r| r.split_whitespace().next()).unwrap().parse().unwrap();
    assert!((v - 1.375).abs() < 1e-5, "{text}");
    assert!(d.path().join("w1.manifest.json").exists());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.json");
    std::fs::write(&bad, r#"{"eps_list": [3.0]}"#).unwrap();
    let o = bin(d.path(), &["--config", bad.to_str().unwrap(), "validate"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(bin(d.path(), &["fit"]).status.code(), Some(1), "missing minimize.csv");
    assert_eq!(bin(d.path(), &["no-such-command"]).status.code(), Some(1));
}

#[test]
fn csv_outputs_are_byte_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path());
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for out in [&a, &b] {
        for args in [
            vec!["--config", cfg, "--seed", "3", "minimize"],
            vec!["--config", cfg, "obstacle"],
            vec!["--config", cfg, "build-maps", "--kind", "original"],
            vec!["--config", cfg, "recovery-sweep", "--emit-field"],
        ] {
            let o = bin(out, &args);
            assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        }
    }
    for f in [
        "minimize.csv",
        "obstacle.csv",
        "map_original.csv",
        "breakpoints_original.csv",
        "recovery_sweep.csv",
        "field_0.csv",
    ] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty() && x == y, "{f} differs");
        assert!(!x.contains(&b'\r'));
    }
    let head = std::fs::read_to_string(a.join("minimize.csv")).unwrap();
    assert!(head.starts_with("eps,J_discrete,monge_part,dirichlet_part,accept_rate\n"));
}

#[test]
fn energy_reads_an_emitted_map() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path());
    let cfg = cfg.to_str().unwrap();
    assert_eq!(bin(d.path(), &["--config", cfg, "build-maps", "--kind", "monotone"]).status.code(), Some(0));
    let map = d.path().join("map_monotone.csv");
    let o = bin(d.path(), &["--config", cfg, "energy", "--map", map.to_str().unwrap(), "--eps", "0.01"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(d.path().join("energy.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,J,F_direct,term1,term2,term3,term4"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(row.len(), 7);
    assert!(row.iter().all(|v| v.is_finite()));
}

#[test]
fn pipeline_report_only_reads() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path());
    let cfg = cfg.to_str().unwrap();
    for args in [
        vec!["--config", cfg, "minimize"],
        vec!["--config", cfg, "fit"],
        vec!["counterexample", "--alpha", "10,100", "--n", "400"],
    ] {
        assert_eq!(bin(d.path(), &args).status.code(), Some(0), "{args:?}");
    }
    let fit = std::fs::read_to_string(d.path().join("fit.csv")).unwrap();
    assert!(fit.starts_with("c0,c1,c2,se1,se2\n"));
    let stamp = |f: &str| std::fs::metadata(d.path().join(f)).unwrap().modified().unwrap();
    let before: Vec<_> = ["minimize.csv", "fit.csv", "counterexample.csv"].iter().map(|f| stamp(f)).collect();
    let o = bin(d.path(), &["report", "--check"]);
    let code = o.status.code().unwrap();
    assert!(code == 0 || code == 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("c1 vs K/3"));
    let after: Vec<_> = ["minimize.csv", "fit.csv", "counterexample.csv"].iter().map(|f| stamp(f)).collect();
    assert_eq!(before, after);
    assert!(std::fs::read_to_string(d.path().join("report.gp")).unwrap().contains("plot 'minimize.csv'"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("report.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "report");
    assert_eq!(manifest["exit_code"].as_u64(), Some(code as u64));
}
