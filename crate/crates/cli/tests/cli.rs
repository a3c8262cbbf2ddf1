use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn weyl_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weyl-lab"))
        .args(args)
        .env_remove("WEYL_LAB_SEED")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const WEYL: [&str; 9] = [
    "weyl-count",
    "--N",
    "48",
    "--delta",
    "1e-10",
    "--region",
    "rect:-0.5,0.5,-0.5,0.5",
    "--trials",
    "3",
];

#[test]
fn reruns_are_byte_identical() {
    let a = weyl_lab(&WEYL);
    let b = weyl_lab(&WEYL);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut serial = WEYL.to_vec();
    serial.extend(["--threads", "1"]);
    assert_eq!(weyl_lab(&serial).stdout, a.stdout);
}

#[test]
fn svg_plot_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    for p in [&p1, &p2] {
        let out = weyl_lab(&[
            "spectrum",
            "--N",
            "64",
            "--delta",
            "1e-10",
            "--seed",
            "7",
            "--region",
            "rect:-0.5,0.5,-0.5,0.5",
            "--plot",
            path_str(p),
            "--out",
            path_str(&dir.path().join("s.json")),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = std::fs::read_to_string(&p1).unwrap();
    assert_eq!(a, std::fs::read_to_string(&p2).unwrap());
    assert_eq!(a.matches("<circle cx=").count(), 64);
}

#[test]
fn zero_n_is_a_config_error() {
    let out = weyl_lab(&["spectrum", "--N", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("N must be at least 1"));
}

#[test]
fn config_errors_exit_one() {
    assert_eq!(weyl_lab(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        weyl_lab(&["quantize", "--N", "8", "--symbol", "no-such-symbol"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        weyl_lab(&["spectrum", "--N", "8", "--trials", "3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        weyl_lab(&["spectrum", "--N", "2000"]).status.code(),
        Some(1)
    );
    // coupling precondition: delta far too large for alpha = C_alpha / N
    let mut big = WEYL.to_vec();
    big[4] = "0.5";
    assert_eq!(weyl_lab(&big).status.code(), Some(1));
    assert_eq!(weyl_lab(&["--help"]).status.code(), Some(0));
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"N": 16, "delta": 1e-9, "seed": 11}"#).unwrap();
    let seed_of = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_weyl-lab"));
        cmd.args(["spectrum", "--config", path_str(&cfg)])
            .args(extra);
        match env {
            Some(v) => cmd.env("WEYL_LAB_SEED", v),
            None => cmd.env_remove("WEYL_LAB_SEED"),
        };
        json_of(&cmd.output().unwrap())["config"]["seed"]
            .as_u64()
            .unwrap()
    };
    assert_eq!(seed_of(&[], None), 11);
    assert_eq!(seed_of(&[], Some("12")), 12);
    assert_eq!(seed_of(&["--seed", "13"], Some("12")), 13);
}

#[test]
fn flags_override_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"N": [16, 32], "z0": [10.0, 0.0]}"#).unwrap();
    let v = json_of(&weyl_lab(&[
        "resolvent",
        "--config",
        path_str(&cfg),
        "--N",
        "8,16",
    ]));
    assert_eq!(v["config"]["N"], serde_json::json!([8, 16]));
    assert_eq!(v["aggregate"]["class"], "outside");
}

#[test]
fn csv_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("w.csv");
    let mut args = WEYL.to_vec();
    args.extend(["--csv", path_str(&csv)]);
    let v = json_of(&weyl_lab(&args));
    assert!(v.get("wall_clock_seconds").is_none());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("trial,seed,N,delta,count,predicted,residual\n"));
    assert_eq!(text.lines().count(), 4);
    args.push("--timing");
    assert!(json_of(&weyl_lab(&args))["wall_clock_seconds"]
        .as_f64()
        .is_some());
}

#[test]
fn grushin_check_passes_and_quantize_echoes_header() {
    let v = json_of(&weyl_lab(&[
        "grushin-check",
        "--N",
        "32",
        "--z",
        "0.2+0.1i",
        "--alpha",
        "0.1",
        "--delta",
        "1e-4",
    ]));
    assert_eq!(v["passes"], true);
    assert!(v["perturbed"]["bound_holds"].as_bool().unwrap());
    let q = json_of(&weyl_lab(&[
        "quantize", "--N", "4", "--symbol", "cos-x", "--path", "general",
    ]));
    assert_eq!(q["header"]["N"], 4);
    assert_eq!(q["header"]["path"], "general");
}

#[test]
fn inline_symbol_sets_dimension() {
    let doc = r#"{"dim":2,"coeffs":[{"n":[1,0],"m":[0,0],"re":0.5,"im":0.0},{"n":[-1,0],"m":[0,0],"re":0.5,"im":0.0}]}"#;
    let q = json_of(&weyl_lab(&["quantize", "--N", "4", "--symbol", doc]));
    assert_eq!(q["header"]["d"], 2);
    assert_eq!(q["matrix"]["rows"], 16);
}
