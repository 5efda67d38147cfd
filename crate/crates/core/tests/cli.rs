use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn ltcodes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltcodes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ltcodes-it-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn dist_writes_normalized_table_and_echoes_config() {
    let out = ltcodes(&[
        "dist", "--kind", "rsd", "--k", "1000", "--c", "0.15", "--delta", "0.2",
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let total: f64 = stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() <= 1e-12);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains(r#""kind":"rsd""#) && stderr.contains(r#""k":1000"#),
        "{stderr}"
    );
}

#[test]
fn exit_codes() {
    assert_eq!(
        ltcodes(&["dist", "--k", "1000", "--delta", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ltcodes(&["simulate", "--trials", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(ltcodes(&["simulate", "--unknown"]).status.code(), Some(2));
    assert_eq!(
        ltcodes(&[
            "simulate",
            "--scheme",
            "improved+checksum",
            "--k",
            "2",
            "--gammas",
            "0"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        ltcodes(&["dist", "--kind", "dllt-source", "--k", "400", "--check"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(ltcodes(&["selftest"]).status.code(), Some(0));
    assert_eq!(ltcodes(&["--help"]).status.code(), Some(0));
}

#[test]
fn help_lists_defaults() {
    let out = ltcodes(&["relay", "--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in [
        "--lambda",
        "--uep-factor",
        "--n-range",
        "--trials",
        "--seed",
        "--threads",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
    assert!(text.contains("[default: 0.5]"));
}

#[test]
fn outputs_are_identical_across_runs_and_thread_counts() {
    let dir = scratch("det");
    let run = |sub: &[&str], threads: &str, file: &str| {
        let path = dir.join(file);
        let mut args = sub.to_vec();
        args.extend([
            "--threads",
            threads,
            "--seed",
            "99",
            "-o",
            path.to_str().unwrap(),
        ]);
        assert!(ltcodes(&args).status.success());
        fs::read(path).unwrap()
    };
    let sim = [
        "simulate",
        "--scheme",
        "rsd",
        "--k",
        "300",
        "--trials",
        "200",
        "--gammas",
        "0,0.1,0.3",
    ];
    let relay = [
        "relay", "--k", "200", "--trials", "200", "--gammas", "0,0.2",
    ];
    for (name, sub) in [("sim", &sim[..]), ("relay", &relay[..])] {
        let a = run(sub, "1", &format!("{name}-a.csv"));
        let b = run(sub, "3", &format!("{name}-b.csv"));
        let c = run(sub, "1", &format!("{name}-c.csv"));
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = scratch("conf");
    let conf = dir.join("a.json");
    fs::write(&conf, r#"{"kind": "w2", "k": 10, "format": "json"}"#).unwrap();
    let out = ltcodes(&["--config", conf.to_str().unwrap(), "dist", "--kind", "w1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(r#""kind": "w1""#), "{text}");
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn analyze_and_json_simulation() {
    let out = ltcodes(&["analyze", "--ks", "400", "--gammas", "0.1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(
        "k,c,delta,gamma,y_fixed_rsd,y_fixed_improved,y_hat,gamma_R,gamma_M,delta_complexity\n"
    ));
    assert_eq!(text.lines().count(), 2);

    let out = ltcodes(&[
        "simulate", "--k", "100", "--trials", "10", "--gammas", "0.2", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["k"], 100);
    assert_eq!(v["points"][0]["n"], 120);
}

#[test]
fn verbose_prints_peel_trace() {
    let out = ltcodes(&[
        "-v", "simulate", "--k", "100", "--trials", "5", "--gammas", "0.1",
    ]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("peel trace"), "{err}");
    assert!(err.contains("ripple"));
}
