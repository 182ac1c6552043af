use std::path::PathBuf;
use std::process::{Command, Output};

fn tongues(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tongues"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data lines of a csv document (metadata comments dropped).
fn csv_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tongues-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn no_arguments_is_a_usage_error() {
    let o = tongues(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(tongues(&["tongue", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        tongues(&["tongue", "--q", "4", "--p", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        tongues(&["tongue", "--eps", "0.1,abc"]).status.code(),
        Some(2)
    );
    assert_eq!(
        tongues(&["tongue", "--q", "2", "--grid", "8"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        tongues(&["tongue", "--format", "xml"]).status.code(),
        Some(2)
    );
}

#[test]
fn tongue_csv_for_single_step() {
    let o = tongues(&["tongue", "--q", "1", "--p", "0", "--eps", "0.1,0.2,0.3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# tongues "));
    assert!(text.contains("# config: "));
    assert!(text.contains("# wall_clock_s: "));
    let lines = csv_lines(&text);
    assert_eq!(lines[0], "eps,width,delta_max,delta_min,x_argmax,x_argmin");
    for (line, expected) in lines[1..].iter().zip([0.2, 0.4, 0.6]) {
        let width: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((width - expected).abs() < 1e-10, "{line}");
    }
    assert_eq!(lines.len(), 4);
}

#[test]
fn series_json_schema() {
    let o = tongues(&["series", "--q", "2", "--p", "1", "--order", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["q", "p", "N", "r", "Delta", "Y", "meta"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["r"], 2);
    assert_eq!(v["N"], 4);
    assert_eq!(v["Delta"].as_array().unwrap().len(), 5);
    assert!(v["Delta"][2]["cos"].is_array() && v["Delta"][2]["sin"].is_array());
    assert_eq!(v["meta"]["config"]["order"], "4");
    assert!(v["meta"]["version"].is_string());
    assert!(v["meta"]["wall_clock_s"].is_number());
}

#[test]
fn fit_json_schema() {
    let o = tongues(&["fit", "--q", "2", "--eps", "0.1,0.15,0.2,0.25,0.3,0.35"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["expected_r"], 2);
    assert!((v["exponent"].as_f64().unwrap() - 2.0).abs() < 0.2);
    assert!(v["residual"].as_f64().unwrap() >= 0.0);
}

#[test]
fn fit_needs_enough_samples() {
    let o = tongues(&["fit", "--q", "2", "--eps", "0.1,0.2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerical failure"));
}

#[test]
fn chain_report_and_trajectory() {
    let base = [
        "chain",
        "--q",
        "2",
        "--p",
        "1",
        "--eps",
        "0.5",
        "--delta",
        "0.3",
        "--horizon",
        "400",
    ];
    let o = tongues(&base);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "traveling_wave");
    for key in ["mean_velocity", "T", "delay_error", "critical_delta"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["delay_error"].as_f64().unwrap() < 1e-4);

    let mut args = base.to_vec();
    args.extend(["--format", "csv"]);
    let o = tongues(&args);
    let text = stdout(&o);
    let lines = csv_lines(&text);
    assert_eq!(lines[0], "t,x_0,x_1,v_0,v_1");
    assert_eq!(lines[1].split(',').count(), 5);
}

#[test]
fn chain_at_rest_below_threshold() {
    let o = tongues(&[
        "chain",
        "--q",
        "1",
        "--p",
        "0",
        "--eps",
        "0.5",
        "--delta",
        "0.1",
        "--horizon",
        "300",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "equilibrium");
    assert_eq!(v["mean_velocity"], 0.0);
}

#[test]
fn orbit_counts_inside_tongue() {
    let o = tongues(&[
        "orbit", "--q", "2", "--p", "1", "--eps", "0.2", "--delta", "0.001", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let orbits = v["orbits"].as_array().unwrap();
    assert!(orbits.iter().any(|o| o["kind"] == "center"));
    assert!(orbits.iter().any(|o| o["kind"] == "saddle"));
}

#[test]
fn svg_is_deterministic() {
    let args = ["profile", "--q", "3", "--eps", "0.2", "--format", "svg"];
    let a = tongues(&args);
    let b = tongues(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("<?xml"));
    assert!(text.contains("config: "));
}

#[test]
fn svg_of_nothing_fails() {
    // far outside the tongue: no orbits to draw
    let o = tongues(&[
        "orbit", "--q", "3", "--eps", "0.2", "--delta", "1", "--format", "svg",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
}

#[test]
fn config_file_with_flag_override() {
    let cfg = scratch("run.cfg");
    std::fs::write(
        &cfg,
        "# tongue run\nq = 1\np = 0\neps = 0.1,0.2\nformat = json\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = tongues(&["tongue", "--config", cfg]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 2);
    assert_eq!(v["meta"]["config"]["eps"], "0.1,0.2");

    let o = tongues(&["tongue", "--config", cfg, "--eps", "0.3", "--format", "csv"]);
    let text = stdout(&o);
    let lines = csv_lines(&text);
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.3,0.6"));

    let bad = scratch("bad.cfg");
    std::fs::write(&bad, "qq=3\n").unwrap();
    assert_eq!(
        tongues(&["tongue", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn out_flag_writes_file() {
    let path = scratch("tongue.csv");
    let o = tongues(&["tongue", "--eps", "0.1", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(csv_lines(&text)[0].starts_with("eps,width"));
}

#[test]
fn trig_poly_from_json() {
    let path = scratch("f.json");
    std::fs::write(&path, r#"{"cos":[0,0],"sin":[0,1]}"#).unwrap();
    let from_file = tongues(&[
        "series",
        "--q",
        "4",
        "--p",
        "1",
        "--f",
        path.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    assert_eq!(v["r"], 2);
    let inline = tongues(&[
        "series",
        "--q",
        "4",
        "--p",
        "1",
        "--f",
        r#"{"cos":[0,0],"sin":[0,1]}"#,
    ]);
    let w: serde_json::Value = serde_json::from_str(&stdout(&inline)).unwrap();
    assert_eq!(v["Delta"], w["Delta"]);
}
