use std::path::Path;
use std::process::{Command, Output};

fn sofi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sofi-crb"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_with(dir: &Path, command: &str, json: &str, extra: &[&str]) -> (Output, std::path::PathBuf) {
    let cfg = dir.join(format!("{command}.json"));
    std::fs::write(&cfg, json).unwrap();
    let out = dir.join("out");
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (sofi(&args), out)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn invalid_shape_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, out) = run_with(tmp.path(), "error-vs-order", r#"{"shapes": ["hexagon-2d"]}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, out) = run_with(tmp.path(), "field", r#"{"shape": "pair-2d", "grid_stpe": 0.1}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid_stpe"));
    assert!(!out.exists());
}

#[test]
fn missing_config_is_a_config_error() {
    let o = sofi(&["field", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"orders": [1], "probability": false}"#).unwrap();
    let o = sofi(&["field", "--config", cfg.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn manifest_lists_eight_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sofi(&["list-experiments", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let saved: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("manifest.json"))).unwrap();
    assert_eq!(printed, saved);
    let commands = printed["commands"].as_array().unwrap();
    assert_eq!(commands.len(), 8);
    for c in commands {
        assert!(!c["outputs"].as_array().unwrap().is_empty());
    }
}

#[test]
fn header_echoes_resolved_config_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, out) = run_with(
        tmp.path(),
        "error-vs-scale",
        r#"{"d_over_w": [0.5, 1.0], "orders": [1, 2], "seed": 3}"#,
        &["--seed", "11"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out.join("error_vs_scale.csv"));
    let mut lines = text.lines();
    let head = lines.next().unwrap();
    assert!(head.starts_with("# {"));
    let echo: serde_json::Value = serde_json::from_str(&head[2..]).unwrap();
    assert_eq!(echo["command"], "error-vs-scale");
    assert_eq!(echo["seed"], 11);
    assert_eq!(echo["params"]["alpha"], 0.3);
    assert_eq!(echo["params"]["orders"], serde_json::json!([1, 2]));
    assert_eq!(lines.next().unwrap(), "shape,dims,mode,n,d_over_w,tr_inv_fisher,flag");
    assert_eq!(lines.count(), 4);
}

#[test]
fn per_source_amplitudes_run() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, out) = run_with(
        tmp.path(),
        "error-vs-order",
        r#"{"shapes": ["line-1d:3", "triangle-2d"], "alpha": [0.285, 0.3, 0.309], "n_max": 5}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["error_vs_order_line-1d-3.csv", "error_vs_order_triangle-2d.csv"] {
        let text = read(&out.join(name));
        assert!(text.lines().next().unwrap().contains("0.285"));
        assert_eq!(text.lines().count(), 2 + 4 * 5);
    }
}

#[test]
fn amplitude_count_must_match_sources() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, _) = run_with(
        tmp.path(),
        "error-vs-order",
        r#"{"shapes": ["line-1d:2"], "alpha": [0.285, 0.3, 0.309]}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn worker_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let json = r#"{"t_over_tau0": [100, 400], "n_realizations": 24, "patterns": ["0.0", "0.1"]}"#;
    let cfg = tmp.path().join("b.json");
    std::fs::write(&cfg, json).unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = tmp.path().join(workers);
        let o = sofi(&[
            "blink-ratio",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert!(o.status.success());
        outputs.push(std::fs::read(out.join("blink_ratio.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn field_files_cover_every_order() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, out) = run_with(tmp.path(), "field", r#"{"shape": "pair-2d", "orders": [1, 2], "grid_step": 0.1}"#, &[]);
    assert!(o.status.success());
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "field_pair-2d_n1.csv",
            "field_pair-2d_n2.csv",
            "probability_pair-2d_n1.csv",
            "probability_pair-2d_n2.csv"
        ]
    );
    let prob = read(&out.join("probability_pair-2d_n2.csv"));
    assert_eq!(prob.lines().nth(1).unwrap(), "x,y,p,grad_x1,grad_y1,grad_x2,grad_y2");
}
