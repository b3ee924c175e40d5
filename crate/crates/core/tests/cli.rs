use std::process::Command;

fn ldtensor() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ldtensor"));
    cmd.env_remove("LDTENSOR_SEED");
    cmd
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn oracle_grid_rows() {
    let out = ldtensor()
        .args(["oracle", "--n", "2,3,4", "--r", "2", "--D", "1,2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "n,r,k,D,lambda_min,corr_exact,mmse_exact,corr_w_bound,corr_v_bound");
    assert_eq!(lines.len(), 7);
    assert!(text.starts_with("# ldtensor "));
}

#[test]
fn config_file_and_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"mode":"bound","grid":{"n":[100,10000],"k":[3],"D":[2,3]},"lambda_min":["1","1/2"],"r_at_threshold":true}"#,
    )
    .unwrap();
    let out = ldtensor()
        .args(["bound", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("bound.csv")).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "n,r,k,D,lambda_min,assumption_holds,corr2_bound,mmse_lower_bound");
    assert_eq!(lines.len(), 1 + 8);
    for row in &lines[1..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[5], "true");
        let n: f64 = cells[0].parse().unwrap();
        let lower: f64 = cells[7].parse().unwrap();
        assert!(lower >= 1.0 - n.powf(-0.5));
    }
}

#[test]
fn malformed_fraction_is_a_usage_error() {
    let out = ldtensor().args(["oracle", "--lambda", "1,1/x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed fraction"));
}

#[test]
fn verify_default_grid_passes() {
    let out = ldtensor().args(["verify", "--samples", "20000"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(data_lines(&text).len(), 12);
}

#[test]
fn seed_env_overrides_and_runs_repeat_exactly() {
    let run = || {
        ldtensor()
            .env("LDTENSOR_SEED", "17")
            .args(["estimate", "--n", "10", "--r", "1,2", "--override-D", "5", "--samples", "200", "--seed", "1,2,3"])
            .output()
            .unwrap()
    };
    let a = run();
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, run().stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("\"seeds\":[17]"));
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 3);
    // r = 1: the network reproduces a_1 exactly
    assert!(rows[1].starts_with("10,1,3,5,4,200,0.0,0.0,1.0,"), "{}", rows[1]);
}

#[test]
fn theorem_degree_is_out_of_reach_at_desk_scale() {
    let out = ldtensor()
        .args(["estimate", "--n", "12", "--r", "1", "--lambda2", "0", "--samples", "10"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
