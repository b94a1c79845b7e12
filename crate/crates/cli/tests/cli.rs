use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isac-ee"))
}

#[test]
fn single_solve_prints_metrics() {
    let out = bin().args(["eec-point", "--M", "4", "--N-rx", "4", "--seed", "3"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[eec-point]") && text.contains("ee_c"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = std::env::temp_dir().join(format!("isac-ee-cli-cfg-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("small.cfg");
    fs::write(&cfg, "M = 4\nN_rx = 4\nK = 1\nPmax = \"28 dBm\"\n").unwrap();
    let out_dir = dir.join("out");
    let out = bin()
        .args(["baselines", "--config", cfg.to_str().unwrap(), "--gamma", "5dB", "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["ba1_metrics.csv", "ba1_beams.csv", "ba2_metrics.csv", "ba2_beams.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let beams = fs::read_to_string(out_dir.join("ba1_beams.csv")).unwrap();
    assert_eq!(beams.lines().count(), 1 + 4);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_flags_write_csv() {
    let dir = std::env::temp_dir().join(format!("isac-ee-cli-sweep-{}", std::process::id()));
    let out = bin()
        .args(["ees-point", "--M", "4", "--N-rx", "4", "--sweep", "gamma", "--grid", "0,10", "--trials", "1"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_input_exits_with_error() {
    let out = bin().args(["eec-point", "--Pmax", "30 parsecs"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Pmax"));
    let out = bin().args(["eec-point", "--sweep", "theta", "--grid", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreachable_target_exits_nonzero() {
    let out = bin().args(["eec-point", "--M", "4", "--N-rx", "4", "--gamma", "80dB"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
