use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
protocol = dsdv
n = 8
field_side = 400
duration = 40
flows = 2
flow_start = 10
";

fn manet_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manet-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_writes_rows_per_seed_plus_mean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.conf", SMALL);
    let out = dir.path().join("out");
    let o = manet_sim(&[
        "run",
        "--config",
        &cfg,
        "--sweep",
        "pause=0,20",
        "--seeds",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("small_dsdv.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], manet_core::scenario::CSV_HEADER);
    assert_eq!(lines.len(), 1 + 2 * 3);
    let seeds: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(seeds, ["1", "2", "mean", "1", "2", "mean"]);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 15));
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.conf", SMALL);
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = manet_sim(&[
            "run",
            "--config",
            &cfg,
            "--protocol",
            "olsr",
            "--seeds",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out.join("small_olsr.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn stdout_when_no_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.conf", SMALL);
    let o = manet_sim(&["run", "--config", &cfg, "--protocol", "fsr"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("fsr,none,,1,"));
}

#[test]
fn invalid_config_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.conf", "n = 10\nduration = 900\npause = 1000\n");
    let o = manet_sim(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.conf", "nodes = 10\n");
    let o = manet_sim(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nodes"));
}

#[test]
fn bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.conf", SMALL);
    for args in [
        vec!["run", "--config", cfg.as_str(), "--protocol", "aodv"],
        vec!["run", "--config", cfg.as_str(), "--sweep", "pause=20,10"],
        vec!["run", "--config", cfg.as_str(), "--sweep", "speed=1,2"],
        vec!["run", "--config", cfg.as_str(), "--seeds", "0"],
        vec!["run", "--config", "/nonexistent/x.conf"],
    ] {
        let o = manet_sim(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn shipped_presets_parse() {
    let presets = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    let mut count = 0;
    for entry in fs::read_dir(presets).unwrap() {
        let path = entry.unwrap().path();
        manet_core::ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert_eq!(count, 4);
}

#[test]
fn unwritable_out_dir_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.conf", SMALL);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = manet_sim(&["run", "--config", &cfg, "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
