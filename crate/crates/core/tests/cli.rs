use std::path::Path;
use std::process::{Command, Output};

fn oprisk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oprisk"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

#[test]
fn simulate_writes_panel_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = oprisk(dir.path(), &["simulate", "--T", "1", "--seed", "4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let panel = oprisk::simulator::import_panel(dir.path().join("panel.txt")).unwrap();
    assert_eq!(panel.years(), 1);
    assert!(dir.path().join("truth.json").exists());
}

#[test]
fn invalid_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = oprisk(dir.path(), &["simulate", "--phi", "1.2"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("phi"));
    assert!(!dir.path().join("panel.txt").exists());

    assert_eq!(code(&oprisk(dir.path(), &["simulate", "--eta", "3", "--kappa", "0.5"])), 2);
    assert_eq!(code(&oprisk(dir.path(), &["fit", "--panel", "panel.txt"])), 2);
    assert_eq!(code(&oprisk(dir.path(), &["fit", "--model", "hag", "--panel", "missing.txt"])), 2);
    assert_eq!(code(&oprisk(dir.path(), &["frobnicate"])), 2);
}

#[test]
fn malformed_panel_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "threshold=1 years=1\nyear=1 count=2\nexc=5\n").unwrap();
    let out = oprisk(dir.path(), &["fit", "--model", "indep", "--panel", "bad.txt"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# run\nseed = 8\nyears = 4\npanel = cfg_panel.txt\n").unwrap();
    assert_eq!(code(&oprisk(dir.path(), &["simulate", "--config", "run.cfg", "--years", "6"])), 0);
    let panel = oprisk::simulator::import_panel(dir.path().join("cfg_panel.txt")).unwrap();
    assert_eq!(panel.years(), 6);

    std::fs::write(dir.path().join("bad.cfg"), "colour = red\n").unwrap();
    assert_eq!(code(&oprisk(dir.path(), &["simulate", "--config", "bad.cfg"])), 2);
}

#[test]
fn report_rejects_mismatched_levels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&oprisk(d, &["simulate", "--seed", "2"])), 0);
    let fit = oprisk(
        d,
        &["fit", "--model", "indep", "--seed", "2", "--warmup", "300", "--samples", "300"],
    );
    assert!(matches!(code(&fit), 0 | 5));
    let a = ["cvar", "--model", "indep", "--simulations", "2000", "--levels", "0.9,0.99", "--report", "a.json"];
    let b = ["cvar", "--model", "indep", "--simulations", "2000", "--levels", "0.95", "--report", "b.json"];
    assert_eq!(code(&oprisk(d, &a)), 0);
    assert_eq!(code(&oprisk(d, &b)), 0);
    let out = oprisk(d, &["report", "a.json", "b.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("mismatched levels"));
    assert_eq!(code(&oprisk(d, &["cvar", "--model", "indep", "--levels", "0.99,0.9"])), 2);
}

fn pipeline(workers: &str) -> Vec<Vec<u8>> {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_oprisk"))
            .current_dir(d)
            .env("OPRISK_WORKERS", workers)
            .args(args)
            .output()
            .unwrap();
        assert!(matches!(code(&out), 0 | 5), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    run(&["simulate", "--seed", "31", "--years", "8"]);
    run(&["fit", "--model", "indep", "--seed", "31", "--warmup", "200", "--samples", "200"]);
    run(&["cvar", "--model", "indep", "--seed", "31", "--simulations", "20000"]);
    run(&["report", "cvar_indep.json", "--table", "table.txt"]);
    ["panel.txt", "truth.json", "draws_indep.csv", "diagnostics_indep.json", "cvar_indep.json", "table.txt"]
        .iter()
        .map(|f| std::fs::read(d.join(f)).unwrap())
        .collect()
}

#[test]
fn pipeline_is_bit_identical_across_runs_and_workers() {
    let a = pipeline("1");
    assert_eq!(a, pipeline("1"));
    assert_eq!(a, pipeline("3"));
}
