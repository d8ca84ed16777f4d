use std::path::Path;
use std::process::Command;

fn fbe(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fbe")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn passing_experiment_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = fbe(&["--experiment", "kernel-audit", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("PASS kernel moments on three scales"));
    let d = dir.path().join("kernel-audit");
    let summary: serde_json::Value = serde_json::from_str(&read(&d, "summary.json")).unwrap();
    assert_eq!(summary["passed"], true);
    assert!(read(&d, "kernels.csv").starts_with("h,moment_residual,support_ratio\n"));
    assert!(read(&d, "plotdata/moment_residual.dat").starts_with("# h residual\n"));
}

#[test]
fn property_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("energy.txt");
    let mut text = fbe_core::cli::RunConfig::default().to_text();
    text = text.replace("audit.ensemble = 100", "audit.ensemble = 8");
    std::fs::write(&cfg, text).unwrap();
    let (code, stdout, _) = fbe(&[
        "--config",
        cfg.to_str().unwrap(),
        "--experiment",
        "energy-audit",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{stdout}");
    assert!(stdout.contains("FAIL coercivity ratios"));
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("energy-audit"), "summary.json")).unwrap();
    assert_eq!(summary["passed"], false);
}

#[test]
fn runtime_and_argument_errors_exit_one() {
    let (code, _, stderr) = fbe(&["--experiment", "nonsense"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("unknown experiment"), "{stderr}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.txt");
    std::fs::write(&cfg, "schema_version = 1\nphysics.kapa = 1\n").unwrap();
    let (code, _, stderr) = fbe(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 2: unknown key `physics.kapa`"), "{stderr}");

    // k = 3 violates the stepper's scale inequalities under the strict policy.
    std::fs::write(&cfg, "schema_version = 1\nnumerics.k = 3\n").unwrap();
    let (code, _, stderr) = fbe(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("h-(k-k0) > h(1+1/kappa)"), "{stderr}");
}

#[test]
fn reports_repeat_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("distance-audit");
    let files = ["pairs.csv", "moments.csv", "summary.json", "config.txt", "plotdata/equivalence_ratio.dat"];
    let run = |seed: &str| {
        let (code, _, _) = fbe(&["--experiment", "distance-audit", "--seed", seed, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, 0);
        files.iter().map(|f| read(&d, f)).collect::<Vec<_>>()
    };
    let first = run("11");
    assert_eq!(first, run("11"));
    assert_ne!(first[0], run("12")[0]);
}

#[test]
fn grid_level_refines_the_base_grid() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = fbe(&["--experiment", "kernel-audit", "--grid-level", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let cfg = read(&dir.path().join("kernel-audit"), "config.txt");
    assert!(cfg.contains("numerics.grid_level = 1"));
}
