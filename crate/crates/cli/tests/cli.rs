use std::process::Command;

fn tipping(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tipping")).args(args).output().unwrap()
}

#[test]
fn list_succeeds() {
    let out = tipping(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("fold") && text.contains("fig14"));
}

#[test]
fn missing_required_keys_exit_with_config_code() {
    let out = tipping(&["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.kind"));
}

#[test]
fn unknown_figure_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = tipping(&["figure", "fig99", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_path_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = tipping(&["simulate", "--model", "fold", "--y-end", "0", "--out", d]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("manifest.txt").exists());
    assert!(dir.path().join("path.csv").exists());
}

#[test]
fn config_file_with_overrides_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    std::fs::write(
        &cfg,
        format!("[experiment]\nname = ensemble\n[model]\nkind = pitchfork\n[sim]\nn_paths = 20\ny_end = 0\n[output]\ndir = {}\n", dir.path().display()),
    )
    .unwrap();
    let out = tipping(&["ensemble", "--config", cfg.to_str().unwrap(), "--set", "sim.seed=3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap().contains("seed = 3"));
}

#[test]
fn density_outside_domain_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = tipping(&["density", "--model", "fold", "--set", "density.ys=0.5", "--out", d]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
