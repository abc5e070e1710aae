use std::fs;
use std::path::Path;

use tipping_core::config::ExperimentConfig;
use tipping_core::csv;
use tipping_core::experiments::{self, Fidelity};
use tipping_core::Error;

fn config(dir: &Path, body: &str) -> ExperimentConfig {
    let text = format!("[output]\ndir = {}\n{body}", dir.display());
    ExperimentConfig::parse(&text).unwrap()
}

fn read(path: &Path) -> csv::CsvTable {
    csv::parse(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn every_experiment_kind_runs_and_writes_a_manifest() {
    let bodies = [
        "[experiment]\nname = simulate\n[model]\nkind = fold\n[sim]\ny_end = 0\n",
        "[experiment]\nname = ensemble\n[model]\nkind = pitchfork\n[sim]\nn_paths = 50\ny_end = 0\n",
        "[experiment]\nname = density\n[model]\nkind = ab\n[density]\nys = 0.2, 0.8\nn_intervals = 1024\n",
        "[experiment]\nname = variance-curve\n[model]\nkind = transcritical\n[density]\nn_points = 40\nn_intervals = 1024\n",
        "[experiment]\nname = delay\n[model]\nkind = fold\n",
        "[experiment]\nname = scaling-scan\n[model]\nkind = fold\n[sim]\nn_paths = 50\n[scan]\nepsilons = 0.02\nsigmas = 0.01, 0.5\n",
        "[experiment]\nname = indicators\n[model]\nkind = transcritical\n[sim]\nn_paths = 20\ny_end = 0\nboundary = window\n",
    ];
    for body in bodies {
        let dir = tempfile::tempdir().unwrap();
        let out = experiments::run_experiment(&config(dir.path(), body)).unwrap();
        assert!(!out.files.is_empty(), "{body}");
        let manifest = fs::read_to_string(&out.manifest).unwrap();
        for key in ["experiment", "model", "seed", "version", "wall_time_s"] {
            assert!(manifest.contains(&format!("{key} = ")), "{key} missing for {body}");
        }
        for f in &out.files {
            let t = read(f);
            assert!(!t.rows.is_empty(), "{} is empty", f.display());
        }
    }
}

#[test]
fn simulate_dump_has_metadata_and_escape_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "[experiment]\nname = simulate\n[model]\nkind = fold\nsigma = 0.5\n[sim]\ny_end = 0.5\n",
    );
    let out = experiments::run_experiment(&cfg).unwrap();
    let t = read(&out.files[0]);
    assert_eq!(t.header, ["t", "y", "x", "escaped"]);
    let keys: Vec<&str> = t.metadata.iter().map(|(k, _)| k.as_str()).collect();
    for k in ["model", "epsilon", "sigma", "seed", "dt"] {
        assert!(keys.contains(&k), "{keys:?}");
    }
    let last = t.rows.last().unwrap();
    assert_eq!(last[3], 1.0);
    assert!(t.rows[..t.rows.len() - 1].iter().all(|r| r[3] == 0.0));
}

#[test]
fn same_seed_gives_identical_files() {
    let body = "[experiment]\nname = ensemble\n[model]\nkind = transcritical\n[sim]\nn_paths = 100\nseed = 9\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = experiments::run_experiment(&config(a.path(), body)).unwrap();
    let fb = experiments::run_experiment(&config(b.path(), body)).unwrap();
    for (x, y) in fa.files.iter().zip(&fb.files) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
}

#[test]
fn empty_config_names_required_keys() {
    match ExperimentConfig::parse("") {
        Err(Error::Config { message, .. }) => {
            assert!(message.contains("experiment.name") && message.contains("output.dir"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn fig7_has_four_density_slices_and_p_bifurcations() {
    let dir = tempfile::tempdir().unwrap();
    let out = experiments::reproduce_figure("fig7", dir.path(), Fidelity::Fast, 0).unwrap();
    let d = read(&out.dir.join("densities.csv"));
    let mut ys: Vec<f64> = d.rows.iter().map(|r| r[0]).collect();
    ys.dedup();
    assert_eq!(ys, [-0.8, -0.2, 0.2, 0.8]);
    assert!(d.rows.iter().all(|r| r[1] * r[0] > 0.0));
    let b = read(&out.dir.join("branches.csv"));
    let meta = |k: &str| b.metadata.iter().find(|(m, _)| m == k).unwrap().1.parse::<f64>().unwrap();
    assert!((meta("y_p_plus") - 0.4).abs() < 1e-12);
    assert!((meta("y_p_minus") + 0.4).abs() < 1e-12);
    assert!(out.dir.join("README.txt").exists());
}

#[test]
fn fig2_has_three_curves_at_sigma_one_tenth() {
    let dir = tempfile::tempdir().unwrap();
    let out = experiments::reproduce_figure("fig2", dir.path(), Fidelity::Fast, 0).unwrap();
    let t = read(&out.dir.join("variance.csv"));
    assert_eq!(t.header, ["y", "fold", "transcritical", "pitchfork"]);
    assert!(fs::read_to_string(&out.manifest).unwrap().contains("sigma = 0.1"));
}

#[test]
fn fig4b_starts_at_caption_point_and_fig8_has_both_variance_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = experiments::reproduce_figure("fig4b", dir.path(), Fidelity::Fast, 0).unwrap();
    let t = read(&out.dir.join("path.csv"));
    assert_eq!(&t.rows[0][1..3], &[-0.6, 1.2]);
    let out = experiments::reproduce_figure("fig8", dir.path(), Fidelity::Fast, 0).unwrap();
    let t = read(&out.dir.join("variance.csv"));
    assert_eq!(t.header, ["y", "v_printed", "v_gamma"]);
}

#[test]
fn fig12_marks_transitions_in_both_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = experiments::reproduce_figure("fig12", dir.path(), Fidelity::Fast, 0).unwrap();
    for name in ["fold.csv", "transcritical.csv"] {
        let t = read(&out.dir.join(name));
        let (_, v) = t.metadata.iter().find(|(k, _)| k == "transition_t").unwrap();
        let tt: f64 = v.parse().unwrap();
        assert!(tt.is_finite() && tt > 0.0, "{name}: {v}");
    }
}

#[test]
fn unknown_figure_lists_available_recipes() {
    let dir = tempfile::tempdir().unwrap();
    let e = experiments::reproduce_figure("fig3", dir.path(), Fidelity::Fast, 0).unwrap_err();
    assert!(e.is_config_error());
    for id in experiments::figure_ids() {
        assert!(e.to_string().contains(id));
    }
}
