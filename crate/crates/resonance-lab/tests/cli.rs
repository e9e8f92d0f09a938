//! End-to-end tests of the `resonance-lab` binary: every command is run
//! as a subprocess against configs written into a temp directory, and
//! the emitted JSON artifacts are parsed back and checked.

use std::path::{Path, PathBuf};
use std::process::Output;

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_resonance-lab");

const WELL: &str = r#"
[potential]
support_right = 1.0
pieces = [{ kind = "polynomial", subinterval = [0.0, 1.0], coefficients = [1.0] }]
declared_orders = [{ at = 0.0, order = 0 }, { at = 1.0, order = 0 }]

[window]
a = 2.0
b = 3.0

[run]
h_list = [0.02]

[output]
dir = "results"
"#;

const PARABOLIC: &str = r#"
[potential]
support_right = 1.0
pieces = [{ kind = "polynomial", subinterval = [0.0, 1.0], coefficients = [0.0, 1.0, -1.0] }]
declared_orders = [{ at = 0.0, order = 1 }, { at = 1.0, order = 1 }]

[window]
a = 1.5
b = 2.5

[run]
h_list = [0.005]

[output]
dir = "results"
"#;

struct Run {
    #[allow(dead_code)]
    dir: TempDir,
    out: PathBuf,
    output: Output,
}

fn run_with(config: &str, cmd: &str, extra: &[&str]) -> Run {
    let dir = TempDir::new().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(&config_path, config).unwrap();
    let out = dir.path().join("results");
    let output = std::process::Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(&config_path)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run { dir, out, output }
}

fn code(r: &Run) -> i32 {
    r.output.status.code().expect("binary was killed by a signal")
}

fn json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap()
}

fn stderr_of(r: &Run) -> String {
    String::from_utf8_lossy(&r.output.stderr).into_owned()
}

#[test]
fn predict_emits_the_full_lattice_for_the_well() {
    let r = run_with(WELL, "predict", &[]);
    assert_eq!(code(&r), 0, "stderr: {}", stderr_of(&r));
    let doc = json(&r.out.join("predict_h0p02.json"));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["command"], "predict");
    let items = doc["items"].as_array().unwrap();
    assert_eq!(items.len(), 7, "well on [2,3] at h = 0.02 has 7 lattice points");
    // Indices are consecutive and energies increase through the window.
    for w in items.windows(2) {
        assert_eq!(
            w[1]["n"].as_i64().unwrap(),
            w[0]["n"].as_i64().unwrap() + 1
        );
        assert!(w[1]["re_z"].as_f64().unwrap() > w[0]["re_z"].as_f64().unwrap());
    }
    for it in items {
        let e = it["re_z"].as_f64().unwrap();
        assert!((2.0..=3.0).contains(&e));
        assert!(it["im_z"].as_f64().unwrap() < 0.0);
    }
    // The manifest names the files and records their round-trip checks.
    let man = json(&r.out.join("manifest_predict.json"));
    let files = man["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        assert_eq!(f["round_trip"], true);
        assert!(r.out.join(f["file"].as_str().unwrap()).exists());
    }
    assert_eq!(man["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn compute_certifies_the_well_and_matches_the_closed_form() {
    let r = run_with(WELL, "compute", &[]);
    assert_eq!(code(&r), 0, "stderr: {}", stderr_of(&r));
    let doc = json(&r.out.join("compute_h0p02.json"));
    let agg = &doc["aggregates"];
    assert_eq!(agg["winding_total"], 7);
    assert_eq!(agg["unresolved_cells"], 0);
    let items = doc["items"].as_array().unwrap();
    assert_eq!(items.len(), 7);
    for it in items {
        assert!(it["residual_norm"].as_f64().unwrap() <= 1e-10);
        assert!(it["newton_iters"].as_i64().unwrap() >= 1);
        // Certification box brackets the root.
        let (re, im) = (it["re_z"].as_f64().unwrap(), it["im_z"].as_f64().unwrap());
        assert!(it["cell_re_lo"].as_f64().unwrap() <= re);
        assert!(it["cell_re_hi"].as_f64().unwrap() >= re);
        assert!(it["cell_im_lo"].as_f64().unwrap() <= im);
        assert!(it["cell_im_hi"].as_f64().unwrap() >= im);
    }

    let o = run_with(WELL, "oracle", &[]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr_of(&o));
    let odoc = json(&o.out.join("oracle_h0p02.json"));
    let oagg = &odoc["aggregates"];
    assert_eq!(oagg["reference_count"], 7);
    assert_eq!(oagg["computed_count"], 7);
    assert!(
        oagg["max_dist"].as_f64().unwrap() <= 1e-8,
        "shooting and closed-form routes disagree: {}",
        oagg["max_dist"]
    );
}

#[test]
fn window_below_the_barrier_is_rejected_without_output() {
    let bad = WELL.replace("a = 2.0", "a = 0.5");
    let r = run_with(&bad, "predict", &[]);
    assert_eq!(code(&r), 2);
    assert!(stderr_of(&r).contains("config error"));
    assert!(!r.out.exists(), "nothing may be written on a config error");
}

#[test]
fn an_empty_lattice_warns_and_exits_cleanly() {
    // Window so narrow that no quantized action fits inside at h = 0.05.
    let tiny = WELL
        .replace("b = 3.0", "b = 2.01")
        .replace("h_list = [0.02]", "h_list = [0.05]");
    let r = run_with(&tiny, "predict", &[]);
    assert_eq!(code(&r), 0, "stderr: {}", stderr_of(&r));
    assert!(stderr_of(&r).contains("no rows"));
    let doc = json(&r.out.join("predict_h0p05.json"));
    assert!(doc["items"].as_array().unwrap().is_empty());
    let man = json(&r.out.join("manifest_predict.json"));
    assert_eq!(man["files"][0]["status"], "empty");
}

#[test]
fn invalid_overrides_are_rejected() {
    let r = run_with(WELL, "predict", &["--h", "1.5"]);
    assert_eq!(code(&r), 2, "h outside (0,1) must fail validation");
    let r = run_with(WELL, "compute", &["--M", "-1.0"]);
    assert_eq!(code(&r), 2, "negative band depth must fail validation");
    let r = run_with(WELL, "predict", &["--h", "0.02", "--h", "0.05"]);
    assert_eq!(code(&r), 2, "ascending h list must fail validation");
}

#[test]
fn result_files_are_byte_identical_across_runs() {
    let r1 = run_with(WELL, "compute", &[]);
    let r2 = run_with(WELL, "compute", &[]);
    assert_eq!(code(&r1), 0);
    assert_eq!(code(&r2), 0);
    for name in ["compute_h0p02.json", "compute_h0p02.csv"] {
        let a = std::fs::read(r1.out.join(name)).unwrap();
        let b = std::fs::read(r2.out.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn compare_scaled_errors_stay_within_a_factor_of_three() {
    let cfg = WELL.replace("h_list = [0.02]", "h_list = [0.05, 0.02, 0.01]");
    let r = run_with(&cfg, "compare", &[]);
    assert_eq!(code(&r), 0, "stderr: {}", stderr_of(&r));
    let mut max_scaled = Vec::new();
    for label in ["0p05", "0p02", "0p01"] {
        let doc = json(&r.out.join(format!("compare_h{label}.json")));
        let agg = &doc["aggregates"];
        assert!(
            agg["unmatched_predicted"].as_array().unwrap().is_empty(),
            "every prediction must pair at h label {label}"
        );
        assert!(agg["unmatched_computed"].as_array().unwrap().is_empty());
        assert!(agg["spacing_constant"].as_f64().unwrap() > 0.0);
        max_scaled.push(agg["max_scaled"].as_f64().unwrap());
    }
    let lo = max_scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = max_scaled.iter().cloned().fold(0.0, f64::max);
    assert!(
        hi / lo <= 3.0,
        "normalized errors must be stable across h: {max_scaled:?}"
    );
}

#[test]
fn count_agrees_with_the_lattice_within_one() {
    let cfg = WELL.replace("h_list = [0.02]", "h_list = [0.05, 0.02]");
    let r = run_with(&cfg, "count", &[]);
    assert_eq!(code(&r), 0, "stderr: {}", stderr_of(&r));
    let doc = json(&r.out.join("counts.json"));
    let items = doc["items"].as_array().unwrap();
    assert_eq!(items.len(), 2);
    for it in items {
        assert!(
            it["difference"].as_i64().unwrap().abs() <= 1,
            "certified count vs lattice size: {it}"
        );
        assert_eq!(it["certified"], it["winding_total"]);
    }
}

#[test]
fn gap_empirical_band_top_tracks_the_first_order_width() {
    let r = run_with(PARABOLIC, "gap", &[]);
    assert_eq!(code(&r), 0, "stderr: {}", stderr_of(&r));
    let doc = json(&r.out.join("gap.json"));
    let agg = &doc["aggregates"];
    // Structural bound: the per-energy width constant dominates the
    // uniform gap constant, with equality since both endpoint orders
    // are 1 here.
    assert!(agg["min_margin"].as_f64().unwrap().abs() <= 1e-9);
    let nu0 = agg["nu0_bound"].as_f64().unwrap();
    assert!(nu0 > 0.0);
    let row = &doc["items"][0];
    let empirical = row["empirical_top"].as_f64().unwrap();
    let first_order = row["first_order_top"].as_f64().unwrap();
    assert!(
        (empirical - first_order).abs() / first_order <= 0.15,
        "band top {empirical} vs first-order {first_order}"
    );
    // Every computed depth sits above the uniform lower bound.
    assert!(empirical >= nu0 - 1e-9);
    assert!(row["certified"].as_i64().unwrap() > 0);
}
