use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_formation-lab");

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a copy of `paper_2d.scn` with `edit` applied.
fn variant(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let text = std::fs::read_to_string(scenario("paper_2d.scn")).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    edit(&mut doc);
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path
}

#[test]
fn validate_bundled_scenarios() {
    for name in ["paper_2d.scn", "paper_3d.scn", "shape_morph.scn", "orientation_3d.scn"] {
        let out = run(&["validate", path_str(&scenario(name))]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(&["validate", path_str(&scenario("paper_2d.scn"))]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("localizable: true"));
    assert!(text.contains("two-reachable: all"));
    assert!(text.contains("alpha2_min"));
}

#[test]
fn simulate_writes_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv2 = dir.path().join("trace.csv");
    let out = run(&["simulate", path_str(&scenario("paper_2d.scn")), "--horizon", "0.5", "-o", path_str(&csv2)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv2).unwrap();
    assert_eq!(text.lines().next(), Some("t,agent,x,y,x_star,y_star,err"));
    // initial sample plus one every 10 steps, six agents each
    assert_eq!(text.lines().count(), 1 + 6 * 51);

    let csv3 = dir.path().join("trace3.csv");
    let out = run(&["simulate", path_str(&scenario("paper_3d.scn")), "--horizon", "0.1", "-o", path_str(&csv3)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv3).unwrap();
    assert_eq!(text.lines().next(), Some("t,agent,x,y,z,x_star,y_star,z_star,err"));
}

#[test]
fn simulate_3d_reaches_targets() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let out = run(&["simulate", path_str(&scenario("paper_3d.scn")), "-o", path_str(&trace)]);
    assert_eq!(code(&out), 0);
    let diag = dir.path().join("diag.csv");
    let out = run(&["export", path_str(&trace), "--kind", "diagnostics", "-o", path_str(&diag)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&diag).unwrap();
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 10.0);
    assert!(last[2] < 1e-2 && last[3] < 1e-2, "final errors {last:?}");
}

#[test]
fn export_round_trip_matches_direct_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (json_out, direct, exported) = (dir.path().join("t.json"), dir.path().join("a.csv"), dir.path().join("b.csv"));
    let scn = scenario("shape_morph.scn");
    let args = |o: &Path| vec!["simulate".to_string(), path_str(&scn).into(), "--horizon".into(), "1".into(), "-o".into(), path_str(o).into()];
    for o in [&json_out, &direct] {
        let a = args(o);
        assert_eq!(code(&run(&a.iter().map(String::as_str).collect::<Vec<_>>())), 0);
    }
    assert_eq!(code(&run(&["export", path_str(&json_out), "-o", path_str(&exported)])), 0);
    assert_eq!(std::fs::read(&direct).unwrap(), std::fs::read(&exported).unwrap());
}

#[test]
fn csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|k| {
            let p = dir.path().join(format!("run{k}.csv"));
            let out = run(&["simulate", path_str(&scenario("paper_2d.scn")), "--horizon", "1", "-o", path_str(&p)]);
            assert_eq!(code(&out), 0);
            std::fs::read(p).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn batch_jobs_write_one_file_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let a = scenario("paper_2d.scn");
    let b = scenario("shape_morph.scn");
    let out = run(&[
        "simulate",
        path_str(&a),
        path_str(&b),
        "--horizon",
        "0.2",
        "--jobs",
        "2",
        "-o",
        path_str(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for stem in ["paper_2d", "shape_morph"] {
        let text = std::fs::read_to_string(out_dir.join(format!("{stem}.csv"))).unwrap();
        assert!(text.starts_with("t,agent,"));
    }
}

#[test]
fn certify_reports_collision_margin() {
    let out = run(&["certify", path_str(&scenario("paper_2d.scn"))]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["collision"]["passed"], json!(true));
    assert_eq!(report["gain_certified"], json!(true));
    assert_eq!(report["collision"]["psi"].as_array().unwrap().len(), 6);
}

#[test]
fn weights_lists_blocks_per_phase() {
    let out = run(&["weights", path_str(&scenario("orientation_3d.scn"))]);
    assert_eq!(code(&out), 0);
    let blocks: Value = serde_json::from_slice(&out.stdout).unwrap();
    let phases: Vec<&str> = blocks.as_array().unwrap().iter().map(|b| b["plane"].as_str().unwrap()).collect();
    assert_eq!(phases, ["yaw", "pitch", "roll", "yaw"]);
    assert!(blocks[0]["m_ff"].is_array());
}

#[test]
fn exit_codes_follow_error_category() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.scn");
    assert_eq!(code(&run(&["validate", path_str(&missing)])), 9);

    let broken = dir.path().join("broken.scn");
    std::fs::write(&broken, "{ not json").unwrap();
    assert_eq!(code(&run(&["validate", path_str(&broken)])), 2);

    let unknown = variant(dir.path(), "unknown.scn", |d| d["meta"]["colour"] = json!("red"));
    assert_eq!(code(&run(&["validate", path_str(&unknown)])), 2);

    let structural = variant(dir.path(), "structural.scn", |d| {
        d["graph"]["constraint_neighbors"] = json!([[4, 3, 5], [5, 4, 6], [6, 4, 5]]);
    });
    assert_eq!(code(&run(&["validate", path_str(&structural)])), 3);

    let collocated = variant(dir.path(), "collocated.scn", |d| d["nominal"]["r"][3] = json!([-2, -1]));
    let out = run(&["validate", path_str(&collocated)]);
    assert_eq!(code(&out), 4);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("error[assumption]") && err.contains("follower 4"), "{err}");

    let weak = variant(dir.path(), "weak.scn", |d| {
        d["follower_mode"] = json!("position_only");
        d["gains"]["alpha2"] = json!(1.0);
    });
    assert_eq!(code(&run(&["validate", path_str(&weak)])), 0);
    let out = run(&["validate", "--strict", path_str(&weak)]);
    assert_eq!(code(&out), 6);
    assert!(String::from_utf8(out.stderr).unwrap().contains("26.2"));

    assert_eq!(code(&run(&["validate"])), 64);
    assert_eq!(code(&run(&["frobnicate"])), 64);
}

#[test]
fn batch_exit_code_is_the_most_basic_failure() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.scn");
    std::fs::write(&broken, "[]").unwrap();
    let missing = dir.path().join("missing.scn");
    let out = run(&[
        "validate",
        path_str(&scenario("paper_2d.scn")),
        path_str(&missing),
        path_str(&broken),
        "--jobs",
        "3",
    ]);
    assert_eq!(code(&out), 2);
}
