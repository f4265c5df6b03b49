//! End-to-end tests of the `potts-flow` binary: exit codes, JSON shapes,
//! determinism, and the file formats.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_potts-flow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| {
        panic!(
            "stderr is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("potts-flow-test-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).expect("write temp file");
    path
}

const TRIANGLE_GRAPH: &str = "3 3\n0 1\n1 2\n2 0\n";
const TRIANGLE_GENS: &str = "1\n3 0 + 1 + 2 +\n";

#[test]
fn verify_all_on_grid_succeeds() {
    let out = run(&[
        "verify", "--suite", "all", "--graph", "grid:3x3", "--q", "2", "--x", "0.5",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = stdout_json(&out);
    assert_eq!(json["pass"], true);
    assert_eq!(json["schema"], 1);
    assert!(json["checks"].as_array().unwrap().len() >= 6);
}

#[test]
fn inadmissible_x_exits_2_with_threshold() {
    let out = run(&[
        "sample-flow",
        "--graph",
        "grid:3x3",
        "--q",
        "2",
        "--x",
        "0.1",
        "--delta",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "inadmissible");
    let threshold = err["error"]["threshold"].as_f64().unwrap();
    assert!((threshold - 0.6).abs() < 1e-12, "threshold = {threshold}");
}

#[test]
fn same_seed_gives_byte_identical_output() {
    let args = [
        "sample-flow",
        "--graph",
        "grid:3x3",
        "--q",
        "2",
        "--x",
        "0.9",
        "--delta",
        "0.01",
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let json = stdout_json(&a);
    assert_eq!(json["bound"]["steps"], 80);
    assert_eq!(json["steps"], 80);
    assert_eq!(json["flow"]["values"].as_array().unwrap().len(), 12);
    // A different seed changes the output.
    let c = run(&[
        "sample-flow",
        "--graph",
        "grid:3x3",
        "--q",
        "2",
        "--x",
        "0.9",
        "--delta",
        "0.01",
        "--seed",
        "8",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn sampling_commands_on_file_graph() {
    let graph = temp_file("triangle.txt", TRIANGLE_GRAPH);
    let gens = temp_file("triangle-gens.txt", TRIANGLE_GENS);
    let graph_s = graph.to_str().unwrap();
    let gens_s = gens.to_str().unwrap();

    let out = run(&[
        "sample-potts",
        "--graph",
        graph_s,
        "--gens",
        gens_s,
        "--q",
        "2",
        "--x",
        "0.5",
        "--delta",
        "0.1",
        "--seed",
        "3",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = stdout_json(&out);
    let spins = json["spins"].as_array().unwrap();
    assert_eq!(spins.len(), 3);
    assert!(spins.iter().all(|s| {
        let v = s.as_u64().unwrap();
        v == 1 || v == 2
    }));
    assert!((json["w"].as_f64().unwrap() - 3.0).abs() < 1e-12);

    let out = run(&[
        "sample-rc",
        "--graph",
        graph_s,
        "--gens",
        gens_s,
        "--q",
        "2",
        "--x",
        "0.5",
        "--delta",
        "0.1",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let json = stdout_json(&out);
    for e in json["edge_set"].as_array().unwrap() {
        assert!(e.as_u64().unwrap() < 3);
    }

    let out = run(&[
        "sample-joint",
        "--graph",
        "grid:2x2",
        "--q",
        "2",
        "--x",
        "0.95",
        "--delta",
        "0.1",
        "--seed",
        "5",
    ]);
    assert!(out.status.success());
    let json = stdout_json(&out);
    assert!(json["p"].as_f64().unwrap() > 0.0);
    assert!(json["alpha"].as_f64().unwrap() > 0.0);
    assert!(json["flow"]["values"].as_array().unwrap().len() == 4);
}

#[test]
fn estimate_z_potts_lands_near_the_oracle() {
    let graph = temp_file("tri-est.txt", TRIANGLE_GRAPH);
    let gens = temp_file("tri-est-gens.txt", TRIANGLE_GENS);
    let out = run(&[
        "estimate-z",
        "--model",
        "potts",
        "--graph",
        graph.to_str().unwrap(),
        "--gens",
        gens.to_str().unwrap(),
        "--q",
        "2",
        "--w",
        "3",
        "--epsilon",
        "0.3",
        "--seed",
        "1",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = stdout_json(&out);
    let zeta = json["zeta"].as_f64().unwrap();
    let ratio = zeta / 72.0;
    assert!(
        ((-0.3f64).exp()..=0.3f64.exp()).contains(&ratio),
        "zeta = {zeta}"
    );
    assert!((json["x"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(json["contraction_edges"].as_array().unwrap().len(), 2);
    // Determinism across thread counts.
    let four = run(&[
        "estimate-z",
        "--model",
        "potts",
        "--graph",
        graph.to_str().unwrap(),
        "--gens",
        gens.to_str().unwrap(),
        "--q",
        "2",
        "--w",
        "3",
        "--epsilon",
        "0.3",
        "--seed",
        "1",
        "--threads",
        "4",
    ]);
    let json4 = stdout_json(&four);
    assert_eq!(json4["zeta"], json["zeta"]);
}

#[test]
fn estimate_z_rejects_w_at_boundary() {
    let out = run(&[
        "estimate-z",
        "--model",
        "potts",
        "--graph",
        "grid:2x2",
        "--q",
        "2",
        "--w",
        "1",
        "--epsilon",
        "0.1",
        "--seed",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "inadmissible");
}

#[test]
fn tv_curve_emits_csv() {
    let out = run(&[
        "tv-curve", "--graph", "grid:2x2", "--q", "2", "--x", "0.3,0.9", "--t-max", "5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,tv"));
    let data: Vec<&str> = lines.collect();
    assert_eq!(data.len(), 2 * 6);
    assert!(data[0].starts_with("0,0.3,"));
}

#[test]
fn duality_command() {
    let out = run(&["duality", "--L", "1", "--q", "3", "--x", "0.7"]);
    assert!(out.status.success());
    let json = stdout_json(&out);
    assert_eq!(json["report"]["pass"], true);
    assert_eq!(json["report"]["n_states"], 3);
}

#[test]
fn io_errors_exit_1() {
    let out = run(&[
        "sample-flow",
        "--graph",
        "/nonexistent/graph.txt",
        "--q",
        "2",
        "--x",
        "0.9",
        "--delta",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "io");

    let bad = temp_file("bad-graph.txt", "2 1\n0\n");
    let out = run(&[
        "sample-flow",
        "--graph",
        bad.to_str().unwrap(),
        "--q",
        "2",
        "--x",
        "0.9",
        "--delta",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_generating_sets_are_rejected() {
    // Two glued triangles have a 2-dimensional cycle space; one triangle
    // alone is a valid flow but does not generate.
    let graph = temp_file("glued.txt", "4 5\n0 1\n1 2\n2 0\n1 3\n3 2\n");
    let partial = temp_file("partial-gens.txt", "1\n3 0 + 1 + 2 +\n");
    let out = run(&[
        "sample-flow",
        "--graph",
        graph.to_str().unwrap(),
        "--gens",
        partial.to_str().unwrap(),
        "--q",
        "2",
        "--x",
        "0.9",
        "--delta",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // An entry set violating the conservation law is not a flow at all.
    let not_a_flow = temp_file("notflow-gens.txt", "1\n2 0 + 1 -\n");
    let out = run(&[
        "sample-flow",
        "--graph",
        graph.to_str().unwrap(),
        "--gens",
        not_a_flow.to_str().unwrap(),
        "--q",
        "2",
        "--x",
        "0.9",
        "--delta",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_provides_defaults_and_flags_win() {
    let cfg = temp_file("config.toml", "q = 2\nx = 0.9\ndelta = 0.01\nseed = 4\n");
    let out = run(&[
        "sample-flow",
        "--config",
        cfg.to_str().unwrap(),
        "--graph",
        "grid:3x3",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = stdout_json(&out);
    assert_eq!(json["q"], 2);
    assert!((json["x"].as_f64().unwrap() - 0.9).abs() < 1e-12);
    assert_eq!(json["seed"], 4);

    // Command line overrides the file.
    let out = run(&[
        "sample-flow",
        "--config",
        cfg.to_str().unwrap(),
        "--graph",
        "grid:3x3",
        "--x",
        "0.95",
    ]);
    let json = stdout_json(&out);
    assert!((json["x"].as_f64().unwrap() - 0.95).abs() < 1e-12);

    // Unknown keys are rejected.
    let bad = temp_file("bad-config.toml", "qq = 2\n");
    let out = run(&[
        "sample-flow",
        "--config",
        bad.to_str().unwrap(),
        "--graph",
        "grid:3x3",
        "--q",
        "2",
        "--x",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn timings_are_opt_in() {
    let args = [
        "sample-flow",
        "--graph",
        "grid:2x2",
        "--q",
        "2",
        "--x",
        "0.9",
        "--delta",
        "0.1",
        "--seed",
        "1",
    ];
    let plain = stdout_json(&run(&args));
    assert!(plain.get("timings").is_none());
    let mut with = args.to_vec();
    with.push("--timings");
    let timed = stdout_json(&run(&with));
    assert!(timed["timings"]["wall_ms"].is_u64());
}

#[test]
fn steps_override_skips_the_bound_gate() {
    // x below the class threshold, but explicit --steps runs anyway.
    let out = run(&[
        "sample-flow",
        "--graph",
        "grid:3x3",
        "--q",
        "2",
        "--x",
        "0.5",
        "--delta",
        "0.01",
        "--steps",
        "100",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = stdout_json(&out);
    assert_eq!(json["steps"], 100);
    assert_eq!(json["bound"]["steps"], serde_json::Value::Null);
}
