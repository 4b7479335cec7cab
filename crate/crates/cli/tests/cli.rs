use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_snn-dfsynth"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn snn-dfsynth")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Small workload and 2x2 hardware shared by several tests.
fn setup(dir: &Path) {
    ok(dir, &["workload", "gen", "--topology", "12,6,3", "--rate", "150", "--duration-ms", "100", "--seed", "4", "-o", "w.json"]);
    ok(dir, &["hw", "preset", "--mesh", "2x2", "--crossbar", "16", "-o", "hw.json"]);
}

#[test]
fn stage_by_stage_matches_one_shot_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    setup(d);
    ok(d, &["synthesize", "w.json", "hw.json", "--eta", "3", "--seed", "9", "--artifacts", "art", "--format", "json", "-o", "report.json"]);

    ok(d, &["decompose", "w.json", "-o", "d.json", "--dot", "d.dot"]);
    assert_eq!(json(&d.join("d.json")), json(&d.join("art/dsnn.json")));
    ok(d, &["cluster", "d.json", "--crossbar", "16", "-o", "c.json"]);
    assert_eq!(json(&d.join("c.json")), json(&d.join("art/csnn.json")));
    ok(d, &["sdfg", "build", "c.json", "-o", "g.json", "--dot", "g.dot"]);
    assert_eq!(json(&d.join("g.json")), json(&d.join("art/sdfg.json")));
    assert!(std::fs::read_to_string(d.join("g.dot")).unwrap().starts_with("digraph"));
    ok(d, &["sdfg", "break-cycles", "g.json", "-o", "ga.json"]);
    assert_eq!(json(&d.join("ga.json")), json(&d.join("art/sdfg_acyclic.json")));

    ok(d, &["map", "art/sdfg.json", "hw.json", "--eta", "3", "--seed", "9", "-o", "front.json"]);
    assert_eq!(json(&d.join("front.json")), json(&d.join("art/front.json")));
    ok(d, &["schedule", "art/sdfg.json", "hw.json", "art/mapping.json", "-o", "order.json"]);
    assert_eq!(json(&d.join("order.json")), json(&d.join("art/order.json")));

    let trace = ok(d, &["simulate", "art/sdfg.json", "hw.json", "art/mapping.json", "--order", "order.json", "--format", "json"]);
    assert_eq!(trace, std::fs::read_to_string(d.join("art/trace.jsonl")).unwrap());

    let report = json(&d.join("report.json"));
    assert_eq!(report["throughput_per_tick"], report["simulated_throughput_per_tick"]);
    for t in report["tiles"].as_array().unwrap() {
        for key in ["neuron_pct", "synapse_pct", "buffer_pct", "connection_pct", "bandwidth_pct"] {
            let v = t[key].as_f64().unwrap();
            assert!((0.0..=100.0).contains(&v), "{key} = {v}");
        }
    }
}

#[test]
fn reports_are_deterministic_given_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    setup(d);
    let strip = |s: String| {
        let mut v: Value = serde_json::from_str(&s).unwrap();
        v.as_object_mut().unwrap().remove("synthesis_seconds");
        v
    };
    let args = ["synthesize", "w.json", "hw.json", "--eta", "4", "--seed", "21", "--format", "json"];
    let a = strip(ok(d, &args));
    let b = strip(ok(d, &["--jobs", "1"].iter().chain(&args).copied().collect::<Vec<_>>()));
    assert_eq!(a, b);
}

#[test]
fn analyze_prints_cycle_mean_and_critical_cycle() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("g.json"),
        r#"{"actors":[{"id":0,"exec_time":3},{"id":1,"exec_time":4}],
            "channels":[{"src":0,"dst":1,"prod":1,"cons":1,"tokens":0},
                        {"src":1,"dst":0,"prod":1,"cons":1,"tokens":1}]}"#,
    )
    .unwrap();
    let text = ok(d, &["analyze", "g.json"]);
    assert!(text.contains("mcm 7"), "{text}");
    assert!(text.contains("critical cycle [0, 1]"), "{text}");
    let v: Value = serde_json::from_str(&ok(d, &["analyze", "g.json", "--format", "json"])).unwrap();
    assert_eq!(v["throughput_bound"], "1/7");
}

#[test]
fn exit_codes_follow_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    std::fs::write(d.join("bad.json"), "{\"neurons\": [").unwrap();
    let out = run(d, &["workload", "validate", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    std::fs::write(
        d.join("dead.json"),
        r#"{"actors":[{"id":0,"exec_time":1},{"id":1,"exec_time":1}],
            "channels":[{"src":0,"dst":1,"prod":1,"cons":1},{"src":1,"dst":0,"prod":1,"cons":1}]}"#,
    )
    .unwrap();
    assert_eq!(run(d, &["sdfg", "check", "dead.json"]).status.code(), Some(3));

    assert_eq!(run(d, &["hw", "preset", "--mesh", "2by2"]).status.code(), Some(2));
    assert_eq!(run(d, &["analyze", "missing.json"]).status.code(), Some(2));
}

#[test]
fn empty_workload_exits_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["hw", "preset", "--mesh", "1x1", "--crossbar", "8", "-o", "hw.json"]);
    std::fs::write(d.join("e.json"), r#"{"neurons":[],"synapses":[],"spikes":{},"duration_ms":10}"#).unwrap();
    let out = run(d, &["synthesize", "e.json", "hw.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nothing to synthesize"));
}

#[test]
fn conversion_reports_output_rates() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("mlp.json"),
        r#"{"layers":[3,2],"weights":[[[0.2,0.2,0.2],[0.1,0.1,0.1]]],"biases":[[0,0]]}"#,
    )
    .unwrap();
    let csv = ok(d, &["workload", "convert", "mlp.json", "--input", "1,1,1", "--format", "text"]);
    let rates: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(rates.len(), 2);
    assert!((rates[0] / rates[1] - 2.0).abs() < 0.1, "{csv}");

    ok(d, &["workload", "convert", "mlp.json", "--input", "1,1,1", "-o", "w.json"]);
    assert!(ok(d, &["workload", "validate", "w.json"]).starts_with("ok:"));

    std::fs::write(
        d.join("sig.json"),
        r#"{"layers":[1,1],"weights":[[[1.0]]],"biases":[[0]],"activations":["sigmoid"]}"#,
    )
    .unwrap();
    assert_eq!(run(d, &["workload", "convert", "sig.json", "--input", "1"]).status.code(), Some(2));
}

#[test]
fn map_csv_lists_front() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    setup(d);
    ok(d, &["decompose", "w.json", "-o", "d.json"]);
    ok(d, &["cluster", "d.json", "--crossbar", "16", "--algo", "mincut", "-o", "c.json"]);
    ok(d, &["sdfg", "build", "c.json", "-o", "g.json"]);
    let csv = ok(d, &["map", "g.json", "hw.json", "--eta", "3", "--objective", "throughput", "--format", "csv"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("period,throughput,energy_pj,lambda,tile_of"));
    assert!(lines.count() >= 1);
}
