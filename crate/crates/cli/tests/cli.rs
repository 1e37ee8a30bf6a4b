use std::process::{Command, Output};

use innsbruck_core::lhv::{CriticalVisibility, Feasibility, LemmaReport, ParadoxReport};
use innsbruck_core::sampler::SampledEvent;
use innsbruck_core::stats::OutcomeTable;
use innsbruck_core::wire::parse_rational;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_innsbruck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_kind(args: &[&str]) -> (i32, String) {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} should fail");
    let v: Value = serde_json::from_slice(&out.stderr).expect("error envelope is json");
    (
        out.status.code().unwrap(),
        v["error"]["kind"].as_str().unwrap().to_string(),
    )
}

#[test]
fn expand_matches_golden_text() {
    assert_eq!(stdout(&["expand"]), include_str!("golden/expand.txt"));
}

#[test]
fn expand_labels_two_right_six_wrong() {
    let text = stdout(&["expand", "--format", "text"]);
    let labels: Vec<&str> = text
        .lines()
        .skip_while(|l| *l != "# terms")
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .collect();
    assert_eq!(labels.len(), 8);
    assert_eq!(labels.iter().filter(|l| l.starts_with("right ")).count(), 2);
    assert_eq!(
        labels
            .iter()
            .filter(|l| l.starts_with("wrong-pair:"))
            .count(),
        6
    );
}

#[test]
fn dump_circuit_matches_golden_text() {
    assert_eq!(
        stdout(&["dump-circuit"]),
        include_str!("golden/dump-circuit.txt")
    );
}

#[test]
fn critical_visibility_prints_one_half() {
    assert_eq!(
        stdout(&["critical-visibility", "--depth", "6"]).trim(),
        "V* = 1/2"
    );
    let c: CriticalVisibility = serde_json::from_str(&stdout(&[
        "critical-visibility",
        "--depth",
        "6",
        "--format",
        "json",
    ]))
    .unwrap();
    assert!(c.exact);
    assert_eq!(c.threshold, parse_rational("1/2").unwrap());
}

#[test]
fn empty_sample_stream() {
    let out = run(&["sample", "--pulses", "0"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn sample_stream_is_deterministic_and_parses() {
    let args = [
        "sample",
        "--pulses",
        "300000",
        "--seed",
        "11",
        "--loss-prob",
        "0.1",
    ];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    let events: Vec<SampledEvent> = a
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(!events.is_empty());
    let first: Value = serde_json::from_str(a.lines().next().unwrap()).unwrap();
    for key in ["pulse", "pattern", "class", "veto"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    assert_ne!(
        a,
        stdout(&[
            "sample",
            "--pulses",
            "300000",
            "--seed",
            "12",
            "--loss-prob",
            "0.1"
        ])
    );
}

#[test]
fn sample_csv_summary() {
    let csv = stdout(&[
        "sample", "--pulses", "100000", "--seed", "5", "--format", "csv",
    ]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("class,count"));
    assert!(lines.all(|l| l.split(',').count() == 2));
}

#[test]
fn correlations_csv_rows() {
    let csv = stdout(&["correlations", "--visibility", "1"]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "settings,r_g,r_h,r_z,probability");
    assert_eq!(rows.len(), 1 + 64);
    // Cells carry the joint probability; the right mass is 1/4.
    let xxx: Vec<&str> = rows
        .iter()
        .filter(|r| r.starts_with("xxx,"))
        .copied()
        .collect();
    assert!(xxx.contains(&"xxx,1,1,1,1/16"));
    assert!(xxx.contains(&"xxx,1,1,-1,0/1"));
}

#[test]
fn correlations_json_round_trips() {
    let text = stdout(&["correlations", "--visibility", "13/20", "--format", "json"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["visibility"], "13/20");
    assert_eq!(v["correlations"]["xxx"], "13/20");
    let tables: Vec<OutcomeTable> = serde_json::from_value(v["tables"].clone()).unwrap();
    assert_eq!(tables.len(), 8);
    assert_eq!(serde_json::to_value(&tables).unwrap(), v["tables"]);
    // Decimal and fraction spellings agree.
    assert_eq!(
        text,
        stdout(&["correlations", "--visibility", "0.65", "--format", "json"])
    );
}

#[test]
fn feasibility_at_observed_visibility() {
    let answer: Feasibility =
        serde_json::from_str(&stdout(&["lhv-feasibility", "--visibility", "13/20"])).unwrap();
    let Feasibility::Infeasible(cert) = answer else {
        panic!("13/20 must be infeasible")
    };
    let targets = innsbruck_core::stats::quantum_tables(&parse_rational("13/20").unwrap()).unwrap();
    assert!(cert.verify(&targets));

    let answer: Feasibility =
        serde_json::from_str(&stdout(&["lhv-feasibility", "--visibility", "1/2"])).unwrap();
    assert!(answer.is_feasible());
}

#[test]
fn paradox_and_lemma_reports_parse() {
    for args in [&["ghz-paradox"][..], &["ghz-paradox", "--conjugate"][..]] {
        let r: ParadoxReport = serde_json::from_str(&stdout(args)).unwrap();
        assert!(r.contradiction);
        assert_eq!(r.satisfying_all, 0);
    }
    let r: LemmaReport = serde_json::from_str(&stdout(&["lemma-check"])).unwrap();
    assert_eq!(r.total, 729);
    assert!(r.characterization_holds);
}

#[test]
fn classify_patterns() {
    assert_eq!(stdout(&["classify", "aT_H,g_H,h_V,z_V"]).trim(), "right");
    assert_eq!(
        stdout(&["classify", "aT_H,g_H=2,z_V"]).trim(),
        "wrong-pair:G,H"
    );
    assert_eq!(
        stdout(&["classify", "aT_H,veto_H,g_H,h_V,z_V"]).trim(),
        "right"
    );
    assert_eq!(
        stdout(&["classify", "aT_H,veto_H,g_H,h_V,z_V", "--redefined-trigger"]).trim(),
        "trigger-failure:vetoed"
    );
}

#[test]
fn filter_loss_single_trigger_photon() {
    let v: Value = serde_json::from_str(&stdout(&["filter-loss", "--a-h", "1"])).unwrap();
    assert!(v["redefined"]
        .as_object()
        .unwrap()
        .keys()
        .all(|k| k.starts_with("trigger-failure")));
    assert_eq!(
        stdout(&["filter-loss", "--a-h", "1", "--format", "text"]).trim(),
        "naive trigger rate 2/3, redefined trigger rate 0/1"
    );
}

#[test]
fn output_file_gets_artifact() {
    let dir = std::env::temp_dir().join(format!("innsbruck-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("expand.txt");
    let summary = stdout(&["expand", "--output", path.to_str().unwrap()]);
    assert_eq!(
        summary.trim(),
        "8 post-trigger terms: 2 right, 6 wrong-pair"
    );
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        include_str!("golden/expand.txt")
    );
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn errors_use_the_envelope() {
    assert_eq!(error_kind(&["no-such-command"]), (2, "usage".into()));
    assert_eq!(
        error_kind(&["lhv-feasibility", "--visibility", "thirteen"]),
        (1, "parse".into())
    );
    assert_eq!(
        error_kind(&["correlations", "--visibility", "3/2"]),
        (1, "visibility-range".into())
    );
    assert_eq!(error_kind(&["classify", "q_H"]), (1, "mode".into()));
    assert_eq!(
        error_kind(&["sample", "--pulses", "10", "--pair-prob", "1.5"]),
        (1, "config".into())
    );
    assert_eq!(
        error_kind(&["dump-circuit", "--format", "csv"]),
        (2, "unsupported-format".into())
    );
    assert_eq!(
        error_kind(&["expand", "--output", "/nonexistent-dir/x.txt"]),
        (1, "io".into())
    );
}
