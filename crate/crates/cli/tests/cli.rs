use std::fs;
use std::process::{Command, Output};

fn mpfair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpfair"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn allocate_prints_rounded_rates() {
    let o = mpfair(&[
        "allocate",
        "--scenario",
        "builtin:example1",
        "--policy",
        "vc-flow",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    let cells: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(cells, ["vc-flow", "18.75", "18.75", "37.50", "75.00"]);

    let o = mpfair(&[
        "allocate",
        "--scenario",
        "builtin:example2",
        "--policy",
        "vc-source",
    ]);
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(row.ends_with("12.50  12.50  62.50  62.50  25.00"), "{row}");
}

#[test]
fn csv_output_is_exact() {
    let o = mpfair(&[
        "allocate",
        "--scenario",
        "builtin:example2",
        "--policy",
        "flow",
        "--format",
        "csv",
    ]);
    assert_eq!(
        stdout(&o),
        "policy,S1,S2,S3,S4,SA\nflow,50/3,50/3,125/3,75,50/3\n"
    );
}

#[test]
fn unknown_policy_is_a_usage_error() {
    let o = mpfair(&["allocate", "--scenario", "builtin:example1", "--policy", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn scenario_errors_exit_1_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    fs::write(&path, "switch A\nvc M dst D sources\n").unwrap();
    let o = mpfair(&["flows", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = mpfair(&["flows", "--scenario", "builtin:nope"]);
    assert_eq!(o.status.code(), Some(1));
    let o = mpfair(&["flows"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flows_reports_three_on_the_shared_link() {
    let o = mpfair(&["flows", "--scenario", "builtin:example1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).lines().any(|l| l.starts_with("LINK3: 3")),
        "{}",
        stdout(&o)
    );
}

#[test]
fn compare_writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.jsonl");
    let o = mpfair(&[
        "compare",
        "--scenario",
        "builtin:example1",
        "--format",
        "json-lines",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(
        text.lines()
            .next()
            .unwrap()
            .contains(r#""vc_sums":{"M":"225/2","A":"75/2"}"#),
        "{text}"
    );
}

#[test]
fn verify_accepts_the_allocation_and_rejects_an_edit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("alloc.csv");
    let o = mpfair(&[
        "allocate",
        "--scenario",
        "builtin:example2",
        "--policy",
        "flow",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let p = path.to_str().unwrap();

    let o = mpfair(&[
        "verify",
        "--scenario",
        "builtin:example2",
        "--policy",
        "flow",
        "--alloc",
        p,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("certified"));

    let edited = fs::read_to_string(&path).unwrap().replace("125/3", "60");
    fs::write(&path, edited).unwrap();
    let o = mpfair(&[
        "verify",
        "--scenario",
        "builtin:example2",
        "--policy",
        "flow",
        "--alloc",
        p,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("link LINK3 overloaded"), "{}", stdout(&o));

    let o = mpfair(&[
        "verify",
        "--scenario",
        "builtin:example2",
        "--policy",
        "flow",
        "--alloc",
        "/nonexistent",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn zero_duration_simulation_exits_3_with_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = mpfair(&[
        "simulate",
        "--scenario",
        "builtin:example1",
        "--duration-ms",
        "0",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(
        fs::read_to_string(trace).unwrap(),
        "time_us,entity_kind,entity_id,metric,value\n"
    );
}

#[test]
fn simulation_converges_near_the_fair_rates() {
    let o = mpfair(&[
        "simulate",
        "--scenario",
        "builtin:example1",
        "--policy",
        "source",
        "--merge-alg",
        "turnaround",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .take_while(|l| !l.is_empty() && !l.starts_with("switch"))
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 4, "{text}");
    for row in rows {
        let rate: f64 = row[1].parse().unwrap();
        assert!((rate - 37.5).abs() / 37.5 < 0.05, "{row:?}");
    }
}

#[test]
fn vp_merge_reports_per_source_rates_at_switches() {
    let args = [
        "simulate",
        "--scenario",
        "builtin:example1",
        "--merge-mode",
        "vp",
        "--duration-ms",
        "100",
        "--seed",
        "4",
    ];
    let a = mpfair(&args);
    let text = stdout(&a);
    assert!(text.contains("measured_mbps"), "{text}");
    let b = mpfair(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn probe_depth_emits_both_algorithms() {
    let o = mpfair(&[
        "probe-depth",
        "--levels",
        "1,2",
        "--duration-ms",
        "50",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "algorithm,levels,brm_rtt_us,feedback_age_us");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("turnaround,1,") && lines[4].starts_with("bitmark,2,"));

    let o = mpfair(&["probe-depth", "--levels", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
