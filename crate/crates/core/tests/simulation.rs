use mpfair_core::sim::{conservation_check, AccountingKey};
use mpfair_core::{builtin_scenario, parse_scenario, run_simulation, MergeMode, SimConfig};

fn quick(duration_ms: u64) -> SimConfig {
    SimConfig {
        duration_ns: duration_ms * 1_000_000,
        ..SimConfig::default()
    }
}

#[test]
fn zero_duration_produces_nothing() {
    let net = builtin_scenario("example1").unwrap().network().unwrap();
    let result = run_simulation(&net, &quick(0));
    assert!(result.trace.is_empty());
    assert!(result.steady.is_none());
    assert!(!result.converged);
}

#[test]
fn identical_seeds_give_identical_traces() {
    let net = builtin_scenario("example2").unwrap().network().unwrap();
    let a = run_simulation(&net, &quick(60));
    let b = run_simulation(&net, &quick(60));
    assert_eq!(a.trace.to_csv(), b.trace.to_csv());
    let c = run_simulation(&net, &SimConfig { seed: 2, ..quick(60) });
    assert_ne!(a.trace.to_csv(), c.trace.to_csv());
}

#[test]
fn single_source_fills_its_bottleneck() {
    let text = "\
switch A
link in src:S sw:A:0 100
link out sw:A:1 dst:D 40
vc V dst D sources S
route V A 0 -> 1
";
    let net = parse_scenario(text).unwrap().network().unwrap();
    let result = run_simulation(&net, &quick(200));
    let rate = result.steady.as_ref().unwrap().sources[0].mean_rate;
    let target = 40.0 * result.config.utilization;
    assert!((rate - target).abs() / target < 0.03, "rate {rate}");
    assert!(result.converged);
}

#[test]
fn trace_has_the_documented_header() {
    let net = builtin_scenario("example1").unwrap().network().unwrap();
    let csv = run_simulation(&net, &quick(5)).trace.to_csv();
    assert!(csv.starts_with("time_us,entity_kind,entity_id,metric,value\n"));
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 5));
}

#[test]
fn merge_points_conserve_rm_cells() {
    let net = builtin_scenario("example1").unwrap().network().unwrap();
    let result = run_simulation(&net, &quick(100));
    let reports = conservation_check(&result);
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert!(r.frm_conserved && r.copies_bounded, "{r:?}");
    }
}

#[test]
fn vc_merge_keeps_no_per_source_state() {
    let net = builtin_scenario("example2").unwrap().network().unwrap();
    let vc = run_simulation(&net, &quick(20));
    assert!(vc
        .accounting
        .iter()
        .all(|p| p.keys.iter().all(|(_, k)| *k != AccountingKey::Source)));
    assert!(vc.vp_source_rates.is_empty());

    let vp = run_simulation(
        &net,
        &SimConfig {
            merge_mode: MergeMode::VpMerge,
            ..quick(20)
        },
    );
    assert!(vp
        .accounting
        .iter()
        .any(|p| p.keys.iter().any(|(_, k)| *k == AccountingKey::Source)));
    assert!(!vp.vp_source_rates.is_empty());
}

#[test]
fn vc_merge_output_never_interleaves_packets() {
    let net = builtin_scenario("example1").unwrap().network().unwrap();
    let result = run_simulation(&net, &quick(100));
    assert_eq!(result.interleavings, 0);
}
