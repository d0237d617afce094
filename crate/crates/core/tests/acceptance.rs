//! End-to-end acceptance checks, one report line per criterion.

use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mpfair_core::fairness::{check_certificate, find_local_improvement};
use mpfair_core::scenario::random::{random_scenario, RandomShape};
use mpfair_core::scenario::{emit_allocation, OutputFormat};
use mpfair_core::sim::{
    conservation_check, count_interleavings, feedback_delay_probe, AccountingKey, Cell, CellKind, MergeQueue,
    QueueUnit,
};
use mpfair_core::{
    builtin_scenario, compare_policies, run_simulation, verify_maxmin, water_fill, FairnessPolicy,
    MergeAlgorithm, MergeMode, Network, Rate, SimConfig, SimulationResult,
};

type Outcome = Result<String, String>;

fn network(name: &str) -> Network {
    builtin_scenario(name)
        .expect("builtin exists")
        .network()
        .expect("builtin is valid")
}

fn r(n: i64, d: i64) -> Rate {
    Rate::new(n, d)
}

fn golden(name: &str) -> [(FairnessPolicy, Vec<Rate>); 4] {
    use FairnessPolicy::*;
    match name {
        "example1" => [
            (SourceBased, vec![r(75, 2); 4]),
            (VcSource, vec![r(25, 1), r(25, 1), r(25, 1), r(75, 1)]),
            (FlowBased, vec![r(25, 1), r(25, 1), r(50, 1), r(50, 1)]),
            (VcFlow, vec![r(75, 4), r(75, 4), r(75, 2), r(75, 1)]),
        ],
        "example2" => [
            (
                SourceBased,
                vec![r(50, 3), r(50, 3), r(175, 3), r(175, 3), r(50, 3)],
            ),
            (VcSource, vec![r(25, 2), r(25, 2), r(125, 2), r(125, 2), r(25, 1)]),
            (FlowBased, vec![r(50, 3), r(50, 3), r(125, 3), r(75, 1), r(50, 3)]),
            (VcFlow, vec![r(25, 2), r(25, 2), r(50, 1), r(75, 1), r(25, 1)]),
        ],
        other => panic!("no golden vectors for {other}"),
    }
}

/// Reference rates as printed, two decimals.
fn golden_decimals(name: &str) -> [&'static str; 4] {
    match name {
        "example1" => [
            "37.50 37.50 37.50 37.50",
            "25.00 25.00 25.00 75.00",
            "25.00 25.00 50.00 50.00",
            "18.75 18.75 37.50 75.00",
        ],
        _ => [
            "16.67 16.67 58.33 58.33 16.67",
            "12.50 12.50 62.50 62.50 25.00",
            "16.67 16.67 41.67 75.00 16.67",
            "12.50 12.50 50.00 75.00 25.00",
        ],
    }
}

fn golden_vectors() -> Outcome {
    let mut checked = 0;
    for name in ["example1", "example2"] {
        let net = network(name);
        let comparison = compare_policies(&net);
        let table = emit_allocation(&comparison, OutputFormat::Table, false);
        for ((policy, expected), decimals) in golden(name).iter().zip(golden_decimals(name)) {
            let (alloc, _) = water_fill(&net, *policy);
            let got: Vec<Rate> = alloc.iter().map(|(_, r)| r.clone()).collect();
            if &got != expected {
                return Err(format!("{name} {policy}: got {got:?}"));
            }
            let row = table
                .lines()
                .find(|l| l.split_whitespace().next() == Some(policy.name()))
                .ok_or_else(|| format!("{name}: no table row for {policy}"))?;
            let cells: Vec<&str> = row.split_whitespace().skip(1).collect();
            if cells.join(" ") != decimals {
                return Err(format!("{name} {policy}: table row `{row}`"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} vectors exact, table decimals match"))
}

fn vc_sums() -> Outcome {
    let net = network("example1");
    let (alloc, _) = water_fill(&net, FairnessPolicy::SourceBased);
    let sums: Vec<Rate> = alloc.vc_sums(&net).into_iter().map(|(_, r)| r).collect();
    let expected = vec![r(225, 2), r(75, 2)];
    if sums == expected && sums[0] == sums[1].mul_ratio(3, 1) {
        Ok(format!("VC sums {} and {}", sums[0], sums[1]))
    } else {
        Err(format!("VC sums {sums:?}"))
    }
}

fn point_to_point_degeneracy() -> Outcome {
    for seed in 0..200 {
        let net = random_scenario(seed, RandomShape::POINT_TO_POINT)
            .network()
            .map_err(|e| e.to_string())?;
        let comparison = compare_policies(&net);
        let first = &comparison.rows[0].allocation;
        if let Some(row) = comparison.rows.iter().find(|row| &row.allocation != first) {
            return Err(format!("seed {seed}: {} differs", row.policy));
        }
    }
    Ok("200 scenarios, four policies identical".into())
}

fn oracle_certification() -> Outcome {
    let mut runs = 0;
    for seed in 0..200 {
        let net = random_scenario(seed, RandomShape::MULTIPOINT)
            .network()
            .map_err(|e| e.to_string())?;
        for policy in FairnessPolicy::ALL {
            let (alloc, certificate) = water_fill(&net, policy);
            let report = verify_maxmin(&net, policy, &alloc);
            if !report.passed() {
                return Err(format!("seed {seed} {policy}: {:?}", report.violations));
            }
            if let Err(e) = check_certificate(&net, policy, &alloc, &certificate) {
                return Err(format!("seed {seed} {policy}: certificate {e:?}"));
            }
            if let Some(better) = find_local_improvement(&net, policy, &alloc) {
                return Err(format!("seed {seed} {policy}: improvement {better:?}"));
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} allocations certified, no ε-improvement"))
}

fn convergence_runs() -> Vec<(String, MergeAlgorithm, SimulationResult, Vec<f64>)> {
    let mut runs = Vec::new();
    for name in ["example1", "example2"] {
        let net = network(name);
        let expected: Vec<f64> = golden(name)[0].1.iter().map(Rate::to_f64).collect();
        for alg in [MergeAlgorithm::Turnaround, MergeAlgorithm::BitMark] {
            let config = SimConfig {
                policy: FairnessPolicy::SourceBased,
                merge_alg: alg,
                record_trace: false,
                ..SimConfig::default()
            };
            runs.push((
                name.to_string(),
                alg,
                run_simulation(&net, &config),
                expected.clone(),
            ));
        }
    }
    runs
}

fn distributed_convergence(runs: &[(String, MergeAlgorithm, SimulationResult, Vec<f64>)]) -> Outcome {
    let (mut worst_err, mut worst_amp) = (0.0f64, 0.0f64);
    for (name, alg, result, expected) in runs {
        let steady = result
            .steady
            .as_ref()
            .ok_or_else(|| format!("{name} {alg}: no steady state"))?;
        for (summary, want) in steady.sources.iter().zip(expected) {
            let err = (summary.mean_rate - want).abs() / want;
            worst_err = worst_err.max(err);
            worst_amp = worst_amp.max(summary.amplitude);
            if err >= 0.05 || summary.amplitude >= 0.10 {
                return Err(format!(
                    "{name} {alg} {}: {:.3} Mbps vs {want:.3}, amplitude {:.3}",
                    summary.source, summary.mean_rate, summary.amplitude
                ));
            }
        }
    }
    Ok(format!(
        "{} runs, worst error {:.2}%, worst amplitude {:.2}%",
        runs.len(),
        worst_err * 100.0,
        worst_amp * 100.0
    ))
}

fn rm_conservation(runs: &[(String, MergeAlgorithm, SimulationResult, Vec<f64>)]) -> Outcome {
    let mut points = 0;
    for (name, alg, result, _) in runs {
        for report in conservation_check(result) {
            if !report.passed() {
                return Err(format!("{name} {alg}: {report:?}"));
            }
            points += 1;
        }
    }
    if points == 0 {
        return Err("no merge points observed".into());
    }
    Ok(format!("{points} merge-point reports conserve FRMs and data"))
}

fn cell(origin: usize, kind: CellKind) -> Cell {
    Cell {
        kind,
        vc: 0,
        origin,
        er: 0.0,
        ccr: 0.0,
        sent_at: 0,
        root_time: None,
    }
}

fn non_interleaving() -> Outcome {
    const PACKETS: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut pending: Vec<Vec<Cell>> = vec![Vec::new(); 3];
    for p in 0..PACKETS {
        let flow = rng.gen_range(0..3);
        let len = rng.gen_range(1..=16);
        for i in 0..len {
            pending[flow].push(cell(flow, CellKind::Data { eom: i + 1 == len }));
        }
        if p % 7 == 0 {
            pending[flow].push(cell(flow, CellKind::Frm));
        }
    }
    let total: usize = pending.iter().map(Vec::len).sum();
    for cells in &mut pending {
        cells.reverse();
    }

    let mut queue: MergeQueue<usize, Cell> = MergeQueue::new(true, None);
    let mut out: Vec<(usize, bool)> = Vec::with_capacity(total);
    while out.len() < total {
        let arrive = rng.gen_bool(0.5) && pending.iter().any(|p| !p.is_empty());
        if arrive {
            let flow = loop {
                let f = rng.gen_range(0..3);
                if !pending[f].is_empty() {
                    break f;
                }
            };
            queue.enqueue(flow, pending[flow].pop().expect("non-empty"));
        } else if let Some((flow, c)) = queue.dequeue() {
            out.push((flow, c.closes_unit()));
        }
    }
    let interleavings = count_interleavings(&out);
    if interleavings == 0 && queue.drops == 0 {
        Ok(format!("{PACKETS} packets, {total} cells, 0 interleavings"))
    } else {
        Err(format!("{interleavings} interleavings, {} drops", queue.drops))
    }
}

fn accounting_constraint() -> Outcome {
    let mut ports = 0;
    for name in ["example1", "example2"] {
        let net = network(name);
        for policy in FairnessPolicy::ALL {
            for alg in [MergeAlgorithm::Turnaround, MergeAlgorithm::BitMark] {
                let config = SimConfig {
                    policy,
                    merge_alg: alg,
                    merge_mode: MergeMode::VcMerge,
                    duration_ns: 20_000_000,
                    record_trace: false,
                    ..SimConfig::default()
                };
                let result = run_simulation(&net, &config);
                for port in &result.accounting {
                    if let Some((what, _)) = port.keys.iter().find(|(_, k)| *k == AccountingKey::Source) {
                        return Err(format!(
                            "{name} {policy} {alg}: {} port {} keys `{what}` by source",
                            port.switch, port.port
                        ));
                    }
                    ports += 1;
                }
                if !result.vp_source_rates.is_empty() {
                    return Err(format!("{name} {policy} {alg}: per-source rates reported"));
                }
            }
        }
    }
    Ok(format!("{ports} port states, none keyed by source"))
}

fn depth_probe() -> Outcome {
    let rows = feedback_delay_probe(&[1, 2, 4, 8], &SimConfig::default());
    let series = |alg: MergeAlgorithm| -> Vec<Option<f64>> {
        rows.iter()
            .filter(|r| r.algorithm == alg)
            .map(|r| r.feedback_age_us)
            .collect()
    };
    let fmt = |v: &[Option<f64>]| {
        v.iter()
            .map(|x| x.map_or("-".to_string(), |x| format!("{x:.1}")))
            .collect::<Vec<_>>()
            .join("/")
    };
    let turnaround = series(MergeAlgorithm::Turnaround);
    let bitmark = series(MergeAlgorithm::BitMark);
    let summary = format!(
        "feedback age µs at depths 1/2/4/8: turnaround {}, bitmark {}",
        fmt(&turnaround),
        fmt(&bitmark)
    );
    let values: Option<Vec<f64>> = turnaround.into_iter().collect();
    match values {
        Some(v) if v.windows(2).all(|w| w[0] <= w[1]) => Ok(summary),
        _ => Err(summary),
    }
}

fn main() -> ExitCode {
    let runs = convergence_runs();
    let results: [(&str, Outcome); 9] = [
        ("golden vectors", golden_vectors()),
        ("derived VC sums", vc_sums()),
        ("point-to-point degeneracy", point_to_point_degeneracy()),
        ("oracle certification", oracle_certification()),
        ("distributed convergence", distributed_convergence(&runs)),
        ("RM conservation", rm_conservation(&runs)),
        ("non-interleaving", non_interleaving()),
        ("accounting constraint", accounting_constraint()),
        ("depth probe", depth_probe()),
    ];
    let mut failed = 0;
    for (i, (label, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {} {label}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {label}: FAIL ({detail})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
