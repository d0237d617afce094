use std::fmt::Write;

use super::config::{MergeAlgorithm, SimConfig};
use super::engine::Simulator;
use crate::scenario::{parse_scenario, Scenario};
use crate::topology::SourceId;

/// Feedback delay seen by the deepest leaf of a `levels`-deep merge chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub algorithm: MergeAlgorithm,
    pub levels: usize,
    /// Mean time from an FRM to the next BRM, µs.
    pub brm_rtt_us: Option<f64>,
    /// Mean time from an FRM to the first BRM carrying feedback the
    /// destination produced after that FRM was sent, µs.
    pub feedback_age_us: Option<f64>,
}

impl ProbeRow {
    pub const CSV_HEADER: &'static str = "algorithm,levels,brm_rtt_us,feedback_age_us";

    pub fn to_csv_line(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
        format!(
            "{},{},{},{}",
            self.algorithm,
            self.levels,
            fmt(self.brm_rtt_us),
            fmt(self.feedback_age_us)
        )
    }
}

/// Source whose feedback the probe measures.
pub const PROBE_LEAF: &str = "L0";

/// A chain of `levels` merge points P1..Pk toward one destination. Leaf L0
/// and L1 meet at P1; leaf Li joins at Pi.
pub fn probe_network(levels: usize) -> Scenario {
    let levels = levels.max(1);
    let mut text = String::new();
    for i in 1..=levels {
        let _ = writeln!(text, "switch P{i}");
    }
    let _ = writeln!(text, "link a_L0 src:L0 sw:P1:1 150");
    for i in 1..=levels {
        let _ = writeln!(text, "link a_L{i} src:L{i} sw:P{i}:0 150");
        if i < levels {
            let _ = writeln!(text, "link c{i} sw:P{i}:2 sw:P{}:1 150", i + 1);
        }
    }
    let _ = writeln!(text, "link root sw:P{levels}:2 dst:R 150");
    let leaves: Vec<String> = (0..=levels).map(|i| format!("L{i}")).collect();
    let _ = writeln!(text, "vc T dst R sources {}", leaves.join(","));
    for i in 1..=levels {
        let _ = writeln!(text, "route T P{i} 0 -> 2");
        let _ = writeln!(text, "route T P{i} 1 -> 2");
    }
    parse_scenario(&text).expect("generated probe scenario parses")
}

/// Run the merge chain at each depth under both merge algorithms. Sources
/// start together with no jitter.
pub fn feedback_delay_probe(levels: &[usize], base: &SimConfig) -> Vec<ProbeRow> {
    let mut rows = Vec::new();
    for algorithm in [MergeAlgorithm::Turnaround, MergeAlgorithm::BitMark] {
        for &k in levels {
            let network = probe_network(k)
                .network()
                .expect("generated probe network is valid");
            let config = SimConfig {
                merge_alg: algorithm,
                start_jitter: false,
                record_trace: false,
                ..base.clone()
            };
            let result = Simulator::new(&network, &config).run();
            let leaf = result
                .sources
                .iter()
                .position(|s| s == &SourceId::from(PROBE_LEAF))
                .expect("probe leaf exists");
            let stats = &result.feedback[leaf];
            rows.push(ProbeRow {
                algorithm,
                levels: k,
                brm_rtt_us: stats.mean_rtt_us(),
                feedback_age_us: stats.mean_age_us(),
            });
        }
    }
    rows
}
