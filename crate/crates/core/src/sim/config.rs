use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::fairness::FairnessPolicy;
use crate::rate::Rate;
use crate::scenario::Scenario;
use crate::topology::{Network, SourceId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MergeAlgorithm {
    Turnaround,
    BitMark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MergeMode {
    /// Merged cells share one VC identifier; senders are indistinguishable.
    VcMerge,
    /// Merged at the path level; the VCI still identifies the sender.
    VpMerge,
}

/// How a Turnaround merge point folds a downstream BRM into its MER register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MerUpdate {
    #[default]
    Assign,
    Min,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

macro_rules! named_enum {
    ($ty:ty, $what:literal, $( $variant:path => $name:literal ),+ ) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $( $variant => $name ),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $ty {
            type Err = ConfigError;
            fn from_str(s: &str) -> Result<Self, ConfigError> {
                match s {
                    $( $name => Ok($variant), )+
                    other => Err(ConfigError(format!(concat!("unknown ", $what, " `{}`"), other))),
                }
            }
        }
    };
}

named_enum!(MergeAlgorithm, "merge algorithm",
    MergeAlgorithm::Turnaround => "turnaround", MergeAlgorithm::BitMark => "bitmark");
named_enum!(MergeMode, "merge mode", MergeMode::VcMerge => "vc", MergeMode::VpMerge => "vp");
named_enum!(MerUpdate, "MER update rule", MerUpdate::Assign => "assign", MerUpdate::Min => "min");

#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    /// Peak cell rate, Mbps.
    pub pcr: f64,
    /// Initial cell rate, Mbps. Defaults to `pcr / 30`.
    pub icr: Option<f64>,
    /// Cells per FRM cell.
    pub nrm: u32,
    pub start_ns: u64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            pcr: 150.0,
            icr: None,
            nrm: 32,
            start_ns: 0,
        }
    }
}

impl SourceConfig {
    pub fn initial_rate(&self) -> f64 {
        self.icr.unwrap_or(self.pcr / 30.0).min(self.pcr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub policy: FairnessPolicy,
    pub merge_alg: MergeAlgorithm,
    pub merge_mode: MergeMode,
    pub mer_update: MerUpdate,
    pub duration_ns: u64,
    /// Switch recomputation period.
    pub interval_ns: u64,
    /// Measurement window, in intervals.
    pub window: u32,
    /// Fraction of link capacity switches aim to fill.
    pub utilization: f64,
    /// Time over which a standing queue is to be drained.
    pub queue_drain_ns: u64,
    pub prop_delay_ns: u64,
    /// Data cells per packet.
    pub packet_cells: u32,
    /// Per-VC output buffer limit in cells; `None` is unbounded.
    pub queue_limit: Option<usize>,
    pub seed: u64,
    /// Randomize source start times within one FRM period.
    pub start_jitter: bool,
    pub record_trace: bool,
    pub default_source: SourceConfig,
    pub sources: BTreeMap<SourceId, SourceConfig>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            policy: FairnessPolicy::SourceBased,
            merge_alg: MergeAlgorithm::Turnaround,
            merge_mode: MergeMode::VcMerge,
            mer_update: MerUpdate::Assign,
            duration_ns: 500_000_000,
            interval_ns: 1_000_000,
            window: 4,
            utilization: 0.98,
            queue_drain_ns: 10_000_000,
            prop_delay_ns: 1_000,
            packet_cells: 8,
            queue_limit: None,
            seed: 1,
            start_jitter: true,
            record_trace: true,
            default_source: SourceConfig::default(),
            sources: BTreeMap::new(),
        }
    }
}

fn ms_to_ns(r: &Rate) -> u64 {
    (r.to_f64() * 1e6).round() as u64
}

impl SimConfig {
    /// Defaults overridden by the scenario's `param` lines. Values were
    /// range-checked by the parser.
    pub fn from_scenario(scenario: &Scenario) -> Result<SimConfig, ConfigError> {
        let mut cfg = SimConfig::default();
        let rate = |v: &str| v.parse::<Rate>().map_err(|e| ConfigError(e.to_string()));
        let int = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| ConfigError(format!("expected an integer, got `{v}`")))
        };
        for p in &scenario.params {
            let v = p.value.as_str();
            if let Some(source) = &p.source {
                let sc = cfg
                    .sources
                    .entry(source.clone())
                    .or_insert_with(|| cfg.default_source.clone());
                apply_source_param(sc, &p.key, v)?;
                continue;
            }
            match p.key.as_str() {
                "pcr" | "icr" | "nrm" | "start_ms" => {
                    apply_source_param(&mut cfg.default_source, &p.key, v)?;
                    for sc in cfg.sources.values_mut() {
                        apply_source_param(sc, &p.key, v)?;
                    }
                }
                "duration_ms" => cfg.duration_ns = ms_to_ns(&rate(v)?),
                "interval_ms" => cfg.interval_ns = ms_to_ns(&rate(v)?).max(1),
                "window" => cfg.window = int(v)?.max(1) as u32,
                "utilization" => cfg.utilization = rate(v)?.to_f64(),
                "queue_drain_ms" => cfg.queue_drain_ns = ms_to_ns(&rate(v)?).max(1),
                "prop_delay_us" => cfg.prop_delay_ns = (rate(v)?.to_f64() * 1e3).round() as u64,
                "packet_cells" => cfg.packet_cells = int(v)?.max(1) as u32,
                "queue_limit" => {
                    cfg.queue_limit = match int(v)? {
                        0 => None,
                        n => Some(n as usize),
                    }
                }
                "seed" => cfg.seed = int(v)?,
                "merge_alg" => cfg.merge_alg = v.parse()?,
                "merge_mode" => cfg.merge_mode = v.parse()?,
                "mer_update" => cfg.mer_update = v.parse()?,
                other => return Err(ConfigError(format!("unknown parameter `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn source(&self, id: &SourceId) -> &SourceConfig {
        self.sources.get(id).unwrap_or(&self.default_source)
    }

    /// Per-source configuration with PCR clamped to the access link rate.
    pub(crate) fn effective_source(&self, network: &Network, id: &SourceId) -> SourceConfig {
        let mut sc = self.source(id).clone();
        if let Some(link) = network.topology().source_access(id) {
            sc.pcr = sc.pcr.min(link.capacity.to_f64());
        }
        sc
    }
}

fn apply_source_param(sc: &mut SourceConfig, key: &str, v: &str) -> Result<(), ConfigError> {
    let rate = || {
        v.parse::<Rate>()
            .map(|r| r.to_f64())
            .map_err(|e| ConfigError(e.to_string()))
    };
    match key {
        "pcr" => sc.pcr = rate()?,
        "icr" => sc.icr = Some(rate()?),
        "nrm" => {
            sc.nrm = v
                .parse::<u32>()
                .map_err(|_| ConfigError(format!("expected an integer, got `{v}`")))?
                .max(2)
        }
        "start_ms" => sc.start_ns = (rate()? * 1e6).round() as u64,
        other => return Err(ConfigError(format!("`{other}` is not a per-source parameter"))),
    }
    Ok(())
}
