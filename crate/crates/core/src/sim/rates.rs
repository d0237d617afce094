//! Switch-side rate accounting and explicit-rate computation.
//!
//! Under VC merge a switch sees only VCs, flows (VC and input port) and
//! anonymous RM cells; under VP merge it can also key state by source.
//! The two modes are separate types so the VC-merge state cannot hold
//! anything keyed by source.

use std::collections::{BTreeMap, VecDeque};

use super::cell::{Cell, CellKind, CELL_BITS};
use super::config::MergeMode;
use crate::fairness::FairnessPolicy;
use crate::topology::PortId;

/// Max-min level for `entities` given as `(rate, weight)` pairs sharing
/// `capacity`. When the entities already fit, the largest may grow into
/// the slack.
pub fn water_level(entities: &[(f64, f64)], capacity: f64) -> f64 {
    let mut sorted: Vec<(f64, f64)> = entities.iter().copied().filter(|&(_, w)| w > 0.0).collect();
    if sorted.is_empty() {
        return capacity;
    }
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = sorted.iter().map(|(r, w)| r * w).sum();
    let largest = sorted.last().map(|e| e.0).unwrap_or(0.0);
    if total < capacity {
        return capacity - total + largest;
    }
    let mut remaining = capacity;
    let mut weight: f64 = sorted.iter().map(|e| e.1).sum();
    for &(rate, w) in &sorted {
        if rate * weight <= remaining {
            remaining -= rate * w;
            weight -= w;
        } else {
            break;
        }
    }
    if weight <= f64::EPSILON {
        largest
    } else {
        remaining / weight
    }
}

/// Cell counts per key over a sliding window of whole intervals.
#[derive(Debug, Clone)]
struct RateMeter<K: Ord> {
    current: BTreeMap<K, u64>,
    history: VecDeque<BTreeMap<K, u64>>,
    window: usize,
}

impl<K: Ord + Clone> RateMeter<K> {
    fn new(window: usize) -> Self {
        RateMeter {
            current: BTreeMap::new(),
            history: VecDeque::new(),
            window: window.max(1),
        }
    }

    fn add(&mut self, key: K) {
        *self.current.entry(key).or_default() += 1;
    }

    fn roll(&mut self) {
        self.history.push_back(std::mem::take(&mut self.current));
        while self.history.len() > self.window {
            self.history.pop_front();
        }
    }

    /// Mbps per key over the completed intervals in the window.
    fn rates(&self, interval_ns: u64) -> BTreeMap<K, f64> {
        let mut cells: BTreeMap<K, u64> = BTreeMap::new();
        for bucket in &self.history {
            for (k, n) in bucket {
                *cells.entry(k.clone()).or_default() += n;
            }
        }
        let span_us = (self.history.len().max(1) as f64) * interval_ns as f64 / 1000.0;
        cells
            .into_iter()
            .map(|(k, n)| (k, n as f64 * CELL_BITS / span_us))
            .collect()
    }
}

/// A forward RM cell seen on an output port. It stands for the `nrm`
/// cells its sender emits at `ccr` from the moment it was seen.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RmSample {
    at: u64,
    ccr: f64,
    span_ns: f64,
}

impl RmSample {
    fn weight(&self, from: u64, to: u64) -> f64 {
        let start = self.at as f64;
        let end = start + self.span_ns;
        let overlap = end.min(to as f64) - start.max(from as f64);
        (overlap / (to - from) as f64).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct VcMergeAccounting {
    vc_cells: RateMeter<usize>,
    flow_cells: RateMeter<(usize, PortId)>,
    rm_samples: BTreeMap<usize, VecDeque<RmSample>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LastRm {
    vc: usize,
    at: u64,
    ccr: f64,
    span_ns: f64,
}

#[derive(Debug, Clone)]
pub struct VpMergeAccounting {
    vc_cells: RateMeter<usize>,
    flow_cells: RateMeter<(usize, PortId)>,
    source_cells: RateMeter<usize>,
    source_rm: BTreeMap<usize, LastRm>,
}

/// The kind of entity a piece of switch state is keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccountingKey {
    Vc,
    Flow,
    RmSample,
    Source,
}

/// Per output port measurement state.
#[derive(Debug, Clone)]
pub enum SwitchRateState {
    VcMerge(VcMergeAccounting),
    VpMerge(VpMergeAccounting),
}

impl SwitchRateState {
    pub fn new(mode: MergeMode, window: u32) -> Self {
        let w = window as usize;
        match mode {
            MergeMode::VcMerge => SwitchRateState::VcMerge(VcMergeAccounting {
                vc_cells: RateMeter::new(w),
                flow_cells: RateMeter::new(w),
                rm_samples: BTreeMap::new(),
            }),
            MergeMode::VpMerge => SwitchRateState::VpMerge(VpMergeAccounting {
                vc_cells: RateMeter::new(w),
                flow_cells: RateMeter::new(w),
                source_cells: RateMeter::new(w),
                source_rm: BTreeMap::new(),
            }),
        }
    }

    /// Every field of this state and the entity it is keyed by.
    pub fn keys(&self) -> Vec<(&'static str, AccountingKey)> {
        let mut keys = vec![
            ("vc_cells", AccountingKey::Vc),
            ("flow_cells", AccountingKey::Flow),
        ];
        match self {
            SwitchRateState::VcMerge(_) => keys.push(("rm_samples", AccountingKey::RmSample)),
            SwitchRateState::VpMerge(_) => {
                keys.push(("source_cells", AccountingKey::Source));
                keys.push(("source_rm", AccountingKey::Source));
            }
        }
        keys
    }

    /// Account a forward cell entering the port's queue from `in_port`.
    /// `nrm` is the network-wide cells-per-RM-cell setting.
    pub fn on_cell(&mut self, cell: &Cell, in_port: PortId, now: u64, nrm: u32) {
        let span_ns = f64::from(nrm) * CELL_BITS * 1000.0 / cell.ccr.max(1e-9);
        match self {
            SwitchRateState::VcMerge(acc) => {
                acc.vc_cells.add(cell.vc);
                acc.flow_cells.add((cell.vc, in_port));
                if cell.kind == CellKind::Frm {
                    acc.rm_samples.entry(cell.vc).or_default().push_back(RmSample {
                        at: now,
                        ccr: cell.ccr,
                        span_ns,
                    });
                }
            }
            SwitchRateState::VpMerge(acc) => {
                acc.vc_cells.add(cell.vc);
                acc.flow_cells.add((cell.vc, in_port));
                acc.source_cells.add(cell.origin);
                if cell.kind == CellKind::Frm {
                    acc.source_rm.insert(
                        cell.origin,
                        LastRm {
                            vc: cell.vc,
                            at: now,
                            ccr: cell.ccr,
                            span_ns,
                        },
                    );
                }
            }
        }
    }

    /// Close the current measurement interval and drop stale samples.
    pub fn roll(&mut self, now: u64, window_ns: u64, interval_ns: u64) {
        let horizon = now.saturating_sub(window_ns) as f64;
        match self {
            SwitchRateState::VcMerge(acc) => {
                acc.vc_cells.roll();
                acc.flow_cells.roll();
                for samples in acc.rm_samples.values_mut() {
                    samples.retain(|s| s.at as f64 + s.span_ns > horizon);
                }
            }
            SwitchRateState::VpMerge(acc) => {
                acc.vc_cells.roll();
                acc.flow_cells.roll();
                acc.source_cells.roll();
                acc.source_rm
                    .retain(|_, r| (now - r.at) as f64 <= r.span_ns + interval_ns as f64);
            }
        }
    }

    /// Source-level entities as `(rate, weight)`, optionally restricted to one VC.
    fn source_entities(&self, vc: Option<usize>, now: u64, window_ns: u64) -> Vec<(f64, f64)> {
        match self {
            SwitchRateState::VcMerge(acc) => {
                let from = now.saturating_sub(window_ns);
                if now == from {
                    return Vec::new();
                }
                acc.rm_samples
                    .iter()
                    .filter(|(v, _)| vc.is_none_or(|x| x == **v))
                    .flat_map(|(_, s)| s.iter())
                    .map(|s| (s.ccr, s.weight(from, now)))
                    .filter(|e| e.1 > 0.0)
                    .collect()
            }
            SwitchRateState::VpMerge(acc) => acc
                .source_rm
                .values()
                .filter(|r| vc.is_none_or(|x| x == r.vc))
                .map(|r| (r.ccr, 1.0))
                .collect(),
        }
    }

    fn meters(&self) -> (&RateMeter<usize>, &RateMeter<(usize, PortId)>) {
        match self {
            SwitchRateState::VcMerge(a) => (&a.vc_cells, &a.flow_cells),
            SwitchRateState::VpMerge(a) => (&a.vc_cells, &a.flow_cells),
        }
    }

    /// Measured per-source rates; only available under VP merge.
    pub fn source_rates(&self, interval_ns: u64) -> Option<BTreeMap<usize, f64>> {
        match self {
            SwitchRateState::VcMerge(_) => None,
            SwitchRateState::VpMerge(a) => Some(a.source_cells.rates(interval_ns)),
        }
    }

    /// Recompute the explicit rates this port will stamp.
    pub(crate) fn shares(&self, target: f64, now: u64, window_ns: u64, interval_ns: u64) -> PortShares {
        let (vc_meter, flow_meter) = self.meters();
        let vc_rates = vc_meter.rates(interval_ns);
        let vc_entities: Vec<(f64, f64)> = vc_rates.values().map(|&r| (r, 1.0)).collect();
        let vc_level = water_level(&vc_entities, target);

        let mut vc_flows: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
        for ((vc, _), rate) in flow_meter.rates(interval_ns) {
            vc_flows.entry(vc).or_default().push((rate, 1.0));
        }
        let all_flows: Vec<(f64, f64)> = vc_flows.values().flatten().copied().collect();

        let vc_source_level = vc_rates
            .keys()
            .map(|&vc| {
                let ents = self.source_entities(Some(vc), now, window_ns);
                (vc, water_level(&ents, vc_level))
            })
            .collect();

        PortShares {
            source_level: water_level(&self.source_entities(None, now, window_ns), target),
            vc_level,
            vc_source_level,
            flow_level: water_level(&all_flows, target),
            vc_flows,
        }
    }
}

/// Explicit rates a port stamps, recomputed once per interval.
#[derive(Debug, Clone, Default)]
pub(crate) struct PortShares {
    pub source_level: f64,
    pub vc_level: f64,
    pub vc_source_level: BTreeMap<usize, f64>,
    pub flow_level: f64,
    pub vc_flows: BTreeMap<usize, Vec<(f64, f64)>>,
}

impl PortShares {
    pub fn initial(target: f64) -> Self {
        PortShares {
            source_level: target,
            vc_level: target,
            flow_level: target,
            ..Default::default()
        }
    }

    /// Explicit rate for a backward cell of `vc` leaving toward one of its
    /// branches. Under source-level policies `er_in` is a per-source rate;
    /// under flow-level policies it is the allowance of the aggregate the
    /// cell is returning to.
    pub fn stamp(&self, policy: FairnessPolicy, vc: usize, er_in: f64) -> f64 {
        let flows = self.vc_flows.get(&vc).map(Vec::as_slice).unwrap_or(&[]);
        match policy {
            FairnessPolicy::SourceBased => er_in.min(self.source_level),
            FairnessPolicy::VcSource => {
                let level = self.vc_source_level.get(&vc).copied().unwrap_or(self.vc_level);
                er_in.min(level)
            }
            FairnessPolicy::FlowBased => self.flow_level.min(water_level(flows, er_in)),
            FairnessPolicy::VcFlow => water_level(flows, er_in.min(self.vc_level)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_splits_evenly_when_saturated() {
        let ents = [(50.0, 1.0); 4];
        assert!((water_level(&ents, 150.0) - 37.5).abs() < 1e-9);
    }

    #[test]
    fn level_gives_leftover_to_unconstrained() {
        let ents = [(10.0, 1.0), (100.0, 1.0)];
        assert!((water_level(&ents, 100.0) - 90.0).abs() < 1e-9);
    }

    #[test]
    fn level_lets_the_largest_grow_into_slack() {
        let ents = [(10.0, 1.0), (20.0, 1.0)];
        assert!((water_level(&ents, 100.0) - 90.0).abs() < 1e-9);
        assert_eq!(water_level(&[], 42.0), 42.0);
    }

    #[test]
    fn weighted_samples_count_as_fractions_of_a_source() {
        let ents = [(40.0, 0.5), (40.0, 0.5), (40.0, 1.0)];
        assert!((water_level(&ents, 60.0) - 30.0).abs() < 1e-9);
    }

    #[test]
    fn steady_sampling_weights_sum_to_one() {
        // One sample per span, window of 10 spans.
        let span = 1000.0;
        let samples: Vec<RmSample> = (0..12)
            .map(|i| RmSample {
                at: i * 1000 + 300,
                ccr: 1.0,
                span_ns: span,
            })
            .collect();
        let total: f64 = samples.iter().map(|s| s.weight(1500, 11_500)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vc_merge_state_has_no_source_keys() {
        let s = SwitchRateState::new(MergeMode::VcMerge, 4);
        assert!(s.keys().iter().all(|(_, k)| *k != AccountingKey::Source));
        assert!(s.source_rates(1_000_000).is_none());
        let vp = SwitchRateState::new(MergeMode::VpMerge, 4);
        assert!(vp.keys().iter().any(|(_, k)| *k == AccountingKey::Source));
    }
}
