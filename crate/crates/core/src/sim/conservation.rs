use super::cell::CELL_BITS;
use super::engine::SimulationResult;
use crate::topology::{PortId, SwitchId, VcId};

/// RM and data conservation at one merge point.
#[derive(Debug, Clone, PartialEq)]
pub struct MergePointReport {
    pub switch: SwitchId,
    pub vc: VcId,
    pub out_port: PortId,
    pub branch_frm: u64,
    pub forwarded_frm: u64,
    pub queued_frm: u64,
    /// Forwarded plus still-buffered FRMs equal the FRMs from all branches.
    pub frm_conserved: bool,
    /// Data rates over the final quarter, Mbps.
    pub data_in_rate: f64,
    pub data_out_rate: f64,
    /// The two rates differ by at most one interval's worth of input.
    pub data_conserved: bool,
    /// No branch ever got more BRM copies than it sent FRMs.
    pub copies_bounded: bool,
}

impl MergePointReport {
    pub fn passed(&self) -> bool {
        self.frm_conserved && self.data_conserved && self.copies_bounded
    }
}

pub fn conservation_check(result: &SimulationResult) -> Vec<MergePointReport> {
    let interval_us = result.config.interval_ns as f64 / 1000.0;
    result
        .merge_points
        .iter()
        .map(|m| {
            let branch_frm: u64 = m.branch_frm.values().sum();
            let n = m.data_in.len();
            let from = n - n / 4;
            let cells_in: u64 = m.data_in[from..].iter().sum();
            let cells_out: u64 = m.data_out[from..].iter().sum();
            let slack = m.data_in[from..].iter().copied().max().unwrap_or(0);
            let span_us = ((n - from).max(1) as f64) * interval_us;
            MergePointReport {
                switch: m.switch.clone(),
                vc: m.vc.clone(),
                out_port: m.out_port,
                branch_frm,
                forwarded_frm: m.forwarded_frm,
                queued_frm: m.queued_frm,
                frm_conserved: m.forwarded_frm + m.queued_frm == branch_frm,
                data_in_rate: cells_in as f64 * CELL_BITS / span_us,
                data_out_rate: cells_out as f64 * CELL_BITS / span_us,
                data_conserved: cells_in.abs_diff(cells_out) <= slack,
                copies_bounded: m.copy_excess == 0,
            }
        })
        .collect()
}
