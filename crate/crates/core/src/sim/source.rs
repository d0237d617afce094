use super::cell::{cell_time_ns, Cell, CellKind};
use super::config::SourceConfig;

/// Rate state and cell counter of one ABR source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceState {
    pub acr: f64,
    pub pcr: f64,
    pub icr: f64,
    pub nrm: u32,
    pub cells_sent: u64,
    packet_cells: u32,
    cells_in_packet: u32,
}

impl SourceState {
    pub fn new(cfg: &SourceConfig, packet_cells: u32) -> Self {
        let icr = cfg.initial_rate();
        SourceState {
            acr: icr,
            pcr: cfg.pcr,
            icr,
            nrm: cfg.nrm,
            cells_sent: 0,
            packet_cells: packet_cells.max(1),
            cells_in_packet: 0,
        }
    }

    /// Apply explicit-rate feedback from a backward RM cell.
    pub fn on_brm(&mut self, er: f64) {
        self.acr = self.pcr.min(er);
    }

    /// The next cell to send, or `None` while the allowed rate is zero.
    /// Every `nrm`-th cell, starting with the first, is a forward RM cell;
    /// packets never straddle one.
    pub fn next_cell(&mut self, vc: usize, origin: usize, now: u64) -> Option<Cell> {
        if self.acr <= 0.0 {
            return None;
        }
        let index = self.cells_sent;
        self.cells_sent += 1;
        let kind = if index.is_multiple_of(u64::from(self.nrm)) {
            CellKind::Frm
        } else {
            self.cells_in_packet += 1;
            let before_rm = (index + 1).is_multiple_of(u64::from(self.nrm));
            let eom = before_rm || self.cells_in_packet == self.packet_cells;
            if eom {
                self.cells_in_packet = 0;
            }
            CellKind::Data { eom }
        };
        let er = if kind == CellKind::Frm { self.pcr } else { 0.0 };
        Some(Cell {
            kind,
            vc,
            origin,
            er,
            ccr: self.acr,
            sent_at: now,
            root_time: None,
        })
    }

    /// Spacing between cells at the current rate, ns.
    pub fn gap_ns(&self) -> f64 {
        cell_time_ns(self.acr)
    }
}
