/// Bits in one 53-byte cell.
pub const CELL_BITS: f64 = 424.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Data { eom: bool },
    Frm,
    Brm,
}

/// A cell in flight. `origin` identifies the emitting source for tracing and
/// for path-level switching under VP merge; VC-merge switch logic never
/// reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub kind: CellKind,
    pub vc: usize,
    pub origin: usize,
    /// Explicit rate, Mbps.
    pub er: f64,
    /// Current cell rate declared by the source, Mbps.
    pub ccr: f64,
    /// Emission time at the source, ns.
    pub sent_at: u64,
    /// For backward cells: when the destination turned around the forward
    /// cell whose feedback this cell carries, if it carries any.
    pub root_time: Option<u64>,
}

impl Cell {
    pub fn is_rm(&self) -> bool {
        matches!(self.kind, CellKind::Frm | CellKind::Brm)
    }
}

/// Nanoseconds to transmit one cell at `rate_mbps`.
pub(crate) fn cell_time_ns(rate_mbps: f64) -> f64 {
    CELL_BITS * 1000.0 / rate_mbps
}
