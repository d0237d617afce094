use std::collections::{BTreeMap, VecDeque};

use super::cell::{Cell, CellKind};

/// Something that can sit in a merge queue.
pub trait QueueUnit {
    /// Whether this item ends a unit that must leave the queue contiguously.
    fn closes_unit(&self) -> bool;
}

impl QueueUnit for Cell {
    fn closes_unit(&self) -> bool {
        !matches!(self.kind, CellKind::Data { eom: false })
    }
}

/// Output buffering for one VC at one switch output port: a FIFO per input
/// flow and round-robin service among flows.
///
/// With `packet_lock` set (VC merge), a flow is served only once a whole
/// unit is buffered, and then until that unit closes, so units leave
/// contiguously without the output idling mid-packet. Without it (VP merge)
/// flows are served cell by cell.
#[derive(Debug, Clone)]
pub struct MergeQueue<F: Ord + Clone, T> {
    packet_lock: bool,
    limit: Option<usize>,
    fifos: BTreeMap<F, VecDeque<T>>,
    /// Closed units buffered per flow.
    complete: BTreeMap<F, usize>,
    /// Next flow to consider in round-robin order.
    cursor: Option<F>,
    current: Option<F>,
    /// Flows discarding the rest of a packet after a drop.
    discarding: BTreeMap<F, bool>,
    len: usize,
    pub drops: u64,
}

impl<F: Ord + Clone, T: QueueUnit> MergeQueue<F, T> {
    pub fn new(packet_lock: bool, limit: Option<usize>) -> Self {
        MergeQueue {
            packet_lock,
            limit,
            fifos: BTreeMap::new(),
            complete: BTreeMap::new(),
            cursor: None,
            current: None,
            discarding: BTreeMap::new(),
            len: 0,
            drops: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn items(&self) -> impl Iterator<Item = &T> {
        self.fifos.values().flat_map(|q| q.iter())
    }

    /// Flow holding the output mid-packet, if any.
    pub fn current_flow(&self) -> Option<&F> {
        self.current.as_ref()
    }

    /// Queue `item` on `flow`. When the buffer is full the rest of the
    /// packet is discarded, but its closing item is still accepted so the
    /// packet boundary survives. Returns whether the item was queued.
    pub fn enqueue(&mut self, flow: F, item: T) -> bool {
        let discarding = self.discarding.get(&flow).copied().unwrap_or(false);
        let full = self.limit.is_some_and(|l| self.len >= l);
        if (discarding || full) && !item.closes_unit() {
            self.drops += 1;
            self.discarding.insert(flow, true);
            return false;
        }
        if discarding {
            self.discarding.insert(flow.clone(), false);
        }
        if item.closes_unit() {
            *self.complete.entry(flow.clone()).or_default() += 1;
        }
        self.fifos.entry(flow).or_default().push_back(item);
        self.len += 1;
        true
    }

    /// Whether `dequeue` would return an item.
    pub fn has_ready(&self) -> bool {
        match &self.current {
            Some(f) => self.fifos.get(f).is_some_and(|q| !q.is_empty()),
            None if self.packet_lock => self.complete.values().any(|&n| n > 0),
            None => self.len > 0,
        }
    }

    fn eligible(&self, flow: &F, queue: &VecDeque<T>) -> bool {
        !queue.is_empty() && (!self.packet_lock || self.complete.get(flow).is_some_and(|&n| n > 0))
    }

    pub fn dequeue(&mut self) -> Option<(F, T)> {
        let flow = match &self.current {
            Some(f) => f.clone(),
            None => self.next_flow()?,
        };
        let item = self.fifos.get_mut(&flow)?.pop_front()?;
        self.len -= 1;
        if item.closes_unit() {
            if let Some(n) = self.complete.get_mut(&flow) {
                *n = n.saturating_sub(1);
            }
        }
        if self.packet_lock && !item.closes_unit() {
            self.current = Some(flow.clone());
        } else {
            self.current = None;
        }
        Some((flow, item))
    }

    /// First eligible flow at or after the cursor; advances the cursor past it.
    fn next_flow(&mut self) -> Option<F> {
        let after_cursor = self.cursor.as_ref().and_then(|c| {
            self.fifos
                .range(c.clone()..)
                .find(|(f, q)| self.eligible(f, q))
                .map(|(f, _)| f.clone())
        });
        let flow = after_cursor.or_else(|| {
            self.fifos
                .iter()
                .find(|(f, q)| self.eligible(f, q))
                .map(|(f, _)| f.clone())
        })?;
        self.cursor = self.fifos.range(flow.clone()..).nth(1).map(|(f, _)| f.clone());
        Some(flow)
    }
}

/// Count positions in an output stream where a cell of one flow appears
/// between another flow's first cell of a packet and its closing cell.
pub fn count_interleavings<F: PartialEq>(stream: &[(F, bool)]) -> usize {
    let mut open: Option<&F> = None;
    let mut violations = 0;
    for (flow, closes) in stream {
        match open {
            Some(f) if f != flow => violations += 1,
            _ => {}
        }
        if open.is_none() || open == Some(flow) {
            open = if *closes { None } else { Some(flow) };
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct Item(&'static str, bool);

    impl QueueUnit for Item {
        fn closes_unit(&self) -> bool {
            self.1
        }
    }

    fn drain(q: &mut MergeQueue<char, Item>) -> Vec<&'static str> {
        std::iter::from_fn(|| q.dequeue().map(|(_, i)| i.0)).collect()
    }

    #[test]
    fn packets_leave_whole() {
        let mut q = MergeQueue::new(true, None);
        q.enqueue('a', Item("A1", false));
        q.enqueue('b', Item("B1", false));
        q.enqueue('a', Item("A2", false));
        q.enqueue('b', Item("B2", true));
        q.enqueue('a', Item("A3", true));
        assert_eq!(drain(&mut q), vec!["A1", "A2", "A3", "B1", "B2"]);
    }

    #[test]
    fn partial_packets_wait_behind_complete_ones() {
        let mut q = MergeQueue::new(true, None);
        q.enqueue('a', Item("A1", false));
        assert!(!q.has_ready());
        q.enqueue('b', Item("B1", true));
        assert_eq!(drain(&mut q), vec!["B1"]);
        q.enqueue('a', Item("A2", true));
        assert_eq!(drain(&mut q), vec!["A1", "A2"]);
    }

    #[test]
    fn unlocked_queue_serves_partial_packets() {
        let mut q = MergeQueue::new(false, None);
        q.enqueue('a', Item("A1", false));
        assert!(q.has_ready());
    }

    #[test]
    fn cell_round_robin_without_lock() {
        let mut q = MergeQueue::new(false, None);
        q.enqueue('a', Item("A1", false));
        q.enqueue('a', Item("A2", true));
        q.enqueue('b', Item("B1", false));
        q.enqueue('b', Item("B2", true));
        assert_eq!(drain(&mut q), vec!["A1", "B1", "A2", "B2"]);
    }

    #[test]
    fn single_flow_preserves_order() {
        let mut q = MergeQueue::new(true, None);
        for (i, name) in ["x1", "x2", "x3"].into_iter().enumerate() {
            q.enqueue('x', Item(name, i == 2));
        }
        assert_eq!(drain(&mut q), vec!["x1", "x2", "x3"]);
    }

    #[test]
    fn overflow_discards_rest_of_packet_but_keeps_boundary() {
        let mut q = MergeQueue::new(true, Some(2));
        assert!(q.enqueue('a', Item("A1", false)));
        assert!(q.enqueue('a', Item("A2", false)));
        assert!(!q.enqueue('a', Item("A3", false)));
        assert!(q.enqueue('a', Item("A4", true)));
        assert_eq!(q.drops, 1);
        assert_eq!(drain(&mut q), vec!["A1", "A2", "A4"]);
    }

    #[test]
    fn scanner_counts_intrusions() {
        let clean = [('a', false), ('a', true), ('b', true)];
        assert_eq!(count_interleavings(&clean), 0);
        let dirty = [('a', false), ('b', true), ('a', true)];
        assert_eq!(count_interleavings(&dirty), 1);
    }
}
