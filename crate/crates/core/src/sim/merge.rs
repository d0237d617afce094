use std::collections::BTreeMap;

use super::config::{MerUpdate, MergeAlgorithm};
use crate::topology::PortId;

/// What a merge point does with an RM cell besides forwarding FRMs.
#[derive(Debug, Clone, PartialEq)]
pub enum MergeAction {
    /// Send a backward RM cell down `branch` with this explicit rate and
    /// root timestamp.
    SendBrm {
        branch: PortId,
        er: f64,
        root_time: Option<u64>,
    },
}

/// Merge-point state of one VC at one switch output port.
#[derive(Debug, Clone, PartialEq)]
pub enum MergePointState {
    Turnaround {
        mer: f64,
        /// Root timestamp of the feedback currently held in `mer`.
        mer_root_time: Option<u64>,
        pcr: f64,
        update: MerUpdate,
    },
    BitMark {
        bits: BTreeMap<PortId, bool>,
    },
}

impl MergePointState {
    pub fn new(algorithm: MergeAlgorithm, branches: &[PortId], pcr: f64, update: MerUpdate) -> Self {
        match algorithm {
            MergeAlgorithm::Turnaround => MergePointState::Turnaround {
                mer: pcr,
                mer_root_time: None,
                pcr,
                update,
            },
            MergeAlgorithm::BitMark => MergePointState::BitMark {
                bits: branches.iter().map(|&b| (b, false)).collect(),
            },
        }
    }

    /// A forward RM cell arrived on `branch`; it is always forwarded to the root.
    pub fn on_frm(&mut self, branch: PortId) -> Vec<MergeAction> {
        match self {
            MergePointState::Turnaround {
                mer,
                mer_root_time,
                pcr,
                ..
            } => {
                let action = MergeAction::SendBrm {
                    branch,
                    er: *mer,
                    root_time: mer_root_time.take(),
                };
                *mer = *pcr;
                vec![action]
            }
            MergePointState::BitMark { bits } => {
                bits.insert(branch, true);
                Vec::new()
            }
        }
    }

    /// A backward RM cell arrived from the root side.
    pub fn on_brm(&mut self, er: f64, root_time: Option<u64>) -> Vec<MergeAction> {
        match self {
            MergePointState::Turnaround {
                mer,
                mer_root_time,
                update,
                ..
            } => {
                *mer = match update {
                    MerUpdate::Assign => er,
                    MerUpdate::Min => mer.min(er),
                };
                *mer_root_time = root_time;
                Vec::new()
            }
            MergePointState::BitMark { bits } => {
                let mut out = Vec::new();
                for (&branch, bit) in bits.iter_mut() {
                    if *bit {
                        out.push(MergeAction::SendBrm {
                            branch,
                            er,
                            root_time,
                        });
                        *bit = false;
                    }
                }
                out
            }
        }
    }

    pub fn mer(&self) -> Option<f64> {
        match self {
            MergePointState::Turnaround { mer, .. } => Some(*mer),
            MergePointState::BitMark { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brm(branch: PortId, er: f64) -> MergeAction {
        MergeAction::SendBrm {
            branch,
            er,
            root_time: None,
        }
    }

    #[test]
    fn turnaround_answers_from_mer_then_resets() {
        let mut m = MergePointState::new(MergeAlgorithm::Turnaround, &[0, 1], 150.0, MerUpdate::Assign);
        assert!(m.on_brm(37.5, None).is_empty());
        assert_eq!(m.on_frm(1), vec![brm(1, 37.5)]);
        assert_eq!(m.mer(), Some(150.0));
    }

    #[test]
    fn turnaround_brm_only_sets_the_register() {
        let mut m = MergePointState::new(MergeAlgorithm::Turnaround, &[0, 1], 150.0, MerUpdate::Assign);
        assert!(m.on_brm(25.0, Some(7)).is_empty());
        assert_eq!(m.mer(), Some(25.0));
        assert!(m.on_brm(40.0, None).is_empty());
        assert_eq!(m.mer(), Some(40.0));
    }

    #[test]
    fn min_variant_keeps_the_smaller_rate() {
        let mut m = MergePointState::new(MergeAlgorithm::Turnaround, &[0], 150.0, MerUpdate::Min);
        m.on_brm(25.0, None);
        m.on_brm(40.0, None);
        assert_eq!(m.mer(), Some(25.0));
    }

    #[test]
    fn bitmark_marks_without_answering() {
        let mut m = MergePointState::new(MergeAlgorithm::BitMark, &[0, 1, 2], 150.0, MerUpdate::Assign);
        assert!(m.on_frm(0).is_empty());
        assert!(m.on_frm(0).is_empty());
        assert!(m.on_frm(2).is_empty());
        assert_eq!(m.on_brm(30.0, None), vec![brm(0, 30.0), brm(2, 30.0)]);
        assert!(m.on_brm(30.0, None).is_empty());
    }
}
