//! Hierarchical max-min fair allocation.
//!
//! A single water-filling engine runs over a per-link [`PartitionTree`];
//! each [`FairnessPolicy`] is nothing more than a way of building those
//! trees. Rates are exact rationals throughout.

mod allocation;
mod compare;
mod fixed_point;
mod partition;
mod verify;
mod waterfill;

use std::fmt;
use std::str::FromStr;

pub use allocation::AllocationVector;
pub use compare::{compare_policies, ComparisonRow, PolicyComparison};
pub use partition::{build_partition_tree, GroupLabel, NodeLabel, PartitionNode, PartitionTree};
pub use verify::{
    check_certificate, find_local_improvement, verify_maxmin, Improvement, VerificationReport,
    VerifyViolation,
};
pub use waterfill::{water_fill, BottleneckCertificate, CertificateEntry};

/// How contending sources on a link are grouped before bandwidth is shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FairnessPolicy {
    /// Every source is its own competitor, regardless of VC.
    SourceBased,
    /// VCs compete first; a VC's share is split flat among its sources.
    VcSource,
    /// (VC, input port) flows compete at each switch, recursively upstream.
    FlowBased,
    /// VCs compete first; a VC's share is split among its flows.
    VcFlow,
}

impl FairnessPolicy {
    pub const ALL: [FairnessPolicy; 4] = [
        FairnessPolicy::SourceBased,
        FairnessPolicy::VcSource,
        FairnessPolicy::FlowBased,
        FairnessPolicy::VcFlow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FairnessPolicy::SourceBased => "source",
            FairnessPolicy::VcSource => "vc-source",
            FairnessPolicy::FlowBased => "flow",
            FairnessPolicy::VcFlow => "vc-flow",
        }
    }
}

impl fmt::Display for FairnessPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown fairness policy `{0}` (expected source, vc-source, flow or vc-flow)")]
pub struct UnknownPolicy(pub String);

impl FromStr for FairnessPolicy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FairnessPolicy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}
