use super::{water_fill, AllocationVector, FairnessPolicy};
use crate::rate::Rate;
use crate::topology::{Network, SourceId, VcId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonRow {
    pub policy: FairnessPolicy,
    pub allocation: AllocationVector,
    pub vc_sums: Vec<(VcId, Rate)>,
}

/// Allocations of one network under several policies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyComparison {
    pub sources: Vec<SourceId>,
    pub vcs: Vec<VcId>,
    pub rows: Vec<ComparisonRow>,
}

impl PolicyComparison {
    pub fn row(&self, policy: FairnessPolicy) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.policy == policy)
    }

    /// A comparison holding a single allocation.
    pub fn single(network: &Network, policy: FairnessPolicy, allocation: AllocationVector) -> Self {
        PolicyComparison {
            sources: network.sources().to_vec(),
            vcs: network.vcs().iter().map(|v| v.id.clone()).collect(),
            rows: vec![ComparisonRow {
                policy,
                vc_sums: allocation.vc_sums(network),
                allocation,
            }],
        }
    }
}

/// Water-fill under all four policies. The policies are independent and
/// are evaluated on separate threads.
pub fn compare_policies(network: &Network) -> PolicyComparison {
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = FairnessPolicy::ALL
            .into_iter()
            .map(|policy| {
                scope.spawn(move || {
                    let (allocation, _) = water_fill(network, policy);
                    ComparisonRow {
                        policy,
                        vc_sums: allocation.vc_sums(network),
                        allocation,
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("water-fill thread panicked"))
            .collect()
    });
    PolicyComparison {
        sources: network.sources().to_vec(),
        vcs: network.vcs().iter().map(|v| v.id.clone()).collect(),
        rows,
    }
}
