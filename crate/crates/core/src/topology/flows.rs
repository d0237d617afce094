use std::collections::{BTreeMap, BTreeSet};

use super::{Endpoint, LinkId, Network, PortId, SourceId, SwitchId, TopologyError, VcId, Violation};

/// A VC arriving on one input port of a switch: the finest grouping a
/// switch can tell apart when cells of a VC are merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub vc: VcId,
    pub switch: SwitchId,
    pub in_port: PortId,
    pub members: BTreeSet<SourceId>,
}

impl Network {
    /// One flow per (VC, input port) routed to `out_port` of `switch`,
    /// ordered by VC declaration order, then input port.
    pub fn flows_at(&self, switch: &SwitchId, out_port: PortId) -> Vec<Flow> {
        let mut groups: BTreeMap<(usize, PortId), BTreeSet<SourceId>> = BTreeMap::new();
        for source in self.sources() {
            let path = &self.paths[source];
            if let Some(hop) = path.hop_at(switch) {
                if hop.out_port == out_port {
                    let vc = self.source_vc[source];
                    groups
                        .entry((vc, hop.in_port))
                        .or_default()
                        .insert(source.clone());
                }
            }
        }
        groups
            .into_iter()
            .map(|((vc, in_port), members)| Flow {
                vc: self.vcs[vc].id.clone(),
                switch: switch.clone(),
                in_port,
                members,
            })
            .collect()
    }

    /// Number of flows carried by `link`: the sum over the upstream
    /// switch's input ports of the VCs switched from that port onto the
    /// link. An access link from a source carries that source's single flow.
    pub fn count_flows(&self, link: &LinkId) -> Result<usize, TopologyError> {
        let l = self
            .topology()
            .link(link)
            .ok_or_else(|| TopologyError::single(Violation::UnknownLink(link.clone())))?;
        Ok(match &l.from {
            Endpoint::Switch { switch, port } => self.flows_at(switch, *port).len(),
            Endpoint::Source(s) => usize::from(self.vc_of(s).is_some()),
            Endpoint::Dest(_) => 0,
        })
    }
}

pub fn flows_at(network: &Network, switch: &SwitchId, out_port: PortId) -> Vec<Flow> {
    network.flows_at(switch, out_port)
}

pub fn count_flows(network: &Network, link: &LinkId) -> Result<usize, TopologyError> {
    network.count_flows(link)
}
