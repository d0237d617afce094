use std::collections::BTreeMap;
use std::fmt;

use super::FairnessPolicy;
use crate::topology::{Endpoint, Link, LinkId, Network, PortId, SourceId, SwitchId, VcId};

/// What an internal node of a partition tree stands for.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupLabel {
    Vc(VcId),
    /// The VC's traffic entering `switch` on `in_port`.
    Flow {
        vc: VcId,
        switch: SwitchId,
        in_port: PortId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeLabel {
    Group(GroupLabel),
    Leaf(SourceId),
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeLabel::Group(GroupLabel::Vc(vc)) => write!(f, "vc {vc}"),
            NodeLabel::Group(GroupLabel::Flow { vc, switch, in_port }) => {
                write!(f, "flow {vc}@{switch}:{in_port}")
            }
            NodeLabel::Leaf(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionNode {
    Leaf(SourceId),
    Group {
        label: GroupLabel,
        children: Vec<PartitionNode>,
    },
}

impl PartitionNode {
    pub fn label(&self) -> NodeLabel {
        match self {
            PartitionNode::Leaf(s) => NodeLabel::Leaf(s.clone()),
            PartitionNode::Group { label, .. } => NodeLabel::Group(label.clone()),
        }
    }

    pub fn leaves(&self) -> Vec<&SourceId> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a SourceId>) {
        match self {
            PartitionNode::Leaf(s) => out.push(s),
            PartitionNode::Group { children, .. } => {
                for c in children {
                    c.collect_leaves(out);
                }
            }
        }
    }

    pub fn contains(&self, source: &SourceId) -> bool {
        match self {
            PartitionNode::Leaf(s) => s == source,
            PartitionNode::Group { children, .. } => children.iter().any(|c| c.contains(source)),
        }
    }

    pub fn children(&self) -> &[PartitionNode] {
        match self {
            PartitionNode::Leaf(_) => &[],
            PartitionNode::Group { children, .. } => children,
        }
    }
}

/// The contention structure of one link under one policy. The root is the
/// link itself; `children` are its top-level competitors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTree {
    pub link: LinkId,
    pub children: Vec<PartitionNode>,
}

impl PartitionTree {
    pub fn leaves(&self) -> Vec<&SourceId> {
        let mut out = Vec::new();
        for c in &self.children {
            c.collect_leaves(&mut out);
        }
        out
    }

    /// Nodes from a root child down to the leaf for `source`, each paired
    /// with its siblings.
    pub fn chain(&self, source: &SourceId) -> Option<Vec<(&PartitionNode, &[PartitionNode])>> {
        let mut out = Vec::new();
        let mut level: &[PartitionNode] = &self.children;
        loop {
            let node = level.iter().find(|n| n.contains(source))?;
            out.push((node, level));
            match node {
                PartitionNode::Leaf(_) => return Some(out),
                PartitionNode::Group { children, .. } => level = children,
            }
        }
    }
}

/// Build the partition tree for `link` under `policy`.
pub fn build_partition_tree(network: &Network, link: &Link, policy: FairnessPolicy) -> PartitionTree {
    let crossing = network.sources_on(&link.id);
    let children = match policy {
        FairnessPolicy::SourceBased => crossing.into_iter().map(PartitionNode::Leaf).collect(),
        FairnessPolicy::VcSource => by_vc(network, crossing)
            .into_iter()
            .map(|(vc, members)| {
                group_or_leaf(GroupLabel::Vc(vc), members, |m| {
                    m.into_iter().map(PartitionNode::Leaf).collect()
                })
            })
            .collect(),
        FairnessPolicy::VcFlow => by_vc(network, crossing)
            .into_iter()
            .map(|(vc, members)| {
                let label = GroupLabel::Vc(vc.clone());
                group_or_leaf(label, members, |m| split(network, &vc, m, link))
            })
            .collect(),
        FairnessPolicy::FlowBased => match &link.from {
            Endpoint::Switch { switch, port } => network
                .flows_at(switch, *port)
                .into_iter()
                .map(|flow| {
                    let members: Vec<SourceId> = flow.members.into_iter().collect();
                    let label = GroupLabel::Flow {
                        vc: flow.vc.clone(),
                        switch: flow.switch.clone(),
                        in_port: flow.in_port,
                    };
                    let upstream = network
                        .topology()
                        .incoming(&flow.switch, flow.in_port)
                        .expect("validated path enters through a link");
                    group_or_leaf(label, members, |m| split(network, &flow.vc, m, upstream))
                })
                .collect(),
            _ => crossing.into_iter().map(PartitionNode::Leaf).collect(),
        },
    };
    PartitionTree {
        link: link.id.clone(),
        children,
    }
}

fn group_or_leaf(
    label: GroupLabel,
    mut members: Vec<SourceId>,
    children: impl FnOnce(Vec<SourceId>) -> Vec<PartitionNode>,
) -> PartitionNode {
    if members.len() == 1 {
        PartitionNode::Leaf(members.pop().expect("one member"))
    } else {
        PartitionNode::Group {
            label,
            children: children(members),
        }
    }
}

/// Group sources by VC, in VC declaration order.
fn by_vc(network: &Network, sources: Vec<SourceId>) -> Vec<(VcId, Vec<SourceId>)> {
    let mut groups: BTreeMap<usize, Vec<SourceId>> = BTreeMap::new();
    for s in sources {
        let vc = network.vc_index_of(&s).expect("validated source has a VC");
        groups.entry(vc).or_default().push(s);
    }
    groups
        .into_iter()
        .map(|(i, m)| (network.vcs()[i].id.clone(), m))
        .collect()
}

/// Subdivide the VC's sources carried on `link` by the input port through
/// which they reached the link's upstream switch. Switches where the group
/// arrives on a single port are passed through without adding a level.
fn split(network: &Network, vc: &VcId, members: Vec<SourceId>, link: &Link) -> Vec<PartitionNode> {
    if members.len() == 1 {
        return members.into_iter().map(PartitionNode::Leaf).collect();
    }
    let Some((switch, _)) = link.upstream_switch() else {
        return members.into_iter().map(PartitionNode::Leaf).collect();
    };
    let mut by_port: BTreeMap<PortId, Vec<SourceId>> = BTreeMap::new();
    for s in members {
        let hop = network
            .path(&s)
            .and_then(|p| p.hop_at(switch))
            .expect("source crossing the link traverses its upstream switch");
        by_port.entry(hop.in_port).or_default().push(s);
    }
    let upstream = |port: PortId| {
        network
            .topology()
            .incoming(switch, port)
            .expect("validated path enters through a link")
    };
    if by_port.len() == 1 {
        let (port, members) = by_port.into_iter().next().expect("one port");
        return split(network, vc, members, upstream(port));
    }
    by_port
        .into_iter()
        .map(|(port, members)| {
            let label = GroupLabel::Flow {
                vc: vc.clone(),
                switch: switch.clone(),
                in_port: port,
            };
            group_or_leaf(label, members, |m| split(network, vc, m, upstream(port)))
        })
        .collect()
}
