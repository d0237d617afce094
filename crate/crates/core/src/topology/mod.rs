//! Networks of switches and capacitated links, multipoint-to-point VCs as
//! sink trees, and the per-link source sets, paths and flows derived from them.

mod flows;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::rate::Rate;

pub use flows::{count_flows, flows_at, Flow};
pub use validate::{validate_topology, TopologyError, Violation};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

id_type!(SwitchId);
id_type!(LinkId);
id_type!(SourceId);
id_type!(DestId);
id_type!(
    /// Identity of a virtual connection (its VPI/VCI).
    VcId
);

pub type PortId = u32;

/// One end of a link.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Switch { switch: SwitchId, port: PortId },
    Source(SourceId),
    Dest(DestId),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Switch { switch, port } => write!(f, "sw:{switch}:{port}"),
            Endpoint::Source(s) => write!(f, "src:{s}"),
            Endpoint::Dest(d) => write!(f, "dst:{d}"),
        }
    }
}

/// A unidirectional link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub id: LinkId,
    pub from: Endpoint,
    pub to: Endpoint,
    pub capacity: Rate,
}

impl Link {
    pub fn upstream_switch(&self) -> Option<(&SwitchId, PortId)> {
        match &self.from {
            Endpoint::Switch { switch, port } => Some((switch, *port)),
            _ => None,
        }
    }

    pub fn downstream_switch(&self) -> Option<(&SwitchId, PortId)> {
        match &self.to {
            Endpoint::Switch { switch, port } => Some((switch, *port)),
            _ => None,
        }
    }
}

/// One `route` line: at `switch`, cells of the VC arriving on `in_port`
/// leave on `out_port`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RouteEntry {
    pub switch: SwitchId,
    pub in_port: PortId,
    pub out_port: PortId,
}

/// A VC as declared, before validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VcDecl {
    pub id: VcId,
    pub destination: DestId,
    pub sources: Vec<SourceId>,
    pub routes: Vec<RouteEntry>,
}

/// Raw topology declarations, as read from a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TopologyDecl {
    pub switches: Vec<SwitchId>,
    pub links: Vec<Link>,
    pub vcs: Vec<VcDecl>,
}

/// Validated switches and links with port lookup tables.
#[derive(Debug, Clone)]
pub struct Topology {
    switches: BTreeSet<SwitchId>,
    links: Vec<Link>,
    by_id: BTreeMap<LinkId, usize>,
    incoming: BTreeMap<(SwitchId, PortId), usize>,
    outgoing: BTreeMap<(SwitchId, PortId), usize>,
    source_access: BTreeMap<SourceId, usize>,
    dest_access: BTreeMap<DestId, usize>,
}

impl Topology {
    pub fn switches(&self) -> impl Iterator<Item = &SwitchId> {
        self.switches.iter()
    }

    pub fn switch_count(&self) -> usize {
        self.switches.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: &LinkId) -> Option<&Link> {
        self.by_id.get(id).map(|&i| &self.links[i])
    }

    pub fn link_index(&self, id: &LinkId) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    /// The link arriving at `(switch, in_port)`.
    pub fn incoming(&self, switch: &SwitchId, port: PortId) -> Option<&Link> {
        self.incoming
            .get(&(switch.clone(), port))
            .map(|&i| &self.links[i])
    }

    /// The link leaving `(switch, out_port)`.
    pub fn outgoing(&self, switch: &SwitchId, port: PortId) -> Option<&Link> {
        self.outgoing
            .get(&(switch.clone(), port))
            .map(|&i| &self.links[i])
    }

    pub fn source_access(&self, source: &SourceId) -> Option<&Link> {
        self.source_access.get(source).map(|&i| &self.links[i])
    }

    pub fn dest_access(&self, dest: &DestId) -> Option<&Link> {
        self.dest_access.get(dest).map(|&i| &self.links[i])
    }
}

/// A validated multipoint-to-point VC (point-to-point when it has one source).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualConnection {
    pub id: VcId,
    pub destination: DestId,
    pub sources: Vec<SourceId>,
    /// switch -> (in_port -> out_port)
    pub routes: BTreeMap<SwitchId, BTreeMap<PortId, PortId>>,
}

impl VirtualConnection {
    pub fn route(&self, switch: &SwitchId, in_port: PortId) -> Option<PortId> {
        self.routes.get(switch)?.get(&in_port).copied()
    }

    pub fn is_point_to_point(&self) -> bool {
        self.sources.len() == 1
    }
}

/// A switch traversal on a source's path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hop {
    pub switch: SwitchId,
    pub in_port: PortId,
    pub out_port: PortId,
}

/// The links a source's cells cross, from its access link to the
/// destination's access link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourcePath {
    pub source: SourceId,
    pub links: Vec<LinkId>,
    pub hops: Vec<Hop>,
}

impl SourcePath {
    pub fn crosses(&self, link: &LinkId) -> bool {
        self.links.contains(link)
    }

    /// The hop at `switch`, if the path crosses it.
    pub fn hop_at(&self, switch: &SwitchId) -> Option<&Hop> {
        self.hops.iter().find(|h| &h.switch == switch)
    }
}

/// A validated topology together with its VCs and every source's path.
///
/// Immutable once built.
#[derive(Debug, Clone)]
pub struct Network {
    topology: Topology,
    vcs: Vec<VirtualConnection>,
    sources: Vec<SourceId>,
    source_vc: BTreeMap<SourceId, usize>,
    paths: BTreeMap<SourceId, SourcePath>,
}

impl Network {
    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn vcs(&self) -> &[VirtualConnection] {
        &self.vcs
    }

    pub fn vc(&self, id: &VcId) -> Option<&VirtualConnection> {
        self.vcs.iter().find(|v| &v.id == id)
    }

    /// All sources in VC declaration order.
    pub fn sources(&self) -> &[SourceId] {
        &self.sources
    }

    pub fn vc_of(&self, source: &SourceId) -> Option<&VirtualConnection> {
        self.source_vc.get(source).map(|&i| &self.vcs[i])
    }

    pub fn vc_index_of(&self, source: &SourceId) -> Option<usize> {
        self.source_vc.get(source).copied()
    }

    pub fn path(&self, source: &SourceId) -> Option<&SourcePath> {
        self.paths.get(source)
    }

    /// Sources whose path crosses `link`, in source order.
    pub fn sources_on(&self, link: &LinkId) -> Vec<SourceId> {
        self.sources
            .iter()
            .filter(|s| self.paths[*s].crosses(link))
            .cloned()
            .collect()
    }

    /// Links crossed by at least one source, in declaration order.
    pub fn loaded_links(&self) -> Vec<&Link> {
        self.topology
            .links
            .iter()
            .filter(|l| self.paths.values().any(|p| p.crosses(&l.id)))
            .collect()
    }
}

/// The path of `source` within `vc`.
pub fn source_path<'a>(
    network: &'a Network,
    vc: &VcId,
    source: &SourceId,
) -> Result<&'a SourcePath, TopologyError> {
    match network.vc_of(source) {
        Some(v) if &v.id == vc => Ok(&network.paths[source]),
        _ => Err(TopologyError::single(Violation::NoPath {
            vc: vc.clone(),
            source: source.clone(),
        })),
    }
}
