use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{
    DestId, Endpoint, Hop, LinkId, Network, PortId, SourceId, SourcePath, SwitchId, Topology, TopologyDecl,
    VcId, VirtualConnection,
};

/// A structural problem found while validating a topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateSwitch(SwitchId),
    DuplicateLink(LinkId),
    DuplicateVc(VcId),
    UnknownLink(LinkId),
    DanglingEndpoint {
        link: LinkId,
        endpoint: Endpoint,
    },
    InvalidDirection {
        link: LinkId,
    },
    PortInUse {
        link: LinkId,
        endpoint: Endpoint,
    },
    NonPositiveCapacity(LinkId),
    DuplicateAttachment {
        link: LinkId,
    },
    EmptyVc(VcId),
    SourceInSeveralVcs(SourceId),
    UnattachedSource {
        vc: VcId,
        source: SourceId,
    },
    UnattachedDestination {
        vc: VcId,
        dest: DestId,
    },
    UnknownRouteSwitch {
        vc: VcId,
        switch: SwitchId,
    },
    RouteNotTree {
        vc: VcId,
        switch: SwitchId,
        in_port: PortId,
    },
    NoPath {
        vc: VcId,
        source: SourceId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateSwitch(s) => write!(f, "duplicate switch id {s}"),
            DuplicateLink(l) => write!(f, "duplicate link id {l}"),
            DuplicateVc(v) => write!(f, "duplicate VC id {v}"),
            UnknownLink(l) => write!(f, "unknown link {l}"),
            DanglingEndpoint { link, endpoint } => {
                write!(f, "link {link}: dangling endpoint {endpoint}")
            }
            InvalidDirection { link } => write!(
                f,
                "link {link}: must leave a switch or source and enter a switch or destination"
            ),
            PortInUse { link, endpoint } => {
                write!(f, "link {link}: port {endpoint} already has a link")
            }
            NonPositiveCapacity(l) => write!(f, "link {l}: capacity must be > 0"),
            DuplicateAttachment { link } => {
                write!(f, "link {link}: endpoint already attached by another link")
            }
            EmptyVc(v) => write!(f, "VC {v} has no sources"),
            SourceInSeveralVcs(s) => write!(f, "source {s} belongs to more than one VC"),
            UnattachedSource { vc, source } => {
                write!(f, "VC {vc}: source {source} has no access link")
            }
            UnattachedDestination { vc, dest } => {
                write!(f, "VC {vc}: destination {dest} has no access link")
            }
            UnknownRouteSwitch { vc, switch } => {
                write!(f, "VC {vc}: route references undeclared switch {switch}")
            }
            RouteNotTree { vc, switch, in_port } => {
                write!(f, "VC {vc}: route not a tree at {switch} input port {in_port}")
            }
            NoPath { vc, source } => {
                write!(f, "VC {vc}: source {source} has no path to the destination")
            }
        }
    }
}

/// Every structural violation found in a topology.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct TopologyError {
    pub violations: Vec<Violation>,
}

impl TopologyError {
    pub fn single(v: Violation) -> Self {
        TopologyError { violations: vec![v] }
    }
}

impl fmt::Display for TopologyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Validate raw declarations into an immutable [`Network`].
pub fn validate_topology(decl: &TopologyDecl) -> Result<Network, TopologyError> {
    let mut violations = Vec::new();

    let mut switches = BTreeSet::new();
    for s in &decl.switches {
        if !switches.insert(s.clone()) {
            violations.push(Violation::DuplicateSwitch(s.clone()));
        }
    }

    let mut by_id = BTreeMap::new();
    let mut incoming = BTreeMap::new();
    let mut outgoing = BTreeMap::new();
    let mut source_access = BTreeMap::new();
    let mut dest_access = BTreeMap::new();
    for (i, link) in decl.links.iter().enumerate() {
        if by_id.insert(link.id.clone(), i).is_some() {
            violations.push(Violation::DuplicateLink(link.id.clone()));
            continue;
        }
        if !link.capacity.is_positive() {
            violations.push(Violation::NonPositiveCapacity(link.id.clone()));
        }
        let direction_ok = !matches!(link.from, Endpoint::Dest(_)) && !matches!(link.to, Endpoint::Source(_));
        if !direction_ok {
            violations.push(Violation::InvalidDirection {
                link: link.id.clone(),
            });
            continue;
        }
        for (endpoint, table) in [(&link.from, &mut outgoing), (&link.to, &mut incoming)] {
            if let Endpoint::Switch { switch, port } = endpoint {
                if !switches.contains(switch) {
                    violations.push(Violation::DanglingEndpoint {
                        link: link.id.clone(),
                        endpoint: endpoint.clone(),
                    });
                } else if table.insert((switch.clone(), *port), i).is_some() {
                    violations.push(Violation::PortInUse {
                        link: link.id.clone(),
                        endpoint: endpoint.clone(),
                    });
                }
            }
        }
        if let Endpoint::Source(s) = &link.from {
            if source_access.insert(s.clone(), i).is_some() {
                violations.push(Violation::DuplicateAttachment {
                    link: link.id.clone(),
                });
            }
        }
        if let Endpoint::Dest(d) = &link.to {
            if dest_access.insert(d.clone(), i).is_some() {
                violations.push(Violation::DuplicateAttachment {
                    link: link.id.clone(),
                });
            }
        }
    }

    let topology = Topology {
        switches,
        links: decl.links.clone(),
        by_id,
        incoming,
        outgoing,
        source_access,
        dest_access,
    };

    let mut vc_ids = BTreeSet::new();
    let mut source_vc: BTreeMap<SourceId, usize> = BTreeMap::new();
    let mut vcs = Vec::new();
    for decl_vc in &decl.vcs {
        if !vc_ids.insert(decl_vc.id.clone()) {
            violations.push(Violation::DuplicateVc(decl_vc.id.clone()));
            continue;
        }
        if decl_vc.sources.is_empty() {
            violations.push(Violation::EmptyVc(decl_vc.id.clone()));
        }
        if topology.dest_access(&decl_vc.destination).is_none() {
            violations.push(Violation::UnattachedDestination {
                vc: decl_vc.id.clone(),
                dest: decl_vc.destination.clone(),
            });
        }
        let index = vcs.len();
        let mut sources = Vec::new();
        for s in &decl_vc.sources {
            if source_vc.insert(s.clone(), index).is_some() {
                violations.push(Violation::SourceInSeveralVcs(s.clone()));
                continue;
            }
            if topology.source_access(s).is_none() {
                violations.push(Violation::UnattachedSource {
                    vc: decl_vc.id.clone(),
                    source: s.clone(),
                });
            }
            sources.push(s.clone());
        }
        let mut routes: BTreeMap<SwitchId, BTreeMap<PortId, PortId>> = BTreeMap::new();
        for r in &decl_vc.routes {
            if !topology.switches.contains(&r.switch) {
                violations.push(Violation::UnknownRouteSwitch {
                    vc: decl_vc.id.clone(),
                    switch: r.switch.clone(),
                });
                continue;
            }
            let ports = routes.entry(r.switch.clone()).or_default();
            match ports.get(&r.in_port) {
                Some(&out) if out != r.out_port => {
                    violations.push(Violation::RouteNotTree {
                        vc: decl_vc.id.clone(),
                        switch: r.switch.clone(),
                        in_port: r.in_port,
                    });
                }
                _ => {
                    ports.insert(r.in_port, r.out_port);
                }
            }
        }
        vcs.push(VirtualConnection {
            id: decl_vc.id.clone(),
            destination: decl_vc.destination.clone(),
            sources,
            routes,
        });
    }

    if !violations.is_empty() {
        return Err(TopologyError { violations });
    }

    let mut paths = BTreeMap::new();
    let mut order = Vec::new();
    for vc in &vcs {
        for s in &vc.sources {
            match trace_path(&topology, vc, s) {
                Ok(p) => {
                    paths.insert(s.clone(), p);
                    order.push(s.clone());
                }
                Err(v) => violations.push(v),
            }
        }
    }
    if !violations.is_empty() {
        return Err(TopologyError { violations });
    }

    Ok(Network {
        topology,
        vcs,
        sources: order,
        source_vc,
        paths,
    })
}

fn trace_path(
    topology: &Topology,
    vc: &VirtualConnection,
    source: &SourceId,
) -> Result<SourcePath, Violation> {
    let no_path = || Violation::NoPath {
        vc: vc.id.clone(),
        source: source.clone(),
    };
    let mut link = topology.source_access(source).ok_or_else(no_path)?;
    let mut links = vec![link.id.clone()];
    let mut hops = Vec::new();
    let mut visited = BTreeSet::new();
    loop {
        match &link.to {
            Endpoint::Dest(d) if d == &vc.destination => break,
            Endpoint::Dest(_) | Endpoint::Source(_) => return Err(no_path()),
            Endpoint::Switch { switch, port } => {
                if !visited.insert(switch.clone()) {
                    return Err(Violation::RouteNotTree {
                        vc: vc.id.clone(),
                        switch: switch.clone(),
                        in_port: *port,
                    });
                }
                let out = vc.route(switch, *port).ok_or_else(no_path)?;
                hops.push(Hop {
                    switch: switch.clone(),
                    in_port: *port,
                    out_port: out,
                });
                link = topology.outgoing(switch, out).ok_or_else(no_path)?;
                links.push(link.id.clone());
            }
        }
    }
    Ok(SourcePath {
        source: source.clone(),
        links,
        hops,
    })
}
