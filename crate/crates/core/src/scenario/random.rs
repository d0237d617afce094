//! Seeded random scenarios: a tree of switches with sink-tree routing.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Scenario;
use crate::rate::Rate;
use crate::topology::{
    DestId, Endpoint, Link, LinkId, PortId, RouteEntry, SourceId, SwitchId, TopologyDecl, VcDecl, VcId,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomShape {
    pub max_switches: usize,
    pub max_vcs: usize,
    pub max_sources: usize,
    /// Every VC gets exactly one source.
    pub point_to_point: bool,
}

impl RandomShape {
    pub const MULTIPOINT: RandomShape = RandomShape {
        max_switches: 6,
        max_vcs: 4,
        max_sources: 10,
        point_to_point: false,
    };

    pub const POINT_TO_POINT: RandomShape = RandomShape {
        max_switches: 6,
        max_vcs: 8,
        max_sources: 8,
        point_to_point: true,
    };
}

struct Builder {
    decl: TopologyDecl,
    next_port: Vec<PortId>,
}

impl Builder {
    fn port(&mut self, sw: usize) -> PortId {
        let p = self.next_port[sw];
        self.next_port[sw] += 1;
        p
    }

    fn link(&mut self, id: String, from: Endpoint, to: Endpoint, capacity: Rate) {
        self.decl.links.push(Link {
            id: LinkId::from(id),
            from,
            to,
            capacity,
        });
    }
}

fn capacity(rng: &mut ChaCha8Rng) -> Rate {
    Rate::new(rng.gen_range(10..=150), rng.gen_range(1..=3))
}

fn sw(i: usize) -> SwitchId {
    SwitchId::from(format!("X{i}"))
}

/// A valid scenario drawn from `seed`.
pub fn random_scenario(seed: u64, shape: RandomShape) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=shape.max_switches.max(1));
    let mut b = Builder {
        decl: TopologyDecl {
            switches: (0..n).map(sw).collect(),
            ..Default::default()
        },
        next_port: vec![0; n],
    };

    // Tree edges, each as two directed links. towards[a][b] = a's output port to b.
    let mut towards: Vec<BTreeMap<usize, PortId>> = vec![BTreeMap::new(); n];
    let mut from_port: Vec<BTreeMap<usize, PortId>> = vec![BTreeMap::new(); n];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for child in 1..n {
        let parent = rng.gen_range(0..child);
        for (a, z) in [(child, parent), (parent, child)] {
            let out = b.port(a);
            let inp = b.port(z);
            towards[a].insert(z, out);
            from_port[z].insert(a, inp);
            let cap = capacity(&mut rng);
            b.link(
                format!("t{a}_{z}"),
                Endpoint::Switch {
                    switch: sw(a),
                    port: out,
                },
                Endpoint::Switch {
                    switch: sw(z),
                    port: inp,
                },
                cap,
            );
        }
        adjacency[child].push(parent);
        adjacency[parent].push(child);
    }

    let vc_count = rng.gen_range(1..=shape.max_vcs.max(1));
    let mut budget = shape.max_sources.max(vc_count);
    let mut source_no = 0;
    for v in 0..vc_count {
        let remaining_vcs = vc_count - v - 1;
        let members = if shape.point_to_point {
            1
        } else {
            rng.gen_range(1..=(budget - remaining_vcs).clamp(1, 4))
        };
        budget -= members;

        let root = rng.gen_range(0..n);
        let dest = DestId::from(format!("d{v}"));
        let dest_port = b.port(root);
        let cap = capacity(&mut rng);
        b.link(
            format!("e{v}"),
            Endpoint::Switch {
                switch: sw(root),
                port: dest_port,
            },
            Endpoint::Dest(dest.clone()),
            cap,
        );

        // Next hop toward the root for every switch.
        let mut next_hop: Vec<Option<usize>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &y in &adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    next_hop[y] = Some(x);
                    queue.push_back(y);
                }
            }
        }

        let mut routes: Vec<RouteEntry> = Vec::new();
        let mut sources = Vec::new();
        for _ in 0..members {
            let id = SourceId::from(format!("s{source_no}"));
            source_no += 1;
            let at = rng.gen_range(0..n);
            let access = b.port(at);
            let cap = capacity(&mut rng);
            b.link(
                format!("a_{id}"),
                Endpoint::Source(id.clone()),
                Endpoint::Switch {
                    switch: sw(at),
                    port: access,
                },
                cap,
            );
            let mut here = at;
            let mut in_port = access;
            loop {
                let (out, next) = match next_hop[here] {
                    Some(nx) => (towards[here][&nx], Some(nx)),
                    None => (dest_port, None),
                };
                let entry = RouteEntry {
                    switch: sw(here),
                    in_port,
                    out_port: out,
                };
                if !routes.contains(&entry) {
                    routes.push(entry);
                }
                match next {
                    Some(nx) => {
                        in_port = from_port[nx][&here];
                        here = nx;
                    }
                    None => break,
                }
            }
            sources.push(id);
        }
        b.decl.vcs.push(VcDecl {
            id: VcId::from(format!("V{v}")),
            destination: dest,
            sources,
            routes,
        });
    }

    Scenario {
        topology: b.decl,
        params: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_scenarios_validate() {
        for seed in 0..200 {
            for shape in [RandomShape::MULTIPOINT, RandomShape::POINT_TO_POINT] {
                let s = random_scenario(seed, shape);
                let net = s.network().unwrap_or_else(|e| panic!("seed {seed}: {e}"));
                assert!(net.topology().switch_count() <= shape.max_switches);
                assert!(net.vcs().len() <= shape.max_vcs);
                assert!(net.sources().len() <= shape.max_sources);
                if shape.point_to_point {
                    assert!(net.vcs().iter().all(|v| v.is_point_to_point()));
                }
            }
        }
    }

    #[test]
    fn same_seed_same_scenario() {
        assert_eq!(
            random_scenario(7, RandomShape::MULTIPOINT),
            random_scenario(7, RandomShape::MULTIPOINT)
        );
    }
}
