//! Independent checks of max-min optimality for a given allocation.
//!
//! Nothing here calls the water-filling engine. An allocation is accepted
//! when it is feasible and every source has a bottleneck: a saturated link
//! on its path where, at every level of the link's partition tree, the
//! branch holding the source carries at least as much as each sibling.

use std::collections::BTreeMap;
use std::fmt;

use super::partition::{build_partition_tree, PartitionNode, PartitionTree};
use super::waterfill::BottleneckCertificate;
use super::{AllocationVector, FairnessPolicy};
use crate::rate::Rate;
use crate::topology::{LinkId, Network, SourceId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyViolation {
    MissingSource(SourceId),
    UnknownSource(SourceId),
    NegativeRate(SourceId),
    Overloaded {
        link: LinkId,
        load: Rate,
        capacity: Rate,
    },
    NoBottleneck(SourceId),
    BadCertificate {
        source: SourceId,
        reason: String,
    },
}

impl fmt::Display for VerifyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyViolation::MissingSource(s) => write!(f, "no rate given for source {s}"),
            VerifyViolation::UnknownSource(s) => write!(f, "rate given for unknown source {s}"),
            VerifyViolation::NegativeRate(s) => write!(f, "source {s} has a negative rate"),
            VerifyViolation::Overloaded { link, load, capacity } => write!(
                f,
                "link {link} overloaded: load {} > capacity {}",
                load.to_decimal_2(),
                capacity.to_decimal_2()
            ),
            VerifyViolation::NoBottleneck(s) => {
                write!(f, "source {s} has no bottleneck link; it could be given more")
            }
            VerifyViolation::BadCertificate { source, reason } => {
                write!(f, "certificate for {source} invalid: {reason}")
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerificationReport {
    pub violations: Vec<VerifyViolation>,
    /// Bottleneck link found for each certified source.
    pub bottlenecks: BTreeMap<SourceId, LinkId>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<&VerifyViolation> {
        self.violations.first()
    }
}

/// Check feasibility, then look for a bottleneck certificate for every source.
pub fn verify_maxmin(
    network: &Network,
    policy: FairnessPolicy,
    alloc: &AllocationVector,
) -> VerificationReport {
    let mut report = VerificationReport::default();

    for s in alloc.sources() {
        if network.vc_of(s).is_none() {
            report.violations.push(VerifyViolation::UnknownSource(s.clone()));
        }
    }
    for s in network.sources() {
        match alloc.rate(s) {
            None => report.violations.push(VerifyViolation::MissingSource(s.clone())),
            Some(r) if r < &Rate::zero() => report.violations.push(VerifyViolation::NegativeRate(s.clone())),
            _ => {}
        }
    }
    if !report.passed() {
        return report;
    }

    report.violations.extend(overloads(network, alloc));
    if !report.passed() {
        return report;
    }

    let trees: BTreeMap<LinkId, PartitionTree> = network
        .loaded_links()
        .into_iter()
        .map(|l| (l.id.clone(), build_partition_tree(network, l, policy)))
        .collect();

    for s in network.sources() {
        let path = network.path(s).expect("validated source has a path");
        let found = path.links.iter().find(|l| {
            let link = network.topology().link(l).expect("path link exists");
            alloc.link_load(network, l) == link.capacity && chain_dominates(&trees[*l], s, alloc).is_ok()
        });
        match found {
            Some(l) => {
                report.bottlenecks.insert(s.clone(), l.clone());
            }
            None => report.violations.push(VerifyViolation::NoBottleneck(s.clone())),
        }
    }
    report
}

/// Validate a specific certificate against an allocation.
pub fn check_certificate(
    network: &Network,
    policy: FairnessPolicy,
    alloc: &AllocationVector,
    certificate: &BottleneckCertificate,
) -> Result<(), VerifyViolation> {
    for s in network.sources() {
        let bad = |reason: String| VerifyViolation::BadCertificate {
            source: s.clone(),
            reason,
        };
        let entry = certificate.entries.get(s).ok_or_else(|| bad("missing".into()))?;
        let link = network
            .topology()
            .link(&entry.link)
            .ok_or_else(|| bad(format!("unknown link {}", entry.link)))?;
        if !network.path(s).is_some_and(|p| p.crosses(&link.id)) {
            return Err(bad(format!("{} is not on the source's path", link.id)));
        }
        if alloc.link_load(network, &link.id) != link.capacity {
            return Err(bad(format!("{} is not saturated", link.id)));
        }
        let tree = build_partition_tree(network, link, policy);
        let chain: Vec<_> = tree
            .chain(s)
            .ok_or_else(|| bad("source not in tree".into()))?
            .into_iter()
            .map(|(n, _)| n.label())
            .collect();
        if chain != entry.chain {
            return Err(bad("chain does not match the partition tree".into()));
        }
        chain_dominates(&tree, s, alloc).map_err(bad)?;
    }
    Ok(())
}

fn overloads(network: &Network, alloc: &AllocationVector) -> Vec<VerifyViolation> {
    network
        .topology()
        .links()
        .iter()
        .filter_map(|l| {
            let load = alloc.link_load(network, &l.id);
            (load > l.capacity).then(|| VerifyViolation::Overloaded {
                link: l.id.clone(),
                load,
                capacity: l.capacity.clone(),
            })
        })
        .collect()
}

fn aggregate(node: &PartitionNode, alloc: &AllocationVector) -> Rate {
    node.leaves().into_iter().filter_map(|s| alloc.rate(s)).sum()
}

/// At every level of the tree the branch holding `source` must carry at
/// least as much as each of its siblings.
fn chain_dominates(tree: &PartitionTree, source: &SourceId, alloc: &AllocationVector) -> Result<(), String> {
    let chain = tree.chain(source).ok_or("source not in tree")?;
    for (node, siblings) in chain {
        let own = aggregate(node, alloc);
        for sib in siblings {
            if sib == node {
                continue;
            }
            let other = aggregate(sib, alloc);
            if other > own {
                return Err(format!(
                    "sibling {} carries {} > {} for {}",
                    sib.label(),
                    other.to_decimal_2(),
                    own.to_decimal_2(),
                    node.label()
                ));
            }
        }
    }
    Ok(())
}

/// A feasible transfer of `epsilon` from a richer source to a poorer one
/// that the policy would regard as fairer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Improvement {
    pub raised: SourceId,
    pub lowered: SourceId,
    pub epsilon: Rate,
}

/// Search every ordered pair `(s, t)` with `x_t > x_s` for a feasible
/// transfer of `epsilon = min positive rate / 1000` from `t` to `s` that is
/// consistent with the policy: on every link both cross, the branch holding
/// `s` below their lowest common group still carries no more than the
/// branch holding `t` after the transfer.
pub fn find_local_improvement(
    network: &Network,
    policy: FairnessPolicy,
    alloc: &AllocationVector,
) -> Option<Improvement> {
    let epsilon = alloc
        .iter()
        .map(|(_, r)| r)
        .filter(|r| r.is_positive())
        .min()?
        .mul_ratio(1, 1000);
    let trees: BTreeMap<LinkId, PartitionTree> = network
        .loaded_links()
        .into_iter()
        .map(|l| (l.id.clone(), build_partition_tree(network, l, policy)))
        .collect();

    for (s, xs) in alloc.iter() {
        for (t, xt) in alloc.iter() {
            if xt <= xs {
                continue;
            }
            let mut moved = alloc.clone();
            moved.set_rate(s, xs + &epsilon);
            moved.set_rate(t, xt - &epsilon);
            if !overloads(network, &moved).is_empty() {
                continue;
            }
            let ps = network.path(s).expect("path");
            let pt = network.path(t).expect("path");
            let consistent = ps.links.iter().filter(|l| pt.crosses(l)).all(|l| {
                let (bs, bt) = split_branches(&trees[l], s, t);
                aggregate(bs, &moved) <= aggregate(bt, &moved)
            });
            if consistent {
                return Some(Improvement {
                    raised: s.clone(),
                    lowered: t.clone(),
                    epsilon,
                });
            }
        }
    }
    None
}

/// The children of the lowest common group of `s` and `t` that hold each.
fn split_branches<'a>(
    tree: &'a PartitionTree,
    s: &SourceId,
    t: &SourceId,
) -> (&'a PartitionNode, &'a PartitionNode) {
    let cs = tree.chain(s).expect("s in tree");
    let ct = tree.chain(t).expect("t in tree");
    for ((ns, _), (nt, _)) in cs.iter().zip(ct.iter()) {
        if ns != nt {
            return (ns, nt);
        }
    }
    unreachable!("distinct sources diverge somewhere in the tree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin_scenario;

    fn example(name: &str) -> Network {
        builtin_scenario(name).unwrap().network().unwrap()
    }

    fn vector(net: &Network, rates: &[(i64, i64)]) -> AllocationVector {
        AllocationVector::new(
            net.sources()
                .iter()
                .cloned()
                .zip(rates.iter().map(|&(n, d)| Rate::new(n, d))),
        )
    }

    #[test]
    fn reference_source_based_vector_passes() {
        let net = example("example1");
        let alloc = vector(&net, &[(75, 2); 4]);
        let report = verify_maxmin(&net, FairnessPolicy::SourceBased, &alloc);
        assert!(report.passed(), "{:?}", report.violations);
        assert_eq!(report.bottlenecks[&SourceId::from("S1")], LinkId::from("LINK3"));
    }

    #[test]
    fn raising_one_source_overloads_link3() {
        let net = example("example1");
        let alloc = vector(&net, &[(40, 1), (75, 2), (75, 2), (75, 2)]);
        let report = verify_maxmin(&net, FairnessPolicy::SourceBased, &alloc);
        match report.first_violation() {
            Some(VerifyViolation::Overloaded { link, .. }) => assert_eq!(link.as_str(), "LINK3"),
            other => panic!("expected overload, got {other:?}"),
        }
    }

    #[test]
    fn under_allocation_has_no_bottleneck() {
        let net = example("example1");
        let alloc = vector(&net, &[(30, 1), (30, 1), (30, 1), (30, 1)]);
        let report = verify_maxmin(&net, FairnessPolicy::SourceBased, &alloc);
        assert!(matches!(
            report.first_violation(),
            Some(VerifyViolation::NoBottleneck(_))
        ));
        assert!(find_local_improvement(&net, FairnessPolicy::SourceBased, &alloc).is_none());
    }

    #[test]
    fn source_based_vector_fails_vc_policy() {
        let net = example("example1");
        let alloc = vector(&net, &[(75, 2); 4]);
        let report = verify_maxmin(&net, FairnessPolicy::VcSource, &alloc);
        // SA is not held back at LINK3: the multipoint VC carries three times as much.
        assert_eq!(
            report.violations,
            vec![VerifyViolation::NoBottleneck(SourceId::from("SA"))]
        );
    }

    #[test]
    fn vc_vector_is_not_improvable_under_vc_policy() {
        let net = example("example1");
        let alloc = vector(&net, &[(25, 1), (25, 1), (25, 1), (75, 1)]);
        assert!(verify_maxmin(&net, FairnessPolicy::VcSource, &alloc).passed());
        assert!(find_local_improvement(&net, FairnessPolicy::VcSource, &alloc).is_none());
        // ... but source-based fairness would move bandwidth from SA to S1.
        assert!(find_local_improvement(&net, FairnessPolicy::SourceBased, &alloc).is_some());
    }
}
