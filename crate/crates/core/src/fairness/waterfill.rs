use std::collections::BTreeMap;

use super::fixed_point;
use super::partition::{build_partition_tree, NodeLabel, PartitionNode, PartitionTree};
use super::{AllocationVector, FairnessPolicy};
use crate::rate::Rate;
use crate::topology::{LinkId, Network, SourceId};

/// Why a source cannot be given more: the link and the partition-tree
/// chain (root child down to the source's leaf) where it is held back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateEntry {
    pub link: LinkId,
    pub chain: Vec<NodeLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BottleneckCertificate {
    pub entries: BTreeMap<SourceId, CertificateEntry>,
}

/// Interval rounds before switching to the exact fixed-point solve.
const MAX_ROUNDS: usize = 64;

/// Damped iterations spent looking for the affine piece of the fixed point.
const MAX_DAMPED: usize = 400;

/// Demand of a leaf while water-filling a tree: `None` is unbounded.
type Demands<'a> = BTreeMap<&'a SourceId, Option<Rate>>;

/// Compute the hierarchical max-min fair allocation under `policy`.
///
/// Every unfrozen source carries an interval `[lo, hi]` holding its fair
/// rate. `lo` is its smallest per-link share when every other unfrozen
/// source asks for its `hi` (initially unbounded); `hi` is the same share
/// when every other unfrozen source asks only for its `lo`. A leaf's share
/// never grows when other demands grow, so both passes are sound and they
/// alternate, tightening the intervals.
///
/// A source freezes at `lo` once its interval closes, or once it is pinned:
/// on some link its `lo` share is the same for every demand vector inside
/// the intervals, because each sibling along its chain either has a fixed
/// aggregate or stays capped by the level even at its lower bound.
pub fn water_fill(network: &Network, policy: FairnessPolicy) -> (AllocationVector, BottleneckCertificate) {
    let trees: Vec<(PartitionTree, Rate)> = network
        .loaded_links()
        .into_iter()
        .map(|l| (build_partition_tree(network, l, policy), l.capacity.clone()))
        .collect();

    let mut frozen: BTreeMap<&SourceId, Rate> = BTreeMap::new();
    let sources = network.sources();

    'outer: while frozen.len() < sources.len() {
        let unfrozen: Vec<&SourceId> = sources.iter().filter(|s| !frozen.contains_key(s)).collect();
        let mut hi_demands: BTreeMap<&SourceId, Option<Rate>> = unfrozen.iter().map(|s| (*s, None)).collect();
        let mut lo = shares_against(&trees, &frozen, &unfrozen, &hi_demands);

        let mut rounds = 0;
        let settled = loop {
            let lo_demands: BTreeMap<&SourceId, Option<Rate>> =
                unfrozen.iter().map(|s| (*s, Some(lo[s].0.clone()))).collect();
            let hi = shares_against(&trees, &frozen, &unfrozen, &lo_demands);
            let closed: Vec<(&SourceId, usize)> = unfrozen
                .iter()
                .filter(|s| hi[*s].0 == lo[*s].0)
                .map(|s| (*s, lo[s].1.expect("every source crosses a link")))
                .collect();
            if !closed.is_empty() {
                break closed;
            }
            let pinned = pinned_sources(&trees, &frozen, &unfrozen, &lo, &lo_demands, &hi_demands);
            if !pinned.is_empty() {
                break pinned;
            }
            hi_demands = unfrozen.iter().map(|s| (*s, Some(hi[s].0.clone()))).collect();
            let next = shares_against(&trees, &frozen, &unfrozen, &hi_demands);
            rounds += 1;
            if next == lo || rounds > MAX_ROUNDS {
                let exact = fixed_point(&trees, &frozen, &unfrozen, &lo, &hi)
                    .expect("share map has a fixed point inside the bounds");
                for (s, r) in exact {
                    frozen.insert(s, r);
                }
                continue 'outer;
            }
            lo = next;
        };

        for (s, _) in settled {
            frozen.insert(s, lo[s].0.clone());
        }
    }

    let alloc = AllocationVector::new(sources.iter().map(|s| (s.clone(), frozen[s].clone())));
    let certificate = certify(network, &trees, &alloc);
    (alloc, certificate)
}

/// For each source, the first link on its path that the allocation
/// saturates and where the fill, with every other source asking for its
/// allocated rate, gives it exactly its rate.
fn certify(
    network: &Network,
    trees: &[(PartitionTree, Rate)],
    alloc: &AllocationVector,
) -> BottleneckCertificate {
    let mut certificate = BottleneckCertificate::default();
    let mut demands: Demands = alloc.iter().map(|(s, r)| (s, Some(r.clone()))).collect();
    for s in network.sources() {
        let rate = alloc.rate(s).expect("allocation covers every source").clone();
        demands.insert(s, None);
        let found = trees.iter().find(|(tree, capacity)| {
            if !tree.leaves().contains(&s) || &alloc.link_load(network, &tree.link) != capacity {
                return false;
            }
            let mut shares = BTreeMap::new();
            fill(&tree.children, capacity.clone(), &demands, &mut shares);
            shares.get(s) == Some(&rate)
        });
        demands.insert(s, Some(rate));
        if let Some((tree, _)) = found {
            let chain = tree
                .chain(s)
                .expect("source is a leaf of every tree it crosses")
                .into_iter()
                .map(|(n, _)| n.label())
                .collect();
            certificate.entries.insert(
                s.clone(),
                CertificateEntry {
                    link: tree.link.clone(),
                    chain,
                },
            );
        }
    }
    certificate
}

/// The exact fixed point of the share map when the interval bounds stop
/// tightening: damped iteration from the middle of the bounds, solving the
/// affine piece at each iterate until the solution reproduces itself.
fn fixed_point<'a>(
    trees: &[(PartitionTree, Rate)],
    frozen: &BTreeMap<&'a SourceId, Rate>,
    unfrozen: &[&'a SourceId],
    lo: &BTreeMap<&'a SourceId, (Rate, Option<usize>)>,
    hi: &BTreeMap<&'a SourceId, (Rate, Option<usize>)>,
) -> Option<BTreeMap<&'a SourceId, Rate>> {
    let as_demands = |x: &BTreeMap<&'a SourceId, Rate>| -> BTreeMap<&'a SourceId, Option<Rate>> {
        x.iter().map(|(s, r)| (*s, Some(r.clone()))).collect()
    };
    let reproduces = |x: &BTreeMap<&'a SourceId, Rate>| {
        unfrozen.iter().all(|s| lo[s].0 <= x[s] && x[s] <= hi[s].0)
            && shares_against(trees, frozen, unfrozen, &as_demands(x))
                .iter()
                .all(|(s, (r, _))| &x[s] == r)
    };
    let slacks = [Rate::zero(), Rate::new(1, 1_000_000)];
    let lower: BTreeMap<&SourceId, Rate> = unfrozen.iter().map(|s| (*s, lo[s].0.clone())).collect();
    let upper: BTreeMap<&SourceId, Rate> = unfrozen.iter().map(|s| (*s, hi[s].0.clone())).collect();
    let mut y: BTreeMap<&SourceId, Rate> = unfrozen
        .iter()
        .map(|s| (*s, (&lo[s].0 + &hi[s].0).mul_ratio(1, 2)))
        .collect();
    for _ in 0..MAX_DAMPED {
        for slack in &slacks {
            for free_at in [&lower, &upper, &y] {
                if let Some(x) = fixed_point::solve_piece(trees, frozen, unfrozen, &y, slack, free_at) {
                    if reproduces(&x) {
                        return Some(x);
                    }
                }
            }
        }
        let image = shares_against(trees, frozen, unfrozen, &as_demands(&y));
        y = unfrozen
            .iter()
            .map(|s| (*s, Rate::from_f64((&y[s] + &image[s].0).to_f64() / 2.0)))
            .collect();
    }
    None
}

fn demands_with<'a>(
    frozen: &BTreeMap<&'a SourceId, Rate>,
    others: &BTreeMap<&'a SourceId, Option<Rate>>,
) -> Demands<'a> {
    let mut demands: Demands = frozen.iter().map(|(s, r)| (*s, Some(r.clone()))).collect();
    demands.extend(others.iter().map(|(s, d)| (*s, d.clone())));
    demands
}

/// Each unfrozen source's smallest share when it asks for unlimited
/// bandwidth, frozen sources ask for their rates, and every other unfrozen
/// source asks for `others[t]`.
fn shares_against<'a>(
    trees: &[(PartitionTree, Rate)],
    frozen: &BTreeMap<&'a SourceId, Rate>,
    unfrozen: &[&'a SourceId],
    others: &BTreeMap<&'a SourceId, Option<Rate>>,
) -> BTreeMap<&'a SourceId, (Rate, Option<usize>)> {
    let mut demands = demands_with(frozen, others);
    let mut out = BTreeMap::new();
    for s in unfrozen {
        let own = demands.insert(s, None);
        out.extend(min_shares(trees, &demands, &[*s]));
        if let Some(d) = own {
            demands.insert(s, d);
        }
    }
    out
}

/// Sources whose `lo` share is pinned on some link, with that link's index.
fn pinned_sources<'a>(
    trees: &[(PartitionTree, Rate)],
    frozen: &BTreeMap<&'a SourceId, Rate>,
    unfrozen: &[&'a SourceId],
    lo: &BTreeMap<&'a SourceId, (Rate, Option<usize>)>,
    lo_demands: &BTreeMap<&'a SourceId, Option<Rate>>,
    hi_demands: &BTreeMap<&'a SourceId, Option<Rate>>,
) -> Vec<(&'a SourceId, usize)> {
    let mut low = demands_with(frozen, lo_demands);
    let mut high = demands_with(frozen, hi_demands);
    let mut pinned = Vec::new();
    for s in unfrozen {
        let own_low = low.insert(s, None);
        let own_high = high.insert(s, None);
        let found = trees.iter().enumerate().find(|(_, (tree, capacity))| {
            tree.leaves().contains(s)
                && pinned_share(&tree.children, capacity.clone(), s, &low, &high).as_ref() == Some(&lo[s].0)
        });
        if let Some((i, _)) = found {
            pinned.push((*s, i));
        }
        if let Some(d) = own_low {
            low.insert(s, d);
        }
        if let Some(d) = own_high {
            high.insert(s, d);
        }
    }
    pinned
}

/// The share of unbounded leaf `s` under `high` demands, if every sibling
/// along its chain is fixed or capped at the level under `low` demands too.
fn pinned_share(
    children: &[PartitionNode],
    available: Rate,
    s: &SourceId,
    low: &Demands,
    high: &Demands,
) -> Option<Rate> {
    let grant = grants(children, available, high);
    let own = children.iter().position(|c| c.contains(s))?;
    let level = &grant[own];
    for (i, c) in children.iter().enumerate() {
        if i == own {
            continue;
        }
        let (dl, dh) = (node_demand(c, low), node_demand(c, high));
        let fixed = dl == dh;
        let capped = dl.as_ref().is_none_or(|d| d >= level);
        if !fixed && !capped {
            return None;
        }
    }
    match &children[own] {
        PartitionNode::Leaf(_) => Some(level.clone()),
        PartitionNode::Group { children, .. } => pinned_share(children, level.clone(), s, low, high),
    }
}

/// For each source in `of`, the smallest share it receives over all links
/// it crosses, and the index of the tree where that minimum is attained
/// (first such link in declaration order).
fn min_shares<'a>(
    trees: &[(PartitionTree, Rate)],
    demands: &Demands<'a>,
    of: &[&'a SourceId],
) -> BTreeMap<&'a SourceId, (Rate, Option<usize>)> {
    let mut best: BTreeMap<&SourceId, (Rate, Option<usize>)> = BTreeMap::new();
    for (i, (tree, capacity)) in trees.iter().enumerate() {
        if !of.iter().any(|s| tree.leaves().contains(s)) {
            continue;
        }
        let mut shares = BTreeMap::new();
        fill(&tree.children, capacity.clone(), demands, &mut shares);
        for s in of {
            if let Some(share) = shares.remove(*s) {
                match best.get(s) {
                    Some((r, _)) if r <= &share => {}
                    _ => {
                        best.insert(s, (share, Some(i)));
                    }
                }
            }
        }
    }
    for s in of {
        best.entry(s).or_insert((Rate::zero(), None));
    }
    best
}

fn node_demand(node: &PartitionNode, demands: &Demands) -> Option<Rate> {
    match node {
        PartitionNode::Leaf(s) => demands.get(s).cloned().flatten(),
        PartitionNode::Group { children, .. } => {
            let mut total = Rate::zero();
            for c in children {
                total += &node_demand(c, demands)?;
            }
            Some(total)
        }
    }
}

/// Max-min split of `available` among `children` given their demands.
fn grants(children: &[PartitionNode], available: Rate, demands: &Demands) -> Vec<Rate> {
    let wants: Vec<Option<Rate>> = children.iter().map(|c| node_demand(c, demands)).collect();
    let mut order: Vec<usize> = (0..children.len()).collect();
    // Finite demands ascending, unbounded last.
    order.sort_by(|&a, &b| match (&wants[a], &wants[b]) {
        (Some(x), Some(y)) => x.cmp(y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });

    let mut grant: Vec<Rate> = vec![Rate::zero(); children.len()];
    let mut remaining = available;
    let mut left = children.len();
    let mut idx = 0;
    while idx < order.len() {
        let c = order[idx];
        let level = remaining.div_count(left);
        match &wants[c] {
            Some(d) if d <= &level => {
                grant[c] = d.clone();
                remaining -= d;
                left -= 1;
                idx += 1;
            }
            _ => break,
        }
    }
    if left > 0 {
        let level = remaining.div_count(left);
        for &c in &order[idx..] {
            grant[c] = level.clone();
        }
    }
    grant
}

/// Max-min water-fill `available` among `children`, recursing into groups.
/// Leaf shares land in `out`.
fn fill<'t>(
    children: &'t [PartitionNode],
    available: Rate,
    demands: &Demands,
    out: &mut BTreeMap<&'t SourceId, Rate>,
) {
    if children.is_empty() {
        return;
    }
    for (child, share) in children.iter().zip(grants(children, available, demands)) {
        match child {
            PartitionNode::Leaf(s) => {
                out.insert(s, share);
            }
            PartitionNode::Group { children, .. } => fill(children, share, demands, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin_scenario;

    fn rates(name: &str, policy: FairnessPolicy) -> Vec<Rate> {
        let net = builtin_scenario(name).unwrap().network().unwrap();
        let (alloc, _) = water_fill(&net, policy);
        alloc.iter().map(|(_, r)| r.clone()).collect()
    }

    fn r(n: i64, d: i64) -> Rate {
        Rate::new(n, d)
    }

    #[test]
    fn example1_all_policies() {
        assert_eq!(rates("example1", FairnessPolicy::SourceBased), vec![r(75, 2); 4]);
        assert_eq!(
            rates("example1", FairnessPolicy::VcSource),
            vec![r(25, 1), r(25, 1), r(25, 1), r(75, 1)]
        );
        assert_eq!(
            rates("example1", FairnessPolicy::FlowBased),
            vec![r(25, 1), r(25, 1), r(50, 1), r(50, 1)]
        );
        assert_eq!(
            rates("example1", FairnessPolicy::VcFlow),
            vec![r(75, 4), r(75, 4), r(75, 2), r(75, 1)]
        );
    }

    #[test]
    fn example2_all_policies() {
        assert_eq!(
            rates("example2", FairnessPolicy::SourceBased),
            vec![r(50, 3), r(50, 3), r(175, 3), r(175, 3), r(50, 3)]
        );
        assert_eq!(
            rates("example2", FairnessPolicy::VcSource),
            vec![r(25, 2), r(25, 2), r(125, 2), r(125, 2), r(25, 1)]
        );
        assert_eq!(
            rates("example2", FairnessPolicy::FlowBased),
            vec![r(50, 3), r(50, 3), r(125, 3), r(75, 1), r(50, 3)]
        );
        assert_eq!(
            rates("example2", FairnessPolicy::VcFlow),
            vec![r(25, 2), r(25, 2), r(50, 1), r(75, 1), r(25, 1)]
        );
    }

    #[test]
    fn leftover_from_a_group_capped_elsewhere_goes_to_its_sibling() {
        // VC A is held to 50 upstream, so VC M may use the other 100 on the
        // shared link instead of the naive half.
        let text = "\
switch X
switch Y
link up src:a sw:Y:0 150
link cap sw:Y:5 sw:Z:0 50
switch Z
link s1 src:m1 sw:X:0 150
link s2 src:m2 sw:X:1 150
link s3 src:m3 sw:X:2 150
link xy sw:X:9 sw:Z:1 150
link shared sw:Z:9 dst:d 150
vc M dst d sources m1,m2,m3
vc A dst d sources a
route M X 0 -> 9
route M X 1 -> 9
route M X 2 -> 9
route M Z 1 -> 9
route A Y 0 -> 5
route A Z 0 -> 9
";
        let net = crate::scenario::parse_scenario(text).unwrap().network().unwrap();
        let (alloc, _) = water_fill(&net, FairnessPolicy::VcSource);
        let got: Vec<Rate> = alloc.iter().map(|(_, r)| r.clone()).collect();
        assert_eq!(got, vec![r(100, 3), r(100, 3), r(100, 3), r(50, 1)]);
    }
}
