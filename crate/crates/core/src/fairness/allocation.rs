use std::collections::BTreeMap;

use crate::rate::Rate;
use crate::topology::{LinkId, Network, SourceId, VcId};

/// Per-source rates, in the network's source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationVector {
    order: Vec<SourceId>,
    rates: BTreeMap<SourceId, Rate>,
}

impl AllocationVector {
    pub fn new(pairs: impl IntoIterator<Item = (SourceId, Rate)>) -> Self {
        let mut order = Vec::new();
        let mut rates = BTreeMap::new();
        for (s, r) in pairs {
            if rates.insert(s.clone(), r).is_none() {
                order.push(s);
            }
        }
        AllocationVector { order, rates }
    }

    pub fn sources(&self) -> &[SourceId] {
        &self.order
    }

    pub fn rate(&self, source: &SourceId) -> Option<&Rate> {
        self.rates.get(source)
    }

    pub fn set_rate(&mut self, source: &SourceId, rate: Rate) {
        if self.rates.insert(source.clone(), rate).is_none() {
            self.order.push(source.clone());
        }
    }

    /// Rates in source order.
    pub fn iter(&self) -> impl Iterator<Item = (&SourceId, &Rate)> {
        self.order.iter().map(move |s| (s, &self.rates[s]))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Sum of the rates of sources crossing `link`. Sources missing from the
    /// vector count as zero.
    pub fn link_load(&self, network: &Network, link: &LinkId) -> Rate {
        network
            .sources_on(link)
            .iter()
            .filter_map(|s| self.rates.get(s))
            .sum()
    }

    pub fn vc_sum(&self, network: &Network, vc: &VcId) -> Rate {
        network
            .vc(vc)
            .map(|v| v.sources.iter().filter_map(|s| self.rates.get(s)).sum())
            .unwrap_or_else(Rate::zero)
    }

    /// `(vc, sum)` in VC declaration order.
    pub fn vc_sums(&self, network: &Network) -> Vec<(VcId, Rate)> {
        network
            .vcs()
            .iter()
            .map(|v| (v.id.clone(), self.vc_sum(network, &v.id)))
            .collect()
    }

    /// Smallest rate in the vector.
    pub fn min_rate(&self) -> Option<&Rate> {
        self.rates.values().min()
    }
}
