use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::ElementId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ForestError {
    #[error("IAB node `{0}` has more than one parent")]
    MultipleParents(String),
    #[error("IAB-donor-DU `{0}` cannot have a parent")]
    DonorHasParent(String),
    #[error("IAB parent `{0}` is neither a donor nor an IAB node")]
    UnknownParent(String),
    #[error("IAB topology contains a cycle through `{0}`")]
    Cycle(String),
}

/// Forest of IAB trees: each root is an IAB-donor-DU, each other node is the
/// DU of an IAB node whose MT hangs off its parent's DU.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IabForest {
    donors: BTreeSet<ElementId>,
    parent: BTreeMap<ElementId, ElementId>,
    node_mt: BTreeMap<ElementId, ElementId>,
}

impl IabForest {
    /// `edges` are `(child_du, child_mt, parent_du)`.
    pub fn new(
        donors: impl IntoIterator<Item = ElementId>,
        edges: impl IntoIterator<Item = (ElementId, ElementId, ElementId)>,
    ) -> Result<IabForest, ForestError> {
        let donors: BTreeSet<_> = donors.into_iter().collect();
        let mut parent = BTreeMap::new();
        let mut node_mt = BTreeMap::new();
        for (child, mt, up) in edges {
            if donors.contains(&child) {
                return Err(ForestError::DonorHasParent(child.0));
            }
            if parent.insert(child.clone(), up).is_some() {
                return Err(ForestError::MultipleParents(child.0));
            }
            node_mt.insert(child, mt);
        }
        for up in parent.values() {
            if !donors.contains(up) && !parent.contains_key(up) {
                return Err(ForestError::UnknownParent(up.0.clone()));
            }
        }
        let forest = IabForest { donors, parent, node_mt };
        for node in forest.parent.keys() {
            let mut cur = node;
            for _ in 0..=forest.parent.len() {
                match forest.parent.get(cur) {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            if !forest.donors.contains(cur) {
                return Err(ForestError::Cycle(node.0.clone()));
            }
        }
        Ok(forest)
    }

    pub fn donors(&self) -> impl Iterator<Item = &ElementId> {
        self.donors.iter()
    }

    pub fn nodes(&self) -> Vec<ElementId> {
        self.parent.keys().cloned().collect()
    }

    pub fn is_donor(&self, du: &ElementId) -> bool {
        self.donors.contains(du)
    }

    pub fn contains(&self, du: &ElementId) -> bool {
        self.donors.contains(du) || self.parent.contains_key(du)
    }

    pub fn parent_of(&self, du: &ElementId) -> Option<&ElementId> {
        self.parent.get(du)
    }

    pub fn mt_of(&self, du: &ElementId) -> Option<&ElementId> {
        self.node_mt.get(du)
    }

    /// Chain from `du` up to and including its donor.
    pub fn ancestry(&self, du: &ElementId) -> Option<Vec<ElementId>> {
        if !self.contains(du) {
            return None;
        }
        let mut chain = vec![du.clone()];
        let mut cur = du;
        while let Some(p) = self.parent.get(cur) {
            chain.push(p.clone());
            cur = p;
        }
        Some(chain)
    }

    pub fn root_donor(&self, du: &ElementId) -> Option<ElementId> {
        self.ancestry(du).and_then(|c| c.last().cloned())
    }

    /// Number of backhaul hops from `du` to its donor.
    pub fn depth(&self, du: &ElementId) -> Option<usize> {
        self.ancestry(du).map(|c| c.len() - 1)
    }
}
