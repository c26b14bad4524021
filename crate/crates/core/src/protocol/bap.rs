use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{ElementId, IabForest};

/// One backhaul hop: the child IAB-node's MT hanging off its parent's DU.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BapHop {
    pub parent_du: ElementId,
    pub child_du: ElementId,
    pub child_mt: ElementId,
}

/// Route from an IAB-node to its donor-DU.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BapRoute {
    pub node: ElementId,
    pub donor: ElementId,
    pub hops: Vec<BapHop>,
}

impl BapRoute {
    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    /// DU sequence from the node to the donor.
    pub fn dus(&self) -> Vec<ElementId> {
        let mut v = vec![self.node.clone()];
        v.extend(self.hops.iter().map(|h| h.parent_du.clone()));
        v
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BapError {
    #[error("`{0}` is not an IAB node of any tree")]
    Orphan(String),
}

pub fn compute_bap_route(forest: &IabForest, node: &ElementId) -> Result<BapRoute, BapError> {
    if forest.is_donor(node) {
        return Err(BapError::Orphan(node.0.clone()));
    }
    let chain = forest.ancestry(node).ok_or_else(|| BapError::Orphan(node.0.clone()))?;
    let hops = chain
        .windows(2)
        .map(|w| BapHop {
            parent_du: w[1].clone(),
            child_du: w[0].clone(),
            child_mt: forest.mt_of(&w[0]).cloned().expect("IAB node has an MT"),
        })
        .collect();
    Ok(BapRoute { node: node.clone(), donor: chain.last().cloned().expect("non-empty chain"), hops })
}
