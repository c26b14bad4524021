use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{AttachMode, ElementId, ElementKind, LinkId, LinkRole, McId, MobileCellArch, Topology, TopologyError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hop {
    Link(LinkId),
    /// Air interface between a cell and a terminal with no declared link
    /// (UE access, or an MT hop not described in the scenario).
    Air {
        cell: ElementId,
        terminal: ElementId,
    },
}

/// Element sequence with the hop between each consecutive pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub elements: Vec<ElementId>,
    pub hops: Vec<Hop>,
}

impl Path {
    pub fn single(e: ElementId) -> Path {
        Path { elements: vec![e], hops: Vec::new() }
    }

    pub fn push(&mut self, hop: Hop, e: ElementId) {
        self.hops.push(hop);
        self.elements.push(e);
    }

    /// Appends `tail`, which must start where `self` ends.
    pub fn extend(&mut self, tail: Path) {
        debug_assert_eq!(self.elements.last(), tail.elements.first());
        self.elements.extend(tail.elements.into_iter().skip(1));
        self.hops.extend(tail.hops);
    }

    pub fn first(&self) -> &ElementId {
        &self.elements[0]
    }

    pub fn last(&self) -> &ElementId {
        self.elements.last().expect("paths are never empty")
    }

    pub fn contains(&self, e: &ElementId) -> bool {
        self.elements.contains(e)
    }

    pub fn is_simple(&self) -> bool {
        let set: BTreeSet<_> = self.elements.iter().collect();
        set.len() == self.elements.len()
    }

    pub fn reversed(&self) -> Path {
        let mut elements = self.elements.clone();
        elements.reverse();
        let mut hops = self.hops.clone();
        hops.reverse();
        Path { elements, hops }
    }

    /// Prefix ending at `e`, if `e` is on the path.
    pub fn truncated_at(&self, e: &ElementId) -> Option<Path> {
        let i = self.elements.iter().position(|x| x == e)?;
        Some(Path { elements: self.elements[..=i].to_vec(), hops: self.hops[..i].to_vec() })
    }

    pub fn links(&self) -> impl Iterator<Item = &LinkId> {
        self.hops.iter().filter_map(|h| match h {
            Hop::Link(l) => Some(l),
            Hop::Air { .. } => None,
        })
    }
}

impl Topology {
    fn hop_between(&self, a: &ElementId, b: &ElementId) -> Hop {
        match self.link_between(a, b) {
            Some(l) => Hop::Link(l.id.clone()),
            None => Hop::Air { cell: b.clone(), terminal: a.clone() },
        }
    }

    /// Breadth-first route over fixed infrastructure from `from` to the first
    /// element satisfying `goal`. Neighbors are visited in id order, so ties
    /// between equally short routes resolve deterministically.
    pub fn fixed_route(
        &self,
        from: &ElementId,
        goal: impl Fn(&ElementId) -> bool,
        exclude: &BTreeSet<ElementId>,
    ) -> Option<Path> {
        self.fixed_route_where(from, goal, exclude, |_| true)
    }

    /// [`Topology::fixed_route`] restricted to links accepted by `usable`.
    pub fn fixed_route_where(
        &self,
        from: &ElementId,
        goal: impl Fn(&ElementId) -> bool,
        exclude: &BTreeSet<ElementId>,
        usable: impl Fn(&LinkId) -> bool,
    ) -> Option<Path> {
        if goal(from) {
            return Some(Path::single(from.clone()));
        }
        let mut prev: BTreeMap<ElementId, (ElementId, LinkId)> = BTreeMap::new();
        let mut seen: BTreeSet<ElementId> = BTreeSet::from([from.clone()]);
        let mut queue = VecDeque::from([from.clone()]);
        while let Some(cur) = queue.pop_front() {
            for (n, l) in self.neighbors(&cur) {
                if seen.contains(n) || exclude.contains(n) || !usable(l) {
                    continue;
                }
                if !self.element(n).is_some_and(|e| e.is_fixed_infra()) {
                    continue;
                }
                seen.insert(n.clone());
                prev.insert(n.clone(), (cur.clone(), l.clone()));
                if goal(n) {
                    let mut rev = vec![(n.clone(), None)];
                    let mut at = n.clone();
                    while let Some((p, l)) = prev.get(&at) {
                        rev.last_mut().unwrap().1 = Some(l.clone());
                        rev.push((p.clone(), None));
                        at = p.clone();
                    }
                    rev.reverse();
                    let mut path = Path::single(rev[0].0.clone());
                    for (e, l) in rev.into_iter().skip(1) {
                        path.push(Hop::Link(l.expect("predecessor link recorded")), e);
                    }
                    return Some(path);
                }
                queue.push_back(n.clone());
            }
        }
        None
    }

    pub fn is_upf_of(&self, e: &ElementId, network: &super::NetworkId) -> bool {
        self.element(e).is_some_and(|x| x.kind == ElementKind::Upf && &x.network == network)
    }

    /// Route from a fixed element to a UPF of the home network.
    pub fn route_to_home_upf(&self, from: &ElementId) -> Option<Path> {
        let home = self.home_network().clone();
        self.fixed_route(from, |e| self.is_upf_of(e, &home), &BTreeSet::new())
    }

    /// Onboard chain from the access element to the MT.
    pub fn onboard_path(&self, mc: &McId) -> Result<Path, TopologyError> {
        let cell = self.mobile_cell(mc).ok_or_else(|| TopologyError::UnknownMobileCell(mc.0.clone()))?;
        let chain = cell.onboard_chain();
        let mut path = Path::single(chain[0].clone());
        for w in chain.windows(2) {
            path.push(self.hop_between(&w[0], &w[1]), w[1].clone());
        }
        Ok(path)
    }

    /// Backhaul path the mobile cell would use through its configured
    /// attachment, regardless of link or session state.
    pub fn logical_path(&self, mc: &McId) -> Result<Path, TopologyError> {
        let cell = self.mobile_cell(mc).ok_or_else(|| TopologyError::UnknownMobileCell(mc.0.clone()))?;
        let target = &cell.attachment.target;
        let mut path = self.onboard_path(mc)?;
        let mt = path.last().clone();
        path.push(self.hop_between(&mt, target), target.clone());

        let home = self.home_network().clone();
        let partitioned = |from: &ElementId, to: &str| TopologyError::PartitionedTopology {
            from: from.0.clone(),
            to: to.to_string(),
        };

        match cell.attachment.mode {
            AttachMode::Overlay => {
                let on = self.element(target).expect("target checked").network.clone();
                let cu = cell.arch.configured_cu();
                // Prefer a session route that does not already cross the CU, so
                // the F1 leg can be appended without revisiting it.
                let mut avoid = path_set(&path, target);
                avoid.extend(cu.cloned());
                let seg = self
                    .fixed_route(target, |e| self.is_upf_of(e, &on), &avoid)
                    .or_else(|| self.fixed_route(target, |e| self.is_upf_of(e, &on), &path_set(&path, target)))
                    .ok_or_else(|| partitioned(target, &format!("a UPF of `{on}`")))?;
                path.extend(seg);
                let on_upf = path.last().clone();
                if let Some(cu) = cu.filter(|cu| !path.contains(cu)) {
                    let seg = self
                        .fixed_route(&on_upf, |e| e == cu, &path_set(&path, &on_upf))
                        .ok_or_else(|| partitioned(&on_upf, &format!("CU `{cu}`")))?;
                    path.extend(seg);
                }
            }
            AttachMode::IabDirect => {
                let forest = self.iab_forest();
                let chain =
                    forest.ancestry(target).ok_or_else(|| TopologyError::NotADonor { target: target.0.clone() })?;
                for w in chain.windows(2) {
                    let node_mt = forest.mt_of(&w[0]).expect("IAB node has an MT").clone();
                    path.push(self.hop_between(&w[0], &node_mt), node_mt.clone());
                    path.push(self.hop_between(&node_mt, &w[1]), w[1].clone());
                }
                let donor = path.last().clone();
                let cu = self.controller_of(&donor).expect("donor DU has a CU").clone();
                path.push(self.hop_between(&donor, &cu), cu);
            }
        }

        let tail_start = path.last().clone();
        if !self.is_upf_of(&tail_start, &home) {
            let seg = self
                .fixed_route(&tail_start, |e| self.is_upf_of(e, &home), &path_set(&path, &tail_start))
                .ok_or_else(|| partitioned(&tail_start, "a home-network UPF"))?;
            path.extend(seg);
        }
        Ok(path)
    }

    /// Backhaul path of an attached mobile cell.
    pub fn backhaul_path(&self, mc: &McId, mt_active: bool) -> Result<Path, TopologyError> {
        if self.mobile_cell(mc).is_none() {
            return Err(TopologyError::UnknownMobileCell(mc.0.clone()));
        }
        if !mt_active {
            return Err(TopologyError::NotAttached(mc.0.clone()));
        }
        self.logical_path(mc)
    }

    /// Number of `BackhaulAir` links along `path`.
    pub fn backhaul_air_hops(&self, path: &Path) -> usize {
        path.links().filter(|l| self.link(l).is_some_and(|l| l.role == LinkRole::BackhaulAir)).count()
    }

    /// F1 control-plane route from a mobile cell's DU to its CU, for the
    /// split-2 and IAB architectures.
    pub fn f1_path(&self, mc: &McId) -> Result<Option<Path>, TopologyError> {
        let cell = self.mobile_cell(mc).ok_or_else(|| TopologyError::UnknownMobileCell(mc.0.clone()))?;
        if cell.arch == MobileCellArch::NoSplit {
            return Ok(None);
        }
        let du = cell.du_id();
        let cu = self.controller_of(&du).expect("DU has a controller").clone();
        let full = self.logical_path(mc)?;
        let start = full.elements.iter().position(|e| e == &du).expect("DU on backhaul path");
        let tail = Path { elements: full.elements[start..].to_vec(), hops: full.hops[start..].to_vec() };
        Ok(tail.truncated_at(&cu))
    }
}

fn path_set(p: &Path, except: &ElementId) -> BTreeSet<ElementId> {
    p.elements.iter().filter(|e| *e != except).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn path_helpers() {
        let mut p = Path::single("a".into());
        p.push(Hop::Link("l1".into()), "b".into());
        p.push(Hop::Link("l2".into()), "c".into());
        assert!(p.is_simple());
        let r = p.reversed();
        assert_eq!(r.elements, vec!["c".into(), "b".into(), "a".into()]);
        assert_eq!(r.hops, vec![Hop::Link("l2".into()), Hop::Link("l1".into())]);
        let t = p.truncated_at(&"b".into()).unwrap();
        assert_eq!(t.hops.len(), 1);
        assert!(p.truncated_at(&"z".into()).is_none());
    }

    #[test]
    fn fixed_route_finds_shortest() {
        let t = Topology::from_parts(minimal()).unwrap();
        let p = t.route_to_home_upf(&"ru".into()).unwrap();
        assert_eq!(p.elements, vec!["ru".into(), "du".into(), "cu".into(), "upf".into()]);
        assert!(t.fixed_route(&"ru".into(), |e| e.0 == "ue1", &BTreeSet::new()).is_none());
    }
}
