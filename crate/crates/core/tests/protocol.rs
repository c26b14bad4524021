use std::collections::{BTreeMap, VecDeque};

use mobicell_core::protocol::explore::{explore, ExploreConfig};
use mobicell_core::protocol::{compute_bap_route, step_fsm, Fsm, Input};
use mobicell_core::topology::{ElementId, IabForest};
use mobicell_core::{MessageKind, ProcedureKind, ProcedureState};
use proptest::prelude::*;

#[test]
fn every_chain_is_sound_with_one_loss() {
    let chains = [
        vec![ProcedureKind::MtSession],
        vec![ProcedureKind::F1Setup],
        vec![ProcedureKind::UeAttach],
        vec![ProcedureKind::MtSession, ProcedureKind::F1Setup],
        vec![ProcedureKind::MtSession, ProcedureKind::F1Setup, ProcedureKind::UeAttach],
    ];
    for chain in chains {
        let report = explore(&ExploreConfig { chain: chain.clone(), max_retries: 1, max_losses: 1 });
        assert!(report.is_sound(), "{chain:?}: {:?} {:?}", report.deadlocks, report.violations);
        assert!(report.terminal_states > 0);
    }
}

#[test]
fn loss_free_message_counts() {
    let count = |chain: Vec<ProcedureKind>| {
        explore(&ExploreConfig { chain, max_retries: 1, max_losses: 0 }).loss_free_message_counts
    };
    // Three request/response pairs for the MT session, one for F1.
    assert_eq!(count(vec![ProcedureKind::MtSession]).into_iter().collect::<Vec<_>>(), vec![6]);
    assert_eq!(count(vec![ProcedureKind::MtSession, ProcedureKind::F1Setup]).into_iter().collect::<Vec<_>>(), vec![8]);
}

fn input_strategy() -> impl Strategy<Value = Input> {
    prop_oneof![
        Just(Input::Start),
        Just(Input::LinkDown),
        Just(Input::Abort),
        (0..MessageKind::ALL.len()).prop_map(|i| Input::Recv(MessageKind::ALL[i])),
        (0u64..4).prop_map(|timer| Input::Timeout { timer }),
    ]
}

proptest! {
    #[test]
    fn fsm_stays_within_its_state_set(
        kind in prop_oneof![Just(ProcedureKind::MtSession), Just(ProcedureKind::F1Setup), Just(ProcedureKind::UeAttach)],
        inputs in prop::collection::vec(input_strategy(), 0..60),
    ) {
        let mut fsm = Fsm::new(kind, 2);
        for i in inputs {
            let (next, _) = step_fsm(&fsm, i);
            prop_assert!(kind.states().contains(&next.state));
            prop_assert!(next.retry_count <= next.max_retries);
            if next.state == ProcedureState::Failed || next.state.is_established() {
                prop_assert!(next.timer_id.is_none());
            }
            fsm = next;
        }
    }

    #[test]
    fn bap_route_matches_breadth_first_search(parents in prop::collection::vec(any::<prop::sample::Index>(), 1..12), donors in 1usize..3) {
        let (forest, edges) = random_forest(&parents, donors);
        for node in forest.nodes() {
            let route = compute_bap_route(&forest, &node).unwrap();
            prop_assert_eq!(route.dus(), bfs_to_donor(&forest, &edges, &node));
        }
    }
}

/// Node `i` (after the donors) picks a parent among the elements before it.
fn random_forest(parents: &[prop::sample::Index], donors: usize) -> (IabForest, Vec<(ElementId, ElementId)>) {
    let name = |i: usize| ElementId::from(format!("du{i}"));
    let mut edges = Vec::new();
    for (k, ix) in parents.iter().enumerate() {
        let child = donors + k;
        edges.push((name(child), name(ix.index(child))));
    }
    let forest = IabForest::new(
        (0..donors).map(name),
        edges.iter().map(|(c, p)| (c.clone(), ElementId::from(format!("{c}.mt")), p.clone())),
    )
    .unwrap();
    (forest, edges)
}

/// Shortest path from `node` to any donor over the undirected tree edges.
pub fn bfs_to_donor(forest: &IabForest, edges: &[(ElementId, ElementId)], node: &ElementId) -> Vec<ElementId> {
    let mut adj: BTreeMap<&ElementId, Vec<&ElementId>> = BTreeMap::new();
    for (a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut prev: BTreeMap<&ElementId, &ElementId> = BTreeMap::new();
    let mut queue = VecDeque::from([node]);
    while let Some(cur) = queue.pop_front() {
        if forest.is_donor(cur) {
            let mut out = vec![cur.clone()];
            let mut at = cur;
            while let Some(p) = prev.get(at) {
                out.push((*p).clone());
                at = p;
            }
            out.reverse();
            return out;
        }
        for n in adj.get(cur).into_iter().flatten() {
            if *n != node && !prev.contains_key(n) {
                prev.insert(n, cur);
                queue.push_back(n);
            }
        }
    }
    panic!("{node} has no donor");
}
