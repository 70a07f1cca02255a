//! Hop-count graph helpers shared by the link-state protocols.

use std::collections::{BTreeMap, BTreeSet};

use crate::medium::in_range;
use crate::mobility::Position;
use crate::protocol::NodeId;

pub type Adjacency = BTreeMap<NodeId, BTreeSet<NodeId>>;

/// Undirected unit-disk graph over `positions`.
pub fn unit_disk_graph(positions: &[Position], range: f64) -> Adjacency {
    let mut adj: Adjacency = (0..positions.len())
        .map(|i| (NodeId::from(i), BTreeSet::new()))
        .collect();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            if in_range(positions[i], positions[j], range) {
                adj.get_mut(&NodeId::from(i)).unwrap().insert(NodeId::from(j));
                adj.get_mut(&NodeId::from(j)).unwrap().insert(NodeId::from(i));
            }
        }
    }
    adj
}

/// Hop count and first hop to a destination.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathInfo {
    pub next_hop: NodeId,
    pub hops: u32,
}

/// Breadth-first shortest paths from `source` over directed `adj`.
///
/// Among equal-length paths the smallest first-hop id wins. The source
/// itself is not included in the result.
pub fn shortest_paths(adj: &Adjacency, source: NodeId) -> BTreeMap<NodeId, PathInfo> {
    let mut out: BTreeMap<NodeId, PathInfo> = BTreeMap::new();
    let mut frontier: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    if let Some(first) = adj.get(&source) {
        for &nb in first {
            if nb != source {
                frontier.insert(nb, nb);
            }
        }
    }
    let mut hops = 1;
    while !frontier.is_empty() {
        for (&node, &next_hop) in &frontier {
            out.insert(node, PathInfo { next_hop, hops });
        }
        let mut next: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for (&node, &via) in &frontier {
            let Some(nbrs) = adj.get(&node) else { continue };
            for &w in nbrs {
                if w == source || out.contains_key(&w) {
                    continue;
                }
                next.entry(w)
                    .and_modify(|cur| *cur = (*cur).min(via))
                    .or_insert(via);
            }
        }
        frontier = next;
        hops += 1;
    }
    out
}

/// Hop distances from `source` (source at 0), unreachable nodes omitted.
pub fn hop_distances(adj: &Adjacency, source: NodeId) -> BTreeMap<NodeId, u32> {
    let mut d: BTreeMap<NodeId, u32> = shortest_paths(adj, source)
        .into_iter()
        .map(|(n, p)| (n, p.hops))
        .collect();
    d.insert(source, 0);
    d
}

pub fn is_connected(adj: &Adjacency) -> bool {
    match adj.keys().next() {
        None => true,
        Some(&first) => hop_distances(adj, first).len() == adj.len(),
    }
}
