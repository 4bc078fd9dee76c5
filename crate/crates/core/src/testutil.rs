//! Small fixtures shared by unit tests. Edges are written with 1-based ids.

use crate::graphcore::CommunicationGraph;
use crate::indist::Adversary;

pub(crate) fn graph(name: &str, n: usize, edges: &[(usize, usize)]) -> CommunicationGraph {
    let edges: Vec<_> = edges.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    CommunicationGraph::from_edges(name, n, &edges).unwrap()
}

/// `Ga: 1->2`, `Gb: 2->1`, `Gc: 1<->2`, in that order.
pub(crate) fn lossy_link_2() -> Adversary {
    Adversary::new(vec![
        graph("Ga", 2, &[(1, 2)]),
        graph("Gb", 2, &[(2, 1)]),
        graph("Gc", 2, &[(1, 2), (2, 1)]),
    ])
    .unwrap()
}

/// `G1: 1->2, 1->3` and `G2: 1->2, 2->3`; one component, common root {1}.
pub(crate) fn two_graph_solvable() -> Adversary {
    Adversary::new(vec![
        graph("G1", 3, &[(1, 2), (1, 3)]),
        graph("G2", 3, &[(1, 2), (2, 3)]),
    ])
    .unwrap()
}
