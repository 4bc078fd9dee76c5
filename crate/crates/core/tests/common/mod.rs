#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use omac_core::{Adversary, CommunicationGraph, ProcessSet, Verdict};
use proptest::prelude::*;

fn adversary_from_bits(graphs: &BTreeSet<Vec<u8>>) -> Adversary {
    let graphs = graphs
        .iter()
        .enumerate()
        .map(|(i, rows)| {
            let in_nbrs = rows
                .iter()
                .map(|&bits| ProcessSet::from_bits(bits as u64))
                .collect();
            CommunicationGraph::new(format!("G{}", i + 1), in_nbrs).unwrap()
        })
        .collect();
    Adversary::new(graphs).unwrap()
}

/// Distinct graphs on `n` processes, one bitmask of in-neighbors per process.
pub fn adversary(
    n_range: std::ops::RangeInclusive<usize>,
    max_graphs: usize,
) -> impl Strategy<Value = Adversary> {
    n_range.prop_flat_map(move |n| {
        let full = (1u8 << n) - 1;
        let graph = (0..n)
            .map(|p| (0..=full).prop_map(move |b| b | (1 << p)))
            .collect::<Vec<_>>();
        prop::collection::btree_set(graph, 1..=max_graphs)
            .prop_map(move |gs| adversary_from_bits(&gs))
    })
}

/// `adj[g][p]` is the in-neighborhood of `p` in graph `g`, self included.
pub type Adj = Vec<Vec<BTreeSet<usize>>>;

pub fn adjacency(d: &Adversary) -> Adj {
    d.graphs()
        .iter()
        .map(|g| {
            (0..d.n())
                .map(|p| g.in_neighbors(p).iter().collect())
                .collect()
        })
        .collect()
}

pub fn reach(g: &[BTreeSet<usize>], from: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([from]);
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        for (v, ins) in g.iter().enumerate() {
            if ins.contains(&u) && seen.insert(v) {
                stack.push(v);
            }
        }
    }
    seen
}

/// Processes reaching everyone, if they are mutually reachable.
pub fn naive_root(g: &[BTreeSet<usize>]) -> Option<BTreeSet<usize>> {
    let n = g.len();
    let root: BTreeSet<usize> = (0..n).filter(|&p| reach(g, p).len() == n).collect();
    (!root.is_empty()).then_some(root)
}

pub fn naive_label(adj: &Adj, a: usize, b: usize) -> BTreeSet<usize> {
    (0..adj[a].len())
        .filter(|&p| adj[a][p] == adj[b][p])
        .collect()
}

pub type Edges = BTreeMap<(usize, usize), BTreeSet<usize>>;

pub fn naive_components(k: usize, edges: &Edges) -> Vec<usize> {
    let mut comp: Vec<usize> = (0..k).collect();
    loop {
        let mut changed = false;
        for &(u, v) in edges.keys() {
            let m = comp[u].min(comp[v]);
            for x in [u, v] {
                if comp[x] != m {
                    comp[x] = m;
                    changed = true;
                }
            }
        }
        if !changed {
            return comp;
        }
    }
}

/// Verdict, loop counter and final edges of the refinement, from scratch.
pub fn naive_decide(d: &Adversary) -> (Verdict, usize, Edges) {
    let adj = adjacency(d);
    let k = adj.len();
    let roots: Option<Vec<BTreeSet<usize>>> = adj.iter().map(|g| naive_root(g)).collect();
    let Some(roots) = roots else {
        return (Verdict::NotRootedInput, 0, Edges::new());
    };
    let mut current: Edges = Edges::new();
    for a in 0..k {
        for b in a + 1..k {
            let l = naive_label(&adj, a, b);
            if !l.is_empty() {
                current.insert((a, b), l);
            }
        }
    }
    let mut levels = 1;
    loop {
        let comp = naive_components(k, &current);
        let compatible = (0..k).all(|c| {
            let members: Vec<usize> = (0..k).filter(|&g| comp[g] == c).collect();
            members.is_empty()
                || members
                    .iter()
                    .map(|&g| roots[g].clone())
                    .reduce(|x, y| &x & &y)
                    .is_some_and(|s| !s.is_empty())
        });
        if compatible {
            return (Verdict::Solvable, levels, current);
        }
        let next: Edges = current
            .iter()
            .filter(|(&(u, _), l)| (0..k).any(|g| comp[g] == comp[u] && roots[g].is_subset(l)))
            .map(|(e, l)| (*e, l.clone()))
            .collect();
        levels += 1;
        if next == current {
            return (Verdict::Impossible, levels, current);
        }
        current = next;
    }
}
