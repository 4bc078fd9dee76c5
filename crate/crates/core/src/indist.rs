//! The oblivious message adversary (a finite set of graphs), labeled
//! indistinguishability graphs over index sets, and the connectivity queries
//! the refinement loop is built on.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graphcore::{check_process_count, CommunicationGraph, ProcessSet};

/// A non-empty set of communication graphs on the same processes.
///
/// Names are unique and no two graphs share an adjacency. Graphs need not be
/// rooted; the decision procedure reports non-rooted input itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adversary {
    n: usize,
    graphs: Vec<CommunicationGraph>,
}

impl Adversary {
    pub fn new(graphs: Vec<CommunicationGraph>) -> Result<Self> {
        let first = graphs.first().ok_or(Error::EmptyAdversary)?;
        let n = first.n();
        check_process_count(n)?;
        let mut names: HashMap<&str, usize> = HashMap::new();
        let mut adjacency: HashMap<&[ProcessSet], usize> = HashMap::new();
        for (k, g) in graphs.iter().enumerate() {
            if g.n() != n {
                return Err(Error::MixedProcessCount {
                    graph: g.name().to_string(),
                    expected: n,
                    found: g.n(),
                });
            }
            if names.insert(g.name(), k).is_some() {
                return Err(Error::DuplicateName(g.name().to_string()));
            }
            if let Some(prev) = adjacency.insert(g.in_neighborhoods(), k) {
                return Err(Error::DuplicateGraph {
                    first: graphs[prev].name().to_string(),
                    second: g.name().to_string(),
                });
            }
        }
        Ok(Adversary { n, graphs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graphs(&self) -> &[CommunicationGraph] {
        &self.graphs
    }

    pub fn graph(&self, index: usize) -> &CommunicationGraph {
        &self.graphs[index]
    }

    pub fn names(&self) -> Vec<String> {
        self.graphs.iter().map(|g| g.name().to_string()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.graphs
            .iter()
            .position(|g| g.name() == name)
            .ok_or_else(|| Error::UnknownGraph(name.to_string()))
    }

    /// Root of graph `index`; errors if that graph is not rooted.
    pub fn root(&self, index: usize) -> Result<ProcessSet> {
        let g = &self.graphs[index];
        g.root().ok_or_else(|| Error::NotRooted {
            graph: g.name().to_string(),
        })
    }

    pub fn all_rooted(&self) -> bool {
        self.graphs.iter().all(CommunicationGraph::is_rooted)
    }

    /// The processes whose in-neighborhoods coincide in graphs `a` and `b`.
    pub fn label(&self, a: usize, b: usize) -> ProcessSet {
        let (ga, gb) = (&self.graphs[a], &self.graphs[b]);
        (0..self.n)
            .filter(|&p| ga.in_neighbors(p) == gb.in_neighbors(p))
            .collect()
    }
}

/// An undirected edge `u < v` with its non-empty label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledEdge {
    pub u: usize,
    pub v: usize,
    pub label: ProcessSet,
}

impl LabeledEdge {
    pub fn new(a: usize, b: usize, label: ProcessSet) -> Self {
        debug_assert!(a != b && !label.is_empty());
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        LabeledEdge { u, v, label }
    }
}

/// Connected-component partition with deterministic numbering: components are
/// numbered in order of their smallest node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Components {
    pub(crate) fn from_union_find(uf: &mut UnionFind) -> Self {
        let n = uf.len();
        let mut id_of_root: HashMap<usize, usize> = HashMap::new();
        let mut of = Vec::with_capacity(n);
        let mut members: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let r = uf.find(x);
            let id = *id_of_root.entry(r).or_insert_with(|| {
                members.push(Vec::new());
                members.len() - 1
            });
            of.push(id);
            members[id].push(x);
        }
        Components { of, members }
    }

    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn of(&self, node: usize) -> usize {
        self.of[node]
    }

    pub fn members(&self, component: usize) -> &[usize] {
        &self.members[component]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.members.iter().map(Vec::as_slice)
    }

    pub fn same(&self, a: usize, b: usize) -> bool {
        self.of[a] == self.of[b]
    }
}

/// Plain union-find with path halving and union by size.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.parent.len()
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Undirected graph over `0..node_count` with process-set edge labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndistGraph {
    node_count: usize,
    /// Sorted by `(u, v)`.
    edges: Vec<LabeledEdge>,
}

impl IndistGraph {
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = LabeledEdge>) -> Self {
        let mut edges: Vec<LabeledEdge> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup_by_key(|e| (e.u, e.v));
        debug_assert!(edges.iter().all(|e| e.v < node_count));
        IndistGraph { node_count, edges }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[LabeledEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, a: usize, b: usize) -> Option<ProcessSet> {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.u, e.v).cmp(&(u, v)))
            .ok()
            .map(|k| self.edges[k].label)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.label(a, b).is_some()
    }

    /// Same nodes, only the edges satisfying `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&LabeledEdge) -> bool) -> IndistGraph {
        IndistGraph {
            node_count: self.node_count,
            edges: self.edges.iter().copied().filter(|e| keep(e)).collect(),
        }
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        adj
    }

    /// Induced subgraph edges among `nodes`.
    pub fn induced_edges(&self, nodes: &[usize]) -> Vec<LabeledEdge> {
        let mut inside = vec![false; self.node_count];
        for &x in nodes {
            inside[x] = true;
        }
        self.edges
            .iter()
            .copied()
            .filter(|e| inside[e.u] && inside[e.v])
            .collect()
    }

    /// Whether `nodes` induce a connected subgraph (the empty set counts as connected).
    pub fn induces_connected(&self, nodes: &[usize]) -> bool {
        let Some(&start) = nodes.first() else {
            return true;
        };
        let mut index = HashMap::new();
        for (k, &x) in nodes.iter().enumerate() {
            index.insert(x, k);
        }
        let mut uf = UnionFind::new(nodes.len());
        for e in self.induced_edges(nodes) {
            uf.union(index[&e.u], index[&e.v]);
        }
        let r = uf.find(index[&start]);
        (0..nodes.len()).all(|k| uf.find(k) == r)
    }

    /// Renders the graph in DOT with the given node names; output is sorted and stable.
    pub fn to_dot(&self, graph_name: &str, names: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph \"{}\" {{", escape(graph_name));
        for name in names.iter().take(self.node_count) {
            let _ = writeln!(out, "  \"{}\";", escape(name));
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [label=\"{}\"];",
                escape(&names[e.u]),
                escape(&names[e.v]),
                e.label
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// The one-round indistinguishability graph `I(D)`: graphs `G != H` are joined
/// when some process has the same in-neighborhood in both.
pub fn single_round_indist(d: &Adversary) -> IndistGraph {
    let mut edges = Vec::new();
    for a in 0..d.len() {
        for b in a + 1..d.len() {
            let label = d.label(a, b);
            if !label.is_empty() {
                edges.push(LabeledEdge::new(a, b, label));
            }
        }
    }
    IndistGraph::new(d.len(), edges)
}

/// Undirected connected components of `ig`.
pub fn connected_components(ig: &IndistGraph) -> Components {
    let mut uf = UnionFind::new(ig.node_count());
    for e in ig.edges() {
        uf.union(e.u, e.v);
    }
    Components::from_union_find(&mut uf)
}

/// Outcome of a protection check: `witnesses[k]` is the smallest guard index
/// whose root lies inside the label of edge `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Protection {
    pub protected: bool,
    pub witnesses: Vec<Option<usize>>,
}

/// Whether every edge has a guard `G` (graph index into `d`) with `Root(G)` inside its label.
pub fn is_protected(d: &Adversary, edges: &[LabeledEdge], guards: &[usize]) -> Result<Protection> {
    let mut sorted: Vec<usize> = guards.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let roots = sorted
        .iter()
        .map(|&g| d.root(g).map(|r| (g, r)))
        .collect::<Result<Vec<_>>>()?;
    let witnesses: Vec<Option<usize>> = edges
        .iter()
        .map(|e| {
            roots
                .iter()
                .find(|(_, r)| r.is_subset(e.label))
                .map(|&(g, _)| g)
        })
        .collect();
    Ok(Protection {
        protected: witnesses.iter().all(Option::is_some),
        witnesses,
    })
}
