//! Processes, directed communication graphs and their root components.
//!
//! Processes are addressed by 0-based indices throughout the library; anything
//! shown to a human (names, DOT labels, the adversary file format) uses the
//! 1-based form `p1..pn`.

use std::fmt;
use std::ops::{BitAnd, BitOr, Sub};

use crate::error::{Error, Result};

/// Upper bound on the process count; a [`ProcessSet`] is a single machine word.
pub const MAX_PROCESSES: usize = 64;

/// A set of processes stored as a bitset (bit `k` is process `k`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ProcessSet(u64);

impl ProcessSet {
    pub const EMPTY: ProcessSet = ProcessSet(0);

    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_PROCESSES);
        if n == MAX_PROCESSES {
            ProcessSet(u64::MAX)
        } else {
            ProcessSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(p: usize) -> Self {
        debug_assert!(p < MAX_PROCESSES);
        ProcessSet(1u64 << p)
    }

    /// Contiguous range `lo..hi` of 0-based indices.
    pub fn range(lo: usize, hi: usize) -> Self {
        (lo..hi).collect()
    }

    /// Builds a set from 1-based process ids, the way they appear in prose and files.
    pub fn from_ids(ids: &[usize]) -> Self {
        ids.iter().map(|&id| id - 1).collect()
    }

    pub fn from_bits(bits: u64) -> Self {
        ProcessSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, p: usize) -> bool {
        p < MAX_PROCESSES && self.0 >> p & 1 == 1
    }

    pub fn insert(&mut self, p: usize) {
        self.0 |= 1u64 << p;
    }

    pub fn remove(&mut self, p: usize) {
        self.0 &= !(1u64 << p);
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: ProcessSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: ProcessSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Smallest member, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let p = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(p)
            }
        })
    }

    /// Members as 1-based ids.
    pub fn ids(self) -> Vec<usize> {
        self.iter().map(|p| p + 1).collect()
    }
}

impl FromIterator<usize> for ProcessSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ProcessSet::EMPTY;
        for p in iter {
            s.insert(p);
        }
        s
    }
}

impl BitAnd for ProcessSet {
    type Output = ProcessSet;
    fn bitand(self, rhs: Self) -> Self {
        ProcessSet(self.0 & rhs.0)
    }
}

impl BitOr for ProcessSet {
    type Output = ProcessSet;
    fn bitor(self, rhs: Self) -> Self {
        ProcessSet(self.0 | rhs.0)
    }
}

impl Sub for ProcessSet {
    type Output = ProcessSet;
    fn sub(self, rhs: Self) -> Self {
        ProcessSet(self.0 & !rhs.0)
    }
}

impl fmt::Display for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, p) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "p{}", p + 1)?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) fn check_process_count(n: usize) -> Result<()> {
    if !(2..=MAX_PROCESSES).contains(&n) {
        return Err(Error::InvalidProcessCount { n });
    }
    Ok(())
}

/// A directed communication graph on `n` processes.
///
/// Self-loops are always present: they are inserted at construction whether or
/// not the caller listed them. The root component is computed once and cached.
#[derive(Clone)]
pub struct CommunicationGraph {
    name: String,
    in_nbrs: Vec<ProcessSet>,
    root: Option<ProcessSet>,
}

impl CommunicationGraph {
    /// Builds a graph from per-process in-neighborhoods.
    pub fn new(name: impl Into<String>, in_nbrs: Vec<ProcessSet>) -> Result<Self> {
        let n = in_nbrs.len();
        check_process_count(n)?;
        let full = ProcessSet::full(n);
        let mut in_nbrs = in_nbrs;
        for (p, set) in in_nbrs.iter_mut().enumerate() {
            if !set.is_subset(full) {
                let bad = (*set - full).first().unwrap_or(0);
                return Err(Error::ProcessOutOfRange {
                    process: bad + 1,
                    n,
                });
            }
            set.insert(p);
        }
        let mut g = CommunicationGraph {
            name: name.into(),
            in_nbrs,
            root: None,
        };
        g.root = root_component(&g);
        Ok(g)
    }

    /// Builds a graph from 0-based `(from, to)` edges.
    pub fn from_edges(name: impl Into<String>, n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        check_process_count(n)?;
        let mut in_nbrs = vec![ProcessSet::EMPTY; n];
        for &(from, to) in edges {
            for p in [from, to] {
                if p >= n {
                    return Err(Error::ProcessOutOfRange { process: p + 1, n });
                }
            }
            in_nbrs[to].insert(from);
        }
        Self::new(name, in_nbrs)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.in_nbrs.len()
    }

    pub fn in_neighbors(&self, p: usize) -> ProcessSet {
        self.in_nbrs[p]
    }

    pub fn in_neighborhoods(&self) -> &[ProcessSet] {
        &self.in_nbrs
    }

    pub fn out_neighbors(&self, p: usize) -> ProcessSet {
        (0..self.n())
            .filter(|&q| self.in_nbrs[q].contains(p))
            .collect()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.in_nbrs[to].contains(from)
    }

    /// Non-loop edges, sorted by `(from, to)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for to in 0..self.n() {
            for from in self.in_nbrs[to].iter() {
                if from != to {
                    out.push((from, to));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Cached root component; `None` if the graph is not rooted.
    pub fn root(&self) -> Option<ProcessSet> {
        self.root
    }

    pub fn is_rooted(&self) -> bool {
        self.root.is_some()
    }

    /// Same adjacency, different name.
    pub fn renamed(&self, name: impl Into<String>) -> Self {
        CommunicationGraph {
            name: name.into(),
            ..self.clone()
        }
    }

    /// Applies the process permutation `perm` (process `p` becomes `perm[p]`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut in_nbrs = vec![ProcessSet::EMPTY; n];
        for (p, set) in self.in_nbrs.iter().enumerate() {
            in_nbrs[perm[p]] = set.iter().map(|q| perm[q]).collect();
        }
        Self::new(self.name.clone(), in_nbrs)
    }

    /// Returns a copy with the extra edge `from -> to`.
    pub fn with_edge(&self, from: usize, to: usize) -> Result<Self> {
        let mut in_nbrs = self.in_nbrs.clone();
        in_nbrs[to].insert(from);
        Self::new(self.name.clone(), in_nbrs)
    }
}

impl PartialEq for CommunicationGraph {
    fn eq(&self, other: &Self) -> bool {
        self.in_nbrs == other.in_nbrs
    }
}

impl Eq for CommunicationGraph {}

impl fmt::Debug for CommunicationGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self
            .edges()
            .into_iter()
            .map(|(a, b)| format!("{}->{}", a + 1, b + 1))
            .collect();
        write!(f, "{}[n={}; {}]", self.name, self.n(), edges.join(","))
    }
}

/// Strongly connected components by Tarjan's algorithm, in reverse topological order.
fn strongly_connected_components(in_nbrs: &[ProcessSet]) -> Vec<ProcessSet> {
    struct State<'a> {
        out: Vec<ProcessSet>,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: ProcessSet,
        stack: Vec<usize>,
        next: usize,
        comps: Vec<ProcessSet>,
        _in: &'a [ProcessSet],
    }

    fn connect(v: usize, s: &mut State<'_>) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack.insert(v);
        for w in s.out[v].iter() {
            match s.index[w] {
                None => {
                    connect(w, s);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack.contains(w) => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = ProcessSet::EMPTY;
            while let Some(w) = s.stack.pop() {
                s.on_stack.remove(w);
                comp.insert(w);
                if w == v {
                    break;
                }
            }
            s.comps.push(comp);
        }
    }

    let n = in_nbrs.len();
    let mut out = vec![ProcessSet::EMPTY; n];
    for (to, set) in in_nbrs.iter().enumerate() {
        for from in set.iter() {
            if from != to {
                out[from].insert(to);
            }
        }
    }
    let mut state = State {
        out,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: ProcessSet::EMPTY,
        stack: Vec::new(),
        next: 0,
        comps: Vec::new(),
        _in: in_nbrs,
    };
    for v in 0..n {
        if state.index[v].is_none() {
            connect(v, &mut state);
        }
    }
    state.comps
}

/// The unique root component of `g`, or `None` if `g` has zero or several.
///
/// Root components are the source nodes of the SCC condensation: components
/// with no incoming edge from outside.
pub fn root_component(g: &CommunicationGraph) -> Option<ProcessSet> {
    let in_nbrs = g.in_neighborhoods();
    let mut sources = strongly_connected_components(in_nbrs)
        .into_iter()
        .filter(|&comp| comp.iter().all(|p| in_nbrs[p].is_subset(comp)));
    let root = sources.next()?;
    sources.next().is_none().then_some(root)
}

/// Whether `p` has a directed path to every process of `g`.
pub fn reaches_all(g: &CommunicationGraph, p: usize) -> bool {
    let full = ProcessSet::full(g.n());
    let mut reached = ProcessSet::singleton(p);
    loop {
        let next = (0..g.n())
            .filter(|&q| !g.in_neighbors(q).is_disjoint(reached))
            .collect::<ProcessSet>()
            | reached;
        if next == reached {
            return reached == full;
        }
        reached = next;
    }
}

/// Intersection of the root components of `graphs`; errors on a non-rooted graph.
pub fn common_root<'a, I>(graphs: I) -> Result<ProcessSet>
where
    I: IntoIterator<Item = &'a CommunicationGraph>,
{
    let mut acc: Option<ProcessSet> = None;
    for g in graphs {
        let root = g.root().ok_or_else(|| Error::NotRooted {
            graph: g.name().to_string(),
        })?;
        acc = Some(acc.map_or(root, |a| a & root));
    }
    Ok(acc.unwrap_or(ProcessSet::EMPTY))
}

/// Whether the root components of all `graphs` share a process.
pub fn is_root_compatible<'a, I>(graphs: I) -> Result<bool>
where
    I: IntoIterator<Item = &'a CommunicationGraph>,
{
    Ok(!common_root(graphs)?.is_empty())
}
