//! Communication patterns, full-information views and the heard-of relation.
//!
//! Views are hash-consed: round-0 views are identified with their process, and a
//! round-`r` view is interned from `(p, r, sorted ids of the in-neighbors'
//! round r-1 views)`. Two views are structurally equal iff their ids are equal,
//! as long as they come from the same [`ViewStore`].

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphcore::{CommunicationGraph, ProcessSet};
use crate::indist::{Adversary, Components, IndistGraph, LabeledEdge, UnionFind};

/// Default cap on the number of patterns enumerated at one horizon.
pub const DEFAULT_BUDGET: usize = 200_000;

/// A finite sequence of graph indices into an adversary; round 1 comes first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct Pattern(Vec<usize>);

impl Pattern {
    pub fn new(rounds: Vec<usize>) -> Self {
        Pattern(rounds)
    }

    pub fn empty() -> Self {
        Pattern(Vec::new())
    }

    /// `G^r` for graph index `g`.
    pub fn repeated(g: usize, r: usize) -> Self {
        Pattern(vec![g; r])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rounds(&self) -> &[usize] {
        &self.0
    }

    /// The graph index used in round `r` (1-based).
    pub fn graph_at(&self, r: usize) -> Result<usize> {
        if r == 0 || r > self.len() {
            return Err(Error::RoundOutOfRange {
                round: r,
                len: self.len(),
            });
        }
        Ok(self.0[r - 1])
    }

    /// The first `r` rounds.
    pub fn prefix(&self, r: usize) -> Result<Pattern> {
        if r > self.len() {
            return Err(Error::RoundOutOfRange {
                round: r,
                len: self.len(),
            });
        }
        Ok(Pattern(self.0[..r].to_vec()))
    }

    /// `self` followed by graph `g`.
    pub fn extended(&self, g: usize) -> Pattern {
        let mut rounds = self.0.clone();
        rounds.push(g);
        Pattern(rounds)
    }

    /// The pattern with round `r` (1-based) omitted.
    pub fn remove_round(&self, r: usize) -> Result<Pattern> {
        self.graph_at(r)?;
        let mut rounds = self.0.clone();
        rounds.remove(r - 1);
        Ok(Pattern(rounds))
    }

    pub fn check(&self, d: &Adversary) -> Result<()> {
        match self.0.iter().find(|&&g| g >= d.len()) {
            Some(&index) => Err(Error::GraphIndexOutOfRange {
                index,
                len: d.len(),
            }),
            None => Ok(()),
        }
    }

    /// Graph names joined by `.`, or `ε` for the empty pattern.
    pub fn render(&self, d: &Adversary) -> String {
        if self.is_empty() {
            return "ε".to_string();
        }
        self.0
            .iter()
            .map(|&g| d.graph(g).name())
            .collect::<Vec<_>>()
            .join(".")
    }

    /// Parses graph names separated by `.` or `,`; `ε` or an empty string is the empty pattern.
    pub fn parse(d: &Adversary, text: &str) -> Result<Pattern> {
        let text = text.trim();
        if text.is_empty() || text == "ε" {
            return Ok(Pattern::empty());
        }
        text.split(['.', ','])
            .map(|name| d.index_of(name.trim()))
            .collect::<Result<Vec<_>>>()
            .map(Pattern)
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern{:?}", self.0)
    }
}

pub type ViewId = u32;

/// Interner for views. Ids `0..n` are the round-0 views of processes `0..n`.
#[derive(Clone, Debug)]
pub struct ViewStore {
    n: usize,
    ids: HashMap<(u32, u32, Box<[ViewId]>), ViewId>,
}

impl ViewStore {
    pub fn new(n: usize) -> Self {
        ViewStore {
            n,
            ids: HashMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn initial(&self, p: usize) -> ViewId {
        p as ViewId
    }

    /// Number of distinct views interned so far, round 0 included.
    pub fn len(&self) -> usize {
        self.n + self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn intern(&mut self, p: usize, r: usize, mut children: Vec<ViewId>) -> ViewId {
        children.sort_unstable();
        children.dedup();
        let next = self.len() as ViewId;
        *self
            .ids
            .entry((p as u32, r as u32, children.into_boxed_slice()))
            .or_insert(next)
    }

    /// Round-`r` views after one more round under `g`, given the round `r-1` views.
    pub fn step(&mut self, g: &CommunicationGraph, r: usize, prev: &[ViewId]) -> Vec<ViewId> {
        (0..self.n)
            .map(|q| {
                let children = g.in_neighbors(q).iter().map(|v| prev[v]).collect();
                self.intern(q, r, children)
            })
            .collect()
    }
}

/// Views of every process after every round of one pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewTable {
    rounds: Vec<Vec<ViewId>>,
}

impl ViewTable {
    /// Number of rounds covered (the pattern length).
    pub fn len(&self) -> usize {
        self.rounds.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn view(&self, p: usize, r: usize) -> ViewId {
        self.rounds[r][p]
    }

    /// All round-`r` views, indexed by process.
    pub fn at(&self, r: usize) -> &[ViewId] {
        &self.rounds[r]
    }

    pub fn last(&self) -> &[ViewId] {
        self.rounds.last().expect("round 0 always present")
    }
}

pub fn views(store: &mut ViewStore, d: &Adversary, sigma: &Pattern) -> Result<ViewTable> {
    sigma.check(d)?;
    let mut rounds = vec![(0..d.n()).map(|p| store.initial(p)).collect::<Vec<_>>()];
    for (k, &g) in sigma.rounds().iter().enumerate() {
        let next = store.step(d.graph(g), k + 1, &rounds[k]);
        rounds.push(next);
    }
    Ok(ViewTable { rounds })
}

/// Whether `p` ends both patterns with the same view.
pub fn indistinguishable(d: &Adversary, a: &Pattern, b: &Pattern, p: usize) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if p >= d.n() {
        return Err(Error::ProcessOutOfRange {
            process: p + 1,
            n: d.n(),
        });
    }
    let mut store = ViewStore::new(d.n());
    let va = views(&mut store, d, a)?;
    let vb = views(&mut store, d, b)?;
    Ok(va.last()[p] == vb.last()[p])
}

/// The set of processes whose views coincide at the end of both patterns.
pub fn indist_label(d: &Adversary, a: &Pattern, b: &Pattern) -> Result<ProcessSet> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut store = ViewStore::new(d.n());
    let va = views(&mut store, d, a)?;
    let vb = views(&mut store, d, b)?;
    Ok((0..d.n())
        .filter(|&p| va.last()[p] == vb.last()[p])
        .collect())
}

/// Whether `p` at time `r_from` influences `q` at time `r_to` along the rounds of `sigma`.
pub fn heard_of(
    d: &Adversary,
    sigma: &Pattern,
    p: usize,
    r_from: usize,
    q: usize,
    r_to: usize,
) -> Result<bool> {
    sigma.check(d)?;
    for x in [p, q] {
        if x >= d.n() {
            return Err(Error::ProcessOutOfRange {
                process: x + 1,
                n: d.n(),
            });
        }
    }
    if r_to > sigma.len() {
        return Err(Error::RoundOutOfRange {
            round: r_to,
            len: sigma.len(),
        });
    }
    if r_from >= r_to {
        return Err(Error::Premise(format!(
            "heard-of needs r_from < r_to, got {r_from} and {r_to}"
        )));
    }
    let mut reached = ProcessSet::singleton(p);
    for &g in &sigma.rounds()[r_from..r_to] {
        reached = influence_step(d.graph(g), reached);
    }
    Ok(reached.contains(q))
}

/// Processes that hear from some member of `from` after one round of `g`.
pub fn influence_step(g: &CommunicationGraph, from: ProcessSet) -> ProcessSet {
    from.iter()
        .fold(ProcessSet::EMPTY, |acc, v| acc | g.out_neighbors(v))
}

/// `H(q)` for every `q`: the processes whose initial state reached `q` by the end of the pattern.
pub fn heard_sets(d: &Adversary, sigma: &Pattern) -> Result<Vec<ProcessSet>> {
    sigma.check(d)?;
    let mut heard: Vec<ProcessSet> = (0..d.n()).map(ProcessSet::singleton).collect();
    for &g in sigma.rounds() {
        heard = heard_step(d.graph(g), &heard);
    }
    Ok(heard)
}

fn heard_step(g: &CommunicationGraph, heard: &[ProcessSet]) -> Vec<ProcessSet> {
    (0..heard.len())
        .map(|q| {
            g.in_neighbors(q)
                .iter()
                .fold(ProcessSet::EMPTY, |acc, v| acc | heard[v])
        })
        .collect()
}

fn intersect_all(n: usize, sets: &[ProcessSet]) -> ProcessSet {
    sets.iter().fold(ProcessSet::full(n), |acc, &s| acc & s)
}

/// Processes whose initial state reaches everyone by the end of `sigma`.
pub fn broadcasters(d: &Adversary, sigma: &Pattern) -> Result<ProcessSet> {
    Ok(intersect_all(d.n(), &heard_sets(d, sigma)?))
}

/// `|D|^r`, saturating.
pub fn pattern_count(d: &Adversary, r: usize) -> u128 {
    (d.len() as u128).checked_pow(r as u32).unwrap_or(u128::MAX)
}

pub fn check_budget(d: &Adversary, r: usize, budget: usize) -> Result<()> {
    let size = pattern_count(d, r);
    if size > budget as u128 {
        return Err(Error::BudgetExceeded {
            rounds: r,
            size,
            budget,
        });
    }
    Ok(())
}

/// Every pattern of `D^r` with its views and heard-of sets.
///
/// Patterns are indexed lexicographically with round 1 most significant, so the
/// extension of pattern `i` by graph `g` has index `i * |D| + g`.
#[derive(Clone, Debug)]
pub struct PatternLevel {
    n: usize,
    graph_count: usize,
    rounds: usize,
    store: ViewStore,
    views: Vec<ViewId>,
    heard: Vec<ProcessSet>,
}

impl PatternLevel {
    /// `D^0`: the single empty pattern.
    pub fn initial(d: &Adversary) -> Self {
        let store = ViewStore::new(d.n());
        PatternLevel {
            n: d.n(),
            graph_count: d.len(),
            rounds: 0,
            views: (0..d.n()).map(|p| store.initial(p)).collect(),
            heard: (0..d.n()).map(ProcessSet::singleton).collect(),
            store,
        }
    }

    pub fn enumerate(d: &Adversary, r: usize, budget: usize) -> Result<Self> {
        check_budget(d, r, budget)?;
        let mut level = PatternLevel::initial(d);
        for _ in 0..r {
            level = level.next(d, budget)?;
        }
        Ok(level)
    }

    /// `D^{r+1}` from `D^r`.
    pub fn next(mut self, d: &Adversary, budget: usize) -> Result<Self> {
        check_budget(d, self.rounds + 1, budget)?;
        let r = self.rounds + 1;
        let count = self.len() * self.graph_count;
        let mut views = Vec::with_capacity(count * self.n);
        let mut heard = Vec::with_capacity(count * self.n);
        for idx in 0..self.len() {
            let prev_views = &self.views[idx * self.n..(idx + 1) * self.n];
            let prev_heard = &self.heard[idx * self.n..(idx + 1) * self.n];
            for g in d.graphs() {
                views.extend(self.store.step(g, r, prev_views));
                heard.extend(heard_step(g, prev_heard));
            }
        }
        self.views = views;
        self.heard = heard;
        self.rounds = r;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Pattern length `r`.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Number of patterns, `|D|^r`.
    pub fn len(&self) -> usize {
        self.views.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn store(&self) -> &ViewStore {
        &self.store
    }

    pub fn pattern(&self, mut idx: usize) -> Pattern {
        let mut rounds = vec![0; self.rounds];
        for slot in rounds.iter_mut().rev() {
            *slot = idx % self.graph_count;
            idx /= self.graph_count;
        }
        Pattern(rounds)
    }

    pub fn index_of(&self, sigma: &Pattern) -> Result<usize> {
        if sigma.len() != self.rounds {
            return Err(Error::LengthMismatch {
                left: sigma.len(),
                right: self.rounds,
            });
        }
        sigma.rounds().iter().try_fold(0usize, |acc, &g| {
            if g >= self.graph_count {
                Err(Error::GraphIndexOutOfRange {
                    index: g,
                    len: self.graph_count,
                })
            } else {
                Ok(acc * self.graph_count + g)
            }
        })
    }

    /// Final views of pattern `idx`, indexed by process.
    pub fn views_of(&self, idx: usize) -> &[ViewId] {
        &self.views[idx * self.n..(idx + 1) * self.n]
    }

    pub fn view(&self, idx: usize, p: usize) -> ViewId {
        self.views[idx * self.n + p]
    }

    pub fn heard_of_sets(&self, idx: usize) -> &[ProcessSet] {
        &self.heard[idx * self.n..(idx + 1) * self.n]
    }

    pub fn broadcasters(&self, idx: usize) -> ProcessSet {
        intersect_all(self.n, self.heard_of_sets(idx))
    }

    /// Processes that cannot tell patterns `a` and `b` apart.
    pub fn label(&self, a: usize, b: usize) -> ProcessSet {
        (0..self.n)
            .filter(|&p| self.view(a, p) == self.view(b, p))
            .collect()
    }

    /// Patterns grouped by shared final view; only groups of two or more.
    fn view_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: HashMap<ViewId, Vec<usize>> = HashMap::new();
        for (i, &v) in self.views.iter().enumerate() {
            groups.entry(v).or_default().push(i / self.n);
        }
        let mut groups: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() > 1).collect();
        groups.sort_unstable();
        groups
    }

    /// Connected components of `I(D^r)` without materializing its edges.
    pub fn components(&self) -> Components {
        let mut uf = UnionFind::new(self.len());
        for group in self.view_groups() {
            for &other in &group[1..] {
                uf.union(group[0], other);
            }
        }
        Components::from_union_find(&mut uf)
    }

    /// `I(D^r)` with explicit labeled edges. Quadratic in the size of view groups.
    pub fn indist_graph(&self) -> IndistGraph {
        let mut pairs = BTreeSet::new();
        for group in self.view_groups() {
            for (k, &a) in group.iter().enumerate() {
                for &b in &group[k + 1..] {
                    pairs.insert((a, b));
                }
            }
        }
        let edges = pairs
            .into_iter()
            .map(|(a, b)| LabeledEdge::new(a, b, self.label(a, b)));
        IndistGraph::new(self.len(), edges)
    }

    /// A shortest path from `from` to `to` in `I(D^r)`, endpoints included.
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut by_view: HashMap<ViewId, Vec<usize>> = HashMap::new();
        for (i, &v) in self.views.iter().enumerate() {
            by_view.entry(v).or_default().push(i / self.n);
        }
        let mut parent = vec![usize::MAX; self.len()];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            if x == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for v in self.views_of(x) {
                for &y in &by_view[v] {
                    if parent[y] == usize::MAX {
                        parent[y] = x;
                        queue.push_back(y);
                    }
                }
            }
        }
        None
    }
}

/// `I(D^r)` over all `|D|^r` patterns, nodes in lexicographic order.
pub fn pattern_indist_graph(d: &Adversary, r: usize, budget: usize) -> Result<IndistGraph> {
    Ok(PatternLevel::enumerate(d, r, budget)?.indist_graph())
}

/// Node names for [`IndistGraph::to_dot`] over `D^r`.
pub fn pattern_names(d: &Adversary, level: &PatternLevel) -> Vec<String> {
    (0..level.len())
        .map(|i| level.pattern(i).render(d))
        .collect()
}
