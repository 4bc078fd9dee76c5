//! Parameterized adversary families with built-in validation of their
//! structural claims. All generators are deterministic.
//!
//! Process ids are 0-based here; graph names are 1-based (`G1`, `G2_3`, ...).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decision::{decide_with, DecideOptions};
use crate::error::{Error, Result};
use crate::graphcore::{check_process_count, CommunicationGraph, ProcessSet};
use crate::indist::{
    connected_components, is_protected, single_round_indist, Adversary, UnionFind,
};
use crate::patterns::{indist_label, pattern_count, Pattern, PatternLevel, DEFAULT_BUDGET};

fn bit_len(x: usize) -> usize {
    (usize::BITS - x.leading_zeros()) as usize
}

fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        bit_len(x - 1)
    }
}

/// `B[i]`: bit `h` of `i` selects the `(h+1)`-th smallest member of `encoder`.
pub fn encoding(encoder: ProcessSet, i: usize) -> ProcessSet {
    encoder
        .iter()
        .enumerate()
        .filter(|&(h, _)| h < usize::BITS as usize && (i >> h) & 1 == 1)
        .map(|(_, b)| b)
        .collect()
}

fn connect(in_nbrs: &mut [ProcessSet], from: ProcessSet, to: ProcessSet) {
    for q in to.iter() {
        in_nbrs[q] = in_nbrs[q] | from;
    }
}

fn clique(in_nbrs: &mut [ProcessSet], set: ProcessSet) {
    connect(in_nbrs, set, set);
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn violated(msg: impl Into<String>) -> Error {
    Error::ClaimViolated(msg.into())
}

/// `k`-subsets of `items` in lexicographic order.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(
        items: &[usize],
        k: usize,
        start: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, k, 0, &mut Vec::new(), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

fn check_roots(d: &Adversary, expected: impl Fn(usize) -> ProcessSet) -> Result<()> {
    for (i, g) in d.graphs().iter().enumerate() {
        if g.root() != Some(expected(i)) {
            return Err(violated(format!(
                "Root({}) is {:?}, expected {}",
                g.name(),
                g.root(),
                expected(i)
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Chain

/// Root sets `R_1..R_{N+1}` and the encoder set `B` of an `N`-graph chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainSpec {
    n: usize,
    roots: Vec<ProcessSet>,
    encoder: ProcessSet,
}

impl ChainSpec {
    pub fn new(n: usize, roots: Vec<ProcessSet>, encoder: ProcessSet) -> Result<Self> {
        check_process_count(n)?;
        if roots.len() < 2 {
            return Err(invalid("a chain needs at least two root sets"));
        }
        let universe = ProcessSet::full(n);
        let size = roots[0].len();
        for (i, r) in roots.iter().enumerate() {
            if r.is_empty() || r.len() != size {
                return Err(invalid(format!("R_{} must have size {size}", i + 1)));
            }
            if !r.is_subset(universe) || !r.is_disjoint(encoder) {
                return Err(invalid(format!("R_{} must lie in Π \\ B", i + 1)));
            }
            if roots[..i].contains(r) {
                return Err(invalid(format!("R_{} repeats an earlier root set", i + 1)));
            }
            for k in 1..=2 {
                if let Some(s) = roots.get(i + k) {
                    if !r.is_disjoint(*s) {
                        return Err(invalid(format!("R_{} and R_{} overlap", i + 1, i + k + 1)));
                    }
                }
            }
        }
        if !encoder.is_subset(universe) {
            return Err(invalid("B must lie in Π"));
        }
        let chain_len = roots.len() - 1;
        let need = ceil_log2(chain_len + 3);
        if encoder.len() < need {
            return Err(invalid(format!(
                "|B| = {} < ceil(log2(N+3)) = {need}",
                encoder.len()
            )));
        }
        Ok(ChainSpec { n, roots, encoder })
    }

    /// Singleton root sets on processes `0..=N`, followed by the smallest admissible `B`.
    pub fn minimal(chain_len: usize) -> Result<Self> {
        if chain_len == 0 {
            return Err(invalid("the chain length N must be at least 1"));
        }
        let b = ceil_log2(chain_len + 3);
        let n = chain_len + 1 + b;
        let roots = (0..=chain_len).map(ProcessSet::singleton).collect();
        ChainSpec::new(n, roots, ProcessSet::range(chain_len + 1, n))
    }

    /// The same chain over `k` additional processes, which end up in every `L_i`.
    pub fn with_extra_processes(&self, k: usize) -> Result<Self> {
        ChainSpec::new(self.n + k, self.roots.clone(), self.encoder)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `N`, the number of generated graphs.
    pub fn chain_len(&self) -> usize {
        self.roots.len() - 1
    }

    pub fn roots(&self) -> &[ProcessSet] {
        &self.roots
    }

    pub fn encoder(&self) -> ProcessSet {
        self.encoder
    }

    /// `R_k` (1-based), empty past `R_{N+1}`.
    pub fn root(&self, k: usize) -> ProcessSet {
        self.roots.get(k - 1).copied().unwrap_or(ProcessSet::EMPTY)
    }
}

fn chain_in_neighborhoods(spec: &ChainSpec, k: usize, path: Option<&[usize]>) -> Vec<ProcessSet> {
    let n = spec.n;
    let b = spec.encoder;
    let (r0, r1, r2) = (spec.root(k), spec.root(k + 1), spec.root(k + 2));
    let path_set: ProcessSet = path.unwrap_or(&[]).iter().copied().collect();
    let leftover = ProcessSet::full(n) - b - path_set - r0 - r1 - r2;
    let mut in_nbrs: Vec<ProcessSet> = (0..n).map(ProcessSet::singleton).collect();
    clique(&mut in_nbrs, r0);
    connect(&mut in_nbrs, r0, leftover);
    match path {
        None => connect(&mut in_nbrs, r0, b),
        Some(path) => {
            connect(&mut in_nbrs, r0, ProcessSet::singleton(path[0]));
            for w in path.windows(2) {
                connect(
                    &mut in_nbrs,
                    ProcessSet::singleton(w[0]),
                    ProcessSet::singleton(w[1]),
                );
            }
            connect(
                &mut in_nbrs,
                ProcessSet::singleton(*path.last().expect("nonempty path")),
                b,
            );
        }
    }
    connect(&mut in_nbrs, encoding(b, k), r1);
    connect(&mut in_nbrs, encoding(b, k + 1), r2);
    in_nbrs
}

fn check_encodings(encoder: ProcessSet, count: usize) -> Result<()> {
    let codes: Vec<ProcessSet> = (1..=count).map(|i| encoding(encoder, i)).collect();
    for (i, c) in codes.iter().enumerate() {
        if c.is_empty() || codes[..i].contains(c) {
            return Err(violated(format!(
                "B[{}] is empty or repeats an earlier B[i]",
                i + 1
            )));
        }
    }
    Ok(())
}

/// `G_1..G_N` of the chain; validates roots, encodings and that `I(D)` is exactly
/// the chain `G_i ~ G_{i+1}` labeled `R_{i+2}`.
pub fn gen_chain(spec: &ChainSpec) -> Result<Adversary> {
    let graphs = (1..=spec.chain_len())
        .map(|k| CommunicationGraph::new(format!("G{k}"), chain_in_neighborhoods(spec, k, None)))
        .collect::<Result<Vec<_>>>()?;
    let d = Adversary::new(graphs)?;
    check_encodings(spec.encoder, spec.chain_len() + 1)?;
    check_roots(&d, |i| spec.root(i + 1))?;
    let ig = single_round_indist(&d);
    let expected: Vec<(usize, usize, ProcessSet)> = (0..spec.chain_len() - 1)
        .map(|i| (i, i + 1, spec.root(i + 3)))
        .collect();
    let actual: Vec<(usize, usize, ProcessSet)> =
        ig.edges().iter().map(|e| (e.u, e.v, e.label)).collect();
    if actual != expected {
        return Err(violated(format!(
            "I(D) is not the expected chain: {actual:?}"
        )));
    }
    Ok(d)
}

/// The alternating-partition schedule: root sets of size `n/12` from partitions of
/// `[0, n/4)` and `[n/4, n/2)`, `B = [n/2, n)`, truncated to `chain_len + 1` sets.
///
/// Partitions are taken in canonical order, skipping any that reuse a block seen
/// before, so that all root sets stay distinct.
pub fn gen_alternating_chain(n: usize, chain_len: usize) -> Result<ChainSpec> {
    if n == 0 || !n.is_multiple_of(12) {
        return Err(invalid(format!(
            "n = {n} must be a positive multiple of 12"
        )));
    }
    check_process_count(n)?;
    let m = n / 12;
    let segment_a: Vec<usize> = (0..n / 4).collect();
    let segment_b: Vec<usize> = (n / 4..n / 2).collect();
    let parts_a = fresh_partitions(&segment_a, m);
    let parts_b = fresh_partitions(&segment_b, m);
    let mut roots = Vec::new();
    for (a, b) in parts_a.iter().zip(&parts_b) {
        roots.extend(a.iter().copied());
        roots.extend(b.iter().copied());
    }
    if roots.len() < chain_len + 1 {
        return Err(invalid(format!(
            "n = {n} yields only {} root sets, N = {chain_len} needs {}",
            roots.len(),
            chain_len + 1
        )));
    }
    roots.truncate(chain_len + 1);
    ChainSpec::new(n, roots, ProcessSet::range(n / 2, n))
}

/// Partitions of `items` (size `3m`) into three `m`-blocks ordered by smallest
/// element, lexicographically, keeping only those whose blocks are all new.
fn fresh_partitions(items: &[usize], m: usize) -> Vec<[ProcessSet; 3]> {
    let mut used: Vec<ProcessSet> = Vec::new();
    let mut out = Vec::new();
    for rest1 in combinations(&items[1..], m - 1) {
        let first: ProcessSet = std::iter::once(items[0]).chain(rest1).collect();
        let remaining: Vec<usize> = items
            .iter()
            .copied()
            .filter(|&x| !first.contains(x))
            .collect();
        for rest2 in combinations(&remaining[1..], m - 1) {
            let second: ProcessSet = std::iter::once(remaining[0]).chain(rest2).collect();
            let third: ProcessSet = remaining
                .iter()
                .copied()
                .filter(|&x| !second.contains(x))
                .collect();
            let blocks = [first, second, third];
            if blocks.iter().all(|b| !used.contains(b)) {
                used.extend(blocks);
                out.push(blocks);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Inflated chain

/// A chain whose direct `R_i -> B` edges are replaced by a relay path `P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InflateSpec {
    base: ChainSpec,
    path: Vec<usize>,
}

impl InflateSpec {
    pub fn new(base: ChainSpec, path: Vec<usize>) -> Result<Self> {
        if path.is_empty() {
            return Err(invalid("the relay path must be nonempty"));
        }
        let set: ProcessSet = path.iter().copied().filter(|&p| p < base.n).collect();
        if set.len() != path.len() {
            return Err(invalid(
                "relay path processes must be distinct and in range",
            ));
        }
        if !set.is_disjoint(base.encoder) {
            return Err(invalid("the relay path must avoid B"));
        }
        if base.roots.iter().any(|r| !r.is_disjoint(set)) {
            return Err(invalid("the relay path must avoid every root set"));
        }
        Ok(InflateSpec { base, path })
    }

    /// Extends `base` by `len` fresh processes forming the path.
    pub fn appended(base: &ChainSpec, len: usize) -> Result<Self> {
        let extended = base.with_extra_processes(len)?;
        let path = (base.n..base.n + len).collect();
        InflateSpec::new(extended, path)
    }

    pub fn base(&self) -> &ChainSpec {
        &self.base
    }

    pub fn path(&self) -> &[usize] {
        &self.path
    }

    /// `h`, the first process on the path.
    pub fn entry(&self) -> usize {
        self.path[0]
    }
}

#[derive(Clone, Debug)]
pub struct Inflated {
    pub adversary: Adversary,
    /// The uninflated chain over the same processes.
    pub base: Adversary,
    /// Smallest `r` with `G_1^r` and `G_2^r` distinguishable by some process of `R_3`.
    pub first_distinguishing_round: Option<usize>,
}

/// The inflated chain, validated for roots, the delay property for `r <= |P|`,
/// and that every edge absent from the base chain has a label inside `B ∪ P`
/// and is gone after one refinement step.
pub fn gen_inflated(spec: &InflateSpec) -> Result<Inflated> {
    let base_spec = &spec.base;
    let base = gen_chain(base_spec)?;
    let graphs = (1..=base_spec.chain_len())
        .map(|k| {
            CommunicationGraph::new(
                format!("G{k}"),
                chain_in_neighborhoods(base_spec, k, Some(&spec.path)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let d = Adversary::new(graphs)?;
    check_roots(&d, |i| base_spec.root(i + 1))?;

    let k = spec.path.len();
    for i in 0..base_spec.chain_len().saturating_sub(1) {
        let watchers = base_spec.root(i + 3);
        for r in 1..=k {
            let label = indist_label(&d, &Pattern::repeated(i, r), &Pattern::repeated(i + 1, r))?;
            if !watchers.is_subset(label) {
                return Err(violated(format!(
                    "G{}^{r} and G{}^{r} are distinguishable inside R_{}",
                    i + 1,
                    i + 2,
                    i + 3
                )));
            }
        }
    }

    let allowed = base_spec.encoder | spec.path.iter().copied().collect();
    let ig = single_round_indist(&d);
    let trace = decide_with(
        &d,
        DecideOptions {
            no_early_exit: true,
        },
    );
    let second = trace.level(2).expect("rooted input has a second level");
    for e in ig.edges() {
        if e.v == e.u + 1 {
            continue;
        }
        if !e.label.is_subset(allowed) {
            return Err(violated(format!(
                "new edge (G{}, G{}) has label {} outside B ∪ P",
                e.u + 1,
                e.v + 1,
                e.label
            )));
        }
        if second.has_edge(e.u, e.v) {
            return Err(violated(format!(
                "new edge (G{}, G{}) survives the first refinement",
                e.u + 1,
                e.v + 1
            )));
        }
    }

    let first_distinguishing_round = if base_spec.chain_len() >= 2 {
        let watchers = base_spec.root(3);
        (1..=k + 4).find(|&r| {
            indist_label(&d, &Pattern::repeated(0, r), &Pattern::repeated(1, r))
                .map(|l| !watchers.is_subset(l))
                .unwrap_or(false)
        })
    } else {
        None
    };
    Ok(Inflated {
        adversary: d,
        base,
        first_distinguishing_round,
    })
}

/// Replaces every round by `k` copies of the same graph index.
pub fn inflate_pattern(spec: &InflateSpec, sigma: &Pattern, k: usize) -> Result<Pattern> {
    if k != spec.path.len() {
        return Err(invalid(format!(
            "repetition factor {k} differs from the path length {}",
            spec.path.len()
        )));
    }
    if let Some(&g) = sigma.rounds().iter().find(|&&g| g >= spec.base.chain_len()) {
        return Err(Error::GraphIndexOutOfRange {
            index: g,
            len: spec.base.chain_len(),
        });
    }
    Ok(Pattern::new(
        sigma
            .rounds()
            .iter()
            .flat_map(|&g| std::iter::repeat_n(g, k))
            .collect(),
    ))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InflationCheck {
    pub edges_checked: usize,
    /// Base edges whose inflated patterns are distinguishable by everyone.
    pub violations: Vec<(Pattern, Pattern)>,
}

/// Checks that every edge of the base `I(D^len)` survives inflation.
pub fn check_inflation(
    spec: &InflateSpec,
    inflated: &Inflated,
    len: usize,
    budget: usize,
) -> Result<InflationCheck> {
    let k = spec.path.len();
    if pattern_count(&inflated.adversary, k * len) > budget as u128 {
        return Err(Error::BudgetExceeded {
            rounds: k * len,
            size: pattern_count(&inflated.adversary, k * len),
            budget,
        });
    }
    let level = PatternLevel::enumerate(&inflated.base, len, budget)?;
    let mut report = InflationCheck::default();
    for e in level.indist_graph().edges() {
        let (a, b) = (level.pattern(e.u), level.pattern(e.v));
        report.edges_checked += 1;
        let label = indist_label(
            &inflated.adversary,
            &inflate_pattern(spec, &a, k)?,
            &inflate_pattern(spec, &b, k)?,
        )?;
        if label.is_empty() {
            report.violations.push((a, b));
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Partitioned adversary

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSpec {
    n: usize,
    t: usize,
    m: usize,
}

impl PartitionSpec {
    /// `n` defaults to the smallest feasible value, `5m + bitlen(t)`.
    pub fn new(t: usize, m: usize, n: Option<usize>) -> Result<Self> {
        if t == 0 || m == 0 {
            return Err(invalid("t and m must be positive"));
        }
        let min_n = 5 * m + bit_len(t);
        let n = n.unwrap_or(min_n);
        if n < min_n {
            return Err(invalid(format!(
                "n = {n} is too small: B needs {} processes beyond 5m = {}",
                bit_len(t),
                5 * m
            )));
        }
        check_process_count(n)?;
        let extra_edges = m * m.saturating_sub(2);
        let interconnects = if extra_edges >= 64 {
            u128::MAX
        } else {
            1u128 << extra_edges
        };
        if interconnects < t as u128 {
            return Err(invalid(format!(
                "m = {m} admits only {interconnects} interconnects of the root cycle, t = {t} needs {t}"
            )));
        }
        if binomial(2 * m, m) < t as u128 + 1 {
            return Err(invalid(format!(
                "C(2m, m) = {} < t + 1 = {}: not enough fresh sets",
                binomial(2 * m, m),
                t + 1
            )));
        }
        Ok(PartitionSpec { n, t, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// The process sets of the partitioned construction (0-based vectors, so `roots[0]` is `R_1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSets {
    pub roots: Vec<ProcessSet>,
    pub u: Vec<ProcessSet>,
    pub u_prime: Vec<ProcessSet>,
    pub encoder: ProcessSet,
}

pub fn partition_sets(spec: &PartitionSpec) -> Result<PartitionSets> {
    let m = spec.m;
    let low: Vec<usize> = (0..2 * m).collect();
    let high: Vec<usize> = (2 * m..4 * m).collect();
    let low_sets: Vec<ProcessSet> = combinations(&low, m)
        .into_iter()
        .map(ProcessSet::from_iter)
        .collect();
    let high_sets: Vec<ProcessSet> = combinations(&high, m)
        .into_iter()
        .map(ProcessSet::from_iter)
        .collect();
    let first_fresh = |pool: &[ProcessSet], avoid: &[ProcessSet]| {
        pool.iter()
            .copied()
            .find(|s| !avoid.contains(s))
            .ok_or_else(|| invalid("ran out of fresh m-subsets"))
    };

    let mut roots = vec![ProcessSet::range(4 * m, 5 * m), low_sets[0], high_sets[0]];
    let mut u = vec![first_fresh(&high_sets, &[roots[2]])?];
    let mut u_prime = vec![first_fresh(&low_sets, &[roots[1]])?];
    for i in 1..spec.t {
        roots.push(u_prime[i - 1]);
        roots.push(u[i - 1]);
        let odd: Vec<ProcessSet> = roots.iter().skip(2).step_by(2).copied().collect();
        let even: Vec<ProcessSet> = roots.iter().skip(1).step_by(2).copied().collect();
        u.push(first_fresh(&high_sets, &odd)?);
        u_prime.push(first_fresh(&low_sets, &even)?);
    }
    Ok(PartitionSets {
        roots,
        u,
        u_prime,
        encoder: ProcessSet::range(5 * m, spec.n),
    })
}

/// Directed cycle on `set` in increasing order plus the extra in-edges selected by `mask`.
fn root_interconnect(in_nbrs: &mut [ProcessSet], set: ProcessSet, mask: usize) {
    let members: Vec<usize> = set.iter().collect();
    let m = members.len();
    for (k, &b) in members.iter().enumerate() {
        let pred = members[(k + m - 1) % m];
        connect(
            in_nbrs,
            ProcessSet::singleton(pred),
            ProcessSet::singleton(b),
        );
    }
    let candidates = members.iter().enumerate().flat_map(|(k, &b)| {
        let pred = members[(k + m - 1) % m];
        members
            .iter()
            .copied()
            .filter(move |&a| a != b && a != pred)
            .map(move |a| (a, b))
    });
    for (bit, (a, b)) in candidates.enumerate() {
        if (mask >> bit) & 1 == 1 {
            connect(in_nbrs, ProcessSet::singleton(a), ProcessSet::singleton(b));
        }
    }
}

#[derive(Clone, Debug)]
pub struct Partitioned {
    pub adversary: Adversary,
    pub sets: PartitionSets,
    /// Graph indices of `S_1..S_t`.
    pub blocks: Vec<Vec<usize>>,
    /// Whether every edge induced by `S_1 ∪ ... ∪ S_{i-1}`, cross-block ones
    /// included, is protected by `S_i`.
    pub literal_protection: bool,
    /// Broadcasters of `(G_{i,2})_i` and `(G_{i,3})_i`.
    pub witness_broadcasters: (ProcessSet, ProcessSet),
    pub sigma_size: u128,
    /// Whether `Σ = S_1 ∘ ... ∘ S_t` is connected in `I(D^t)`; `None` past the budget.
    pub sigma_connected: Option<bool>,
}

/// `G_{i,j}` for `1 <= i <= t`, `1 <= j <= 2i+1`, validated against the
/// partition properties: blocks connected in `I(D)`, edges inside earlier
/// blocks protected by the next one, and no common broadcaster over `Σ`.
pub fn gen_partitioned(spec: &PartitionSpec, budget: usize) -> Result<Partitioned> {
    let sets = partition_sets(spec)?;
    let n = spec.n;
    let mut graphs = Vec::new();
    let mut blocks = Vec::new();
    for i in 1..=spec.t {
        let code = encoding(sets.encoder, i);
        let (ui, upi) = (sets.u[i - 1], sets.u_prime[i - 1]);
        let mut block = Vec::new();
        for j in 1..=2 * i + 1 {
            let rj = sets.roots[j - 1];
            let targets = match j {
                1 => ui | upi,
                _ if j % 2 == 0 => ui,
                _ => upi,
            };
            let leftover = ProcessSet::full(n) - sets.encoder - rj - targets;
            let mut in_nbrs: Vec<ProcessSet> = (0..n).map(ProcessSet::singleton).collect();
            root_interconnect(&mut in_nbrs, rj, i - 1);
            connect(&mut in_nbrs, rj, sets.encoder | leftover);
            connect(&mut in_nbrs, code, targets | leftover);
            block.push(graphs.len());
            graphs.push(CommunicationGraph::new(format!("G{i}_{j}"), in_nbrs)?);
        }
        blocks.push(block);
    }
    let d = Adversary::new(graphs)?;
    check_encodings(sets.encoder, spec.t)?;

    for (i, block) in blocks.iter().enumerate() {
        for (j, &g) in block.iter().enumerate() {
            if d.graph(g).root() != Some(sets.roots[j]) {
                return Err(violated(format!(
                    "Root(G{}_{}) differs from R_{}",
                    i + 1,
                    j + 1,
                    j + 1
                )));
            }
        }
    }

    let ig = single_round_indist(&d);
    for (i, block) in blocks.iter().enumerate() {
        if !ig.induces_connected(block) {
            return Err(violated(format!("S_{} is not connected in I(D)", i + 1)));
        }
    }
    let mut literal_protection = true;
    for i in 1..spec.t {
        let earlier: Vec<usize> = blocks[..i].iter().flatten().copied().collect();
        let intra: Vec<_> = blocks[..i]
            .iter()
            .flat_map(|b| ig.induced_edges(b))
            .collect();
        if !is_protected(&d, &intra, &blocks[i])?.protected {
            return Err(violated(format!(
                "edges inside S_1..S_{i} are not protected by S_{}",
                i + 1
            )));
        }
        literal_protection &= is_protected(&d, &ig.induced_edges(&earlier), &blocks[i])?.protected;
    }

    let column = |j: usize| Pattern::new(blocks.iter().map(|b| b[j]).collect());
    let witness_broadcasters = (
        crate::patterns::broadcasters(&d, &column(1))?,
        crate::patterns::broadcasters(&d, &column(2))?,
    );
    if !witness_broadcasters.0.is_disjoint(witness_broadcasters.1) {
        return Err(violated("the two witness patterns share a broadcaster"));
    }

    let sigma_size: u128 = blocks.iter().map(|b| b.len() as u128).product();
    let sigma_connected = if pattern_count(&d, spec.t) <= budget as u128 {
        Some(sigma_connectivity(&d, &blocks, budget)?)
    } else {
        None
    };
    if sigma_connected == Some(false) {
        return Err(violated("Σ is not connected in I(D^t)"));
    }
    Ok(Partitioned {
        adversary: d,
        sets,
        blocks,
        literal_protection,
        witness_broadcasters,
        sigma_size,
        sigma_connected,
    })
}

/// Whether the patterns of `Σ` (round `r` drawn from block `r`) form one
/// connected subgraph of `I(D^t)`, using only patterns of `Σ` as intermediates.
fn sigma_connectivity(d: &Adversary, blocks: &[Vec<usize>], budget: usize) -> Result<bool> {
    let level = PatternLevel::enumerate(d, blocks.len(), budget)?;
    let members: Vec<usize> = (0..level.len())
        .filter(|&idx| {
            level
                .pattern(idx)
                .rounds()
                .iter()
                .zip(blocks)
                .all(|(g, b)| b.contains(g))
        })
        .collect();
    let mut uf = UnionFind::new(members.len());
    let mut first_with_view = std::collections::HashMap::new();
    for (k, &idx) in members.iter().enumerate() {
        for &v in level.views_of(idx) {
            let first = *first_with_view.entry(v).or_insert(k);
            uf.union(first, k);
        }
    }
    let root = uf.find(0);
    Ok((0..members.len()).all(|k| uf.find(k) == root))
}

// ---------------------------------------------------------------------------
// Catalog

/// All labeled rooted trees on `n` processes, edges directed away from the root.
pub fn rooted_trees(n: usize) -> Result<Adversary> {
    check_process_count(n)?;
    if n > 5 {
        return Err(invalid(format!(
            "rooted trees are enumerated for n <= 5, got {n}"
        )));
    }
    let mut graphs = Vec::new();
    for root in 0..n {
        let others: Vec<usize> = (0..n).filter(|&p| p != root).collect();
        let total = n.pow(others.len() as u32);
        for code in 0..total {
            let mut parent = vec![usize::MAX; n];
            let mut c = code;
            for &p in &others {
                parent[p] = c % n;
                c /= n;
            }
            if others.iter().any(|&p| parent[p] == p) {
                continue;
            }
            let acyclic = others.iter().all(|&p| {
                let mut cur = p;
                for _ in 0..n {
                    if cur == root {
                        return true;
                    }
                    cur = parent[cur];
                }
                cur == root
            });
            if !acyclic {
                continue;
            }
            let edges: Vec<(usize, usize)> = others.iter().map(|&p| (parent[p], p)).collect();
            graphs.push(CommunicationGraph::from_edges(
                format!("T{}", graphs.len() + 1),
                n,
                &edges,
            )?);
        }
    }
    Adversary::new(graphs)
}

/// For every `k`-subset `S`: a clique on `S` with edges from `S` to everyone else.
pub fn source_broadcast(n: usize, k: usize) -> Result<Adversary> {
    check_process_count(n)?;
    if k == 0 || k > n {
        return Err(invalid(format!("clique size must be in 1..={n}, got {k}")));
    }
    if binomial(n, k) > DEFAULT_BUDGET as u128 {
        return Err(invalid(format!(
            "C({n}, {k}) graphs exceed the catalog limit"
        )));
    }
    let all: Vec<usize> = (0..n).collect();
    let graphs = combinations(&all, k)
        .into_iter()
        .map(|s| {
            let set = ProcessSet::from_iter(s.iter().copied());
            let mut in_nbrs: Vec<ProcessSet> = (0..n).map(ProcessSet::singleton).collect();
            connect(&mut in_nbrs, set, ProcessSet::full(n));
            let name = format!(
                "S{}",
                s.iter()
                    .map(|p| (p + 1).to_string())
                    .collect::<Vec<_>>()
                    .join("_")
            );
            CommunicationGraph::new(name, in_nbrs)
        })
        .collect::<Result<Vec<_>>>()?;
    Adversary::new(graphs)
}

/// Every graph obtained from the complete graph by removing at most `f` edges,
/// ordered by number of removed edges, then lexicographically. Graphs that are
/// not rooted are kept.
pub fn lossy_link(n: usize, f: usize) -> Result<Adversary> {
    check_process_count(n)?;
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let total: u128 = (0..=f.min(edges.len()))
        .map(|k| binomial(edges.len(), k))
        .sum();
    if total > DEFAULT_BUDGET as u128 {
        return Err(invalid(format!(
            "{total} lossy-link graphs exceed the catalog limit"
        )));
    }
    let ids: Vec<usize> = (0..edges.len()).collect();
    let mut graphs = Vec::new();
    for k in 0..=f.min(edges.len()) {
        for removed in combinations(&ids, k) {
            let kept: Vec<(usize, usize)> = ids
                .iter()
                .filter(|i| !removed.contains(i))
                .map(|&i| edges[i])
                .collect();
            let mut name = "K".to_string();
            for &i in &removed {
                let (a, b) = edges[i];
                name.push_str(&format!("-{}_{}", a + 1, b + 1));
            }
            graphs.push(CommunicationGraph::from_edges(name, n, &kept)?);
        }
    }
    Adversary::new(graphs)
}

/// `count` distinct rooted graphs, each non-loop edge present with probability 1/2.
pub fn random_rooted(n: usize, count: usize, seed: u64) -> Result<Adversary> {
    check_process_count(n)?;
    if count == 0 {
        return Err(Error::EmptyAdversary);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs: Vec<CommunicationGraph> = Vec::new();
    let max_attempts = 1000 * count;
    for _ in 0..max_attempts {
        if graphs.len() == count {
            break;
        }
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| a != b)
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        let g = CommunicationGraph::from_edges(format!("R{}", graphs.len() + 1), n, &edges)?;
        if g.is_rooted() && !graphs.contains(&g) {
            graphs.push(g);
        }
    }
    if graphs.len() < count {
        return Err(invalid(format!(
            "found only {} distinct rooted graphs on {n} processes",
            graphs.len()
        )));
    }
    Adversary::new(graphs)
}

/// A named adversary from one of the corpora below.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub adversary: Adversary,
}

/// Every catalog family with `n <= 3`: rooted trees, source-broadcast for every
/// clique size, lossy-link with `f <= 2` at `n = 2` and `f = 1` at `n = 3`.
pub fn catalog_corpus() -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    let mut push = |name: String, adversary: Adversary| out.push(Instance { name, adversary });
    for n in 2..=3 {
        push(format!("rooted-trees n={n}"), rooted_trees(n)?);
        for k in 1..=n {
            push(
                format!("source-broadcast n={n} k={k}"),
                source_broadcast(n, k)?,
            );
        }
    }
    for (n, f) in [(2, 1), (2, 2), (3, 1)] {
        push(format!("lossy-link n={n} f={f}"), lossy_link(n, f)?);
    }
    Ok(out)
}

/// `count` random adversaries on 3 processes; seed `s` yields `1 + s % 3` graphs.
pub fn random_corpus(count: usize) -> Result<Vec<Instance>> {
    (0..count as u64)
        .map(|seed| {
            let size = 1 + (seed % 3) as usize;
            Ok(Instance {
                name: format!("random n=3 size={size} seed={seed}"),
                adversary: random_rooted(3, size, seed)?,
            })
        })
        .collect()
}

/// Components of `I(D)` in the fixpoint of the refinement, as graph-index lists.
pub fn fixpoint_components(d: &Adversary) -> Vec<Vec<usize>> {
    let trace = decide_with(
        d,
        DecideOptions {
            no_early_exit: true,
        },
    );
    trace
        .final_level()
        .map(|l| {
            connected_components(l)
                .iter()
                .map(<[usize]>::to_vec)
                .collect()
        })
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{decide, Verdict};

    fn ids(s: &[usize]) -> ProcessSet {
        ProcessSet::from_ids(s)
    }

    #[test]
    fn encoding_uses_sorted_members() {
        let b = ids(&[6, 7, 8, 9, 10]);
        assert_eq!(encoding(b, 1), ids(&[6]));
        assert_eq!(encoding(b, 6), ids(&[7, 8]));
        assert_eq!(encoding(b, 0), ProcessSet::EMPTY);
    }

    #[test]
    fn two_graph_chain_example() {
        let spec = ChainSpec::new(
            10,
            vec![ids(&[5]), ids(&[1]), ids(&[3])],
            ids(&[6, 7, 8, 9, 10]),
        )
        .unwrap();
        let d = gen_chain(&spec).unwrap();
        assert_eq!(d.len(), 2);
        let ig = single_round_indist(&d);
        assert_eq!(ig.edge_count(), 1);
        assert_eq!(ig.label(0, 1), Some(ids(&[3])));
    }

    #[test]
    fn chain_spec_rejects_overlap() {
        let r = ChainSpec::new(10, vec![ids(&[1]), ids(&[2]), ids(&[1])], ids(&[6, 7, 8]));
        assert!(matches!(r, Err(Error::InvalidSpec(_))));
        let r = ChainSpec::new(10, vec![ids(&[1]), ids(&[2]), ids(&[3])], ids(&[3, 7, 8]));
        assert!(r.is_err());
        let r = ChainSpec::new(10, vec![ids(&[1]), ids(&[2]), ids(&[3])], ids(&[7]));
        assert!(r.is_err());
    }

    #[test]
    fn minimal_chains_refine_right_to_left() {
        for len in 1..=8 {
            let d = gen_chain(&ChainSpec::minimal(len).unwrap()).unwrap();
            let t = decide(&d);
            assert_eq!(t.verdict(), Verdict::Solvable);
            assert_eq!(t.removal_iterations(), len - 1);
            for level in 2..=len {
                let removed = t.removed_at(level);
                assert_eq!(removed.len(), 1);
                assert_eq!(
                    (removed[0].edge.u, removed[0].edge.v),
                    (len - level, len - level + 1)
                );
            }
        }
    }

    #[test]
    fn alternating_chain_schedule() {
        assert!(gen_alternating_chain(13, 2).is_err());
        let spec = gen_alternating_chain(12, 5).unwrap();
        assert_eq!(spec.roots().len(), 6);
        assert!(gen_alternating_chain(12, 6).is_err());
        gen_chain(&spec).unwrap();
        let spec = gen_alternating_chain(24, 6).unwrap();
        assert!(spec.roots().iter().all(|r| r.len() == 2));
        gen_chain(&spec).unwrap();
    }

    #[test]
    fn fresh_partitions_of_six() {
        let parts = fresh_partitions(&[0, 1, 2, 3, 4, 5], 2);
        let blocks: Vec<ProcessSet> = parts.iter().flatten().copied().collect();
        for (i, b) in blocks.iter().enumerate() {
            assert!(!blocks[..i].contains(b));
        }
        assert!(parts.len() >= 3);
    }

    #[test]
    fn inflated_chain_delay() {
        let base = ChainSpec::minimal(3).unwrap();
        for len in 1..=3 {
            let spec = InflateSpec::appended(&base, len).unwrap();
            let inf = gen_inflated(&spec).unwrap();
            let first = inf.first_distinguishing_round.unwrap();
            assert!(first > len);
            let check = check_inflation(&spec, &inf, 1, DEFAULT_BUDGET).unwrap();
            assert!(check.violations.is_empty());
            assert_eq!(check.edges_checked, 2);
        }
    }

    #[test]
    fn inflated_path_must_avoid_b() {
        let base = ChainSpec::minimal(2).unwrap();
        let b = base.encoder().first().unwrap();
        assert!(InflateSpec::new(base, vec![b]).is_err());
    }

    #[test]
    fn inflate_pattern_repeats_rounds() {
        let spec = InflateSpec::appended(&ChainSpec::minimal(2).unwrap(), 2).unwrap();
        let p = inflate_pattern(&spec, &Pattern::new(vec![0, 1]), 2).unwrap();
        assert_eq!(p.rounds(), &[0, 0, 1, 1]);
        assert!(inflate_pattern(&spec, &Pattern::new(vec![0]), 3).is_err());
    }

    #[test]
    fn partition_feasibility() {
        assert!(PartitionSpec::new(2, 1, None).is_err());
        assert!(PartitionSpec::new(2, 2, None).is_err());
        let spec = PartitionSpec::new(2, 3, None).unwrap();
        assert_eq!(spec.n(), 17);
        assert!(PartitionSpec::new(1, 1, None).is_ok());
    }

    #[test]
    fn partition_sets_follow_the_schedule() {
        let spec = PartitionSpec::new(3, 3, None).unwrap();
        let s = partition_sets(&spec).unwrap();
        assert_eq!(s.roots.len(), 7);
        for i in 1..3 {
            assert_eq!(s.roots[2 * i + 1], s.u_prime[i - 1]);
            assert_eq!(s.roots[2 * i + 2], s.u[i - 1]);
        }
        for i in 0..3 {
            assert!(!s.roots[..2 * i + 3].contains(&s.u[i]));
            assert!(!s.roots[..2 * i + 3].contains(&s.u_prime[i]));
        }
    }

    #[test]
    fn partitioned_instance_validates() {
        for (t, m) in [(1, 1), (2, 3)] {
            let spec = PartitionSpec::new(t, m, None).unwrap();
            let p = gen_partitioned(&spec, DEFAULT_BUDGET).unwrap();
            assert_eq!(p.adversary.len(), t * (t + 2));
            assert_eq!(p.sigma_connected, Some(true));
        }
    }

    #[test]
    fn catalog_sizes() {
        assert_eq!(rooted_trees(3).unwrap().len(), 9);
        assert_eq!(rooted_trees(4).unwrap().len(), 64);
        let sb = source_broadcast(3, 1).unwrap();
        assert_eq!(sb.len(), 3);
        assert_eq!(single_round_indist(&sb).edge_count(), 0);
        let ll = lossy_link(2, 1).unwrap();
        assert_eq!(ll.names(), vec!["K", "K-1_2", "K-2_1"]);
        assert_eq!(lossy_link(3, 1).unwrap().len(), 7);
    }

    #[test]
    fn random_is_seeded() {
        let a = random_rooted(3, 3, 7).unwrap();
        let b = random_rooted(3, 3, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.all_rooted());
    }
}
