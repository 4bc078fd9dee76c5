//! The refinement procedure deciding consensus solvability.
//!
//! Starting from `N_1 = I(D)`, each round of refinement keeps an edge only if
//! its connected component contains a graph whose root lies inside the edge
//! label. The loop stops at an edge-set fixpoint, or as soon as every component
//! is root-compatible. Consensus is solvable iff every component of the final
//! level is root-compatible.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphcore::ProcessSet;
use crate::indist::{
    connected_components, is_protected, single_round_indist, Adversary, Components, IndistGraph,
    LabeledEdge,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Solvable,
    Impossible,
    NotRootedInput,
}

impl Verdict {
    /// The spelling used by the command-line reports.
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Solvable => "SOLVABLE",
            Verdict::Impossible => "IMPOSSIBLE",
            Verdict::NotRootedInput => "IMPOSSIBLE-NOT-ROOTED",
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DecideOptions {
    /// Ignore the root-compatibility exit and run to the edge-set fixpoint.
    pub no_early_exit: bool,
}

/// An edge dropped while building some level, with the graphs that would have
/// protected it had they been in its component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemovedEdge {
    pub edge: LabeledEdge,
    pub lost_guards: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct RefinementTrace {
    n: usize,
    levels: Vec<IndistGraph>,
    removed: Vec<Vec<RemovedEdge>>,
    td: usize,
    removal_iterations: usize,
    verdict: Verdict,
    components_final: Option<Components>,
    no_early_exit: bool,
    reached_fixpoint: bool,
}

impl RefinementTrace {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `N_1, N_2, ...`; empty for non-rooted input.
    pub fn levels(&self) -> &[IndistGraph] {
        &self.levels
    }

    /// Level `N_i` (1-based). Past the end of a fixpoint trace this is the final level.
    pub fn level(&self, i: usize) -> Option<&IndistGraph> {
        if i == 0 {
            return None;
        }
        match self.levels.get(i - 1) {
            Some(l) => Some(l),
            None if self.reached_fixpoint => self.levels.last(),
            None => None,
        }
    }

    /// Edges dropped when building level `i` (1-based); level 1 drops nothing.
    pub fn removed_at(&self, i: usize) -> &[RemovedEdge] {
        self.removed
            .get(i.wrapping_sub(1))
            .map_or(&[], Vec::as_slice)
    }

    /// Final value of the loop counter, with `N_1` counted as iteration 1.
    pub fn td(&self) -> usize {
        self.td
    }

    /// Number of levels at which at least one edge was removed.
    pub fn removal_iterations(&self) -> usize {
        self.removal_iterations
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn final_level(&self) -> Option<&IndistGraph> {
        self.levels.last()
    }

    pub fn components_final(&self) -> Option<&Components> {
        self.components_final.as_ref()
    }

    /// Number of connected components of the final level.
    pub fn c(&self) -> usize {
        self.components_final.as_ref().map_or(0, Components::count)
    }

    pub fn no_early_exit(&self) -> bool {
        self.no_early_exit
    }

    /// Whether the last level equals the one before it.
    pub fn reached_fixpoint(&self) -> bool {
        self.reached_fixpoint
    }

    /// Recomputes every structural property a trace must satisfy and reports the first failure.
    pub fn check_invariants(&self, d: &Adversary) -> std::result::Result<(), String> {
        if self.verdict == Verdict::NotRootedInput {
            return if self.levels.is_empty() && self.td == 0 {
                Ok(())
            } else {
                Err("non-rooted input must have an empty trace".into())
            };
        }
        if self.levels.first() != Some(&single_round_indist(d)) {
            return Err("first level differs from I(D)".into());
        }
        if self.td != self.levels.len() {
            return Err(format!(
                "td {} != level count {}",
                self.td,
                self.levels.len()
            ));
        }
        if self.n < 64 && self.td as u128 > 1u128 << self.n {
            return Err(format!("td {} exceeds 2^n", self.td));
        }
        for (k, pair) in self.levels.windows(2).enumerate() {
            let (prev, next) = (&pair[0], &pair[1]);
            let comps = connected_components(prev);
            for e in next.edges() {
                if prev.label(e.u, e.v) != Some(e.label) {
                    return Err(format!(
                        "level {} has an edge absent from level {}",
                        k + 2,
                        k + 1
                    ));
                }
                let guarded = comps
                    .members(comps.of(e.u))
                    .iter()
                    .any(|&g| d.graph(g).root().is_some_and(|r| r.is_subset(e.label)));
                if !guarded {
                    return Err(format!("level {} keeps an unguarded edge", k + 2));
                }
            }
            // Edges sharing a label inside one component share their fate.
            for a in prev.edges() {
                for b in prev.edges() {
                    if a.label == b.label
                        && comps.same(a.u, b.u)
                        && next.has_edge(a.u, a.v) != next.has_edge(b.u, b.v)
                    {
                        return Err(format!("label {} split across level {}", a.label, k + 2));
                    }
                }
            }
        }
        let comps = self
            .components_final
            .as_ref()
            .ok_or("missing final components")?;
        let compatible = all_root_compatible(d, comps);
        if compatible != (self.verdict == Verdict::Solvable) {
            return Err("verdict disagrees with the final components".into());
        }
        Ok(())
    }
}

fn component_common_root(d: &Adversary, members: &[usize]) -> ProcessSet {
    members.iter().fold(ProcessSet::full(d.n()), |acc, &g| {
        acc & d.graph(g).root().unwrap_or(ProcessSet::EMPTY)
    })
}

fn all_root_compatible(d: &Adversary, comps: &Components) -> bool {
    comps
        .iter()
        .all(|members| !component_common_root(d, members).is_empty())
}

/// One refinement step: keep an edge iff its component in `level` holds a graph
/// whose root lies inside the edge label.
fn refine(d: &Adversary, level: &IndistGraph) -> (IndistGraph, Vec<RemovedEdge>) {
    let comps = connected_components(level);
    let roots: Vec<Vec<(usize, ProcessSet)>> = comps
        .iter()
        .map(|members| {
            members
                .iter()
                .map(|&g| (g, d.graph(g).root().expect("rooted input")))
                .collect()
        })
        .collect();
    let guarded = |e: &LabeledEdge| {
        roots[comps.of(e.u)]
            .iter()
            .any(|(_, r)| r.is_subset(e.label))
    };
    let next = level.filtered(guarded);
    let removed = level
        .edges()
        .iter()
        .filter(|e| !guarded(e))
        .map(|e| RemovedEdge {
            edge: *e,
            lost_guards: (0..d.len())
                .filter(|&g| d.graph(g).root().is_some_and(|r| r.is_subset(e.label)))
                .collect(),
        })
        .collect();
    (next, removed)
}

pub fn decide(d: &Adversary) -> RefinementTrace {
    decide_with(d, DecideOptions::default())
}

pub fn decide_with(d: &Adversary, options: DecideOptions) -> RefinementTrace {
    if !d.all_rooted() {
        return RefinementTrace {
            n: d.n(),
            levels: Vec::new(),
            removed: Vec::new(),
            td: 0,
            removal_iterations: 0,
            verdict: Verdict::NotRootedInput,
            components_final: None,
            no_early_exit: options.no_early_exit,
            reached_fixpoint: false,
        };
    }

    let mut levels = vec![single_round_indist(d)];
    let mut removed = vec![Vec::new()];
    let mut reached_fixpoint = false;
    loop {
        let current = levels.last().expect("at least one level");
        if !options.no_early_exit && all_root_compatible(d, &connected_components(current)) {
            break;
        }
        let (next, dropped) = refine(d, current);
        let stable = dropped.is_empty();
        levels.push(next);
        removed.push(dropped);
        if stable {
            reached_fixpoint = true;
            break;
        }
    }

    let components_final = connected_components(levels.last().expect("at least one level"));
    let verdict = if all_root_compatible(d, &components_final) {
        Verdict::Solvable
    } else {
        Verdict::Impossible
    };
    let trace = RefinementTrace {
        n: d.n(),
        td: levels.len(),
        removal_iterations: removed.iter().filter(|r| !r.is_empty()).count(),
        levels,
        removed,
        verdict,
        components_final: Some(components_final),
        no_early_exit: options.no_early_exit,
        reached_fixpoint,
    };
    debug_assert_eq!(trace.check_invariants(d), Ok(()));
    trace
}

/// `c (n - 1) (td + 1)`: the round by which the synthesized rule decides.
pub fn consensus_round_bound(trace: &RefinementTrace, n: usize) -> Result<usize> {
    if trace.verdict() != Verdict::Solvable {
        return Err(Error::NotSolvable);
    }
    Ok(trace.c() * (n - 1) * (trace.td() + 1))
}

/// Checks a chain of connected subgraphs `S_1..S_i` (given as node sets of
/// `I(D)`) against a fixpoint trace.
///
/// Premises: each `S_j` induces a connected subgraph; for `j < i` the edges of
/// `S_1..S_j` are protected by the graphs of `S_1..S_{j+1}`; and `S_j` meets
/// the component of `S_{j+1}` in `N_{i-j}`. When they hold, returns whether
/// every edge induced by `S_1` survives in `N_i`. A failed premise is an error.
pub fn check_protected_chain(
    d: &Adversary,
    subgraphs: &[Vec<usize>],
    trace: &RefinementTrace,
) -> Result<bool> {
    if !trace.no_early_exit() || !trace.reached_fixpoint() {
        return Err(Error::Premise(
            "the trace must be computed with no_early_exit".into(),
        ));
    }
    let i = subgraphs.len();
    if i == 0 {
        return Err(Error::Premise("at least one subgraph is required".into()));
    }
    let base = trace.level(1).expect("rooted trace has a first level");
    for (j, s) in subgraphs.iter().enumerate() {
        if let Some(&bad) = s.iter().find(|&&x| x >= d.len()) {
            return Err(Error::GraphIndexOutOfRange {
                index: bad,
                len: d.len(),
            });
        }
        if s.is_empty() || !base.induces_connected(s) {
            return Err(Error::Premise(format!(
                "S_{} is not connected in I(D)",
                j + 1
            )));
        }
    }
    for j in 1..i {
        let edges: Vec<LabeledEdge> = subgraphs[..j]
            .iter()
            .flat_map(|s| base.induced_edges(s))
            .collect();
        let guards: Vec<usize> = subgraphs[..=j].iter().flatten().copied().collect();
        if !is_protected(d, &edges, &guards)?.protected {
            return Err(Error::Premise(format!(
                "edges of S_1..S_{j} are not protected by S_1..S_{}",
                j + 1
            )));
        }
        let level = trace
            .level(i - j)
            .expect("fixpoint trace covers every level");
        let comps = connected_components(level);
        let linked = subgraphs[j - 1]
            .iter()
            .any(|&a| subgraphs[j].iter().any(|&b| comps.same(a, b)));
        if !linked {
            return Err(Error::Premise(format!(
                "S_{j} is not connected to S_{} in N_{}",
                j + 1,
                i - j
            )));
        }
    }
    let target = trace.level(i).expect("fixpoint trace covers every level");
    Ok(base
        .induced_edges(&subgraphs[0])
        .iter()
        .all(|e| target.label(e.u, e.v) == Some(e.label)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{graph, lossy_link_2, two_graph_solvable};

    #[test]
    fn lossy_link_is_impossible_at_fixpoint() {
        let d = lossy_link_2();
        let t = decide(&d);
        assert_eq!(t.verdict(), Verdict::Impossible);
        assert_eq!(t.td(), 2);
        assert_eq!(t.removal_iterations(), 0);
        assert_eq!(t.levels()[0], t.levels()[1]);
        assert_eq!(t.c(), 1);
        assert!(matches!(
            consensus_round_bound(&t, 2),
            Err(Error::NotSolvable)
        ));
    }

    #[test]
    fn single_graph_is_solvable_immediately() {
        let d = Adversary::new(vec![graph("G", 3, &[(1, 2), (2, 3)])]).unwrap();
        let t = decide(&d);
        assert_eq!(t.verdict(), Verdict::Solvable);
        assert_eq!(t.td(), 1);
        assert_eq!(t.removal_iterations(), 0);
        assert_eq!(consensus_round_bound(&t, 3).unwrap(), 4);
    }

    #[test]
    fn non_rooted_input() {
        let d = Adversary::new(vec![
            graph("G", 3, &[(1, 2)]),
            graph("H", 3, &[(1, 2), (2, 3)]),
        ])
        .unwrap();
        let t = decide(&d);
        assert_eq!(t.verdict(), Verdict::NotRootedInput);
        assert!(t.levels().is_empty());
        assert_eq!(t.td(), 0);
    }

    #[test]
    fn two_graph_component_is_root_compatible() {
        let t = decide(&two_graph_solvable());
        assert_eq!(t.verdict(), Verdict::Solvable);
        assert_eq!(t.td(), 1);
        assert_eq!(t.c(), 1);
        assert_eq!(consensus_round_bound(&t, 3).unwrap(), 4);
    }

    #[test]
    fn bound_formula() {
        // c = 2, td = 1, n = 3: two disconnected single-root graphs.
        let d = Adversary::new(vec![
            graph("S1", 3, &[(1, 2), (1, 3)]),
            graph("S2", 3, &[(2, 1), (2, 3)]),
        ])
        .unwrap();
        let t = decide(&d);
        assert_eq!((t.c(), t.td()), (2, 1));
        assert_eq!(consensus_round_bound(&t, 3).unwrap(), 8);
    }

    #[test]
    fn unprotected_edge_is_dropped_with_lost_guards() {
        // G1 ~ G2 labeled {p3}; nothing has root {p3}... except G3, which is isolated.
        let d = Adversary::new(vec![
            graph("G1", 3, &[(1, 2), (2, 1), (1, 3)]),
            graph("G2", 3, &[(1, 2), (2, 1), (2, 3)]),
        ])
        .unwrap();
        // In(3) differs, In(1), In(2) agree: label {p1,p2} = Root of both.
        assert_eq!(decide(&d).verdict(), Verdict::Solvable);

        let d = Adversary::new(vec![
            graph("A", 3, &[(1, 2), (1, 3)]),
            graph("B", 3, &[(2, 1), (1, 3)]),
        ])
        .unwrap();
        // Label {p3}: neither root {p1} nor {p2} fits.
        let t = decide(&d);
        assert_eq!(t.td(), 2);
        assert_eq!(t.removal_iterations(), 1);
        assert_eq!(t.removed_at(2).len(), 1);
        assert!(t.removed_at(2)[0].lost_guards.is_empty());
        assert_eq!(t.verdict(), Verdict::Solvable);
        assert_eq!(t.c(), 2);
    }

    #[test]
    fn fixpoint_is_absorbing() {
        let d = lossy_link_2();
        let t = decide_with(
            &d,
            DecideOptions {
                no_early_exit: true,
            },
        );
        assert!(t.reached_fixpoint());
        let last = t.final_level().unwrap();
        let (again, dropped) = refine(&d, last);
        assert!(dropped.is_empty());
        assert_eq!(&again, last);
        assert_eq!(t.level(10), Some(last));
    }

    #[test]
    fn protected_chain_trivial_cases() {
        let d = lossy_link_2();
        let t = decide_with(
            &d,
            DecideOptions {
                no_early_exit: true,
            },
        );
        assert!(check_protected_chain(&d, &[vec![0, 1, 2]], &t).unwrap());
        // Singletons: nothing to protect, vacuously true when linked.
        assert!(check_protected_chain(&d, &[vec![0], vec![2]], &t).unwrap());
        // Not connected in I(D).
        assert!(matches!(
            check_protected_chain(&d, &[vec![0, 1]], &t),
            Err(Error::Premise(_))
        ));
        let early = decide(&d);
        assert!(check_protected_chain(&d, &[vec![0]], &early).is_err());
    }
}
