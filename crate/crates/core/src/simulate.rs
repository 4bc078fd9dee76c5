//! Decision-rule synthesis from `I(D^t)`, exhaustive run checking, and the
//! brute-force solvability oracle.

use std::collections::HashMap;

use serde::Serialize;

use crate::decision::{decide_with, DecideOptions, Verdict};
use crate::error::{Error, Result};
use crate::graphcore::ProcessSet;
use crate::indist::{connected_components, Adversary, Components};
use crate::patterns::{indist_label, Pattern, PatternLevel, ViewId};

/// Number of witness patterns attached to a [`Error::NonBroadcastableComponent`].
const WITNESS_LIMIT: usize = 4;

/// Decide at horizon `t` on the input of the smallest common broadcaster of
/// the pattern's component in `I(D^t)`.
#[derive(Debug)]
pub struct ConsensusRule<'a> {
    adversary: &'a Adversary,
    level: PatternLevel,
    components: Components,
    chosen: Vec<usize>,
    decision_of_view: HashMap<ViewId, usize>,
}

impl<'a> ConsensusRule<'a> {
    pub fn adversary(&self) -> &'a Adversary {
        self.adversary
    }

    pub fn horizon(&self) -> usize {
        self.level.rounds()
    }

    pub fn level(&self) -> &PatternLevel {
        &self.level
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    pub fn component_of(&self, sigma: &Pattern) -> Result<usize> {
        Ok(self.components.of(self.level.index_of(sigma)?))
    }

    /// `b(C)` for component `c` (0-based process).
    pub fn chosen_broadcaster(&self, c: usize) -> usize {
        self.chosen[c]
    }

    /// The process whose input `p` adopts after seeing `view` at the horizon.
    pub fn decide(&self, view: ViewId) -> Option<usize> {
        self.decision_of_view.get(&view).copied()
    }
}

pub fn build_rule(d: &Adversary, t: usize, budget: usize) -> Result<ConsensusRule<'_>> {
    let level = PatternLevel::enumerate(d, t, budget)?;
    let components = level.components();
    let mut chosen = Vec::with_capacity(components.count());
    for (c, members) in components.iter().enumerate() {
        let common = members.iter().fold(ProcessSet::full(d.n()), |acc, &idx| {
            acc & level.broadcasters(idx)
        });
        match common.first() {
            Some(b) => chosen.push(b),
            None => {
                return Err(Error::NonBroadcastableComponent {
                    horizon: t,
                    component: c,
                    size: members.len(),
                    witnesses: members
                        .iter()
                        .take(WITNESS_LIMIT)
                        .map(|&idx| level.pattern(idx))
                        .collect(),
                })
            }
        }
    }
    let mut decision_of_view = HashMap::new();
    for idx in 0..level.len() {
        let b = chosen[components.of(idx)];
        for &v in level.views_of(idx) {
            decision_of_view.insert(v, b);
        }
    }
    Ok(ConsensusRule {
        adversary: d,
        level,
        components,
        chosen,
        decision_of_view,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub pattern: Pattern,
    /// Per process, the (0-based) process whose input it adopted.
    pub decisions: Vec<Option<usize>>,
    pub values: Vec<Option<u64>>,
    pub agreement: bool,
    pub validity: bool,
    pub termination: bool,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.agreement && self.validity && self.termination
    }
}

fn check_inputs(d: &Adversary, inputs: &[u64]) -> Result<()> {
    if inputs.len() != d.n() {
        return Err(Error::InputCount {
            expected: d.n(),
            found: inputs.len(),
        });
    }
    Ok(())
}

pub fn run(rule: &ConsensusRule<'_>, sigma: &Pattern, inputs: &[u64]) -> Result<RunReport> {
    check_inputs(rule.adversary, inputs)?;
    if sigma.len() != rule.horizon() {
        return Err(Error::LengthMismatch {
            left: sigma.len(),
            right: rule.horizon(),
        });
    }
    Ok(run_index(rule, rule.level.index_of(sigma)?, inputs))
}

fn run_index(rule: &ConsensusRule<'_>, idx: usize, inputs: &[u64]) -> RunReport {
    let decisions: Vec<Option<usize>> = rule
        .level
        .views_of(idx)
        .iter()
        .map(|&v| rule.decide(v))
        .collect();
    let values: Vec<Option<u64>> = decisions.iter().map(|d| d.map(|b| inputs[b])).collect();
    let termination = decisions.iter().all(Option::is_some);
    let agreement = values.windows(2).all(|w| w[0] == w[1]);
    let broadcasters = rule.level.broadcasters(idx);
    let validity = decisions
        .iter()
        .zip(&values)
        .all(|(owner, value)| match (owner, value) {
            (Some(b), Some(x)) => broadcasters.contains(*b) && inputs.contains(x),
            _ => false,
        });
    RunReport {
        pattern: rule.level.pattern(idx),
        decisions,
        values,
        agreement,
        validity,
        termination,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub horizon: usize,
    pub runs: usize,
    pub agreement_violations: usize,
    pub validity_violations: usize,
    pub termination_violations: usize,
    /// Processes that decided differently in two runs they cannot tell apart.
    pub cross_run_violations: usize,
    pub first_violation: Option<Pattern>,
}

impl VerifyReport {
    pub fn violations(&self) -> usize {
        self.agreement_violations
            + self.validity_violations
            + self.termination_violations
            + self.cross_run_violations
    }

    fn merge(&mut self, other: VerifyReport) {
        self.runs += other.runs;
        self.agreement_violations += other.agreement_violations;
        self.validity_violations += other.validity_violations;
        self.termination_violations += other.termination_violations;
        self.cross_run_violations += other.cross_run_violations;
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
    }
}

/// Runs every pattern of `D^t` and checks the consensus conditions, plus equal
/// decisions for every process across runs where its final view is the same.
pub fn verify_all_runs(rule: &ConsensusRule<'_>, inputs: &[u64]) -> Result<VerifyReport> {
    check_inputs(rule.adversary, inputs)?;
    let mut report = VerifyReport {
        horizon: rule.horizon(),
        ..VerifyReport::default()
    };
    let mut seen: HashMap<ViewId, Option<u64>> = HashMap::new();
    for idx in 0..rule.level.len() {
        let r = run_index(rule, idx, inputs);
        report.runs += 1;
        let mut bad = !r.ok();
        report.agreement_violations += usize::from(!r.agreement);
        report.validity_violations += usize::from(!r.validity);
        report.termination_violations += usize::from(!r.termination);
        for (&view, &value) in rule.level.views_of(idx).iter().zip(&r.values) {
            if *seen.entry(view).or_insert(value) != value {
                report.cross_run_violations += 1;
                bad = true;
            }
        }
        if bad && report.first_violation.is_none() {
            report.first_violation = Some(r.pattern);
        }
    }
    Ok(report)
}

/// [`verify_all_runs`] with inputs `x_p = p` (1-based) and with all inputs equal.
pub fn verify_canonical(rule: &ConsensusRule<'_>) -> Result<VerifyReport> {
    let n = rule.adversary.n();
    let distinct: Vec<u64> = (1..=n as u64).collect();
    let mut report = verify_all_runs(rule, &distinct)?;
    report.merge(verify_all_runs(rule, &vec![0; n])?);
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MinHorizon {
    Found(usize),
    NoneUpTo(usize),
}

impl MinHorizon {
    pub fn found(self) -> Option<usize> {
        match self {
            MinHorizon::Found(r) => Some(r),
            MinHorizon::NoneUpTo(_) => None,
        }
    }
}

/// Whether every component of `I(D^r)` has a common broadcaster.
pub fn all_components_broadcastable(level: &PatternLevel) -> bool {
    level.components().iter().all(|members| {
        !members
            .iter()
            .fold(ProcessSet::full(level.n()), |acc, &idx| {
                acc & level.broadcasters(idx)
            })
            .is_empty()
    })
}

/// Smallest `r <= r_max` at which every component of `I(D^r)` is broadcastable.
pub fn oracle_min_horizon(d: &Adversary, r_max: usize, budget: usize) -> Result<MinHorizon> {
    let mut level = PatternLevel::initial(d);
    for r in 0..=r_max {
        if r > 0 {
            level = level.next(d, budget)?;
        }
        if all_components_broadcastable(&level) {
            return Ok(MinHorizon::Found(r));
        }
    }
    Ok(MinHorizon::NoneUpTo(r_max))
}

/// Broadcastability of every horizon `0..=r_max`.
pub fn oracle_profile(d: &Adversary, r_max: usize, budget: usize) -> Result<Vec<bool>> {
    let mut level = PatternLevel::initial(d);
    let mut profile = vec![all_components_broadcastable(&level)];
    for _ in 0..r_max {
        level = level.next(d, budget)?;
        profile.push(all_components_broadcastable(&level));
    }
    Ok(profile)
}

/// Largest `r` with `|D|^r <= budget`, capped at `cap`.
pub fn max_horizon_within(d: &Adversary, budget: usize, cap: usize) -> usize {
    let mut r = 0;
    while r < cap && crate::patterns::pattern_count(d, r + 1) <= budget as u128 {
        r += 1;
    }
    r
}

/// Graphs of one refined component whose roots share no process, with paths in
/// `I(D^i)` from `graphs[0]^i` to every other `graphs[k]^i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ImpossWitness {
    pub round: usize,
    pub graphs: Vec<usize>,
    pub paths: Vec<Vec<Pattern>>,
}

impl ImpossWitness {
    /// Rechecks the witness with freshly computed views.
    pub fn verify(&self, d: &Adversary) -> Result<bool> {
        if self.graphs.len() < 2 || self.paths.len() != self.graphs.len() - 1 {
            return Ok(false);
        }
        let mut common = ProcessSet::full(d.n());
        for &g in &self.graphs {
            common = common & d.root(g)?;
        }
        if !common.is_empty() {
            return Ok(false);
        }
        let start = Pattern::repeated(self.graphs[0], self.round);
        for (path, &g) in self.paths.iter().zip(&self.graphs[1..]) {
            if path.first() != Some(&start)
                || path.last() != Some(&Pattern::repeated(g, self.round))
            {
                return Ok(false);
            }
            for pair in path.windows(2) {
                if indist_label(d, &pair[0], &pair[1])?.is_empty() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Picks graphs from a root-incompatible set: a pair with disjoint roots if one
/// exists, otherwise an inclusion-minimal subset with empty common root.
fn incompatible_subset(d: &Adversary, members: &[usize]) -> Result<Vec<usize>> {
    for (k, &a) in members.iter().enumerate() {
        for &b in &members[k + 1..] {
            if d.root(a)?.is_disjoint(d.root(b)?) {
                return Ok(vec![a, b]);
            }
        }
    }
    let mut chosen = members.to_vec();
    let mut k = 0;
    while k < chosen.len() {
        let without: Vec<usize> = chosen
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &g)| g)
            .collect();
        let mut common = ProcessSet::full(d.n());
        for &g in &without {
            common = common & d.root(g)?;
        }
        if common.is_empty() {
            chosen = without;
        } else {
            k += 1;
        }
    }
    Ok(chosen)
}

/// A witness that no algorithm decides within `i` rounds, taken from the first
/// root-incompatible component of `N_i`; `None` if every component is root-compatible.
pub fn imposs_witness(d: &Adversary, i: usize, budget: usize) -> Result<Option<ImpossWitness>> {
    if i == 0 {
        return Err(Error::Premise(
            "the witness round must be at least 1".into(),
        ));
    }
    let trace = decide_with(
        d,
        DecideOptions {
            no_early_exit: true,
        },
    );
    if trace.verdict() == Verdict::NotRootedInput {
        return Err(Error::Premise("every graph must be rooted".into()));
    }
    let level_i = trace.level(i).expect("fixpoint trace covers every level");
    let comps = connected_components(level_i);
    let mut incompatible = None;
    for members in comps.iter() {
        let mut common = ProcessSet::full(d.n());
        for &g in members {
            common = common & d.root(g)?;
        }
        if common.is_empty() {
            incompatible = Some(members.to_vec());
            break;
        }
    }
    let Some(members) = incompatible else {
        return Ok(None);
    };
    let graphs = incompatible_subset(d, &members)?;
    let patterns = PatternLevel::enumerate(d, i, budget)?;
    let start = patterns.index_of(&Pattern::repeated(graphs[0], i))?;
    let mut paths = Vec::with_capacity(graphs.len() - 1);
    for &g in &graphs[1..] {
        let end = patterns.index_of(&Pattern::repeated(g, i))?;
        let path = patterns.path(start, end).ok_or_else(|| {
            Error::ClaimViolated(format!(
                "{}^{i} and {}^{i} are not connected in I(D^{i})",
                d.graph(graphs[0]).name(),
                d.graph(g).name()
            ))
        })?;
        paths.push(path.into_iter().map(|idx| patterns.pattern(idx)).collect());
    }
    Ok(Some(ImpossWitness {
        round: i,
        graphs,
        paths,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{consensus_round_bound, decide};
    use crate::patterns::DEFAULT_BUDGET;
    use crate::testutil::{graph, lossy_link_2, two_graph_solvable};

    #[test]
    fn single_graph_rule_adopts_smallest_root() {
        let d = Adversary::new(vec![graph("G", 3, &[(2, 1), (2, 3), (3, 2)])]).unwrap();
        let rule = build_rule(&d, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(rule.components().count(), 1);
        assert_eq!(rule.chosen_broadcaster(0), 1);
        let r = run(&rule, &Pattern::repeated(0, 2), &[10, 20, 30]).unwrap();
        assert_eq!(r.values, vec![Some(20); 3]);
        assert!(r.ok());
    }

    #[test]
    fn horizon_zero_has_no_broadcaster() {
        let d = two_graph_solvable();
        assert!(matches!(
            build_rule(&d, 0, DEFAULT_BUDGET),
            Err(Error::NonBroadcastableComponent { horizon: 0, .. })
        ));
    }

    #[test]
    fn lossy_link_rule_fails() {
        let d = lossy_link_2();
        for t in 1..=4 {
            match build_rule(&d, t, DEFAULT_BUDGET) {
                Err(Error::NonBroadcastableComponent { size, .. }) => {
                    assert_eq!(size, 3usize.pow(t as u32));
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        assert_eq!(
            oracle_min_horizon(&d, 5, DEFAULT_BUDGET).unwrap(),
            MinHorizon::NoneUpTo(5)
        );
    }

    #[test]
    fn solvable_pair_decides_first_input_everywhere() {
        let d = two_graph_solvable();
        let bound = consensus_round_bound(&decide(&d), d.n()).unwrap();
        let rule = build_rule(&d, bound, DEFAULT_BUDGET).unwrap();
        let inputs = [7, 8, 9];
        for idx in 0..rule.level().len() {
            let r = run(&rule, &rule.level().pattern(idx), &inputs).unwrap();
            assert_eq!(r.values, vec![Some(7); 3]);
        }
        let report = verify_canonical(&rule).unwrap();
        assert_eq!(report.violations(), 0);
        assert_eq!(report.runs, 2 * 16);
    }

    #[test]
    fn run_checks_arguments() {
        let d = two_graph_solvable();
        let rule = build_rule(&d, 2, DEFAULT_BUDGET).unwrap();
        assert!(matches!(
            run(&rule, &Pattern::repeated(0, 1), &[1, 2, 3]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            run(&rule, &Pattern::repeated(0, 2), &[1, 2]),
            Err(Error::InputCount { .. })
        ));
    }

    #[test]
    fn chain_graph_needs_two_rounds() {
        let d = Adversary::new(vec![graph("C", 3, &[(1, 2), (2, 3)])]).unwrap();
        assert_eq!(
            oracle_min_horizon(&d, 4, DEFAULT_BUDGET).unwrap(),
            MinHorizon::Found(2)
        );
        assert_eq!(
            oracle_profile(&d, 3, DEFAULT_BUDGET).unwrap(),
            vec![false, false, true, true]
        );
    }

    #[test]
    fn lossy_link_witness_at_two_rounds() {
        let d = lossy_link_2();
        let w = imposs_witness(&d, 2, DEFAULT_BUDGET).unwrap().unwrap();
        assert_eq!(w.graphs, vec![0, 1]);
        assert_eq!(w.paths[0].first(), Some(&Pattern::repeated(0, 2)));
        assert_eq!(w.paths[0].last(), Some(&Pattern::repeated(1, 2)));
        assert!(w.verify(&d).unwrap());
    }

    #[test]
    fn no_witness_for_solvable() {
        let d = two_graph_solvable();
        for i in 1..=3 {
            assert_eq!(imposs_witness(&d, i, DEFAULT_BUDGET).unwrap(), None);
        }
    }

    #[test]
    fn minimal_incompatible_subset() {
        let d = Adversary::new(vec![
            graph("A", 3, &[(1, 2), (2, 1), (1, 3)]),
            graph("B", 3, &[(2, 3), (3, 2), (2, 1)]),
            graph("C", 3, &[(1, 3), (3, 1), (3, 2)]),
        ])
        .unwrap();
        // Roots {1,2}, {2,3}, {1,3}: pairwise intersecting, jointly empty.
        assert_eq!(incompatible_subset(&d, &[0, 1, 2]).unwrap(), vec![0, 1, 2]);
    }
}
