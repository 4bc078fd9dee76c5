//! Exhaustive checkers for structural properties of `I(D^r)` and the refinement.
//!
//! Each checker counts the instances it examined and the ones that failed;
//! violations are data, not errors.

use std::fmt;

use serde::Serialize;

use crate::decision::RefinementTrace;
use crate::error::{Error, Result};
use crate::indist::{connected_components, Adversary};
use crate::patterns::{Pattern, PatternLevel};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimReport {
    pub claim: &'static str,
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

impl ClaimReport {
    pub fn new(claim: &'static str) -> Self {
        ClaimReport {
            claim,
            checked: 0,
            violations: 0,
            first_violation: None,
        }
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(describe());
            }
        }
    }

    /// Adds the counts of `other`, keeping the earliest violation.
    pub fn absorb(&mut self, other: ClaimReport) {
        self.checked += other.checked;
        self.violations += other.violations;
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
    }
}

impl fmt::Display for ClaimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} checked, {} violations",
            self.claim, self.checked, self.violations
        )?;
        if let Some(v) = &self.first_violation {
            write!(f, " (first: {v})")?;
        }
        Ok(())
    }
}

/// `D^0, D^1, ..., D^r_max`.
pub fn pattern_levels(d: &Adversary, r_max: usize, budget: usize) -> Result<Vec<PatternLevel>> {
    let mut levels = vec![PatternLevel::initial(d)];
    for _ in 0..r_max {
        let next = levels.last().expect("nonempty").clone().next(d, budget)?;
        levels.push(next);
    }
    Ok(levels)
}

fn show(d: &Adversary, level: &PatternLevel, idx: usize) -> String {
    level.pattern(idx).render(d)
}

/// Extending an edge by a graph whose root lies in its label keeps an edge with
/// `Root(G) ⊆ ℓ(e') ⊆ ℓ(e)`; and every edge's one-round-shorter prefixes are
/// adjacent (or equal) with a label that contains it.
pub fn check_ignoramus(d: &Adversary, lower: &PatternLevel, upper: &PatternLevel) -> ClaimReport {
    assert_eq!(
        lower.rounds() + 1,
        upper.rounds(),
        "levels must be consecutive"
    );
    let k = d.len();
    let mut report = ClaimReport::new("extension by a root inside the label");
    for e in lower.indist_graph().edges() {
        for g in 0..k {
            let Some(root) = d.graph(g).root() else {
                continue;
            };
            if !root.is_subset(e.label) {
                continue;
            }
            let extended = upper.label(e.u * k + g, e.v * k + g);
            report.record(
                root.is_subset(extended) && extended.is_subset(e.label),
                || {
                    format!(
                        "({}, {}) extended by {}",
                        show(d, lower, e.u),
                        show(d, lower, e.v),
                        d.graph(g).name()
                    )
                },
            );
        }
    }
    for e in upper.indist_graph().edges() {
        let (a, b) = (e.u / k, e.v / k);
        let ok = a == b || {
            let prefix = lower.label(a, b);
            !prefix.is_empty() && e.label.is_subset(prefix)
        };
        report.record(ok, || {
            format!(
                "prefixes of ({}, {})",
                show(d, upper, e.u),
                show(d, upper, e.v)
            )
        });
    }
    report
}

/// Omitting any single round from both endpoints of an edge of `I(D^r)` leaves
/// an edge (or a pair of equal patterns) of `I(D^{r-1})`.
pub fn check_remove_round(
    d: &Adversary,
    lower: &PatternLevel,
    upper: &PatternLevel,
) -> Result<ClaimReport> {
    assert_eq!(
        lower.rounds() + 1,
        upper.rounds(),
        "levels must be consecutive"
    );
    let mut report = ClaimReport::new("round removal keeps edges");
    for e in upper.indist_graph().edges() {
        let (a, b) = (upper.pattern(e.u), upper.pattern(e.v));
        for r in 1..=upper.rounds() {
            let (a2, b2) = (a.remove_round(r)?, b.remove_round(r)?);
            let ok = a2 == b2
                || !lower
                    .label(lower.index_of(&a2)?, lower.index_of(&b2)?)
                    .is_empty();
            report.record(ok, || {
                format!("({}, {}) without round {r}", a.render(d), b.render(d))
            });
        }
    }
    Ok(report)
}

/// For an edge `e` of `I(D^r)` whose length-`r'` prefixes differ, at most
/// `|ℓ(e')| - 1` rounds after `r'` use a graph whose root leaves the prefix label
/// `ℓ(e')`. Checked for both endpoints; `levels[i]` must hold `D^i`.
pub fn check_inf_prop(d: &Adversary, levels: &[PatternLevel], r: usize) -> Result<ClaimReport> {
    let mut report = ClaimReport::new("bounded rounds with roots outside the prefix label");
    let upper = &levels[r];
    for e in upper.indist_graph().edges() {
        let (a, b) = (upper.pattern(e.u), upper.pattern(e.v));
        for (r_prime, lower) in levels.iter().enumerate().take(r).skip(1) {
            let (pa, pb) = (a.prefix(r_prime)?, b.prefix(r_prime)?);
            if pa == pb {
                continue;
            }
            let label = lower.label(lower.index_of(&pa)?, lower.index_of(&pb)?);
            for sigma in [&a, &b] {
                let escapes = sigma.rounds()[r_prime..]
                    .iter()
                    .filter(|&&g| !d.root(g).is_ok_and(|root| root.is_subset(label)))
                    .count();
                report.record(escapes < label.len(), || {
                    format!(
                        "({}, {}) after round {r_prime}: {escapes} escapes, label {label}",
                        a.render(d),
                        b.render(d)
                    )
                });
            }
        }
    }
    Ok(report)
}

/// Graphs in one component of `N_i` (no-early-exit trace) have `A^i` and `B^i`
/// connected in `I(D^i)`.
pub fn check_keep_connected(
    d: &Adversary,
    trace: &RefinementTrace,
    level: &PatternLevel,
) -> Result<ClaimReport> {
    let i = level.rounds();
    let refined = trace
        .level(i)
        .ok_or_else(|| Error::Premise(format!("the trace has no level {i}")))?;
    let refined_components = connected_components(refined);
    let pattern_components = level.components();
    let mut report = ClaimReport::new("refined components stay connected");
    for members in refined_components.iter() {
        let first = level.index_of(&Pattern::repeated(members[0], i))?;
        for &g in &members[1..] {
            let other = level.index_of(&Pattern::repeated(g, i))?;
            report.record(pattern_components.same(first, other), || {
                format!(
                    "{}^{i} and {}^{i}",
                    d.graph(members[0]).name(),
                    d.graph(g).name()
                )
            });
        }
    }
    Ok(report)
}

/// For every component `C` of the final refined level and `r = (n-1) td`, no
/// pattern of `C^r` is connected in `I(D^r)` to a pattern starting outside `C`.
pub fn check_pattern_to_graph(
    d: &Adversary,
    trace: &RefinementTrace,
    budget: usize,
) -> Result<ClaimReport> {
    let comps = trace
        .components_final()
        .ok_or_else(|| Error::Premise("every graph must be rooted".into()))?;
    let r = (d.n() - 1) * trace.td();
    let level = PatternLevel::enumerate(d, r, budget)?;
    let pattern_components = level.components();
    let mut report = ClaimReport::new("refined components separate patterns");
    for members in comps.iter() {
        let mut reached = vec![false; pattern_components.count()];
        for idx in 0..level.len() {
            let p = level.pattern(idx);
            if p.rounds().iter().all(|g| members.contains(g)) {
                reached[pattern_components.of(idx)] = true;
            }
        }
        for idx in 0..level.len() {
            let first = level.pattern(idx).rounds()[0];
            if members.contains(&first) {
                continue;
            }
            report.record(!reached[pattern_components.of(idx)], || {
                format!(
                    "{} is connected to a pattern over {:?}",
                    level.pattern(idx).render(d),
                    members
                        .iter()
                        .map(|&g| d.graph(g).name())
                        .collect::<Vec<_>>()
                )
            });
        }
    }
    Ok(report)
}
