//! Consensus solvability under oblivious message adversaries.
//!
//! [`decide`] runs the refinement procedure on the single-round
//! indistinguishability graph of an [`Adversary`]. The [`simulate`] module
//! cross-checks its verdicts by brute force over all communication patterns,
//! and [`families`] generates the lower-bound constructions.

pub mod claims;
pub mod decision;
pub mod document;
pub mod error;
pub mod families;
pub mod graphcore;
pub mod indist;
pub mod patterns;
pub mod simulate;

#[cfg(test)]
mod testutil;

pub use decision::{
    check_protected_chain, consensus_round_bound, decide, decide_with, DecideOptions,
    RefinementTrace, RemovedEdge, Verdict,
};
pub use document::{AdversaryDocument, GraphDocument};
pub use error::{Error, Result};
pub use graphcore::{CommunicationGraph, ProcessSet};
pub use indist::{single_round_indist, Adversary, Components, IndistGraph, LabeledEdge};
pub use patterns::{Pattern, PatternLevel, DEFAULT_BUDGET};
pub use simulate::{
    build_rule, imposs_witness, oracle_min_horizon, run, verify_all_runs, ConsensusRule,
    ImpossWitness, MinHorizon, RunReport, VerifyReport,
};
