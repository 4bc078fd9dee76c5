use thiserror::Error;

use crate::patterns::Pattern;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("process count must be between 2 and 64, got {n}")]
    InvalidProcessCount { n: usize },

    #[error("process p{process} is out of range for n = {n}")]
    ProcessOutOfRange { process: usize, n: usize },

    #[error("graph `{graph}` is not rooted")]
    NotRooted { graph: String },

    #[error("an adversary needs at least one graph")]
    EmptyAdversary,

    #[error("graph `{graph}` has {found} processes, expected {expected}")]
    MixedProcessCount {
        graph: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate graph name `{0}`")]
    DuplicateName(String),

    #[error("graphs `{first}` and `{second}` have identical edges")]
    DuplicateGraph { first: String, second: String },

    #[error("unknown graph `{0}`")]
    UnknownGraph(String),

    #[error("graph index {index} out of range for an adversary of {len} graphs")]
    GraphIndexOutOfRange { index: usize, len: usize },

    #[error("patterns have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("round {round} is out of range for a pattern of length {len}")]
    RoundOutOfRange { round: usize, len: usize },

    #[error("expected {expected} input values, got {found}")]
    InputCount { expected: usize, found: usize },

    #[error("|D|^r = {size} patterns at r = {rounds} exceeds the budget of {budget}")]
    BudgetExceeded {
        rounds: usize,
        size: u128,
        budget: usize,
    },

    #[error("the decision procedure did not report SOLVABLE")]
    NotSolvable,

    #[error("premise violated: {0}")]
    Premise(String),

    #[error("invalid construction parameters: {0}")]
    InvalidSpec(String),

    #[error("construction check failed: {0}")]
    ClaimViolated(String),

    #[error("component {component} of I(D^{horizon}) ({size} patterns) has no common broadcaster")]
    NonBroadcastableComponent {
        horizon: usize,
        component: usize,
        size: usize,
        /// A few member patterns, smallest indices first.
        witnesses: Vec<Pattern>,
    },
}
