use std::fmt;

use serde::{Deserialize, Serialize};

/// Coarse classification carried by every error so that callers (and the CLI
/// exit status) can react without string matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCategory {
    Schema,
    Structural,
    Assumption,
    NotLocalizable,
    Certificate,
    Contract,
    Divergence,
    Io,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Schema => "schema",
            ErrorCategory::Structural => "structural",
            ErrorCategory::Assumption => "assumption",
            ErrorCategory::NotLocalizable => "not-localizable",
            ErrorCategory::Certificate => "certificate",
            ErrorCategory::Contract => "contract",
            ErrorCategory::Divergence => "divergence",
            ErrorCategory::Io => "io",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormationError {
    #[error("invalid agent counts: n = {n}, m = {m} (need 1 <= m < n)")]
    BadCounts { n: usize, m: usize },
    #[error("agent id {id} out of range 1..={n}")]
    IdOutOfRange { id: usize, n: usize },
    #[error("agent {id} is a leader and cannot carry a constraint pair")]
    LeaderHasPair { id: usize },
    #[error("follower {follower} has more than one constraint pair")]
    DuplicateFollower { follower: usize },
    #[error("follower {follower} has no constraint pair")]
    MissingPair { follower: usize },
    #[error("follower {follower}: constraint neighbors must be distinct (got {j}, {k})")]
    RepeatedNeighbor { follower: usize, j: usize, k: usize },
    #[error("follower {follower} lists itself as a constraint neighbor")]
    SelfNeighbor { follower: usize },
    #[error("follower {follower} is not two-reachable from the leader group")]
    NotTwoReachable { follower: usize },
    #[error("follower subgraph is directed: edge ({from}, {to}) has no reverse")]
    DirectedFollowerEdge { from: usize, to: usize },
    #[error("degenerate configuration: {what} of follower {follower} collocated with neighbor {neighbor}")]
    Collocated {
        follower: usize,
        neighbor: usize,
        what: &'static str,
    },
    #[error("degenerate configuration: {what} weights of follower triple ({follower}, {j}, {k}) sum to zero")]
    ZeroSumWeights {
        follower: usize,
        j: usize,
        k: usize,
        what: &'static str,
    },
    #[error("degenerate configuration: collocated points")]
    CollocatedPoints,
    #[error("degenerate configuration: constraint weights sum to zero")]
    DegenerateWeights,
    #[error("formation is not localizable (condition number {cond:.3e})")]
    NotLocalizable { cond: f64 },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("time {t} outside schedule [{start}, {end}]")]
    OutsideSchedule { t: f64, start: f64, end: f64 },
    #[error("target shape is not reachable by tuning the leaders")]
    InfeasibleShape,
    #[error("gain certificate failed: alpha2 = {alpha2} below required {alpha2_min}")]
    Certificate { alpha2: f64, alpha2_min: f64 },
    #[error("simulation diverged at t = {t} (agent {agent})")]
    Divergence { t: f64, agent: usize },
}

impl FormationError {
    pub fn category(&self) -> ErrorCategory {
        use FormationError::*;
        match self {
            BadCounts { .. }
            | IdOutOfRange { .. }
            | LeaderHasPair { .. }
            | DuplicateFollower { .. }
            | MissingPair { .. }
            | RepeatedNeighbor { .. }
            | SelfNeighbor { .. }
            | NotTwoReachable { .. }
            | DirectedFollowerEdge { .. } => ErrorCategory::Structural,
            Collocated { .. }
            | ZeroSumWeights { .. }
            | CollocatedPoints
            | DegenerateWeights
            | InfeasibleShape => {
                ErrorCategory::Assumption
            }
            NotLocalizable { .. } => ErrorCategory::NotLocalizable,
            Contract(_) | OutsideSchedule { .. } => ErrorCategory::Contract,
            Certificate { .. } => ErrorCategory::Certificate,
            Divergence { .. } => ErrorCategory::Divergence,
        }
    }
}

pub type Result<T, E = FormationError> = std::result::Result<T, E>;
