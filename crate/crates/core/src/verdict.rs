use std::fmt;

/// Outcome of a total verification routine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RejectReason {
    /// Wrong lengths, bad encoding or mismatched parameters.
    Malformed(String),
    /// Round `round` (0-based) failed its commitment check.
    Commitment { round: usize },
    /// The carried batch does not hash to the signed digest.
    BatchDigest,
    /// The aggregator's own signature failed.
    Aggregator(Box<RejectReason>),
    /// A batch member failed individual verification.
    Member { index: usize, reason: Box<RejectReason> },
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    pub fn reason(&self) -> Option<&RejectReason> {
        match self {
            Verdict::Accept => None,
            Verdict::Reject(r) => Some(r),
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Malformed(s) => write!(f, "malformed: {s}"),
            RejectReason::Commitment { round } => write!(f, "commitment mismatch in round {round}"),
            RejectReason::BatchDigest => f.write_str("batch digest mismatch"),
            RejectReason::Aggregator(r) => write!(f, "aggregator signature: {r}"),
            RejectReason::Member { index, reason } => write!(f, "member {index}: {reason}"),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accept => f.write_str("accept"),
            Verdict::Reject(r) => write!(f, "reject ({r})"),
        }
    }
}
