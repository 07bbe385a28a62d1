//! The suitability predicate on sequences of message pairs sent to the composition.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::message::{CreationQuery, Message};

use super::registry::Registry;

/// Machine-readable rejection reason. Positions are 0-based; mechanism indices 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    Malformed { at: usize },
    IndexUnavailable { at: usize },
    QueryOutOfSpace { at: usize },
    Uncertified { at: usize },
    ChildInvalid { index: usize },
    FixedMismatch { at: usize },
    TooManyCreations,
    ParamsNotSubmultiset,
    BudgetExceeded,
    NotRandomizedResponse { index: usize },
    NotFirstPairConsistent { index: usize },
    FilterRejected,
    NeighborViolation { at: usize },
    TooManyExposed { mech_id: String },
    Rejected,
}

impl Reason {
    pub fn code(&self) -> &'static str {
        match self {
            Reason::Malformed { .. } => "malformed",
            Reason::IndexUnavailable { .. } => "index-unavailable",
            Reason::QueryOutOfSpace { .. } => "query-out-of-space",
            Reason::Uncertified { .. } => "uncertified",
            Reason::ChildInvalid { .. } => "child-invalid",
            Reason::FixedMismatch { .. } => "fixed-mismatch",
            Reason::TooManyCreations => "too-many-creations",
            Reason::ParamsNotSubmultiset => "params-not-submultiset",
            Reason::BudgetExceeded => "budget-exceeded",
            Reason::NotRandomizedResponse { .. } => "not-randomized-response",
            Reason::NotFirstPairConsistent { .. } => "not-first-pair-consistent",
            Reason::FilterRejected => "filter-rejected",
            Reason::NeighborViolation { .. } => "neighbor-violation",
            Reason::TooManyExposed { .. } => "too-many-exposed",
            Reason::Rejected => "rejected",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

pub type Verdict = Result<(), Reason>;

/// What a suitable sequence contains.
#[derive(Clone, Debug, Default)]
pub struct Summary {
    pub creations: Vec<CreationQuery>,
    /// Positions of the creation pairs in the sequence.
    pub creation_positions: Vec<usize>,
    /// Per created mechanism, its `Pair(q0, q1)` inputs in order.
    pub inputs: Vec<Vec<Message>>,
    /// 1-based indices that received a non-identical pair.
    pub exposed: BTreeSet<usize>,
}

impl Summary {
    pub fn is_creation(&self, pos: usize) -> bool {
        self.creation_positions.binary_search(&pos).is_ok()
    }
}

/// Checks format, index availability, query-space membership, certification,
/// and each created mechanism's relation on its inputs so far.
pub fn summarize(msgs: &[Message], registry: &Registry) -> Result<Summary, Reason> {
    let mut s = Summary::default();
    for (at, m) in msgs.iter().enumerate() {
        let (a, b) = m.as_pair().ok_or(Reason::Malformed { at })?;
        match (a, b) {
            (Message::Create(x), Message::Create(y)) if x == y => {
                if !registry.certifies(x) {
                    return Err(Reason::Uncertified { at });
                }
                s.creations.push((**x).clone());
                s.creation_positions.push(at);
                s.inputs.push(Vec::new());
            }
            (Message::Routed(q0, l0), Message::Routed(q1, l1)) if l0 == l1 => {
                let l = *l0;
                if l == 0 || l > s.creations.len() {
                    return Err(Reason::IndexUnavailable { at });
                }
                let cq = &s.creations[l - 1];
                if !registry.query_in_space(cq, q0) || !registry.query_in_space(cq, q1) {
                    return Err(Reason::QueryOutOfSpace { at });
                }
                s.inputs[l - 1].push(Message::pair((**q0).clone(), (**q1).clone()));
                if q0 != q1 {
                    s.exposed.insert(l);
                }
            }
            _ => return Err(Reason::Malformed { at }),
        }
    }
    for (i, (cq, pairs)) in s.creations.iter().zip(&s.inputs).enumerate() {
        let rel = registry.relation(&cq.vf_id).ok_or(Reason::ChildInvalid { index: i + 1 })?;
        rel.check(pairs).map_err(|_| Reason::ChildInvalid { index: i + 1 })?;
    }
    Ok(s)
}

pub fn is_suitable(msgs: &[Message], registry: &Registry) -> Verdict {
    summarize(msgs, registry).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::PrivacyParams;

    fn alpha() -> Message {
        Message::same(Message::create(CreationQuery::rr(PrivacyParams::new(1.0, 0.1).unwrap())))
    }

    fn ask(q0: i64, q1: i64, i: usize) -> Message {
        Message::pair(Message::routed(Message::Int(q0), i), Message::routed(Message::Int(q1), i))
    }

    #[test]
    fn empty_is_suitable() {
        assert_eq!(is_suitable(&[], &Registry::standard()), Ok(()));
    }

    #[test]
    fn query_before_creation_is_index_unavailable() {
        let r = is_suitable(&[ask(0, 0, 1)], &Registry::standard()).unwrap_err();
        assert_eq!(r.code(), "index-unavailable");
    }

    #[test]
    fn create_then_ask() {
        let reg = Registry::standard();
        assert_eq!(is_suitable(&[alpha(), ask(0, 1, 1)], &reg), Ok(()));
        assert_eq!(is_suitable(&[alpha(), ask(0, 2, 1)], &reg), Err(Reason::QueryOutOfSpace { at: 1 }));
        assert_eq!(
            is_suitable(&[alpha(), ask(0, 1, 1), ask(0, 1, 1)], &reg),
            Err(Reason::ChildInvalid { index: 1 })
        );
    }

    #[test]
    fn mismatched_pairs_are_malformed() {
        let reg = Registry::standard();
        let bad = Message::pair(Message::routed(Message::Int(0), 1), Message::routed(Message::Int(0), 2));
        assert_eq!(is_suitable(&[alpha(), bad], &reg), Err(Reason::Malformed { at: 1 }));
        assert_eq!(is_suitable(&[Message::Int(0)], &reg), Err(Reason::Malformed { at: 0 }));
    }
}
