//! Neighbor relations used as per-mechanism verification functions.

use serde::{Deserialize, Serialize};

use crate::mechanisms::svt::parse_svt_input;
use crate::message::Message;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborRelation {
    /// One pair of bits and nothing after it.
    SingleBit,
    /// At most two bit pairs whose sequences differ in at most one position.
    TwoBitsOneDiff,
    /// One pair of integers at distance at most 1.
    AdjacentInt,
    /// First pair: two bits read as neighboring initial states; every later pair identical.
    InitialBit,
    /// Integer streams identical except at one step, where they differ by at most 1.
    CounterEvent,
    /// Integer-vector streams identical except at one step, `ℓ∞ ≤ 1` there.
    VectorEvent,
    /// SVT inputs: equal thresholds, binary `x` streams identical except at one step.
    SvtEvent,
    /// Streams over `{0,1}^d` identical except at one step.
    HistogramEvent,
}

pub const RELATION_IDS: [&str; 8] = [
    "rr_bit",
    "g",
    "adjacent_int",
    "initial_bit",
    "counter_event",
    "vector_event",
    "svt_event",
    "histogram_event",
];

fn binary(v: &[i64]) -> bool {
    v.iter().all(|x| *x == 0 || *x == 1)
}

fn linf(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0)
}

impl NeighborRelation {
    pub fn id(&self) -> &'static str {
        match self {
            NeighborRelation::SingleBit => "rr_bit",
            NeighborRelation::TwoBitsOneDiff => "g",
            NeighborRelation::AdjacentInt => "adjacent_int",
            NeighborRelation::InitialBit => "initial_bit",
            NeighborRelation::CounterEvent => "counter_event",
            NeighborRelation::VectorEvent => "vector_event",
            NeighborRelation::SvtEvent => "svt_event",
            NeighborRelation::HistogramEvent => "histogram_event",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Some(match id {
            "rr_bit" => NeighborRelation::SingleBit,
            "g" => NeighborRelation::TwoBitsOneDiff,
            "adjacent_int" => NeighborRelation::AdjacentInt,
            "initial_bit" => NeighborRelation::InitialBit,
            "counter_event" => NeighborRelation::CounterEvent,
            "vector_event" => NeighborRelation::VectorEvent,
            "svt_event" => NeighborRelation::SvtEvent,
            "histogram_event" => NeighborRelation::HistogramEvent,
            _ => return None,
        })
    }

    /// Whether a leading identical pair forces every later pair to be identical.
    pub fn is_first_pair_consistent(&self) -> bool {
        matches!(self, NeighborRelation::SingleBit | NeighborRelation::AdjacentInt | NeighborRelation::InitialBit)
    }

    /// Checks a sequence of `Pair(q0, q1)` messages; on failure returns the offending position.
    pub fn check(&self, pairs: &[Message]) -> Result<(), usize> {
        let mut split = Vec::with_capacity(pairs.len());
        for (i, m) in pairs.iter().enumerate() {
            split.push(m.as_pair().ok_or(i)?);
        }
        let bits = |i: usize, (a, b): (&Message, &Message)| match (a.as_bit(), b.as_bit()) {
            (Some(x), Some(y)) => Ok((x, y)),
            _ => Err(i),
        };
        match self {
            NeighborRelation::SingleBit => {
                if split.len() > 1 {
                    return Err(1);
                }
                split.iter().enumerate().try_for_each(|(i, p)| bits(i, *p).map(|_| ()))
            }
            NeighborRelation::TwoBitsOneDiff => {
                if split.len() > 2 {
                    return Err(2);
                }
                let mut diffs = 0;
                for (i, p) in split.iter().enumerate() {
                    let (x, y) = bits(i, *p)?;
                    if x != y {
                        diffs += 1;
                        if diffs > 1 {
                            return Err(i);
                        }
                    }
                }
                Ok(())
            }
            NeighborRelation::AdjacentInt => {
                if split.len() > 1 {
                    return Err(1);
                }
                match split.first() {
                    None => Ok(()),
                    Some((a, b)) => match (a.as_int(), b.as_int()) {
                        (Some(x), Some(y)) if (x - y).abs() <= 1 => Ok(()),
                        _ => Err(0),
                    },
                }
            }
            NeighborRelation::InitialBit => {
                for (i, p) in split.iter().enumerate() {
                    if i == 0 {
                        bits(0, *p)?;
                    } else if p.0 != p.1 {
                        return Err(i);
                    }
                }
                Ok(())
            }
            NeighborRelation::CounterEvent => event_level(&split, |a, b| match (a, b) {
                (Message::Int(x), Message::Int(y)) => Some((x - y).abs() <= 1),
                _ => None,
            }),
            NeighborRelation::VectorEvent => event_level(&split, |a, b| match (a, b) {
                (Message::Vector(x), Message::Vector(y)) if x.len() == y.len() => Some(linf(x, y) <= 1),
                _ => None,
            }),
            NeighborRelation::HistogramEvent => event_level(&split, |a, b| match (a, b) {
                (Message::Vector(x), Message::Vector(y)) if x.len() == y.len() && binary(x) && binary(y) => {
                    Some(true)
                }
                _ => None,
            }),
            NeighborRelation::SvtEvent => event_level(&split, |a, b| match (parse_svt_input(a), parse_svt_input(b)) {
                (Some((x, s)), Some((y, t))) if x.len() == y.len() && binary(x) && binary(y) && s == t => Some(true),
                _ => None,
            }),
        }
    }
}

/// Every pair must be well-formed (`Some`), and at most one may differ, with
/// `close` holding there.
fn event_level(split: &[(&Message, &Message)], close: impl Fn(&Message, &Message) -> Option<bool>) -> Result<(), usize> {
    let mut seen = false;
    for (i, (a, b)) in split.iter().enumerate() {
        let ok = close(a, b).ok_or(i)?;
        if a != b {
            if seen || !ok {
                return Err(i);
            }
            seen = true;
        }
    }
    Ok(())
}
