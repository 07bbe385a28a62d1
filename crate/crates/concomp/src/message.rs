//! Messages exchanged between adversaries, mechanisms and post-processors.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a randomized-response outcome reveals its bit outright.
///
/// `Exposed` has probability δ for both RR and IRR.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Flag {
    Exposed,
    Private,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Message {
    /// First input an adversary receives.
    Start,
    /// The single query `q*` accepted by IRR.
    Star,
    Int(i64),
    Vector(Vec<i64>),
    Real(OrderedFloat<f64>),
    Sym(String),
    Flag(Flag),
    /// Outcome of the one-shot randomized response.
    Rr(Flag, u8),
    Top,
    Bottom,
    Ack,
    Halt,
    /// An adversary's final output; ends the interaction.
    Guess(u8),
    Pair(Box<Message>, Box<Message>),
    Tuple(Vec<Message>),
    Create(Box<CreationQuery>),
    /// `(q, i)`: forward `q` to the `i`-th created mechanism (1-based).
    Routed(Box<Message>, usize),
}

impl Message {
    pub fn pair(a: Message, b: Message) -> Message {
        Message::Pair(Box::new(a), Box::new(b))
    }

    pub fn same(m: Message) -> Message {
        Message::pair(m.clone(), m)
    }

    pub fn routed(q: Message, index: usize) -> Message {
        Message::Routed(Box::new(q), index)
    }

    pub fn create(q: CreationQuery) -> Message {
        Message::Create(Box::new(q))
    }

    pub fn real(x: f64) -> Message {
        Message::Real(OrderedFloat(x))
    }

    pub fn as_pair(&self) -> Option<(&Message, &Message)> {
        match self {
            Message::Pair(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn as_bit(&self) -> Option<u8> {
        match self {
            Message::Int(0) => Some(0),
            Message::Int(1) => Some(1),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Message::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_routed(&self) -> Option<(&Message, usize)> {
        match self {
            Message::Routed(q, i) => Some((q, *i)),
            _ => None,
        }
    }

    /// Ends an interaction when sent by the adversary.
    pub fn is_terminal(&self) -> bool {
        matches!(self, Message::Halt | Message::Guess(_))
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Start => write!(f, "start"),
            Message::Star => write!(f, "*"),
            Message::Int(v) => write!(f, "{v}"),
            Message::Vector(v) => {
                write!(f, "[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
            Message::Real(x) => write!(f, "{}", x.0),
            Message::Sym(s) => write!(f, "{s}"),
            Message::Flag(Flag::Exposed) => write!(f, "E"),
            Message::Flag(Flag::Private) => write!(f, "P"),
            Message::Rr(Flag::Exposed, b) => write!(f, "E{b}"),
            Message::Rr(Flag::Private, b) => write!(f, "P{b}"),
            Message::Top => write!(f, "top"),
            Message::Bottom => write!(f, "bot"),
            Message::Ack => write!(f, "ack"),
            Message::Halt => write!(f, "halt"),
            Message::Guess(b) => write!(f, "guess{b}"),
            Message::Pair(a, b) => write!(f, "({a}|{b})"),
            Message::Tuple(v) => {
                write!(f, "<")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ">")
            }
            Message::Create(q) => write!(f, "create({},{},{},{})", q.mech_id, q.init_state, q.params, q.vf_id),
            Message::Routed(q, i) => write!(f, "{q}@{i}"),
        }
    }
}

/// Privacy parameters `(ε, δ)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be finite and >= 0")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!("delta {delta} must lie in [0, 1]")));
        }
        Ok(PrivacyParams { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    fn key(&self) -> (OrderedFloat<f64>, OrderedFloat<f64>) {
        (OrderedFloat(self.epsilon), OrderedFloat(self.delta))
    }
}

impl PartialEq for PrivacyParams {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for PrivacyParams {}

impl PartialOrd for PrivacyParams {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PrivacyParams {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl Hash for PrivacyParams {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl fmt::Display for PrivacyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.epsilon, self.delta)
    }
}

/// Request to instantiate a registered mechanism inside the composition.
///
/// `init_state` carries everything the constructor needs (horizon, dimension,
/// query id, ...); its layout is documented per mechanism in the registry.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CreationQuery {
    pub mech_id: String,
    pub init_state: Message,
    pub params: PrivacyParams,
    pub vf_id: String,
}

impl CreationQuery {
    pub fn new(mech_id: &str, init_state: Message, params: PrivacyParams, vf_id: &str) -> Self {
        CreationQuery {
            mech_id: mech_id.to_string(),
            init_state,
            params,
            vf_id: vf_id.to_string(),
        }
    }

    /// Randomized response over one bit, checked by the single-bit-pair relation.
    pub fn rr(params: PrivacyParams) -> Self {
        Self::new("rr", Message::Start, params, "rr_bit")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validate_ranges() {
        assert!(PrivacyParams::new(-0.1, 0.0).is_err());
        assert!(PrivacyParams::new(0.1, 1.5).is_err());
        assert!(PrivacyParams::new(f64::NAN, 0.0).is_err());
        assert!(PrivacyParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn display_is_compact() {
        let m = Message::routed(Message::pair(Message::Int(0), Message::Int(1)), 2);
        assert_eq!(m.to_string(), "(0|1)@2");
        assert_eq!(Message::Rr(Flag::Exposed, 1).to_string(), "E1");
    }
}
