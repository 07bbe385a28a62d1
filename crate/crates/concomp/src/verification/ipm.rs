//! The identifier and verifier post-processors.

use std::sync::Arc;

use crate::message::Message;
use crate::protocol::{DetIpm, DeterministicIpm, IpmHandle, Side};
use crate::weight::Weight;

use super::functions::VerificationFn;
use super::registry::Registry;

/// `I(b)`: forwards the `b`-th component of each left pair to the right.
#[derive(Clone, Debug)]
pub struct Identifier {
    bit: u8,
}

impl Identifier {
    pub fn new(bit: u8) -> Self {
        assert!(bit <= 1, "identifier bit must be 0 or 1");
        Identifier { bit }
    }
}

impl DeterministicIpm for Identifier {
    fn route(&mut self, side: Side, msg: &Message) -> (Side, Message) {
        match (side, msg.as_pair()) {
            (Side::Left, Some((m0, m1))) => (Side::Right, if self.bit == 0 { m0.clone() } else { m1.clone() }),
            (Side::Left, None) => (Side::Left, Message::Halt),
            (Side::Right, _) => (Side::Left, msg.clone()),
        }
    }
}

pub fn make_identifier<W: Weight>(bit: u8) -> IpmHandle<W> {
    Box::new(DetIpm(Identifier::new(bit)))
}

/// `V[f]`: records left messages and halts the first time `f` rejects the record.
#[derive(Clone, Debug)]
pub struct Verifier {
    vf: Arc<VerificationFn>,
    registry: Arc<Registry>,
    seen: Vec<Message>,
    halted: bool,
}

impl Verifier {
    pub fn new(vf: VerificationFn, registry: Arc<Registry>) -> Self {
        Verifier { vf: Arc::new(vf), registry, seen: Vec::new(), halted: false }
    }
}

impl DeterministicIpm for Verifier {
    fn route(&mut self, side: Side, msg: &Message) -> (Side, Message) {
        match side {
            Side::Right => (Side::Left, msg.clone()),
            Side::Left if self.halted => (Side::Left, Message::Halt),
            Side::Left => {
                self.seen.push(msg.clone());
                if self.vf.accepts(&self.seen, &self.registry) {
                    (Side::Right, msg.clone())
                } else {
                    self.halted = true;
                    (Side::Left, Message::Halt)
                }
            }
        }
    }
}

pub fn make_verifier<W: Weight>(vf: VerificationFn, registry: Arc<Registry>) -> IpmHandle<W> {
    Box::new(DetIpm(Verifier::new(vf, registry)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifier_picks_component() {
        let mut i0 = Identifier::new(0);
        let mut i1 = Identifier::new(1);
        let pair = Message::pair(Message::Int(3), Message::Int(4));
        assert_eq!(i0.route(Side::Left, &pair), (Side::Right, Message::Int(3)));
        assert_eq!(i1.route(Side::Left, &pair), (Side::Right, Message::Int(4)));
        assert_eq!(i1.route(Side::Right, &Message::Top), (Side::Left, Message::Top));
        assert_eq!(i0.route(Side::Left, &Message::Int(3)), (Side::Left, Message::Halt));
    }

    #[test]
    fn never_verifier_halts_immediately() {
        let mut v = Verifier::new(VerificationFn::Never, Arc::new(Registry::standard()));
        let m = Message::same(Message::Int(0));
        assert_eq!(v.route(Side::Left, &m), (Side::Left, Message::Halt));
        assert_eq!(v.route(Side::Left, &m), (Side::Left, Message::Halt));
    }
}
