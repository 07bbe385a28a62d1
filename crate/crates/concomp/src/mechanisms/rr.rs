//! Randomized response (one-shot) and its interactive variant.


use crate::message::{Flag, Message, PrivacyParams};
use crate::protocol::{Finite, FiniteMechanism, MechanismHandle};
use crate::weight::Weight;

/// `RR_{ε,δ}` as a continual mechanism: the first message is the secret bit.
///
/// Outcome law on bit `b`, with `w = e^ε`:
/// `(Exposed, b)` with `δ`, `(Private, b)` with `(1−δ)w/(1+w)`,
/// `(Private, 1−b)` with `(1−δ)/(1+w)`. Any later message halts.
#[derive(Clone, Debug)]
pub struct Rr<W> {
    w: W,
    delta: W,
    answered: bool,
}

impl<W: Weight> Rr<W> {
    /// Builds from `w = e^ε` directly, so rational callers stay exact.
    pub fn with_weight(w: W, delta: W) -> Self {
        Rr { w, delta, answered: false }
    }

    pub fn new(params: PrivacyParams) -> Self {
        Self::with_weight(W::from_f64(params.epsilon.exp()), W::from_f64(params.delta))
    }
}

/// Probabilities of `(Exposed, b)`, `(Private, b)`, `(Private, 1−b)`.
pub(crate) fn rr_masses<W: Weight>(w: &W, delta: &W) -> [W; 3] {
    let keep = W::one() - delta.clone();
    let denom = W::one() + w.clone();
    [
        delta.clone(),
        keep.clone() * w.clone() / denom.clone(),
        keep / denom,
    ]
}

impl<W: Weight> FiniteMechanism<W> for Rr<W> {
    fn transitions(&self, msg: &Message) -> Vec<(W, Self, Message)> {
        if self.answered {
            return Vec::new();
        }
        let Some(b) = msg.as_bit() else {
            return Vec::new();
        };
        let next = Rr { answered: true, ..self.clone() };
        let [exposed, same, flipped] = rr_masses(&self.w, &self.delta);
        vec![
            (exposed, next.clone(), Message::Rr(Flag::Exposed, b)),
            (same, next.clone(), Message::Rr(Flag::Private, b)),
            (flipped, next, Message::Rr(Flag::Private, 1 - b)),
        ]
    }

    fn name(&self) -> String {
        "rr".into()
    }
}

pub fn rr(params: PrivacyParams) -> MechanismHandle {
    Box::new(Finite::new(Rr::<f64>::new(params)))
}

pub fn rr_weighted<W: Weight>(w: W, delta: W) -> MechanismHandle<W> {
    Box::new(Finite::new(Rr::with_weight(w, delta)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum IrrStage {
    Fresh,
    Flagged(Flag),
    Done,
}

/// `IRR_{ε,δ}(b)`: answers the first `q*` with a flag and the second with a bit.
#[derive(Clone, Debug)]
pub struct Irr<W> {
    w: W,
    delta: W,
    bit: u8,
    stage: IrrStage,
}

impl<W: Weight> Irr<W> {
    pub fn with_weight(w: W, delta: W, bit: u8) -> Self {
        Irr { w, delta, bit, stage: IrrStage::Fresh }
    }

    pub fn new(params: PrivacyParams, bit: u8) -> Self {
        Self::with_weight(W::from_f64(params.epsilon.exp()), W::from_f64(params.delta), bit)
    }
}

impl<W: Weight> FiniteMechanism<W> for Irr<W> {
    fn transitions(&self, msg: &Message) -> Vec<(W, Self, Message)> {
        if *msg != Message::Star {
            return Vec::new();
        }
        let at = |stage| Irr { stage, ..self.clone() };
        match self.stage {
            IrrStage::Fresh => vec![
                (self.delta.clone(), at(IrrStage::Flagged(Flag::Exposed)), Message::Flag(Flag::Exposed)),
                (
                    W::one() - self.delta.clone(),
                    at(IrrStage::Flagged(Flag::Private)),
                    Message::Flag(Flag::Private),
                ),
            ],
            IrrStage::Flagged(Flag::Exposed) => {
                vec![(W::one(), at(IrrStage::Done), Message::Int(self.bit as i64))]
            }
            IrrStage::Flagged(Flag::Private) => {
                let denom = W::one() + self.w.clone();
                vec![
                    (self.w.clone() / denom.clone(), at(IrrStage::Done), Message::Int(self.bit as i64)),
                    (W::one() / denom, at(IrrStage::Done), Message::Int(1 - self.bit as i64)),
                ]
            }
            IrrStage::Done => Vec::new(),
        }
    }

    fn name(&self) -> String {
        "irr".into()
    }
}

pub fn irr(params: PrivacyParams, bit: u8) -> MechanismHandle {
    Box::new(Finite::new(Irr::<f64>::new(params, bit)))
}

pub fn irr_weighted<W: Weight>(w: W, delta: W, bit: u8) -> MechanismHandle<W> {
    Box::new(Finite::new(Irr::with_weight(w, delta, bit)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn rr_ln3_masses() {
        let m = rr(PrivacyParams::new(3f64.ln(), 0.1).unwrap());
        let br = m.transitions(&Message::Int(0)).unwrap();
        let probs: Vec<f64> = br.iter().map(|b| b.prob).collect();
        assert!(close(probs[0], 0.1) && close(probs[1], 0.675) && close(probs[2], 0.225));
        assert_eq!(br[2].out, Message::Rr(Flag::Private, 1));
    }

    #[test]
    fn rr_halts_on_second_input_and_non_bits() {
        let m = rr(PrivacyParams::new(1.0, 0.0).unwrap());
        assert_eq!(m.transitions(&Message::Int(2)).unwrap()[0].out, Message::Halt);
        let after = m.transitions(&Message::Int(1)).unwrap().remove(0).next;
        assert_eq!(after.transitions(&Message::Int(1)).unwrap()[0].out, Message::Halt);
    }

    #[test]
    fn irr_exposed_reveals_bit() {
        let m = irr(PrivacyParams::new(1.0, 0.3).unwrap(), 1);
        let flags = m.transitions(&Message::Star).unwrap();
        assert!(close(flags[0].prob, 0.3));
        let bits = flags[0].next.transitions(&Message::Star).unwrap();
        assert_eq!(bits.len(), 1);
        assert_eq!(bits[0].out, Message::Int(1));
        let third = bits[0].next.transitions(&Message::Star).unwrap();
        assert_eq!(third[0].out, Message::Halt);
    }

    #[test]
    fn irr_zero_delta_is_private() {
        let m = irr(PrivacyParams::new(1.0, 0.0).unwrap(), 0);
        let flags = m.transitions(&Message::Star).unwrap();
        assert_eq!(flags[0].prob, 0.0);
        assert_eq!(flags[1].prob, 1.0);
    }
}
