//! The two-state mechanism behind the parallel-composition counterexample.

use crate::message::Message;
use crate::protocol::{Finite, FiniteMechanism, MechanismHandle};
use crate::weight::Weight;

/// Starts in `Top`. In `Top` it stays and answers `Top` with probability `1−δ`,
/// otherwise moves to `Bottom` and answers `Bottom`. In `Bottom` it echoes the
/// input bit. At most two queries are answered.
#[derive(Clone, Debug)]
pub struct MDelta<W> {
    delta: W,
    exposed: bool,
    answered: u8,
}

impl<W: Weight> MDelta<W> {
    pub fn new(delta: W) -> Self {
        MDelta { delta, exposed: false, answered: 0 }
    }

    /// Starts directly in the given state (`true` = `Bottom`).
    pub fn with_state(delta: W, exposed: bool) -> Self {
        MDelta { delta, exposed, answered: 0 }
    }
}

impl<W: Weight> FiniteMechanism<W> for MDelta<W> {
    fn transitions(&self, msg: &Message) -> Vec<(W, Self, Message)> {
        let Some(bit) = msg.as_bit() else {
            return Vec::new();
        };
        if self.answered >= 2 {
            return Vec::new();
        }
        let answered = self.answered + 1;
        if self.exposed {
            return vec![(W::one(), MDelta { answered, ..self.clone() }, Message::Int(bit as i64))];
        }
        vec![
            (W::one() - self.delta.clone(), MDelta { answered, ..self.clone() }, Message::Top),
            (self.delta.clone(), MDelta { answered, exposed: true, ..self.clone() }, Message::Bottom),
        ]
    }

    fn name(&self) -> String {
        "m_delta".into()
    }
}

pub fn m_delta(delta: f64) -> MechanismHandle {
    Box::new(Finite::new(MDelta::new(delta)))
}
