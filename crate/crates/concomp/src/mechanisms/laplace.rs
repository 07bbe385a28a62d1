//! Integer-rounded Laplace mechanism.

use crate::error::{Error, Result};
use crate::message::Message;
use crate::protocol::{Mechanism, MechanismHandle};
use crate::rng::StreamRng;

use super::noise::{round_half_up, NoiseSource};

/// Answers one integer `v` with `round(v + Lap(sensitivity/ε))`, then halts.
#[derive(Clone, Debug)]
pub struct LaplaceInt {
    scale: f64,
    noise: NoiseSource,
    done: bool,
}

impl LaplaceInt {
    pub fn new(epsilon: f64, sensitivity: f64, noise: NoiseSource) -> Result<Self> {
        if !(epsilon > 0.0) || !(sensitivity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "laplace needs epsilon > 0 and sensitivity > 0, got {epsilon}, {sensitivity}"
            )));
        }
        Ok(LaplaceInt { scale: sensitivity / epsilon, noise, done: false })
    }
}

impl Mechanism for LaplaceInt {
    fn step(&mut self, msg: &Message, rng: &mut StreamRng) -> Result<Message> {
        let value = match (self.done, msg) {
            (false, Message::Int(v)) => *v,
            _ => {
                self.done = true;
                return Ok(Message::Halt);
            }
        };
        self.done = true;
        let z = self.noise.laplace(self.scale, rng)?;
        Ok(Message::Int(round_half_up(value as f64 + z)))
    }

    fn clone_box(&self) -> MechanismHandle {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        "laplace_int".into()
    }
}

pub fn laplace_int(epsilon: f64, noise: NoiseSource) -> Result<MechanismHandle> {
    Ok(Box::new(LaplaceInt::new(epsilon, 1.0, noise)?))
}
