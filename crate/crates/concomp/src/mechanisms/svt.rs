//! Sparse vector technique over a running histogram.

use crate::error::{Error, Result};
use crate::message::Message;
use crate::protocol::{Mechanism, MechanismHandle};
use crate::rng::StreamRng;

use super::noise::{round_half_up, NoiseSource};
use super::query::QueryFn;

/// Input `<x, Thresh>` with `x` a d-vector. Adds `x` to `h` and answers `Top`
/// (then halts) when `round(q(h) + Lap(2/ε)) > Thresh + round(τ)`, else `Bottom`.
/// `τ ~ Lap(1/ε)` is drawn on the first input.
#[derive(Clone, Debug)]
pub struct Svt {
    h: Vec<i64>,
    epsilon: f64,
    query: QueryFn,
    tau: Option<f64>,
    halted: bool,
    noise: NoiseSource,
}

impl Svt {
    pub fn new(epsilon: f64, query: QueryFn, h0: Vec<i64>, noise: NoiseSource) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("svt epsilon {epsilon} must be > 0")));
        }
        if !query.is_one_sensitive(h0.len()) {
            return Err(Error::InvalidParameter(format!(
                "query {query} is not 1-sensitive in dimension {}",
                h0.len()
            )));
        }
        Ok(Svt { h: h0, epsilon, query, tau: None, halted: false, noise })
    }

    pub fn input(x: Vec<i64>, thresh: f64) -> Message {
        Message::Tuple(vec![Message::Vector(x), Message::real(thresh)])
    }

    pub fn halted(&self) -> bool {
        self.halted
    }
}

/// Splits an SVT input into `(x, Thresh)`.
pub(crate) fn parse_svt_input(msg: &Message) -> Option<(&[i64], f64)> {
    match msg {
        Message::Tuple(parts) => match parts.as_slice() {
            [Message::Vector(x), Message::Real(t)] => Some((x.as_slice(), t.0)),
            _ => None,
        },
        _ => None,
    }
}

impl Mechanism for Svt {
    fn step(&mut self, msg: &Message, rng: &mut StreamRng) -> Result<Message> {
        if self.halted {
            return Ok(Message::Halt);
        }
        let Some((x, thresh)) = parse_svt_input(msg).filter(|(x, _)| x.len() == self.h.len()) else {
            self.halted = true;
            return Ok(Message::Halt);
        };
        let tau = match self.tau {
            Some(t) => t,
            None => {
                let t = self.noise.laplace(1.0 / self.epsilon, rng)?;
                self.tau = Some(t);
                t
            }
        };
        for (h, v) in self.h.iter_mut().zip(x) {
            *h += v;
        }
        let nu = self.noise.laplace(2.0 / self.epsilon, rng)?;
        let lhs = round_half_up(self.query.eval(&self.h) as f64 + nu) as f64;
        if lhs > thresh + round_half_up(tau) as f64 {
            self.halted = true;
            Ok(Message::Top)
        } else {
            Ok(Message::Bottom)
        }
    }

    fn clone_box(&self) -> MechanismHandle {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        "svt".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn zero_svt() -> Svt {
        Svt::new(1.0, QueryFn::Sum, vec![0], NoiseSource::Zero).unwrap()
    }

    #[test]
    fn crosses_low_threshold() {
        let mut s = zero_svt();
        let mut rng = stream_rng(0, 0, 0);
        assert_eq!(s.step(&Svt::input(vec![1], 0.5), &mut rng).unwrap(), Message::Top);
        assert_eq!(s.step(&Svt::input(vec![1], 0.5), &mut rng).unwrap(), Message::Halt);
    }

    #[test]
    fn stays_below_high_threshold() {
        let mut s = zero_svt();
        let mut rng = stream_rng(0, 0, 0);
        assert_eq!(s.step(&Svt::input(vec![1], 1.5), &mut rng).unwrap(), Message::Bottom);
    }

    #[test]
    fn dimension_mismatch_halts() {
        let mut s = zero_svt();
        let mut rng = stream_rng(0, 0, 0);
        assert_eq!(s.step(&Svt::input(vec![1, 0], 0.5), &mut rng).unwrap(), Message::Halt);
    }

    #[test]
    fn rejects_sum_in_higher_dimension() {
        assert!(Svt::new(1.0, QueryFn::Sum, vec![0, 0], NoiseSource::Zero).is_err());
    }
}
