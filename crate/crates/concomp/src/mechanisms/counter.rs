//! Binary-tree continual counters.

use crate::error::{Error, Result};
use crate::message::Message;
use crate::protocol::{Mechanism, MechanismHandle};
use crate::rng::StreamRng;

use super::noise::{round_half_up, NoiseSource};

/// Binary-tree mechanism over horizon `T`.
///
/// Each step lies in one dyadic node per level and there are `⌊log₂T⌋+1`
/// levels, so each node gets `Lap(levels/ε)`, rounded to an integer.
#[derive(Clone, Debug)]
pub struct BinaryCounter {
    horizon: u64,
    scale: f64,
    t: u64,
    exact: Vec<i64>,
    noisy: Vec<i64>,
    noise: NoiseSource,
}

pub fn tree_levels(horizon: u64) -> usize {
    (u64::BITS - horizon.leading_zeros()) as usize
}

impl BinaryCounter {
    pub fn new(epsilon: f64, horizon: u64, noise: NoiseSource) -> Result<Self> {
        if !(epsilon > 0.0) || horizon == 0 {
            return Err(Error::InvalidParameter(format!(
                "counter needs epsilon > 0 and T >= 1, got {epsilon}, {horizon}"
            )));
        }
        let levels = tree_levels(horizon);
        Ok(BinaryCounter {
            horizon,
            scale: levels as f64 / epsilon,
            t: 0,
            exact: vec![0; levels],
            noisy: vec![0; levels],
            noise,
        })
    }

    /// Adds `x` at the next step and returns the noisy running total, or `None`
    /// past the horizon.
    pub fn push(&mut self, x: i64, rng: &mut StreamRng) -> Result<Option<i64>> {
        if self.t >= self.horizon {
            return Ok(None);
        }
        self.t += 1;
        let level = self.t.trailing_zeros() as usize;
        let merged: i64 = self.exact[..level].iter().sum::<i64>() + x;
        for j in 0..level {
            self.exact[j] = 0;
            self.noisy[j] = 0;
        }
        self.exact[level] = merged;
        let z = self.noise.laplace(self.scale, rng)?;
        self.noisy[level] = round_half_up(merged as f64 + z);
        let total = (0..self.noisy.len())
            .filter(|j| self.t >> j & 1 == 1)
            .map(|j| self.noisy[j])
            .sum();
        Ok(Some(total))
    }
}

impl Mechanism for BinaryCounter {
    fn step(&mut self, msg: &Message, rng: &mut StreamRng) -> Result<Message> {
        let Message::Int(x) = msg else {
            self.t = self.horizon;
            return Ok(Message::Halt);
        };
        Ok(match self.push(*x, rng)? {
            Some(v) => Message::Int(v),
            None => Message::Halt,
        })
    }

    fn clone_box(&self) -> MechanismHandle {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        "binary_counter".into()
    }
}

/// `d` independent binary counters at `ε/d` each; input and output are d-vectors.
#[derive(Clone, Debug)]
pub struct DCounter {
    counters: Vec<BinaryCounter>,
    halted: bool,
}

impl DCounter {
    pub fn new(epsilon: f64, d: usize, horizon: u64, noise: NoiseSource) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("d-counter needs d >= 1".into()));
        }
        let counters = (0..d)
            .map(|_| BinaryCounter::new(epsilon / d as f64, horizon, noise.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(DCounter { counters, halted: false })
    }
}

impl Mechanism for DCounter {
    fn step(&mut self, msg: &Message, rng: &mut StreamRng) -> Result<Message> {
        if self.halted {
            return Ok(Message::Halt);
        }
        let x = match msg {
            Message::Vector(x) if x.len() == self.counters.len() => x,
            _ => {
                self.halted = true;
                return Ok(Message::Halt);
            }
        };
        let mut out = Vec::with_capacity(x.len());
        for (c, v) in self.counters.iter_mut().zip(x) {
            match c.push(*v, rng)? {
                Some(total) => out.push(total),
                None => {
                    self.halted = true;
                    return Ok(Message::Halt);
                }
            }
        }
        Ok(Message::Vector(out))
    }

    fn clone_box(&self) -> MechanismHandle {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        "d_counter".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn levels_cover_horizon() {
        assert_eq!(tree_levels(1), 1);
        assert_eq!(tree_levels(2), 2);
        assert_eq!(tree_levels(7), 3);
        assert_eq!(tree_levels(8), 4);
    }

    #[test]
    fn zero_noise_prefix_sums() {
        let mut c = BinaryCounter::new(1.0, 3, NoiseSource::Zero).unwrap();
        let mut rng = stream_rng(0, 0, 0);
        let outs: Vec<Message> = [1, 0, 1].iter().map(|&x| c.step(&Message::Int(x), &mut rng).unwrap()).collect();
        assert_eq!(outs, vec![Message::Int(1), Message::Int(1), Message::Int(2)]);
        assert_eq!(c.step(&Message::Int(1), &mut rng).unwrap(), Message::Halt);
    }

    #[test]
    fn zero_noise_two_dimensional() {
        let mut c = DCounter::new(1.0, 2, 4, NoiseSource::Zero).unwrap();
        let mut rng = stream_rng(0, 0, 0);
        assert_eq!(c.step(&Message::Vector(vec![1, 0]), &mut rng).unwrap(), Message::Vector(vec![1, 0]));
        assert_eq!(c.step(&Message::Vector(vec![0, 1]), &mut rng).unwrap(), Message::Vector(vec![1, 1]));
    }

    #[test]
    fn long_stream_matches_prefix_sums() {
        let mut c = BinaryCounter::new(1.0, 100, NoiseSource::Zero).unwrap();
        let mut rng = stream_rng(0, 0, 0);
        let mut total = 0;
        for t in 0..100i64 {
            let x = (t * 7 + 3) % 5;
            total += x;
            assert_eq!(c.push(x, &mut rng).unwrap(), Some(total));
        }
    }
}
