//! Injectable Laplace noise and the integer rounding rule.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use rand::distr::Distribution;
use statrs::distribution::Laplace;

use crate::error::{Error, Result};
use crate::rng::StreamRng;

#[derive(Clone, Debug, Default)]
pub enum NoiseSource {
    /// Draws from the step RNG.
    #[default]
    Seeded,
    /// Every draw is 0.
    Zero,
    /// Replays the given raw draws in order, then errors. Clones share the queue.
    Scripted(Arc<Mutex<VecDeque<f64>>>),
}

impl NoiseSource {
    pub fn scripted(values: impl IntoIterator<Item = f64>) -> Self {
        NoiseSource::Scripted(Arc::new(Mutex::new(values.into_iter().collect())))
    }

    /// One draw from `Lap(scale)`.
    pub fn laplace(&self, scale: f64, rng: &mut StreamRng) -> Result<f64> {
        match self {
            NoiseSource::Zero => Ok(0.0),
            NoiseSource::Seeded => {
                let dist = Laplace::new(0.0, scale)
                    .map_err(|e| Error::InvalidParameter(format!("laplace scale {scale}: {e}")))?;
                Ok(dist.sample(rng))
            }
            NoiseSource::Scripted(queue) => queue
                .lock()
                .expect("noise queue poisoned")
                .pop_front()
                .ok_or(Error::NoiseExhausted),
        }
    }
}

/// Round to the nearest integer, ties toward `+∞`.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn rounding_ties_go_up() {
        assert_eq!(round_half_up(0.5), 1);
        assert_eq!(round_half_up(-0.5), 0);
        assert_eq!(round_half_up(-1.5), -1);
        assert_eq!(round_half_up(2.49), 2);
    }

    #[test]
    fn scripted_replays_then_errors() {
        let n = NoiseSource::scripted([0.25, -1.0]);
        let mut rng = stream_rng(0, 0, 0);
        assert_eq!(n.laplace(1.0, &mut rng).unwrap(), 0.25);
        assert_eq!(n.laplace(1.0, &mut rng).unwrap(), -1.0);
        assert!(matches!(n.laplace(1.0, &mut rng), Err(Error::NoiseExhausted)));
    }

    #[test]
    fn zero_mode_is_silent() {
        let mut rng = stream_rng(0, 0, 0);
        assert_eq!(NoiseSource::Zero.laplace(5.0, &mut rng).unwrap(), 0.0);
    }
}
