//! Monte-Carlo distinguishing game.

use rand::RngExt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::{run_interaction, MechanismHandle, Transcript};
use crate::rng::stream_rng;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489;

/// Stream party used for the game's own coins (secret bit, per-trial seed).
pub const PARTY_GAME: u64 = 2;

const SAMPLE_TRANSCRIPTS: usize = 5;

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct GameReport {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub ci: (f64, f64),
    #[serde(skip)]
    pub transcripts_sample: Vec<Transcript>,
    /// Per trial: the secret bit and the transcript.
    #[serde(skip)]
    pub outcomes: Vec<(u8, Transcript)>,
}

/// Plays `trials` rounds of the game: draw `b`, run the adversary against
/// `stack(b)`, and score the final guess.
pub fn run_distinguishing_game(
    adversary: &MechanismHandle,
    stack: impl Fn(u8) -> MechanismHandle,
    trials: u64,
    seed: u64,
    max_rounds: usize,
) -> Result<GameReport> {
    let mut successes = 0;
    let mut outcomes = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut coins = stream_rng(seed, trial, PARTY_GAME);
        let b: u8 = coins.random_range(0..2);
        let trial_seed: u64 = coins.random();
        let mut adv = adversary.clone();
        let mut mech = stack(b);
        let t = run_interaction(adv.as_mut(), mech.as_mut(), trial_seed, max_rounds)?;
        let guess = t.guess().ok_or(Error::MissingGuess)?;
        if guess == b {
            successes += 1;
        }
        outcomes.push((b, t));
    }
    let success_rate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
    Ok(GameReport {
        trials,
        successes,
        success_rate,
        ci: wilson(successes, trials, Z99),
        transcripts_sample: outcomes.iter().take(SAMPLE_TRANSCRIPTS).map(|(_, t)| t.clone()).collect(),
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson(50, 100, Z99);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert_eq!(wilson(100, 100, Z99).1, 1.0);
    }
}
