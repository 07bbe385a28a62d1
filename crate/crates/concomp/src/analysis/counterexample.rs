//! The adversary that breaks parallel composition of `(0, δ)` mechanisms when
//! their number is unbounded, and the stack it attacks.

use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::mechanisms::{ExtConComp, NoiseSource};
use crate::message::{CreationQuery, Message, PrivacyParams};
use crate::protocol::{chain, compose_post, Deterministic, DeterministicMechanism, MechanismHandle};
use crate::analysis::{enumerate_pair, View};
use crate::verification::{make_identifier, make_verifier, vf_parallel_sparse, Registry};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Start,
    AwaitAck,
    AwaitProbe,
    AwaitReveal,
    Done,
}

/// Creates `M_δ` instances one at a time and probes each with an identical
/// pair. The first instance that answers ⊥ gets a differing pair, and its echo
/// is the guess. Gives up with guess 0 after `max_mechs` creations.
#[derive(Clone, Debug)]
pub struct ADelta {
    delta: f64,
    max_mechs: usize,
    created: usize,
    phase: Phase,
}

impl ADelta {
    pub fn new(delta: f64, max_mechs: usize) -> Self {
        ADelta { delta, max_mechs, created: 0, phase: Phase::Start }
    }

    pub fn creation_query(delta: f64) -> CreationQuery {
        let params = PrivacyParams { epsilon: 0.0, delta };
        CreationQuery::new("m_delta", Message::Top, params, "g")
    }

    pub fn created(&self) -> usize {
        self.created
    }

    fn create(&mut self) -> Message {
        if self.created >= self.max_mechs {
            return self.give_up();
        }
        self.created += 1;
        self.phase = Phase::AwaitAck;
        Message::same(Message::create(Self::creation_query(self.delta)))
    }

    fn give_up(&mut self) -> Message {
        self.phase = Phase::Done;
        Message::Guess(0)
    }

    fn ask(&self, q0: i64, q1: i64) -> Message {
        Message::pair(Message::routed(Message::Int(q0), self.created), Message::routed(Message::Int(q1), self.created))
    }
}

impl DeterministicMechanism for ADelta {
    fn respond(&mut self, msg: &Message) -> Message {
        match (self.phase, msg) {
            (Phase::Start, _) => self.create(),
            (Phase::AwaitAck, Message::Ack) => {
                self.phase = Phase::AwaitProbe;
                self.ask(0, 0)
            }
            (Phase::AwaitProbe, Message::Top) => self.create(),
            (Phase::AwaitProbe, Message::Bottom) => {
                self.phase = Phase::AwaitReveal;
                self.ask(0, 1)
            }
            (Phase::AwaitReveal, Message::Int(b)) if *b == 0 || *b == 1 => {
                self.phase = Phase::Done;
                Message::Guess(*b as u8)
            }
            _ => self.give_up(),
        }
    }

    fn name(&self) -> String {
        format!("a_delta({}, {})", self.delta, self.max_mechs)
    }
}

pub fn a_delta(delta: f64, max_mechs: usize) -> Result<MechanismHandle> {
    PrivacyParams::new(0.0, delta)?;
    Ok(Box::new(Deterministic(ADelta::new(delta, max_mechs))))
}

/// `V[f] ∘* I(b) ∘* ExtConComp` where `f` lets a single `(0, δ)` mechanism
/// receive differing inputs.
pub fn parallel_stack(delta: f64, bit: u8) -> Result<MechanismHandle> {
    let registry = Arc::new(Registry::standard());
    let vf = vf_parallel_sparse(vec![PrivacyParams::new(0.0, delta)?])?;
    Ok(compose_post(
        chain(make_verifier(vf, registry.clone()), make_identifier(bit)),
        Box::new(ExtConComp::new(registry, NoiseSource::Zero)),
    ))
}

/// Exact view masses of `A_δ` with `ell` instances.
#[derive(Clone, Debug, Serialize)]
pub struct ExposureCheck {
    /// Per secret, mass on views that end with the echoed secret as guess.
    pub revealing_mass: [f64; 2],
    /// No revealing view under one secret has positive mass under the other.
    pub disjoint: bool,
    pub views: [usize; 2],
}

fn reveals(view: &View, b: u8) -> bool {
    let n = view.len();
    n >= 2 && view[n - 1] == Message::Guess(b) && view[n - 2] == Message::Int(b as i64)
}

pub fn enumerate_exposure(delta: f64, ell: usize) -> Result<ExposureCheck> {
    let adv = a_delta(delta, ell)?;
    let views = enumerate_pair(adv.as_ref(), |b| parallel_stack(delta, b).expect("validated delta"), 3 * ell + 4)?;
    let revealing_mass = [0u8, 1].map(|b| views[b as usize].pmf.mass_where(|v| reveals(v, b)));
    let disjoint = (0..2).all(|b| {
        views[b].pmf.iter().filter(|(v, _)| reveals(v, b as u8)).all(|(v, _)| views[1 - b].pmf.get(v) == 0.0)
    });
    Ok(ExposureCheck { revealing_mass, disjoint, views: [views[0].pmf.len(), views[1].pmf.len()] })
}

/// Probability that one of `ell` instances answers ⊥.
pub fn exposure_probability(delta: f64, ell: usize) -> f64 {
    1.0 - (1.0 - delta).powi(ell as i32)
}

/// Success probability of `A_δ` with a uniform secret: exposure reveals `b`,
/// otherwise the fixed guess is right half the time.
pub fn analytic_success(delta: f64, ell: usize) -> f64 {
    let e = exposure_probability(delta, ell);
    e + 0.5 * (1.0 - e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::run_interaction;

    #[test]
    fn no_budget_guesses_zero() {
        let mut adv = a_delta(0.5, 0).unwrap();
        let mut stack = parallel_stack(0.5, 1).unwrap();
        let t = run_interaction(adv.as_mut(), stack.as_mut(), 7, 10).unwrap();
        assert_eq!(t.guess(), Some(0));
        assert_eq!(t.messages.len(), 1);
    }

    #[test]
    fn delta_one_reveals_immediately() {
        for b in 0..2 {
            let mut adv = a_delta(1.0, 3).unwrap();
            let mut stack = parallel_stack(1.0, b).unwrap();
            let t = run_interaction(adv.as_mut(), stack.as_mut(), 3, 20).unwrap();
            assert_eq!(t.guess(), Some(b));
        }
    }

    #[test]
    fn exposure_matches_formula() {
        for ell in 0..=4 {
            let c = enumerate_exposure(0.5, ell).unwrap();
            for m in c.revealing_mass {
                assert!((m - exposure_probability(0.5, ell)).abs() < 1e-12);
            }
            assert!(c.disjoint);
        }
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(a_delta(1.5, 3).is_err());
    }
}
