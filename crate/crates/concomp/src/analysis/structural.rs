//! Lockstep instrumentation of a controller run on two neighboring input
//! streams with the children's answers held fixed.
//!
//! Both controllers talk to one shared set of children, which receives the
//! first run's messages. Every child answer is therefore identical across the
//! runs, which is what fixing the decision variables means. The checker then
//! asks whether the controllers still agree on where each message goes and on
//! every output, and whether the paired child inputs satisfy the declared
//! verification function.

use std::collections::BTreeMap;

use rand::RngExt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::{ExtConComp, HssConfig, HssController, NoiseSource};
use crate::message::Message;
use crate::protocol::{DeterministicIpm, Mechanism, Side};
use crate::rng::{stream_rng, PARTY_MECHANISM};
use crate::verification::{summarize, vf_sparse_by_mechanism, Registry, VerificationFn};

const STEP_LOOP_BOUND: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// 1-based input step.
    pub step: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StructuralReport {
    pub destination_ok: bool,
    pub destination_witness: Option<Witness>,
    pub response_ok: bool,
    pub response_witness: Option<Witness>,
    pub mapping_ok: bool,
    pub mapping_witness: Option<Witness>,
    pub steps: usize,
    /// Paired messages sent to the children, in order.
    #[serde(skip)]
    pub child_inputs: Vec<Message>,
    /// Number of children per mechanism id that received a non-identical pair.
    pub exposed_children: BTreeMap<String, usize>,
}

impl StructuralReport {
    pub fn all_ok(&self) -> bool {
        self.destination_ok && self.response_ok && self.mapping_ok
    }
}

fn same_destination(m0: &Message, m1: &Message) -> bool {
    match (m0, m1) {
        (Message::Create(a), Message::Create(b)) => a == b,
        (Message::Routed(_, i), Message::Routed(_, j)) => i == j,
        _ => m0 == m1,
    }
}

/// Runs `c0` on `xs0` and `c1` on `xs1` in lockstep against shared children.
pub fn check_structural_properties<C: DeterministicIpm>(
    mut c0: C,
    mut c1: C,
    children: &mut dyn Mechanism,
    xs0: &[Message],
    xs1: &[Message],
    f_prime: &VerificationFn,
    registry: &Registry,
    seed: u64,
) -> Result<StructuralReport> {
    let mut report = StructuralReport { destination_ok: true, response_ok: true, mapping_ok: true, ..Default::default() };
    let mut pair_steps = Vec::new();
    let mut calls = 0u64;
    'steps: for (s, (x0, x1)) in xs0.iter().zip(xs1).enumerate() {
        let step = s + 1;
        report.steps = step;
        let (mut s0, mut m0) = c0.route(Side::Left, x0);
        let (mut s1, mut m1) = c1.route(Side::Left, x1);
        for _ in 0..STEP_LOOP_BOUND {
            if s0 != s1 || (s0 == Side::Right && !same_destination(&m0, &m1)) {
                report.destination_ok = false;
                report.destination_witness = Some(Witness {
                    step,
                    detail: format!("run 0 sends {m0} to {s0:?}, run 1 sends {m1} to {s1:?}"),
                });
                break 'steps;
            }
            if s0 == Side::Left {
                if m0 != m1 && report.response_ok {
                    report.response_ok = false;
                    report.response_witness = Some(Witness { step, detail: format!("outputs {m0} and {m1}") });
                }
                continue 'steps;
            }
            report.child_inputs.push(Message::pair(m0.clone(), m1.clone()));
            pair_steps.push(step);
            let answer = children.step(&m0, &mut stream_rng(seed, calls, PARTY_MECHANISM))?;
            calls += 1;
            (s0, m0) = c0.route(Side::Right, &answer);
            (s1, m1) = c1.route(Side::Right, &answer);
        }
        return Err(Error::LoopBound { bound: STEP_LOOP_BOUND });
    }
    if report.destination_ok && xs0.len() != xs1.len() {
        report.destination_ok = false;
        report.destination_witness = Some(Witness {
            step: xs0.len().min(xs1.len()) + 1,
            detail: format!("streams of lengths {} and {}", xs0.len(), xs1.len()),
        });
    }
    if let Err(reason) = f_prime.check(&report.child_inputs, registry) {
        report.mapping_ok = false;
        let first_bad = (1..=report.child_inputs.len())
            .find(|n| !f_prime.accepts(&report.child_inputs[..*n], registry))
            .unwrap_or(report.child_inputs.len());
        report.mapping_witness = Some(Witness {
            step: pair_steps.get(first_bad.saturating_sub(1)).copied().unwrap_or(0),
            detail: format!("{} at child input {}", reason.code(), first_bad),
        });
    }
    if let Ok(summary) = summarize(&report.child_inputs, registry) {
        for j in &summary.exposed {
            *report.exposed_children.entry(summary.creations[j - 1].mech_id.clone()).or_default() += 1;
        }
    }
    Ok(report)
}

/// The histogram mechanism's declared function: at most one SVT and one
/// Laplace instance see differing inputs, the counters are unrestricted.
pub fn hss_f_prime() -> VerificationFn {
    let limits = BTreeMap::from([("svt".to_string(), 1), ("laplace_int".to_string(), 1)]);
    vf_sparse_by_mechanism(limits).expect("static limits")
}

/// Structural check of the histogram controller on two streams of bit vectors.
pub fn check_hss(cfg: &HssConfig, xs0: &[Vec<i64>], xs1: &[Vec<i64>], seed: u64) -> Result<StructuralReport> {
    let registry = std::sync::Arc::new(Registry::standard());
    let mut children = ExtConComp::new(registry.clone(), NoiseSource::Seeded);
    let wrap = |xs: &[Vec<i64>]| xs.iter().map(|x| Message::Vector(x.clone())).collect::<Vec<_>>();
    check_structural_properties(
        HssController::new(cfg.clone())?,
        HssController::new(cfg.clone())?,
        &mut children,
        &wrap(xs0),
        &wrap(xs1),
        &hss_f_prime(),
        &registry,
        seed,
    )
}

/// A random binary stream and an event-level neighbor that differs in a
/// non-empty set of coordinates at one step.
pub fn random_event_neighbors(seed: u64, horizon: usize, d: usize) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let mut rng = stream_rng(seed, 0, 3);
    let xs0: Vec<Vec<i64>> = (0..horizon).map(|_| (0..d).map(|_| rng.random_range(0..2)).collect()).collect();
    let mut xs1 = xs0.clone();
    if horizon > 0 && d > 0 {
        let s = rng.random_range(0..horizon);
        let mask: u64 = rng.random_range(1..(1u64 << d));
        for (i, v) in xs1[s].iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *v = 1 - *v;
            }
        }
    }
    (xs0, xs1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{GammaFn, QueryFn, XiFn};

    fn cfg() -> HssConfig {
        HssConfig { gamma: GammaFn::Constant(1.0), xi: XiFn::Constant(0.5), ..HssConfig::new(2.0, 2, 16, QueryFn::Max) }
    }

    #[test]
    fn identical_streams_are_ok() {
        let (xs, _) = random_event_neighbors(1, 16, 2);
        let r = check_hss(&cfg(), &xs, &xs, 9).unwrap();
        assert!(r.all_ok(), "{r:?}");
        assert!(r.exposed_children.is_empty());
    }

    #[test]
    fn neighbors_differ_in_one_step() {
        let (a, b) = random_event_neighbors(5, 10, 3);
        let diffs = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        assert_eq!(diffs, 1);
    }

    #[test]
    fn raw_output_leak_is_caught() {
        let bad = HssConfig { leak_raw_output: true, gamma: GammaFn::Constant(100.0), ..HssConfig::new(1.0, 1, 4, QueryFn::Sum) };
        let r = check_hss(&bad, &[vec![0], vec![0]], &[vec![1], vec![0]], 3).unwrap();
        assert!(!r.response_ok);
        assert_eq!(r.response_witness.as_ref().unwrap().step, 1);
    }

    #[test]
    fn unequal_lengths_flag_destination() {
        let r = check_hss(&cfg(), &[vec![0, 0]], &[vec![0, 0], vec![1, 1]], 3).unwrap();
        assert!(!r.destination_ok);
    }
}
