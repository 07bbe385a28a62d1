//! Bounded families of adaptive adversaries against concurrently composed RR
//! children, searched exhaustively with exact view enumeration.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::{ExtConComp, NoiseSource};
use crate::message::{CreationQuery, Flag, Message, PrivacyParams};
use crate::protocol::{chain, compose_post, Deterministic, DeterministicMechanism, MechanismHandle};
use crate::verification::{make_identifier, make_verifier, vf_fixed_mechs, Registry};

use super::divergence::{hockey_stick_delta, improved_basic};
use super::enumerate::enumerate_views;

/// Creates its children, sends one query, then at most one follow-up chosen by
/// looking up the first answer.
#[derive(Clone, Debug)]
pub struct TreeAdversary {
    setup: Vec<Message>,
    first: Option<Message>,
    replies: Vec<(Message, Message)>,
    stage: usize,
}

impl TreeAdversary {
    pub fn new(setup: Vec<Message>, first: Option<Message>, replies: Vec<(Message, Message)>) -> Self {
        TreeAdversary { setup, first, replies, stage: 0 }
    }
}

impl DeterministicMechanism for TreeAdversary {
    fn respond(&mut self, msg: &Message) -> Message {
        let stage = self.stage;
        self.stage += 1;
        let n = self.setup.len();
        if stage > 0 && stage <= n && *msg != Message::Ack {
            return Message::Halt;
        }
        if stage < n {
            return self.setup[stage].clone();
        }
        if stage == n {
            return self.first.clone().unwrap_or(Message::Halt);
        }
        if stage == n + 1 {
            if let Some((_, next)) = self.replies.iter().find(|(a, _)| a == msg) {
                return next.clone();
            }
        }
        Message::Halt
    }

    fn name(&self) -> String {
        "tree_adversary".into()
    }
}

fn ask(q0: i64, q1: i64, child: usize) -> Message {
    Message::pair(Message::routed(Message::Int(q0), child), Message::routed(Message::Int(q1), child))
}

pub const RR_ANSWERS: [Message; 4] = [
    Message::Rr(Flag::Exposed, 0),
    Message::Rr(Flag::Exposed, 1),
    Message::Rr(Flag::Private, 0),
    Message::Rr(Flag::Private, 1),
];

const BIT_PAIRS: [(i64, i64); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// All templates over `k ≤ 2` children: a first pair to either child, then for
/// two children a map from the four RR answers to a differing pair for the other.
pub fn rr_templates(children: &[CreationQuery]) -> Result<Vec<TreeAdversary>> {
    let setup: Vec<Message> = children.iter().map(|c| Message::same(Message::create(c.clone()))).collect();
    match children.len() {
        0 => Ok(vec![TreeAdversary::new(setup, None, vec![])]),
        1 => Ok(BIT_PAIRS.iter().map(|&(a, b)| TreeAdversary::new(setup.clone(), Some(ask(a, b, 1)), vec![])).collect()),
        2 => {
            let mut out = Vec::with_capacity(128);
            for child in 1..=2 {
                let other = 3 - child;
                for &(a, b) in &BIT_PAIRS {
                    for map in 0u32..16 {
                        let replies = RR_ANSWERS
                            .iter()
                            .enumerate()
                            .map(|(i, ans)| {
                                let (c0, c1) = if map >> i & 1 == 0 { (0, 1) } else { (1, 0) };
                                (ans.clone(), ask(c0, c1, other))
                            })
                            .collect();
                        out.push(TreeAdversary::new(setup.clone(), Some(ask(a, b, child)), replies));
                    }
                }
            }
            Ok(out)
        }
        k => Err(Error::InvalidParameter(format!("templates cover at most 2 children, got {k}"))),
    }
}

/// `V[f] ∘* I(b) ∘* ExtConComp` where `f` fixes the listed children.
pub fn fixed_stack(children: &[CreationQuery], bit: u8) -> Result<MechanismHandle> {
    let registry = Arc::new(Registry::standard());
    let vf = vf_fixed_mechs(children.to_vec(), &registry)?;
    Ok(compose_post(
        chain(make_verifier(vf, registry.clone()), make_identifier(bit)),
        Box::new(ExtConComp::new(registry, NoiseSource::Zero)),
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositionReport {
    pub epsilon: f64,
    pub delta_measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub templates: usize,
    pub worst_template: Option<usize>,
    pub nodes: usize,
}

/// Worst hockey-stick δ at `epsilon` (default `Σε`) over all templates,
/// against the improved basic bound.
pub fn composition_search(children: &[PrivacyParams], epsilon: Option<f64>) -> Result<CompositionReport> {
    let queries: Vec<CreationQuery> = children.iter().map(|p| CreationQuery::rr(*p)).collect();
    let combined = improved_basic(children)?;
    let epsilon = epsilon.unwrap_or(combined.epsilon);
    let stacks = [fixed_stack(&queries, 0)?, fixed_stack(&queries, 1)?];
    let templates = rr_templates(&queries)?;
    let horizon = queries.len() + 4;
    let mut worst = 0.0;
    let mut worst_template = None;
    let mut nodes = 0;
    for (i, t) in templates.iter().enumerate() {
        let adv: MechanismHandle = Box::new(Deterministic(t.clone()));
        let v0 = enumerate_views(adv.as_ref(), stacks[0].as_ref(), horizon)?;
        let v1 = enumerate_views(adv.as_ref(), stacks[1].as_ref(), horizon)?;
        nodes += v0.stats.nodes + v1.stats.nodes;
        let d = hockey_stick_delta(&v0.pmf, &v1.pmf, epsilon);
        if worst_template.is_none() || d > worst {
            worst = d;
            worst_template = Some(i);
        }
    }
    Ok(CompositionReport {
        epsilon,
        delta_measured: worst,
        bound: combined.delta,
        margin: combined.delta - worst,
        templates: templates.len(),
        worst_template,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_counts() {
        let p = PrivacyParams::new(0.5, 0.1).unwrap();
        let q = CreationQuery::rr(p);
        assert_eq!(rr_templates(&[]).unwrap().len(), 1);
        assert_eq!(rr_templates(&[q.clone()]).unwrap().len(), 4);
        assert_eq!(rr_templates(&[q.clone(), q]).unwrap().len(), 128);
    }

    #[test]
    fn single_child_is_tight() {
        let p = PrivacyParams::new(0.5, 0.1).unwrap();
        let r = composition_search(&[p], None).unwrap();
        assert!((r.delta_measured - 0.1).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn no_children_measure_zero() {
        let r = composition_search(&[], Some(0.0)).unwrap();
        assert_eq!(r.delta_measured, 0.0);
    }
}
