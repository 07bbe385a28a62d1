//! Exact view distributions by depth-first expansion of the interaction tree.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::message::Message;
use crate::protocol::{Mechanism, MechanismHandle};
use crate::weight::Weight;

use super::pmf::DiscretePmf;

pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// A view: the alternating messages, adversary first, up to and including the
/// terminal message (adversary halt or guess, or a mechanism halt).
pub type View = Vec<Message>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ViewStats {
    pub nodes: usize,
    pub leaves: usize,
    pub max_depth: usize,
    /// Leaves cut off by the horizon rather than by a terminal message.
    pub truncated: usize,
}

#[derive(Clone, Debug)]
pub struct Views<W: Weight = f64> {
    pub pmf: DiscretePmf<View, W>,
    pub stats: ViewStats,
}

struct Walk<W: Weight> {
    budget: usize,
    horizon: usize,
    stats: ViewStats,
    pmf: DiscretePmf<View, W>,
    path: Vec<Message>,
}

impl<W: Weight> Walk<W> {
    fn leaf(&mut self, prob: W) {
        self.stats.leaves += 1;
        self.stats.max_depth = self.stats.max_depth.max(self.path.len());
        self.pmf.add(self.path.clone(), prob);
    }

    fn visit(&mut self, adv: &dyn Mechanism<W>, mech: &dyn Mechanism<W>, input: &Message, prob: W, round: usize) -> Result<()> {
        self.stats.nodes += 1;
        if self.stats.nodes > self.budget {
            return Err(Error::NodeBudget { budget: self.budget, nodes: self.stats.nodes, leaves: self.stats.leaves });
        }
        if round >= self.horizon {
            self.stats.truncated += 1;
            self.leaf(prob);
            return Ok(());
        }
        for qa in adv.transitions(input)? {
            let pq = prob.clone() * qa.prob;
            self.path.push(qa.out.clone());
            if qa.out.is_terminal() {
                self.leaf(pq);
            } else {
                for ans in mech.transitions(&qa.out)? {
                    let pa = pq.clone() * ans.prob;
                    if pa.is_zero() {
                        continue;
                    }
                    self.path.push(ans.out.clone());
                    if ans.out == Message::Halt {
                        self.leaf(pa);
                    } else {
                        self.visit(qa.next.as_ref(), ans.next.as_ref(), &ans.out, pa, round + 1)?;
                    }
                    self.path.pop();
                }
            }
            self.path.pop();
        }
        Ok(())
    }
}

/// Exact distribution of the adversary's view when it interacts with `mech` for
/// at most `horizon` rounds.
pub fn enumerate_views<W: Weight>(adversary: &dyn Mechanism<W>, mech: &dyn Mechanism<W>, horizon: usize) -> Result<Views<W>> {
    enumerate_views_with_budget(adversary, mech, horizon, DEFAULT_NODE_BUDGET)
}

pub fn enumerate_views_with_budget<W: Weight>(
    adversary: &dyn Mechanism<W>,
    mech: &dyn Mechanism<W>,
    horizon: usize,
    budget: usize,
) -> Result<Views<W>> {
    let mut walk = Walk { budget, horizon, stats: ViewStats::default(), pmf: DiscretePmf::new(), path: Vec::new() };
    walk.visit(adversary, mech, &Message::Start, W::one(), 0)?;
    Ok(Views { pmf: walk.pmf, stats: walk.stats })
}

/// Views of one adversary against the two stacks of a distinguishing game.
pub fn enumerate_pair<W: Weight>(
    adversary: &dyn Mechanism<W>,
    stack: impl Fn(u8) -> MechanismHandle<W>,
    horizon: usize,
) -> Result<[Views<W>; 2]> {
    Ok([
        enumerate_views(adversary, stack(0).as_ref(), horizon)?,
        enumerate_views(adversary, stack(1).as_ref(), horizon)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{m_delta, rr};
    use crate::message::PrivacyParams;
    use crate::protocol::{compose_post, scripted};
    use crate::verification::make_identifier;

    #[test]
    fn one_rr_query() {
        let p = PrivacyParams::new(3f64.ln(), 0.1).unwrap();
        let adv = scripted(vec![Message::Int(0)]);
        let v = enumerate_views(adv.as_ref(), rr(p).as_ref(), 4).unwrap();
        assert_eq!(v.pmf.len(), 3);
        let masses: Vec<f64> = v.pmf.iter().map(|(_, w)| *w).collect();
        let mut sorted = masses.clone();
        sorted.sort_by(f64::total_cmp);
        for (got, want) in sorted.iter().zip([0.1, 0.225, 0.675]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn halting_adversary_has_one_view() {
        let adv = scripted::<f64>(vec![]);
        let v = enumerate_views(adv.as_ref(), m_delta(0.5).as_ref(), 4).unwrap();
        assert_eq!(v.pmf.len(), 1);
        assert_eq!(v.pmf.get(&vec![Message::Halt]), 1.0);
    }

    #[test]
    fn node_budget_is_enforced() {
        let adv = scripted(vec![Message::Int(0)]);
        let p = PrivacyParams::new(1.0, 0.1).unwrap();
        let err = enumerate_views_with_budget(adv.as_ref(), rr(p).as_ref(), 4, 1).unwrap_err();
        assert!(matches!(err, Error::NodeBudget { .. }));
    }

    #[test]
    fn identifier_over_m_delta_two_queries() {
        let q = Message::pair(Message::Int(0), Message::Int(0));
        let adv = scripted(vec![q.clone(), q]);
        let stack = compose_post(make_identifier(0), m_delta(0.5));
        let v = enumerate_views(adv.as_ref(), stack.as_ref(), 4).unwrap();
        // ⊤⊤ 0.25, ⊤⊥ 0.25, ⊥ then echo 0.5
        let mut masses: Vec<f64> = v.pmf.iter().map(|(_, w)| *w).collect();
        masses.sort_by(f64::total_cmp);
        assert_eq!(masses, vec![0.25, 0.25, 0.5]);
    }
}
