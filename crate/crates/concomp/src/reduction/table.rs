//! Answer-probability tables `μ_t^b` of a finite interactive mechanism.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::message::Message;
use crate::protocol::{Mechanism, MechanismHandle};

/// A transcript as `(query index, answer index)` pairs.
pub type Hist = Vec<(usize, usize)>;

/// Exact `μ_t^b` for `t ≤ horizon + 1`. The extra step is the halt padding:
/// every query after the horizon must be answered with `Halt`.
#[derive(Clone, Debug)]
pub struct AnswerTable {
    pub queries: Vec<Message>,
    pub answers: Vec<Message>,
    pub horizon: usize,
    mu: [BTreeMap<Hist, f64>; 2],
    levels: Vec<Vec<Hist>>,
}

impl AnswerTable {
    pub fn mu(&self, b: usize, h: &Hist) -> f64 {
        if h.is_empty() {
            return 1.0;
        }
        self.mu[b].get(h).copied().unwrap_or(0.0)
    }

    /// Last tabulated depth (`horizon + 1`).
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// Transcripts of length `t` with positive mass under either secret, sorted.
    pub fn level(&self, t: usize) -> &[Hist] {
        self.levels.get(t).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_reachable(&self, h: &Hist) -> bool {
        h.is_empty() || self.mu[0].contains_key(h) || self.mu[1].contains_key(h)
    }

    pub fn answer_index(&self, a: &Message) -> Option<usize> {
        self.answers.iter().position(|x| x == a)
    }

    pub fn query_index(&self, q: &Message) -> Option<usize> {
        self.queries.iter().position(|x| x == q)
    }

    /// Reachable one-step extensions of `h` by query `q`, in answer order.
    pub fn children(&self, h: &Hist, q: usize) -> Vec<Hist> {
        (0..self.answers.len())
            .map(|a| {
                let mut c = h.clone();
                c.push((q, a));
                c
            })
            .filter(|c| self.is_reachable(c))
            .collect()
    }

    /// Largest `|Σ_a μ_t(h, q, a) − μ_{t−1}(h)|` over reachable `h` and all `q`.
    pub fn chain_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 0..self.depth() {
            for h in self.level(t) {
                for q in 0..self.queries.len() {
                    for b in 0..2 {
                        let s: f64 = self.children(h, q).iter().map(|c| self.mu(b, c)).sum();
                        worst = worst.max((s - self.mu(b, h)).abs());
                    }
                }
            }
        }
        worst
    }

    /// True when both secrets give the same answer distribution to `qs`.
    pub fn same_distribution(&self, qs: &[usize], tol: f64) -> bool {
        self.level(qs.len())
            .iter()
            .filter(|h| h.iter().map(|p| p.0).eq(qs.iter().copied()))
            .all(|h| (self.mu(0, h) - self.mu(1, h)).abs() <= tol)
    }
}

type Belief = Vec<(f64, MechanismHandle)>;

/// Forward chain-rule expansion of `mech[b]` over every query sequence.
///
/// The state after a transcript may be a mixture, so each transcript carries
/// the weighted set of states consistent with it.
pub fn compute_mu(mech: [&dyn Mechanism; 2], queries: Vec<Message>, answers: Vec<Message>, horizon: usize) -> Result<AnswerTable> {
    if !answers.contains(&Message::Halt) {
        return Err(Error::InvalidParameter("answer set must contain Halt".into()));
    }
    let mut mu: [BTreeMap<Hist, f64>; 2] = [BTreeMap::new(), BTreeMap::new()];
    let mut levels = vec![vec![Vec::new()]];
    let mut frontier: BTreeMap<Hist, [Belief; 2]> = BTreeMap::new();
    frontier.insert(Vec::new(), [vec![(1.0, mech[0].clone_box())], vec![(1.0, mech[1].clone_box())]]);
    for t in 1..=horizon + 1 {
        let mut next: BTreeMap<Hist, [Belief; 2]> = BTreeMap::new();
        for (h, beliefs) in &frontier {
            for (qi, q) in queries.iter().enumerate() {
                for (b, belief) in beliefs.iter().enumerate() {
                    for (p, state) in belief {
                        for br in state.transitions(q)? {
                            let w = p * br.prob;
                            if w <= 0.0 {
                                continue;
                            }
                            if t == horizon + 1 && br.out != Message::Halt {
                                return Err(Error::NoHalt(horizon));
                            }
                            let ai = answers.iter().position(|a| *a == br.out).ok_or_else(|| {
                                Error::InvalidParameter(format!("answer {} is not in the declared answer set", br.out))
                            })?;
                            let mut c = h.clone();
                            c.push((qi, ai));
                            *mu[b].entry(c.clone()).or_default() += w;
                            next.entry(c).or_insert_with(|| [Vec::new(), Vec::new()])[b].push((w, br.next));
                        }
                    }
                }
            }
        }
        levels.push(next.keys().cloned().collect());
        frontier = next;
    }
    Ok(AnswerTable { queries, answers, horizon, mu, levels })
}
