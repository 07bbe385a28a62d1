//! The post-processor that simulates a finite mechanism from `IRR` outputs.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mechanisms::Irr;
use crate::message::{Flag, Message};
use crate::protocol::{sample_index, Branch, FiniteMechanism, Ipm, IpmBranches, IpmHandle, Side};
use crate::rng::StreamRng;

use super::construct::PairTable;
use super::table::{AnswerTable, Hist};

/// Tolerance for deciding that the two secrets' answer PMFs coincide.
pub const IDENTICAL_TOL: f64 = 1e-12;

/// Everything the post-processor reads.
#[derive(Clone, Debug)]
pub struct Tables {
    pub mu: AnswerTable,
    pub phi: PairTable,
    pub psi: PairTable,
    /// Last depth with `φ`/`ψ` entries.
    pub depth: usize,
}

impl Tables {
    fn family(&self, flag: Flag) -> &PairTable {
        match flag {
            Flag::Exposed => &self.phi,
            Flag::Private => &self.psi,
        }
    }

    /// Answer PMF at `(h, q)` for the family selected by `(flag, c)`; `None`
    /// when the prefix has zero weight in that family.
    pub fn family_pmf(&self, flag: Flag, c: usize, h: &Hist, q: usize) -> Option<Vec<f64>> {
        let table = self.family(flag);
        let denom = table.get(c, h);
        if !(denom > 0.0) {
            return None;
        }
        Some(
            (0..self.mu.answers.len())
                .map(|a| {
                    let mut e = h.clone();
                    e.push((q, a));
                    (table.get(c, &e) / denom).max(0.0)
                })
                .collect(),
        )
    }

    /// Whether both flags' PMFs at `(h, q)` agree across the two secrets.
    pub fn secret_free(&self, h: &Hist, q: usize) -> bool {
        [Flag::Exposed, Flag::Private].iter().all(|&f| match (self.family_pmf(f, 0, h, q), self.family_pmf(f, 1, h, q)) {
            (None, None) => true,
            (Some(x), Some(y)) => x.iter().zip(&y).all(|(u, v)| (u - v).abs() <= IDENTICAL_TOL),
            _ => false,
        })
    }
}

/// IPM that asks `IRR` for its flag on the first query, asks for the bit only
/// when the current PMF depends on the secret, and samples answers from the
/// selected family.
#[derive(Clone, Debug)]
pub struct IrrPostProcessor {
    tables: Arc<Tables>,
    flag: Option<Flag>,
    bit: Option<usize>,
    interactions: usize,
    h: Hist,
    pending: Option<usize>,
    halted: bool,
}

type Outcome = (f64, IrrPostProcessor, (Side, Message));

impl IrrPostProcessor {
    pub fn new(tables: Arc<Tables>) -> Self {
        IrrPostProcessor { tables, flag: None, bit: None, interactions: 0, h: Vec::new(), pending: None, halted: false }
    }

    /// Number of messages sent to `IRR` so far.
    pub fn interactions(&self) -> usize {
        self.interactions
    }

    fn halt(mut self) -> Vec<Outcome> {
        self.halted = true;
        vec![(1.0, self, (Side::Left, Message::Halt))]
    }

    fn ask_irr(mut self) -> Vec<Outcome> {
        self.interactions += 1;
        vec![(1.0, self, (Side::Right, Message::Star))]
    }

    fn after_flag(self, q: usize) -> Result<Vec<Outcome>> {
        if self.bit.is_none() && !self.tables.secret_free(&self.h, q) {
            return Ok(self.ask_irr());
        }
        self.answer(q)
    }

    fn answer(self, q: usize) -> Result<Vec<Outcome>> {
        let flag = self.flag.ok_or_else(|| Error::Protocol("answer before flag".into()))?;
        let c = self.bit.unwrap_or(0);
        let pmf = self
            .tables
            .family_pmf(flag, c, &self.h, q)
            .ok_or_else(|| Error::ZeroDenominator(format!("family ({flag:?}, {c}) at {:?}", self.h)))?;
        Ok(pmf
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(a, p)| {
                let mut next = self.clone();
                next.h.push((q, a));
                next.pending = None;
                let out = self.tables.mu.answers[a].clone();
                next.halted = out == Message::Halt;
                (*p, next, (Side::Left, out))
            })
            .collect())
    }

    /// All successor states with their probabilities.
    pub fn outcomes(&self, side: Side, msg: &Message) -> Result<Vec<Outcome>> {
        let me = self.clone();
        if self.halted {
            return Ok(me.halt());
        }
        match side {
            Side::Left => {
                let Some(q) = self.tables.mu.query_index(msg) else {
                    return Ok(me.halt());
                };
                if self.h.len() >= self.tables.depth {
                    return Ok(me.halt());
                }
                let mut me = me;
                me.pending = Some(q);
                if me.flag.is_none() {
                    Ok(me.ask_irr())
                } else {
                    me.after_flag(q)
                }
            }
            Side::Right => {
                let q = self.pending.ok_or_else(|| Error::Protocol("IRR answer without a pending query".into()))?;
                let mut me = me;
                match (self.flag, self.bit, msg) {
                    (None, _, Message::Flag(f)) => {
                        me.flag = Some(*f);
                        me.after_flag(q)
                    }
                    (Some(_), None, Message::Int(c)) if *c == 0 || *c == 1 => {
                        me.bit = Some(*c as usize);
                        me.answer(q)
                    }
                    _ => Err(Error::Protocol(format!("unexpected IRR message {msg}"))),
                }
            }
        }
    }
}

impl Ipm for IrrPostProcessor {
    fn step(&mut self, side: Side, msg: &Message, rng: &mut StreamRng) -> Result<(Side, Message)> {
        let mut outs = self.outcomes(side, msg)?;
        let i = sample_index(outs.iter().map(|o| o.0), rng);
        let (_, next, out) = outs.swap_remove(i);
        *self = next;
        Ok(out)
    }

    fn transitions(&self, side: Side, msg: &Message) -> Result<IpmBranches<f64>> {
        Ok(self
            .outcomes(side, msg)?
            .into_iter()
            .map(|(prob, next, out)| Branch { prob, next: Box::new(next) as IpmHandle, out })
            .collect())
    }

    fn clone_box(&self) -> IpmHandle {
        Box::new(self.clone())
    }
}

pub fn build_irr_postprocessor(tables: Arc<Tables>) -> IpmHandle {
    Box::new(IrrPostProcessor::new(tables))
}

/// Largest number of `IRR` interactions over every run of `P ∘* IRR(b)` on the
/// query sequence `qs`.
pub fn max_interactions(tables: &Arc<Tables>, irr: &Irr<f64>, qs: &[usize]) -> Result<usize> {
    fn settle(p: IrrPostProcessor, irr: Irr<f64>, side: Side, msg: Message, qs: &[usize], i: usize, worst: &mut usize) -> Result<()> {
        for (w, p2, (to, m)) in p.outcomes(side, &msg)? {
            if w <= 0.0 {
                continue;
            }
            *worst = (*worst).max(p2.interactions);
            match to {
                Side::Right => {
                    for (v, irr2, ans) in irr.transitions(&m) {
                        if v > 0.0 {
                            settle(p2.clone(), irr2, Side::Right, ans, qs, i, worst)?;
                        }
                    }
                }
                Side::Left => {
                    if m != Message::Halt && i + 1 < qs.len() {
                        let q = p2.tables.mu.queries[qs[i + 1]].clone();
                        settle(p2, irr.clone(), Side::Left, q, qs, i + 1, worst)?;
                    }
                }
            }
        }
        Ok(())
    }
    let mut worst = 0;
    if let Some(&first) = qs.first() {
        let q = tables.mu.queries[first].clone();
        settle(IrrPostProcessor::new(tables.clone()), irr.clone(), Side::Left, q, qs, 0, &mut worst)?;
    }
    Ok(worst)
}
