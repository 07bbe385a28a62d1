//! Mechanism and post-processor interfaces, post-processing composition, chaining
//! and interaction execution.
//!
//! Every mechanism offers two kinds of access: `step` samples one transition and
//! `transitions` lists all of them with their probabilities. Enumeration is what
//! the exact oracles in [`crate::analysis`] run on.

use std::fmt;

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::message::Message;
use crate::rng::{stream_rng, StreamRng, PARTY_ADVERSARY, PARTY_MECHANISM};
use crate::weight::Weight;

/// Default bound on IPM/mechanism round trips inside one post-processed step.
pub const DEFAULT_LOOP_BOUND: usize = 1_000_000;

/// One outcome of a transition: probability, successor and emitted output.
pub struct Branch<W, S, O = Message> {
    pub prob: W,
    pub next: S,
    pub out: O,
}

pub type MechanismHandle<W = f64> = Box<dyn Mechanism<W>>;
pub type IpmHandle<W = f64> = Box<dyn Ipm<W>>;
pub type MechBranches<W> = Vec<Branch<W, MechanismHandle<W>>>;
pub type IpmBranches<W> = Vec<Branch<W, IpmHandle<W>, (Side, Message)>>;

/// An interactive mechanism: a randomized state machine from queries to answers.
pub trait Mechanism<W: Weight = f64>: Send {
    fn step(&mut self, msg: &Message, rng: &mut StreamRng) -> Result<Message>;

    /// All transitions on `msg`, probabilities summing to one.
    fn transitions(&self, _msg: &Message) -> Result<MechBranches<W>> {
        Err(Error::NotEnumerable(self.name()))
    }

    fn clone_box(&self) -> MechanismHandle<W>;

    fn name(&self) -> String;
}

impl<W: Weight> Clone for MechanismHandle<W> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// An interactive post-processing mechanism sitting between a left and a right party.
pub trait Ipm<W: Weight = f64>: Send {
    fn step(&mut self, side: Side, msg: &Message, rng: &mut StreamRng) -> Result<(Side, Message)>;

    fn transitions(&self, side: Side, msg: &Message) -> Result<IpmBranches<W>>;

    fn clone_box(&self) -> IpmHandle<W>;
}

impl<W: Weight> Clone for IpmHandle<W> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// A mechanism with a finite, explicitly listed transition law.
///
/// Wrap it in [`Finite`] to get a [`Mechanism`]; sampling is derived from the list.
pub trait FiniteMechanism<W: Weight>: Clone + Send + 'static {
    fn transitions(&self, msg: &Message) -> Vec<(W, Self, Message)>;

    fn name(&self) -> String;
}

/// Adapter from [`FiniteMechanism`] to [`Mechanism`], with halt absorption.
#[derive(Clone, Debug)]
pub struct Finite<T> {
    pub inner: T,
    halted: bool,
}

impl<T> Finite<T> {
    pub fn new(inner: T) -> Self {
        Finite { inner, halted: false }
    }
}

/// Index of the branch selected by a uniform draw, skipping zero-mass branches.
pub(crate) fn sample_index<W: Weight>(probs: impl Iterator<Item = W>, rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        let p = p.to_f64();
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

impl<W: Weight, T: FiniteMechanism<W>> Mechanism<W> for Finite<T> {
    fn step(&mut self, msg: &Message, rng: &mut StreamRng) -> Result<Message> {
        if self.halted {
            return Ok(Message::Halt);
        }
        let mut branches = FiniteMechanism::<W>::transitions(&self.inner, msg);
        if branches.is_empty() {
            self.halted = true;
            return Ok(Message::Halt);
        }
        let i = sample_index(branches.iter().map(|b| b.0.clone()), rng);
        let (_, next, out) = branches.swap_remove(i);
        self.inner = next;
        self.halted = out == Message::Halt;
        Ok(out)
    }

    fn transitions(&self, msg: &Message) -> Result<MechBranches<W>> {
        if self.halted {
            return Ok(vec![Branch { prob: W::one(), next: self.clone_box(), out: Message::Halt }]);
        }
        let branches = FiniteMechanism::<W>::transitions(&self.inner, msg);
        if branches.is_empty() {
            return Ok(vec![Branch {
                prob: W::one(),
                next: Box::new(Finite { inner: self.inner.clone(), halted: true }),
                out: Message::Halt,
            }]);
        }
        Ok(branches
            .into_iter()
            .map(|(prob, inner, out)| {
                let halted = out == Message::Halt;
                Branch { prob, next: Box::new(Finite { inner, halted }) as MechanismHandle<W>, out }
            })
            .collect())
    }

    fn clone_box(&self) -> MechanismHandle<W> {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        FiniteMechanism::<W>::name(&self.inner)
    }
}

/// A deterministic mechanism; usable at every weight type. Adversaries are written this way.
pub trait DeterministicMechanism: Clone + Send + 'static {
    fn respond(&mut self, msg: &Message) -> Message;

    fn name(&self) -> String;
}

#[derive(Clone, Debug)]
pub struct Deterministic<T>(pub T);

impl<W: Weight, T: DeterministicMechanism> Mechanism<W> for Deterministic<T> {
    fn step(&mut self, msg: &Message, _rng: &mut StreamRng) -> Result<Message> {
        Ok(self.0.respond(msg))
    }

    fn transitions(&self, msg: &Message) -> Result<MechBranches<W>> {
        let mut next = self.clone();
        let out = next.0.respond(msg);
        Ok(vec![Branch { prob: W::one(), next: Box::new(next), out }])
    }

    fn clone_box(&self) -> MechanismHandle<W> {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        self.0.name()
    }
}

/// A deterministic post-processor; usable at every weight type.
pub trait DeterministicIpm: Clone + Send + 'static {
    fn route(&mut self, side: Side, msg: &Message) -> (Side, Message);
}

#[derive(Clone, Debug)]
pub struct DetIpm<T>(pub T);

impl<W: Weight, T: DeterministicIpm> Ipm<W> for DetIpm<T> {
    fn step(&mut self, side: Side, msg: &Message, _rng: &mut StreamRng) -> Result<(Side, Message)> {
        Ok(self.0.route(side, msg))
    }

    fn transitions(&self, side: Side, msg: &Message) -> Result<IpmBranches<W>> {
        let mut next = self.clone();
        let out = next.0.route(side, msg);
        Ok(vec![Branch { prob: W::one(), next: Box::new(next), out }])
    }

    fn clone_box(&self) -> IpmHandle<W> {
        Box::new(self.clone())
    }
}

/// Passes left messages right and right messages left.
#[derive(Clone, Debug, Default)]
pub struct Forwarder;

impl DeterministicIpm for Forwarder {
    fn route(&mut self, side: Side, msg: &Message) -> (Side, Message) {
        match side {
            Side::Left => (Side::Right, msg.clone()),
            Side::Right => (Side::Left, msg.clone()),
        }
    }
}

pub fn forwarder<W: Weight>() -> IpmHandle<W> {
    Box::new(DetIpm(Forwarder))
}

/// `P ∘* M`: the mechanism obtained by post-processing `mech` with `ipm`.
pub struct PostProcessed<W: Weight> {
    ipm: IpmHandle<W>,
    mech: MechanismHandle<W>,
    bound: usize,
    halted: bool,
}

pub fn compose_post<W: Weight>(ipm: IpmHandle<W>, mech: MechanismHandle<W>) -> MechanismHandle<W> {
    compose_post_bounded(ipm, mech, DEFAULT_LOOP_BOUND)
}

pub fn compose_post_bounded<W: Weight>(ipm: IpmHandle<W>, mech: MechanismHandle<W>, bound: usize) -> MechanismHandle<W> {
    Box::new(PostProcessed { ipm, mech, bound, halted: false })
}

impl<W: Weight> PostProcessed<W> {
    #[allow(clippy::too_many_arguments)]
    fn expand(
        ipm: IpmHandle<W>,
        mech: MechanismHandle<W>,
        side: Side,
        msg: &Message,
        prob: W,
        trips: usize,
        bound: usize,
        out: &mut MechBranches<W>,
    ) -> Result<()> {
        if trips > bound {
            return Err(Error::LoopBound { bound });
        }
        for b in ipm.transitions(side, msg)? {
            let p = prob.clone() * b.prob;
            if p.is_zero() {
                continue;
            }
            let (to, m) = b.out;
            match to {
                Side::Left => {
                    let halted = m == Message::Halt;
                    out.push(Branch {
                        prob: p,
                        next: Box::new(PostProcessed { ipm: b.next, mech: mech.clone_box(), bound, halted }),
                        out: m,
                    });
                }
                Side::Right => {
                    for mb in mech.transitions(&m)? {
                        let q = p.clone() * mb.prob;
                        if q.is_zero() {
                            continue;
                        }
                        Self::expand(b.next.clone_box(), mb.next, Side::Right, &mb.out, q, trips + 1, bound, out)?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl<W: Weight> Mechanism<W> for PostProcessed<W> {
    fn step(&mut self, msg: &Message, rng: &mut StreamRng) -> Result<Message> {
        if self.halted {
            return Ok(Message::Halt);
        }
        let (mut side, mut out) = self.ipm.step(Side::Left, msg, rng)?;
        let mut trips = 0;
        while side == Side::Right {
            trips += 1;
            if trips > self.bound {
                return Err(Error::LoopBound { bound: self.bound });
            }
            let answer = self.mech.step(&out, rng)?;
            (side, out) = self.ipm.step(Side::Right, &answer, rng)?;
        }
        self.halted = out == Message::Halt;
        Ok(out)
    }

    fn transitions(&self, msg: &Message) -> Result<MechBranches<W>> {
        if self.halted {
            return Ok(vec![Branch { prob: W::one(), next: self.clone_box(), out: Message::Halt }]);
        }
        let mut out = Vec::new();
        Self::expand(self.ipm.clone_box(), self.mech.clone_box(), Side::Left, msg, W::one(), 0, self.bound, &mut out)?;
        Ok(out)
    }

    fn clone_box(&self) -> MechanismHandle<W> {
        Box::new(PostProcessed {
            ipm: self.ipm.clone_box(),
            mech: self.mech.clone_box(),
            bound: self.bound,
            halted: self.halted,
        })
    }

    fn name(&self) -> String {
        format!("post({})", self.mech.name())
    }
}

/// `P1 ∘* P2`: left traffic enters `P1`, right traffic enters `P2`, and the two
/// exchange messages until one of them emits on the outer side.
pub struct Chain<W: Weight> {
    p1: IpmHandle<W>,
    p2: IpmHandle<W>,
    bound: usize,
}

pub fn chain<W: Weight>(p1: IpmHandle<W>, p2: IpmHandle<W>) -> IpmHandle<W> {
    Box::new(Chain { p1, p2, bound: DEFAULT_LOOP_BOUND })
}

/// Chains a non-empty list left to right.
pub fn chain_all<W: Weight>(ipms: Vec<IpmHandle<W>>) -> IpmHandle<W> {
    let mut it = ipms.into_iter().rev();
    let mut acc = it.next().expect("at least one IPM");
    for p in it {
        acc = chain(p, acc);
    }
    acc
}

impl<W: Weight> Chain<W> {
    #[allow(clippy::too_many_arguments)]
    fn expand(
        p1: IpmHandle<W>,
        p2: IpmHandle<W>,
        first: bool,
        side: Side,
        msg: &Message,
        prob: W,
        hops: usize,
        bound: usize,
        out: &mut IpmBranches<W>,
    ) -> Result<()> {
        if hops > bound {
            return Err(Error::LoopBound { bound });
        }
        if first {
            for b in p1.transitions(side, msg)? {
                let p = prob.clone() * b.prob;
                if p.is_zero() {
                    continue;
                }
                match b.out {
                    (Side::Left, m) => out.push(Branch {
                        prob: p,
                        next: Box::new(Chain { p1: b.next, p2: p2.clone_box(), bound }),
                        out: (Side::Left, m),
                    }),
                    (Side::Right, m) => {
                        Self::expand(b.next, p2.clone_box(), false, Side::Left, &m, p, hops + 1, bound, out)?
                    }
                }
            }
        } else {
            for b in p2.transitions(side, msg)? {
                let p = prob.clone() * b.prob;
                if p.is_zero() {
                    continue;
                }
                match b.out {
                    (Side::Right, m) => out.push(Branch {
                        prob: p,
                        next: Box::new(Chain { p1: p1.clone_box(), p2: b.next, bound }),
                        out: (Side::Right, m),
                    }),
                    (Side::Left, m) => {
                        Self::expand(p1.clone_box(), b.next, true, Side::Right, &m, p, hops + 1, bound, out)?
                    }
                }
            }
        }
        Ok(())
    }
}

impl<W: Weight> Ipm<W> for Chain<W> {
    fn step(&mut self, side: Side, msg: &Message, rng: &mut StreamRng) -> Result<(Side, Message)> {
        let mut first = side == Side::Left;
        let mut side = side;
        let mut msg = msg.clone();
        for _ in 0..=self.bound {
            if first {
                match self.p1.step(side, &msg, rng)? {
                    (Side::Left, m) => return Ok((Side::Left, m)),
                    (Side::Right, m) => {
                        first = false;
                        side = Side::Left;
                        msg = m;
                    }
                }
            } else {
                match self.p2.step(side, &msg, rng)? {
                    (Side::Right, m) => return Ok((Side::Right, m)),
                    (Side::Left, m) => {
                        first = true;
                        side = Side::Right;
                        msg = m;
                    }
                }
            }
        }
        Err(Error::LoopBound { bound: self.bound })
    }

    fn transitions(&self, side: Side, msg: &Message) -> Result<IpmBranches<W>> {
        let mut out = Vec::new();
        Self::expand(
            self.p1.clone_box(),
            self.p2.clone_box(),
            side == Side::Left,
            side,
            msg,
            W::one(),
            0,
            self.bound,
            &mut out,
        )?;
        Ok(out)
    }

    fn clone_box(&self) -> IpmHandle<W> {
        Box::new(Chain { p1: self.p1.clone_box(), p2: self.p2.clone_box(), bound: self.bound })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    ToMechanism,
    ToAdversary,
}

/// The full exchange of one interaction, starting with the adversary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub seed: u64,
    pub messages: Vec<(Direction, Message)>,
}

impl Transcript {
    /// The adversary's final guess, if it ended with one.
    pub fn guess(&self) -> Option<u8> {
        match self.messages.last() {
            Some((Direction::ToMechanism, Message::Guess(b))) => Some(*b),
            _ => None,
        }
    }

    /// Answers returned by the mechanism, in order.
    pub fn answers(&self) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(|(d, _)| *d == Direction::ToAdversary).map(|(_, m)| m)
    }
}

/// Runs `adversary` against `mech` until either side halts or the adversary guesses.
///
/// Round `r` draws the adversary's randomness from `(seed, r, 0)` and the
/// mechanism's from `(seed, r, 1)`.
pub fn run_interaction<W: Weight>(
    adversary: &mut dyn Mechanism<W>,
    mech: &mut dyn Mechanism<W>,
    seed: u64,
    max_rounds: usize,
) -> Result<Transcript> {
    let mut transcript = Transcript { seed, messages: Vec::new() };
    let mut input = Message::Start;
    for round in 0..max_rounds as u64 {
        let query = adversary.step(&input, &mut stream_rng(seed, round, PARTY_ADVERSARY))?;
        let done = query.is_terminal();
        transcript.messages.push((Direction::ToMechanism, query.clone()));
        if done {
            return Ok(transcript);
        }
        let answer = mech.step(&query, &mut stream_rng(seed, round, PARTY_MECHANISM))?;
        let halted = answer == Message::Halt;
        transcript.messages.push((Direction::ToAdversary, answer.clone()));
        if halted {
            return Ok(transcript);
        }
        input = answer;
    }
    Err(Error::RoundBound { rounds: max_rounds, partial: Box::new(transcript) })
}

/// An adversary that sends a fixed list of queries and then halts.
#[derive(Clone, Debug)]
pub struct ScriptedAdversary {
    queries: Vec<Message>,
    next: usize,
}

impl ScriptedAdversary {
    pub fn new(queries: Vec<Message>) -> Self {
        ScriptedAdversary { queries, next: 0 }
    }
}

impl DeterministicMechanism for ScriptedAdversary {
    fn respond(&mut self, _msg: &Message) -> Message {
        let out = self.queries.get(self.next).cloned().unwrap_or(Message::Halt);
        self.next += 1;
        out
    }

    fn name(&self) -> String {
        "scripted".into()
    }
}

pub fn scripted<W: Weight>(queries: Vec<Message>) -> MechanismHandle<W> {
    Box::new(Deterministic(ScriptedAdversary::new(queries)))
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (d, m)) in self.messages.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match d {
                Direction::ToMechanism => write!(f, ">{m}")?,
                Direction::ToAdversary => write!(f, "<{m}")?,
            }
        }
        Ok(())
    }
}
