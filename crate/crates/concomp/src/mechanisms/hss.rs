//! Continual monotone histogram mechanism built from a d-counter, SVT instances
//! and Laplace checks.
//!
//! The control logic lives in [`HssController`], a deterministic post-processor
//! whose only randomness is the answers of its children. [`Hss`] runs it against
//! a recording [`ExtConComp`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::message::{CreationQuery, Message, PrivacyParams};
use crate::protocol::{DeterministicIpm, Mechanism, MechanismHandle, Side};
use crate::rng::StreamRng;
use crate::verification::Registry;

use super::ext_con_comp::{ChildEvent, ExtConComp};
use super::noise::NoiseSource;
use super::query::QueryFn;
use super::svt::Svt;

/// Threshold increment `γ(t, j, β, ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GammaFn {
    /// `c1·(d·ln²((j+1)d/β) + ln(t+1))/ε`.
    Default { c1: f64 },
    Constant(f64),
}

impl GammaFn {
    pub fn eval(&self, t: u64, j: u64, beta: f64, epsilon: f64, d: usize) -> f64 {
        match self {
            GammaFn::Default { c1 } => {
                let l = ((j as f64 + 1.0) * d as f64 / beta).ln();
                c1 * (d as f64 * l * l + (t as f64 + 1.0).ln()) / epsilon
            }
            GammaFn::Constant(c) => *c,
        }
    }
}

/// Slack `ξ(t, j, β, ε)` in the Laplace check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum XiFn {
    HalfGamma,
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HssConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub d: usize,
    pub horizon: u64,
    pub query: QueryFn,
    pub gamma: GammaFn,
    pub xi: XiFn,
    /// Replace the output with the raw `q(c+h)`; used to exercise the structural checker.
    pub leak_raw_output: bool,
}

impl HssConfig {
    pub fn new(epsilon: f64, d: usize, horizon: u64, query: QueryFn) -> Self {
        HssConfig {
            epsilon,
            delta: 0.0,
            beta: 0.05,
            d,
            horizon,
            query,
            gamma: GammaFn::Default { c1: 6.0 },
            xi: XiFn::HalfGamma,
            leak_raw_output: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        PrivacyParams::new(self.epsilon, self.delta)?;
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter("hss needs epsilon > 0".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta {} must lie in (0, 1]", self.beta)));
        }
        if self.d == 0 || self.horizon == 0 {
            return Err(Error::InvalidParameter("hss needs d >= 1 and T >= 1".into()));
        }
        if !self.query.is_one_sensitive(self.d) {
            return Err(Error::InvalidParameter(format!(
                "query {} is not 1-sensitive in dimension {}",
                self.query, self.d
            )));
        }
        Ok(())
    }

    pub fn gamma(&self, t: u64, j: u64) -> f64 {
        self.gamma.eval(t, j, self.beta, self.epsilon, self.d)
    }

    pub fn xi(&self, t: u64, j: u64) -> f64 {
        match self.xi {
            XiFn::HalfGamma => self.gamma(t, j) / 2.0,
            XiFn::Constant(c) => c,
        }
    }

    pub fn counter_query(&self) -> CreationQuery {
        CreationQuery::new(
            "d_counter",
            Message::Tuple(vec![Message::Int(self.d as i64), Message::Int(self.horizon as i64)]),
            PrivacyParams { epsilon: self.epsilon / 3.0, delta: self.delta },
            "vector_event",
        )
    }

    /// SVT run at `ε/6`, which makes it `ε/3`-DP.
    pub fn svt_query(&self, h: &[i64]) -> CreationQuery {
        CreationQuery::new(
            "svt",
            Message::Tuple(vec![
                Message::Sym(self.query.to_string()),
                Message::Vector(h.to_vec()),
                Message::real(self.epsilon / 6.0),
            ]),
            PrivacyParams { epsilon: self.epsilon / 3.0, delta: 0.0 },
            "svt_event",
        )
    }

    pub fn laplace_query(&self) -> CreationQuery {
        CreationQuery::new(
            "laplace_int",
            Message::Start,
            PrivacyParams { epsilon: self.epsilon / 3.0, delta: 0.0 },
            "adjacent_int",
        )
    }

    /// Encodes this configuration as a creation-query initial state.
    pub fn init_state(&self) -> Message {
        Message::Tuple(vec![
            Message::Sym(self.query.to_string()),
            Message::Int(self.d as i64),
            Message::Int(self.horizon as i64),
            Message::real(self.beta),
        ])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Unstarted,
    CreatingCounter,
    CreatingFirstSvt,
    Ready,
    AwaitSvt,
    AwaitCounter,
    CreatingSvt,
    CreatingLaplace,
    AwaitLaplace,
    Halted,
}

/// Decision and auxiliary variables of the histogram mechanism, driven by messages.
///
/// Left input: `x ∈ {0,1}^d`. Right traffic: creation queries and routed child
/// inputs for an [`ExtConComp`].
#[derive(Clone, Debug)]
pub struct HssController {
    cfg: HssConfig,
    h: Vec<i64>,
    c: Vec<i64>,
    out: i64,
    j: u64,
    t: u64,
    thresh: f64,
    created: usize,
    counter_idx: usize,
    svt_idx: usize,
    laplace_idx: usize,
    pending: Vec<i64>,
    phase: Phase,
}

impl HssController {
    pub fn new(cfg: HssConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.d;
        let thresh = cfg.gamma(1, 1);
        let out = cfg.query.eval(&vec![0; d]);
        Ok(HssController {
            cfg,
            h: vec![0; d],
            c: vec![0; d],
            out,
            j: 1,
            t: 0,
            thresh,
            created: 0,
            counter_idx: 0,
            svt_idx: 0,
            laplace_idx: 0,
            pending: Vec::new(),
            phase: Phase::Unstarted,
        })
    }

    pub fn config(&self) -> &HssConfig {
        &self.cfg
    }

    pub fn thresh(&self) -> f64 {
        self.thresh
    }

    pub fn interval(&self) -> u64 {
        self.j
    }

    fn halt(&mut self) -> (Side, Message) {
        self.phase = Phase::Halted;
        (Side::Left, Message::Halt)
    }

    fn begin_update(&mut self) -> (Side, Message) {
        self.t += 1;
        for (c, x) in self.c.iter_mut().zip(&self.pending) {
            *c += x;
        }
        self.phase = Phase::AwaitSvt;
        let input = Svt::input(self.pending.clone(), self.thresh);
        (Side::Right, Message::routed(input, self.svt_idx))
    }

    fn finish_update(&mut self) -> (Side, Message) {
        let (t, j) = (self.t, self.j);
        self.thresh += -self.cfg.gamma(t, j) + self.cfg.gamma(t + 1, j);
        self.phase = Phase::Ready;
        let shown = if self.cfg.leak_raw_output {
            let raw: Vec<i64> = self.c.iter().zip(&self.h).map(|(c, h)| c + h).collect();
            self.cfg.query.eval(&raw)
        } else {
            self.out
        };
        (Side::Left, Message::Int(shown))
    }

    fn on_left(&mut self, msg: &Message) -> (Side, Message) {
        let valid = match msg {
            Message::Vector(x) => x.len() == self.cfg.d && x.iter().all(|v| *v == 0 || *v == 1),
            _ => false,
        };
        if !valid || self.t >= self.cfg.horizon {
            return self.halt();
        }
        let Message::Vector(x) = msg else { unreachable!() };
        self.pending = x.clone();
        match self.phase {
            Phase::Unstarted => {
                self.phase = Phase::CreatingCounter;
                (Side::Right, Message::create(self.cfg.counter_query()))
            }
            Phase::Ready => self.begin_update(),
            _ => self.halt(),
        }
    }

    fn on_right(&mut self, msg: &Message) -> (Side, Message) {
        match (self.phase, msg) {
            (Phase::CreatingCounter, Message::Ack) => {
                self.created += 1;
                self.counter_idx = self.created;
                self.phase = Phase::CreatingFirstSvt;
                (Side::Right, Message::create(self.cfg.svt_query(&self.h)))
            }
            (Phase::CreatingFirstSvt, Message::Ack) => {
                self.created += 1;
                self.svt_idx = self.created;
                self.begin_update()
            }
            (Phase::AwaitSvt, Message::Bottom) => self.finish_update(),
            (Phase::AwaitSvt, Message::Top) => {
                self.phase = Phase::AwaitCounter;
                (Side::Right, Message::routed(Message::Vector(self.c.clone()), self.counter_idx))
            }
            (Phase::AwaitCounter, Message::Vector(h)) if h.len() == self.cfg.d => {
                self.h = h.clone();
                self.out = self.cfg.query.eval(&self.h);
                self.phase = Phase::CreatingSvt;
                (Side::Right, Message::create(self.cfg.svt_query(&self.h)))
            }
            (Phase::CreatingSvt, Message::Ack) => {
                self.created += 1;
                self.svt_idx = self.created;
                self.c.iter_mut().for_each(|c| *c = 0);
                self.phase = Phase::CreatingLaplace;
                (Side::Right, Message::create(self.cfg.laplace_query()))
            }
            (Phase::CreatingLaplace, Message::Ack) => {
                self.created += 1;
                self.laplace_idx = self.created;
                self.phase = Phase::AwaitLaplace;
                let raw: Vec<i64> = self.c.iter().zip(&self.h).map(|(c, h)| c + h).collect();
                (Side::Right, Message::routed(Message::Int(self.cfg.query.eval(&raw)), self.laplace_idx))
            }
            (Phase::AwaitLaplace, Message::Int(v)) => {
                let (t, j) = (self.t, self.j);
                if *v as f64 > self.thresh - self.cfg.xi(t, j) {
                    self.thresh += self.cfg.gamma(t, j);
                }
                self.j += 1;
                self.thresh += -self.cfg.gamma(t, self.j - 1) + self.cfg.gamma(t, self.j);
                self.finish_update()
            }
            _ => self.halt(),
        }
    }
}

impl DeterministicIpm for HssController {
    fn route(&mut self, side: Side, msg: &Message) -> (Side, Message) {
        if self.phase == Phase::Halted {
            return (Side::Left, Message::Halt);
        }
        match side {
            Side::Left => self.on_left(msg),
            Side::Right => self.on_right(msg),
        }
    }
}

/// The histogram mechanism: controller plus a recording composition of its children.
#[derive(Clone)]
pub struct Hss {
    controller: HssController,
    children: ExtConComp,
    step_index: usize,
    trace: Vec<(usize, ChildEvent)>,
}

impl Hss {
    pub fn new(cfg: HssConfig, noise: NoiseSource) -> Result<Self> {
        Ok(Hss {
            controller: HssController::new(cfg)?,
            children: ExtConComp::recording(Arc::new(Registry::standard()), noise),
            step_index: 0,
            trace: Vec::new(),
        })
    }

    /// Child events tagged with the (1-based) input step that caused them.
    pub fn trace(&self) -> &[(usize, ChildEvent)] {
        &self.trace
    }

    pub fn controller(&self) -> &HssController {
        &self.controller
    }
}

impl Mechanism for Hss {
    fn step(&mut self, msg: &Message, rng: &mut StreamRng) -> Result<Message> {
        self.step_index += 1;
        let (mut side, mut out) = self.controller.route(Side::Left, msg);
        while side == Side::Right {
            let before = self.children.log().len();
            let answer = self.children.step(&out, rng)?;
            for e in &self.children.log()[before..] {
                self.trace.push((self.step_index, e.clone()));
            }
            (side, out) = self.controller.route(Side::Right, &answer);
        }
        Ok(out)
    }

    fn clone_box(&self) -> MechanismHandle {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        "hss".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn hand_config() -> HssConfig {
        HssConfig {
            gamma: GammaFn::Constant(1.0),
            xi: XiFn::Constant(0.0),
            ..HssConfig::new(1.0, 1, 8, QueryFn::Sum)
        }
    }

    fn run(cfg: HssConfig, xs: &[Vec<i64>]) -> Vec<Message> {
        let mut m = Hss::new(cfg, NoiseSource::Zero).unwrap();
        let mut rng = stream_rng(0, 0, 0);
        xs.iter().map(|x| m.step(&Message::Vector(x.clone()), &mut rng).unwrap()).collect()
    }

    #[test]
    fn hand_trace_one_one() {
        assert_eq!(run(hand_config(), &[vec![1], vec![1]]), vec![Message::Int(0), Message::Int(2)]);
    }

    #[test]
    fn all_zero_stream_outputs_zero() {
        let outs = run(HssConfig::new(1.0, 2, 6, QueryFn::Max), &vec![vec![0, 0]; 6]);
        assert!(outs.iter().all(|m| *m == Message::Int(0)));
    }

    #[test]
    fn rejects_non_binary_input_and_overrun() {
        let mut m = Hss::new(hand_config(), NoiseSource::Zero).unwrap();
        let mut rng = stream_rng(0, 0, 0);
        assert_eq!(m.step(&Message::Vector(vec![2]), &mut rng).unwrap(), Message::Halt);

        let mut cfg = hand_config();
        cfg.horizon = 1;
        let outs = run(cfg, &[vec![0], vec![0]]);
        assert_eq!(outs[1], Message::Halt);
    }

    #[test]
    fn children_use_the_split_budget() {
        let mut m = Hss::new(hand_config(), NoiseSource::Zero).unwrap();
        let mut rng = stream_rng(0, 0, 0);
        for _ in 0..4 {
            m.step(&Message::Vector(vec![1]), &mut rng).unwrap();
        }
        let created: Vec<&CreationQuery> = m
            .trace()
            .iter()
            .filter_map(|(_, e)| match e {
                ChildEvent::Created { query, .. } => Some(query),
                _ => None,
            })
            .collect();
        assert!(created.len() > 2);
        for q in created {
            assert!((q.params.epsilon - 1.0 / 3.0).abs() < 1e-15);
            if q.mech_id == "svt" {
                let Message::Tuple(parts) = &q.init_state else { panic!() };
                assert_eq!(parts[2], Message::real(1.0 / 6.0));
            }
        }
    }
}
