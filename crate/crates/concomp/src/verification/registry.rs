//! Mechanism constructors and the certified `(mechanism, params, relation)` triples.
//!
//! Whether a mechanism is DP with respect to a verification function is not
//! decidable at runtime, so creation queries are accepted only when their triple
//! matches one of the rules below. Anything else is rejected.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::mechanisms::counter::{BinaryCounter, DCounter};
use crate::mechanisms::ext_con_comp::ExtConComp;
use crate::mechanisms::hss::{Hss, HssConfig};
use crate::mechanisms::laplace::LaplaceInt;
use crate::mechanisms::m_delta::MDelta;
use crate::mechanisms::noise::NoiseSource;
use crate::mechanisms::query::QueryFn;
use crate::mechanisms::rr::{Irr, Rr};
use crate::mechanisms::svt::{parse_svt_input, Svt};
use crate::message::{CreationQuery, Message};
use crate::protocol::{Finite, MechanismHandle};

use super::relation::NeighborRelation;

type Build = fn(&CreationQuery, &NoiseSource) -> Result<MechanismHandle>;
type Certify = fn(&CreationQuery) -> bool;
type InSpace = fn(&CreationQuery, &Message) -> bool;

#[derive(Clone)]
pub struct MechEntry {
    pub build: Build,
    /// `None` means the mechanism can be built but never certified.
    pub certify: Option<Certify>,
    pub in_space: InSpace,
    pub note: &'static str,
}

#[derive(Clone)]
pub struct Registry {
    mechanisms: BTreeMap<&'static str, MechEntry>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.mechanisms.keys()).finish()
    }
}

fn tuple(m: &Message) -> &[Message] {
    match m {
        Message::Tuple(v) => v,
        _ => &[],
    }
}

fn svt_init(q: &CreationQuery) -> Option<(QueryFn, Vec<i64>, f64)> {
    match tuple(&q.init_state) {
        [Message::Sym(query), Message::Vector(h), Message::Real(e)] => Some((query.parse().ok()?, h.clone(), e.0)),
        _ => None,
    }
}

fn d_counter_init(q: &CreationQuery) -> Option<(usize, u64)> {
    match tuple(&q.init_state) {
        [Message::Int(d), Message::Int(t)] if *d >= 1 && *t >= 1 => Some((*d as usize, *t as u64)),
        _ => None,
    }
}

fn hss_init(q: &CreationQuery) -> Option<HssConfig> {
    match tuple(&q.init_state) {
        [Message::Sym(query), Message::Int(d), Message::Int(t), Message::Real(beta)] if *d >= 1 && *t >= 1 => {
            let mut cfg = HssConfig::new(q.params.epsilon, *d as usize, *t as u64, query.parse().ok()?);
            cfg.delta = q.params.delta;
            cfg.beta = beta.0;
            Some(cfg)
        }
        _ => None,
    }
}

fn is_bit(m: &Message) -> bool {
    m.as_bit().is_some()
}

fn binary_vector(m: &Message, d: usize) -> bool {
    matches!(m, Message::Vector(x) if x.len() == d && x.iter().all(|v| *v == 0 || *v == 1))
}

fn build_rr(q: &CreationQuery, _: &NoiseSource) -> Result<MechanismHandle> {
    Ok(Box::new(Finite::new(Rr::<f64>::new(q.params))))
}

fn build_irr(q: &CreationQuery, _: &NoiseSource) -> Result<MechanismHandle> {
    let b = q.init_state.as_bit().ok_or_else(|| Error::InvalidParameter("irr initial state must be a bit".into()))?;
    Ok(Box::new(Finite::new(Irr::<f64>::new(q.params, b))))
}

fn build_laplace(q: &CreationQuery, noise: &NoiseSource) -> Result<MechanismHandle> {
    Ok(Box::new(LaplaceInt::new(q.params.epsilon, 1.0, noise.clone())?))
}

fn build_svt(q: &CreationQuery, noise: &NoiseSource) -> Result<MechanismHandle> {
    let (query, h, eps) = svt_init(q).ok_or_else(|| Error::InvalidParameter("malformed svt initial state".into()))?;
    Ok(Box::new(Svt::new(eps, query, h, noise.clone())?))
}

fn build_counter(q: &CreationQuery, noise: &NoiseSource) -> Result<MechanismHandle> {
    let t = q.init_state.as_int().filter(|t| *t >= 1).ok_or_else(|| Error::InvalidParameter("counter horizon".into()))?;
    Ok(Box::new(BinaryCounter::new(q.params.epsilon, t as u64, noise.clone())?))
}

fn build_d_counter(q: &CreationQuery, noise: &NoiseSource) -> Result<MechanismHandle> {
    let (d, t) = d_counter_init(q).ok_or_else(|| Error::InvalidParameter("malformed d_counter initial state".into()))?;
    Ok(Box::new(DCounter::new(q.params.epsilon, d, t, noise.clone())?))
}

fn build_m_delta(q: &CreationQuery, _: &NoiseSource) -> Result<MechanismHandle> {
    if q.init_state != Message::Top {
        return Err(Error::InvalidParameter("m_delta starts in Top".into()));
    }
    Ok(Box::new(Finite::new(MDelta::new(q.params.delta))))
}

fn build_hss(q: &CreationQuery, noise: &NoiseSource) -> Result<MechanismHandle> {
    let cfg = hss_init(q).ok_or_else(|| Error::InvalidParameter("malformed hss initial state".into()))?;
    Ok(Box::new(Hss::new(cfg, noise.clone())?))
}

fn build_ext_con_comp(_: &CreationQuery, noise: &NoiseSource) -> Result<MechanismHandle> {
    Ok(Box::new(ExtConComp::new(std::sync::Arc::new(Registry::standard()), noise.clone())))
}

impl Registry {
    pub fn standard() -> Self {
        let mut m = BTreeMap::new();
        m.insert(
            "rr",
            MechEntry {
                build: build_rr,
                certify: Some(|q| q.vf_id == "rr_bit" && q.init_state == Message::Start),
                in_space: |_, m| is_bit(m),
                note: "randomized response is (ε,δ)-DP on one bit",
            },
        );
        m.insert(
            "irr",
            MechEntry {
                build: build_irr,
                certify: None,
                in_space: |_, m| *m == Message::Star,
                note: "simulation target only; its secret lives in the initial state",
            },
        );
        m.insert(
            "laplace_int",
            MechEntry {
                build: build_laplace,
                certify: Some(|q| q.vf_id == "adjacent_int" && q.params.epsilon > 0.0 && q.init_state == Message::Start),
                in_space: |_, m| m.as_int().is_some(),
                note: "Lap(1/ε) on integers at distance ≤ 1 is ε-DP; rounding is post-processing",
            },
        );
        m.insert(
            "svt",
            MechEntry {
                build: build_svt,
                certify: Some(|q| {
                    q.vf_id == "svt_event"
                        && svt_init(q).is_some_and(|(query, h, eps)| {
                            eps > 0.0 && query.is_one_sensitive(h.len()) && q.params.epsilon >= 2.0 * eps * (1.0 - 1e-12)
                        })
                }),
                in_space: |q, m| {
                    let d = svt_init(q).map(|(_, h, _)| h.len()).unwrap_or(0);
                    parse_svt_input(m).is_some_and(|(x, t)| x.len() == d && t.is_finite() && x.iter().all(|v| *v == 0 || *v == 1))
                },
                note: "SVT at parameter e with a 1-sensitive query is 2e-DP for event-level streams",
            },
        );
        m.insert(
            "binary_counter",
            MechEntry {
                build: build_counter,
                certify: Some(|q| q.vf_id == "counter_event" && q.params.epsilon > 0.0 && q.init_state.as_int().is_some_and(|t| t >= 1)),
                in_space: |_, m| m.as_int().is_some(),
                note: "binary-tree counter with per-node Lap(levels/ε) is ε-DP for event-level streams",
            },
        );
        m.insert(
            "d_counter",
            MechEntry {
                build: build_d_counter,
                certify: Some(|q| q.vf_id == "vector_event" && q.params.epsilon > 0.0 && d_counter_init(q).is_some()),
                in_space: |q, m| matches!(m, Message::Vector(x) if Some(x.len()) == d_counter_init(q).map(|v| v.0)),
                note: "d counters at ε/d compose to ε-DP",
            },
        );
        m.insert(
            "m_delta",
            MechEntry {
                build: build_m_delta,
                certify: Some(|q| q.vf_id == "g" && q.init_state == Message::Top && q.params.delta > 0.0),
                in_space: |_, m| is_bit(m),
                note: "M_δ is (0,δ)-DP with respect to g",
            },
        );
        m.insert(
            "hss",
            MechEntry {
                build: build_hss,
                certify: Some(|q| q.vf_id == "histogram_event" && hss_init(q).is_some_and(|c| c.validate().is_ok())),
                in_space: |q, m| hss_init(q).is_some_and(|c| binary_vector(m, c.d)),
                note: "histogram mechanism is (ε,δ)-DP via its children's composition",
            },
        );
        m.insert(
            "ext_con_comp",
            MechEntry {
                build: build_ext_con_comp,
                certify: None,
                in_space: |_, _| true,
                note: "router; no guarantee of its own",
            },
        );
        Registry { mechanisms: m }
    }

    pub fn ids(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.mechanisms.keys().copied()
    }

    pub fn entry(&self, mech_id: &str) -> Result<&MechEntry> {
        self.mechanisms.get(mech_id).ok_or_else(|| Error::UnknownId(mech_id.to_string()))
    }

    pub fn build(&self, q: &CreationQuery, noise: &NoiseSource) -> Result<MechanismHandle> {
        (self.entry(&q.mech_id)?.build)(q, noise)
    }

    /// Whether the triple in `q` is certified. Unknown ids are not.
    pub fn certifies(&self, q: &CreationQuery) -> bool {
        NeighborRelation::from_id(&q.vf_id).is_some()
            && self.mechanisms.get(q.mech_id.as_str()).and_then(|e| e.certify).is_some_and(|c| c(q))
    }

    pub fn query_in_space(&self, q: &CreationQuery, m: &Message) -> bool {
        self.mechanisms.get(q.mech_id.as_str()).is_some_and(|e| (e.in_space)(q, m))
    }

    pub fn relation(&self, vf_id: &str) -> Option<NeighborRelation> {
        NeighborRelation::from_id(vf_id)
    }

    pub fn is_first_pair_consistent(&self, vf_id: &str) -> bool {
        self.relation(vf_id).is_some_and(|r| r.is_first_pair_consistent())
    }
}
