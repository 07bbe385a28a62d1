//! Verification functions: predicates over the sequence of message pairs an
//! adversary has sent so far.

use std::collections::BTreeMap;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::message::{CreationQuery, Message, PrivacyParams};

use super::filter::{le_tol, product_delta, Filter};
use super::registry::Registry;
use super::relation::NeighborRelation;
use super::suitability::{summarize, Reason, Summary, Verdict};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerificationFn {
    Always,
    Never,
    Suitable,
    /// Creates exactly the listed mechanisms first, then only queries them.
    FixedMechs { alphas: Vec<CreationQuery> },
    /// At most `k` creations whose parameters form a sub-multiset of the list.
    FixedParams { params: Vec<PrivacyParams> },
    /// Mechanisms receiving a non-identical pair have parameters forming a sub-multiset.
    ParallelSparse { params: Vec<PrivacyParams> },
    /// Sparse on `ε`, and `1 − ∏(1−δ'_j) ≤ δ` over all creations.
    ParallelBudget { epsilons: Vec<f64>, delta: f64 },
    /// Only `RR_{0,δ'}` creations with `1 − ∏(1−δ'_j) ≤ δ`.
    RrBudget { delta: f64 },
    /// Base function plus first-pair consistency of every created mechanism.
    FpcWrap { base: Box<VerificationFn> },
    Filter { filter: Filter },
    FilterRr { filter: Filter },
    Neighbor { relation: NeighborRelation },
    /// Per mechanism id, at most `limit` instances receive a non-identical pair.
    /// Ids without a limit are unrestricted.
    SparseByMechanism { limits: BTreeMap<String, usize> },
}

fn is_submultiset<K: Ord>(sub: impl IntoIterator<Item = K>, sup: impl IntoIterator<Item = K>) -> bool {
    let mut avail: BTreeMap<K, usize> = BTreeMap::new();
    for k in sup {
        *avail.entry(k).or_default() += 1;
    }
    for k in sub {
        match avail.get_mut(&k) {
            Some(n) if *n > 0 => *n -= 1,
            _ => return false,
        }
    }
    true
}

fn check_params(list: &[PrivacyParams]) -> Result<()> {
    for p in list {
        PrivacyParams::new(p.epsilon, p.delta)?;
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("budget {delta} must lie in [0, 1]")));
    }
    Ok(())
}

fn is_rr(q: &CreationQuery) -> bool {
    q.mech_id == "rr" && q.vf_id == "rr_bit"
}

pub fn vf_fixed_mechs(alphas: Vec<CreationQuery>, registry: &Registry) -> Result<VerificationFn> {
    if let Some(a) = alphas.iter().find(|a| !registry.certifies(a)) {
        return Err(Error::InvalidParameter(format!("creation query for {} is not certified", a.mech_id)));
    }
    Ok(VerificationFn::FixedMechs { alphas })
}

pub fn vf_fixed_params(params: Vec<PrivacyParams>) -> Result<VerificationFn> {
    check_params(&params)?;
    Ok(VerificationFn::FixedParams { params })
}

pub fn vf_parallel_sparse(params: Vec<PrivacyParams>) -> Result<VerificationFn> {
    check_params(&params)?;
    Ok(VerificationFn::ParallelSparse { params })
}

pub fn vf_parallel_budget(epsilons: Vec<f64>, delta: f64) -> Result<VerificationFn> {
    if epsilons.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::InvalidParameter("epsilons must be finite and >= 0".into()));
    }
    check_delta(delta)?;
    Ok(VerificationFn::ParallelBudget { epsilons, delta })
}

pub fn vf_rr_budget(delta: f64) -> Result<VerificationFn> {
    check_delta(delta)?;
    Ok(VerificationFn::RrBudget { delta })
}

pub fn vf_fpc_wrap(base: VerificationFn) -> Result<VerificationFn> {
    Ok(VerificationFn::FpcWrap { base: Box::new(base) })
}

pub fn vf_filter(filter: Filter) -> Result<VerificationFn> {
    validate_filter(&filter)?;
    Ok(VerificationFn::Filter { filter })
}

pub fn vf_filter_rr(filter: Filter) -> Result<VerificationFn> {
    validate_filter(&filter)?;
    Ok(VerificationFn::FilterRr { filter })
}

fn validate_filter(filter: &Filter) -> Result<()> {
    match filter {
        Filter::Budget { epsilon, delta } => {
            if !(*epsilon >= 0.0) {
                return Err(Error::InvalidParameter("filter epsilon must be >= 0".into()));
            }
            check_delta(*delta)
        }
        Filter::Product { delta } => check_delta(*delta),
    }
}

pub fn vf_neighbor(relation_id: &str) -> Result<VerificationFn> {
    let relation = NeighborRelation::from_id(relation_id).ok_or_else(|| Error::UnknownId(relation_id.to_string()))?;
    Ok(VerificationFn::Neighbor { relation })
}

pub fn vf_sparse_by_mechanism(limits: BTreeMap<String, usize>) -> Result<VerificationFn> {
    Ok(VerificationFn::SparseByMechanism { limits })
}

impl VerificationFn {
    pub fn id(&self) -> &'static str {
        match self {
            VerificationFn::Always => "always",
            VerificationFn::Never => "never",
            VerificationFn::Suitable => "suitable",
            VerificationFn::FixedMechs { .. } => "fixed_mechs",
            VerificationFn::FixedParams { .. } => "fixed_params",
            VerificationFn::ParallelSparse { .. } => "parallel_sparse",
            VerificationFn::ParallelBudget { .. } => "parallel_budget",
            VerificationFn::RrBudget { .. } => "rr_budget",
            VerificationFn::FpcWrap { .. } => "fpc_wrap",
            VerificationFn::Filter { .. } => "filter",
            VerificationFn::FilterRr { .. } => "filter_rr",
            VerificationFn::Neighbor { .. } => "neighbor",
            VerificationFn::SparseByMechanism { .. } => "sparse_by_mechanism",
        }
    }

    pub fn accepts(&self, msgs: &[Message], registry: &Registry) -> bool {
        self.check(msgs, registry).is_ok()
    }

    pub fn check(&self, msgs: &[Message], registry: &Registry) -> Verdict {
        match self {
            VerificationFn::Always => Ok(()),
            VerificationFn::Never => Err(Reason::Rejected),
            VerificationFn::Suitable => summarize(msgs, registry).map(|_| ()),
            VerificationFn::FixedMechs { alphas } => {
                let s = summarize(msgs, registry)?;
                for (at, m) in msgs.iter().enumerate() {
                    if at < alphas.len() {
                        let expected = Message::same(Message::create(alphas[at].clone()));
                        if *m != expected {
                            return Err(Reason::FixedMismatch { at });
                        }
                    } else if s.is_creation(at) {
                        return Err(Reason::TooManyCreations);
                    }
                }
                Ok(())
            }
            VerificationFn::FixedParams { params } => {
                let s = summarize(msgs, registry)?;
                if s.creations.len() > params.len() {
                    return Err(Reason::TooManyCreations);
                }
                if !is_submultiset(s.creations.iter().map(|c| c.params), params.iter().copied()) {
                    return Err(Reason::ParamsNotSubmultiset);
                }
                Ok(())
            }
            VerificationFn::ParallelSparse { params } => {
                let s = summarize(msgs, registry)?;
                let exposed = s.exposed.iter().map(|j| s.creations[j - 1].params);
                if !is_submultiset(exposed, params.iter().copied()) {
                    return Err(Reason::ParamsNotSubmultiset);
                }
                Ok(())
            }
            VerificationFn::ParallelBudget { epsilons, delta } => {
                let s = summarize(msgs, registry)?;
                let exposed = s.exposed.iter().map(|j| OrderedFloat(s.creations[j - 1].params.epsilon));
                if !is_submultiset(exposed, epsilons.iter().map(|e| OrderedFloat(*e))) {
                    return Err(Reason::ParamsNotSubmultiset);
                }
                budget(&s, *delta)
            }
            VerificationFn::RrBudget { delta } => {
                let s = summarize(msgs, registry)?;
                if let Some(i) = s.creations.iter().position(|c| !is_rr(c) || c.params.epsilon != 0.0) {
                    return Err(Reason::NotRandomizedResponse { index: i + 1 });
                }
                budget(&s, *delta)
            }
            VerificationFn::FpcWrap { base } => {
                base.check(msgs, registry)?;
                let s = summarize(msgs, registry)?;
                for (i, (c, pairs)) in s.creations.iter().zip(&s.inputs).enumerate() {
                    let identical = |m: &Message| m.as_pair().is_some_and(|(a, b)| a == b);
                    let inconsistent = pairs.first().is_some_and(identical) && !pairs.iter().all(identical);
                    if !registry.is_first_pair_consistent(&c.vf_id) || inconsistent {
                        return Err(Reason::NotFirstPairConsistent { index: i + 1 });
                    }
                }
                Ok(())
            }
            VerificationFn::Filter { filter } => {
                let s = summarize(msgs, registry)?;
                filtered(&s, filter)
            }
            VerificationFn::FilterRr { filter } => {
                let s = summarize(msgs, registry)?;
                filtered(&s, filter)?;
                if let Some(i) = s.creations.iter().position(|c| !is_rr(c)) {
                    return Err(Reason::NotRandomizedResponse { index: i + 1 });
                }
                Ok(())
            }
            VerificationFn::Neighbor { relation } => relation.check(msgs).map_err(|at| Reason::NeighborViolation { at }),
            VerificationFn::SparseByMechanism { limits } => {
                let s = summarize(msgs, registry)?;
                let mut used: BTreeMap<&str, usize> = BTreeMap::new();
                for j in &s.exposed {
                    let id = s.creations[j - 1].mech_id.as_str();
                    let n = used.entry(id).or_default();
                    *n += 1;
                    if limits.get(id).is_some_and(|limit| *n > *limit) {
                        return Err(Reason::TooManyExposed { mech_id: id.to_string() });
                    }
                }
                Ok(())
            }
        }
    }
}

fn budget(s: &Summary, delta: f64) -> Verdict {
    if le_tol(product_delta(s.creations.iter().map(|c| c.params.delta)), delta) {
        Ok(())
    } else {
        Err(Reason::BudgetExceeded)
    }
}

fn filtered(s: &Summary, filter: &Filter) -> Verdict {
    let sigma: Vec<PrivacyParams> = s.creations.iter().map(|c| c.params).collect();
    if filter.evaluate(&sigma) {
        Ok(())
    } else {
        Err(Reason::FilterRejected)
    }
}
