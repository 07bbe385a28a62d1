//! Finite test instances and the end-to-end reduction check.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::RngExt;
use serde::Serialize;

use crate::analysis::{enumerate_views, DiscretePmf};
use crate::error::Result;
use crate::mechanisms::{irr, m_delta, rr, Irr};
use crate::message::{Flag, Message, PrivacyParams};
use crate::protocol::{
    chain, compose_post, scripted, DetIpm, DeterministicIpm, Finite, FiniteMechanism, Mechanism, MechanismHandle, Side,
};
use crate::rng::stream_rng;
use crate::verification::{make_identifier, make_verifier, vf_neighbor, Registry};

use super::construct::{compute_psi, compute_xi_phi, PairTable};
use super::control::{compute_l, ControlTables};
use super::postprocessor::{build_irr_postprocessor, max_interactions, Tables};
use super::table::{compute_mu, AnswerTable, Hist};

/// A finite mechanism with two neighboring initial states.
pub struct Instance {
    pub name: String,
    pub params: PrivacyParams,
    pub mech: [MechanismHandle; 2],
    pub queries: Vec<Message>,
    pub answers: Vec<Message>,
    pub horizon: usize,
}

/// Feeds the secret bit to the wrapped mechanism in place of `q*`.
#[derive(Clone, Debug)]
struct BindInput(u8);

impl DeterministicIpm for BindInput {
    fn route(&mut self, side: Side, msg: &Message) -> (Side, Message) {
        match side {
            Side::Left if *msg == Message::Star => (Side::Right, Message::Int(self.0 as i64)),
            Side::Left => (Side::Left, Message::Halt),
            Side::Right => (Side::Left, msg.clone()),
        }
    }
}

fn rr_answers() -> Vec<Message> {
    vec![
        Message::Rr(Flag::Exposed, 0),
        Message::Rr(Flag::Exposed, 1),
        Message::Rr(Flag::Private, 0),
        Message::Rr(Flag::Private, 1),
        Message::Halt,
    ]
}

/// `RR_{ε,δ}` holding the secret bit, asked once with `q*`.
pub fn rr_instance(params: PrivacyParams) -> Instance {
    let mech = [0, 1].map(|b| compose_post(Box::new(DetIpm(BindInput(b))), rr(params)));
    Instance { name: "rr".into(), params, mech, queries: vec![Message::Star], answers: rr_answers(), horizon: 1 }
}

/// `V[g] ∘* I(b) ∘* M_δ`, which is `(0, δ)`-DP and therefore `(ε, δ)`-DP.
pub fn m_delta_instance(delta: f64, epsilon: f64) -> Result<Instance> {
    let registry = Arc::new(Registry::standard());
    let mut mech = Vec::new();
    for b in 0..2 {
        let vf = vf_neighbor("g")?;
        mech.push(compose_post(chain(make_verifier(vf, registry.clone()), make_identifier(b)), m_delta(delta)));
    }
    let queries = [(0, 0), (0, 1), (1, 0), (1, 1)].iter().map(|&(a, b)| Message::pair(Message::Int(a), Message::Int(b))).collect();
    let answers = vec![Message::Top, Message::Bottom, Message::Int(0), Message::Int(1), Message::Halt];
    let mech: [MechanismHandle; 2] = mech.try_into().map_err(|_| crate::Error::Protocol("two stacks".into()))?;
    Ok(Instance { name: "m_delta".into(), params: PrivacyParams::new(epsilon, delta)?, mech, queries, answers, horizon: 2 })
}

type FamilyKey = (usize, Hist, usize);

/// Post-processing of one `RR_{ε,δ}(b)` outcome by seeded random answer
/// families over binary queries and answers, two steps long.
#[derive(Clone, Debug)]
struct RandomPost {
    masses: [f64; 4],
    outcome: Option<usize>,
    hist: Hist,
    families: Arc<BTreeMap<FamilyKey, f64>>,
}

impl FiniteMechanism<f64> for RandomPost {
    fn transitions(&self, msg: &Message) -> Vec<(f64, Self, Message)> {
        let Some(q) = msg.as_bit().map(usize::from) else {
            return Vec::new();
        };
        if self.hist.len() >= 2 {
            return Vec::new();
        }
        let outcomes: Vec<(usize, f64)> = match self.outcome {
            Some(r) => vec![(r, 1.0)],
            None => self.masses.iter().copied().enumerate().collect(),
        };
        let mut out = Vec::new();
        for (r, pr) in outcomes {
            let p1 = self.families[&(r, self.hist.clone(), q)];
            for (a, pa) in [(0usize, 1.0 - p1), (1, p1)] {
                let mut next = self.clone();
                next.outcome = Some(r);
                next.hist.push((q, a));
                out.push((pr * pa, next, Message::Int(a as i64)));
            }
        }
        out
    }

    fn name(&self) -> String {
        "random_post_rr".into()
    }
}

pub fn random_table_instance(params: PrivacyParams, seed: u64) -> Instance {
    random_post_instance(params, seed, false)
}

/// Same families as [`random_table_instance`] but the secret is ignored, so
/// `μ⁰ = μ¹`.
pub fn constant_table_instance(params: PrivacyParams, seed: u64) -> Instance {
    random_post_instance(params, seed, true)
}

fn random_post_instance(params: PrivacyParams, seed: u64, ignore_secret: bool) -> Instance {
    let mut rng = stream_rng(seed, 0, 4);
    let mut families = BTreeMap::new();
    let prefixes: Vec<Hist> = std::iter::once(Vec::new())
        .chain((0..2).flat_map(|q| (0..2).map(move |a| vec![(q, a)])))
        .collect();
    for r in 0..4 {
        for h in &prefixes {
            for q in 0..2 {
                families.insert((r, h.clone(), q), rng.random_range(0.02..0.98));
            }
        }
    }
    let families = Arc::new(families);
    let (w, d) = (params.epsilon.exp(), params.delta);
    let mech = [0usize, 1].map(|b| {
        let b = if ignore_secret { 0 } else { b };
        // Outcome order: (E,0), (E,1), (P,0), (P,1).
        let mut masses = [0.0; 4];
        masses[b] = d;
        masses[2 + b] = (1.0 - d) * w / (1.0 + w);
        masses[2 + (1 - b)] = (1.0 - d) / (1.0 + w);
        Box::new(Finite::new(RandomPost { masses, outcome: None, hist: Vec::new(), families: families.clone() })) as MechanismHandle
    });
    Instance {
        name: if ignore_secret { "constant_table" } else { "random_table" }.into(),
        params,
        mech,
        queries: vec![Message::Int(0), Message::Int(1)],
        answers: vec![Message::Int(0), Message::Int(1), Message::Halt],
        horizon: 2,
    }
}

/// All tables of one reduction run.
#[derive(Clone, Debug)]
pub struct ReductionTables {
    pub mu: AnswerTable,
    pub control: ControlTables,
    pub xi: PairTable,
    pub phi: PairTable,
    pub psi: PairTable,
}

pub fn build_tables(inst: &Instance) -> Result<ReductionTables> {
    let mu = compute_mu([inst.mech[0].as_ref(), inst.mech[1].as_ref()], inst.queries.clone(), inst.answers.clone(), inst.horizon)?;
    let control = compute_l(&mu, inst.params.epsilon, mu.depth())?;
    let (xi, phi) = compute_xi_phi(&mu, &control, inst.params.delta)?;
    let psi = compute_psi(&mu, &phi, inst.params.epsilon, inst.params.delta, mu.depth())?;
    Ok(ReductionTables { mu, control, xi, phi, psi })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ReductionReport {
    pub instance: String,
    pub epsilon: f64,
    pub delta: f64,
    pub horizon: usize,
    pub transcripts: usize,
    pub mu_chain_residual: f64,
    pub l_zero: [f64; 2],
    pub l_monotonicity_violation: f64,
    pub l_truncation_gap: f64,
    pub l_dominance_violation: f64,
    pub l_above_mu: f64,
    pub cond1: f64,
    pub cond2: f64,
    pub cond3: f64,
    pub cond4: f64,
    pub psi_min: f64,
    pub psi_chain_residual: f64,
    pub mixture_residual: f64,
    pub end_to_end_residual: f64,
    pub mu_vs_enumeration: f64,
    pub max_irr_interactions: usize,
    pub single_interaction_ok: bool,
}

pub const RESIDUAL_TOL: f64 = 1e-9;

impl ReductionReport {
    pub fn passed(&self) -> bool {
        let small = [
            self.mu_chain_residual,
            self.l_monotonicity_violation,
            self.l_truncation_gap,
            self.l_dominance_violation,
            self.l_above_mu,
            self.cond1,
            self.cond2,
            self.cond3,
            self.cond4,
            self.psi_chain_residual,
            self.mixture_residual,
            self.end_to_end_residual,
            self.mu_vs_enumeration,
        ];
        small.iter().all(|v| *v < RESIDUAL_TOL)
            && self.psi_min >= -1e-12
            && self.l_zero.iter().all(|l| *l <= self.delta + 1e-12)
            && self.max_irr_interactions <= 2
            && self.single_interaction_ok
    }
}

fn all_hists(mu: &AnswerTable) -> impl Iterator<Item = &Hist> {
    (1..=mu.depth()).flat_map(move |t| mu.level(t).iter())
}

/// Query sequences of length `1..=len` over `n` queries.
fn query_sequences(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..len {
        layer = layer.iter().flat_map(|p| (0..n).map(move |q| [p.as_slice(), &[q]].concat())).collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Answer sequences (cut at the first `Halt`) for the query sequence `qs`.
fn expected_answers(mu: &AnswerTable, b: usize, qs: &[usize]) -> DiscretePmf<Vec<Message>> {
    let mut pmf = DiscretePmf::new();
    for h in mu.level(qs.len()) {
        if !h.iter().map(|p| p.0).eq(qs.iter().copied()) {
            continue;
        }
        let mut ans = Vec::new();
        for &(_, a) in h {
            ans.push(mu.answers[a].clone());
            if mu.answers[a] == Message::Halt {
                break;
            }
        }
        pmf.add(ans, mu.mu(b, h));
    }
    pmf
}

fn observed_answers(mech: &dyn Mechanism, queries: Vec<Message>, horizon: usize) -> Result<DiscretePmf<Vec<Message>>> {
    let adv = scripted(queries);
    let views = enumerate_views(adv.as_ref(), mech, horizon + 2)?;
    Ok(views.pmf.map(|v| v.iter().skip(1).step_by(2).cloned().collect()))
}

fn max_gap(p: &DiscretePmf<Vec<Message>>, q: &DiscretePmf<Vec<Message>>) -> f64 {
    p.support().chain(q.support()).map(|k| (p.get(k) - q.get(k)).abs()).fold(0.0, f64::max)
}

/// Builds every table for `inst` and evaluates all checks.
pub fn check_instance(inst: &Instance) -> Result<(ReductionTables, ReductionReport)> {
    let tables = build_tables(inst)?;
    let (eps, delta) = (inst.params.epsilon, inst.params.delta);
    let ReductionTables { mu, control, xi: _, phi, psi } = &tables;
    let k = (-eps).exp();
    let w = eps.exp();
    let depth = mu.depth();
    let mut r = ReductionReport {
        instance: inst.name.clone(),
        epsilon: eps,
        delta,
        horizon: inst.horizon,
        transcripts: all_hists(mu).count(),
        mu_chain_residual: mu.chain_residual(),
        l_zero: [control.l(0, &Vec::new()), control.l(1, &Vec::new())],
        psi_min: f64::INFINITY,
        ..Default::default()
    };

    // L_{t,T} ≤ L_{t,T+1}, and the truncation gap at the horizon.
    let per_t: Vec<ControlTables> = (1..=depth).map(|t| compute_l(mu, eps, t)).collect::<Result<_>>()?;
    for pair in per_t.windows(2) {
        for t in 0..=pair[0].t_max {
            for h in mu.level(t) {
                for b in 0..2 {
                    let gap = pair[0].l(b, h) - pair[1].l(b, h);
                    r.l_monotonicity_violation = r.l_monotonicity_violation.max(gap);
                    if pair[0].t_max == inst.horizon {
                        r.l_truncation_gap = r.l_truncation_gap.max(gap.abs());
                    }
                }
            }
        }
    }

    for t in 0..depth {
        for h in mu.level(t) {
            for q in 0..mu.queries.len() {
                let kids = mu.children(h, q);
                for b in 0..2 {
                    let sl: f64 = kids.iter().map(|c| control.l(b, c)).sum();
                    r.l_dominance_violation = r.l_dominance_violation.max(sl - control.l(b, h));
                    let sp: f64 = kids.iter().map(|c| phi.get(b, c)).sum();
                    r.cond3 = r.cond3.max((sp - phi.get(b, h)).abs());
                    let ss: f64 = kids.iter().map(|c| psi.get(b, c)).sum();
                    r.psi_chain_residual = r.psi_chain_residual.max((ss - psi.get(b, h)).abs());
                }
            }
        }
    }

    for h in all_hists(mu) {
        for b in 0..2 {
            let (m, m1) = (mu.mu(b, h), mu.mu(1 - b, h));
            let (f, f1) = (phi.get(b, h), phi.get(1 - b, h));
            r.l_above_mu = r.l_above_mu.max(control.l(b, h) - m);
            r.cond1 = r.cond1.max(control.l(b, h) - delta * f);
            r.cond2 = r.cond2.max(delta * f - k * delta * f1 - (m - k * m1));
            r.psi_min = r.psi_min.min(psi.get(b, h));
            let mix = delta * f + (1.0 - delta) * (w / (1.0 + w)) * psi.get(b, h) + (1.0 - delta) / (1.0 + w) * psi.get(1 - b, h);
            r.mixture_residual = r.mixture_residual.max((mix - m).abs());
        }
    }
    if r.psi_min == f64::INFINITY {
        r.psi_min = 0.0;
    }

    let post_tables = Arc::new(Tables { mu: mu.clone(), phi: phi.clone(), psi: psi.clone(), depth });
    r.single_interaction_ok = true;
    for qs in query_sequences(mu.queries.len(), depth) {
        let same = mu.same_distribution(&qs, 1e-15);
        if same {
            for h in mu.level(qs.len()).iter().filter(|h| h.iter().map(|p| p.0).eq(qs.iter().copied())) {
                let floor = mu.mu(0, h).min(control.l(0, h) + control.l(1, h));
                let gap = (phi.get(0, h) - phi.get(1, h)).abs().max(floor - phi.get(0, h));
                r.cond4 = r.cond4.max(gap);
            }
        }
        let mut worst = 0;
        for b in 0..2u8 {
            let irr_b = Irr::<f64>::new(inst.params, b);
            worst = worst.max(max_interactions(&post_tables, &irr_b, &qs)?);
        }
        r.max_irr_interactions = r.max_irr_interactions.max(worst);
        if same != (worst == 1) {
            r.single_interaction_ok = false;
        }
        if qs.len() == depth {
            let queries: Vec<Message> = qs.iter().map(|&q| mu.queries[q].clone()).collect();
            for b in 0..2u8 {
                let expected = expected_answers(mu, b as usize, &qs);
                let sim = compose_post(build_irr_postprocessor(post_tables.clone()), irr(inst.params, b));
                let got = observed_answers(sim.as_ref(), queries.clone(), depth)?;
                r.end_to_end_residual = r.end_to_end_residual.max(max_gap(&expected, &got));
                let direct = observed_answers(inst.mech[b as usize].as_ref(), queries.clone(), depth)?;
                r.mu_vs_enumeration = r.mu_vs_enumeration.max(max_gap(&expected, &direct));
            }
        }
    }
    Ok((tables, r))
}

/// The standard instances: three secret-dependent ones and one constant.
pub fn standard_instances(seed: u64) -> Result<Vec<Instance>> {
    Ok(vec![
        rr_instance(PrivacyParams::new(3f64.ln(), 0.1)?),
        m_delta_instance(0.5, 1.0)?,
        random_table_instance(PrivacyParams::new(1.0, 0.1)?, seed),
        constant_table_instance(PrivacyParams::new(1.0, 0.1)?, seed),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(inst: Instance) -> ReductionReport {
        let (_, r) = check_instance(&inst).unwrap();
        assert!(r.passed(), "{r:#?}");
        r
    }

    #[test]
    fn rr_instance_reduces() {
        let r = check(rr_instance(PrivacyParams::new(3f64.ln(), 0.1).unwrap()));
        assert!((r.l_zero[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn m_delta_instance_reduces() {
        check(m_delta_instance(0.5, 1.0).unwrap());
    }

    #[test]
    fn random_tables_reduce() {
        for seed in 0..5 {
            check(random_table_instance(PrivacyParams::new(1.0, 0.1).unwrap(), seed));
        }
    }

    #[test]
    fn constant_table_needs_one_interaction() {
        let r = check(constant_table_instance(PrivacyParams::new(0.7, 0.3).unwrap(), 3));
        assert_eq!(r.max_irr_interactions, 1);
        assert_eq!(r.l_zero, [0.0, 0.0]);
    }

    #[test]
    fn secret_dependent_tables_need_two_interactions() {
        let r = check(random_table_instance(PrivacyParams::new(0.7, 0.3).unwrap(), 3));
        assert_eq!(r.max_irr_interactions, 2);
    }

    #[test]
    fn query_sequences_count() {
        assert_eq!(query_sequences(2, 3).len(), 2 + 4 + 8);
    }
}
