use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use concomp::mechanisms::irr;
use concomp::protocol::{run_interaction, scripted, Mechanism};
use concomp::reduction::*;
use concomp::rng::StreamRng;
use concomp::{compose_post, Flag, MechanismHandle, Message, PrivacyParams};
use proptest::prelude::*;

fn rr_params() -> PrivacyParams {
    PrivacyParams::new(3f64.ln(), 0.1).unwrap()
}

fn e(b: u8) -> Message {
    Message::Rr(Flag::Exposed, b)
}
fn p(b: u8) -> Message {
    Message::Rr(Flag::Private, b)
}

fn hist(mu: &AnswerTable, a: &Message) -> Hist {
    vec![(0, mu.answer_index(a).unwrap())]
}

#[test]
fn rr_table_masses() {
    let t = build_tables(&rr_instance(rr_params())).unwrap();
    let mu = &t.mu;
    assert_eq!(mu.mu(0, &Vec::new()), 1.0);
    assert_eq!(mu.mu(1, &Vec::new()), 1.0);
    for (a, want) in [(e(0), 0.1), (p(0), 0.675), (p(1), 0.225), (e(1), 0.0)] {
        assert!((mu.mu(0, &hist(mu, &a)) - want).abs() < 1e-12, "{a}");
    }
}

#[test]
fn rr_control_values_by_hand() {
    let inst = rr_instance(rr_params());
    let t = build_tables(&inst).unwrap();
    let ctl = compute_l(&t.mu, inst.params.epsilon, 1).unwrap();
    let mu = &t.mu;
    assert!((ctl.l(0, &hist(mu, &e(0))) - 0.1).abs() < 1e-12);
    assert!(ctl.l(0, &hist(mu, &p(0))).abs() < 1e-12);
    assert!(ctl.l(0, &hist(mu, &p(1))).abs() < 1e-12);
    assert!((ctl.lower(0, &Vec::new(), 0) - 0.1).abs() < 1e-12);
    assert!((ctl.l(0, &Vec::new()) - 0.1).abs() < 1e-12);
}

#[test]
fn rr_conditions_and_mixture() {
    let (t, r) = check_instance(&rr_instance(rr_params())).unwrap();
    assert!(r.passed(), "{r:#?}");
    assert!(r.mixture_residual < 1e-9);
    assert_eq!(t.phi.get(0, &Vec::new()), 1.0);
    assert_eq!(t.phi.get(1, &Vec::new()), 1.0);
}

#[test]
fn delta_one_psi_equals_phi() {
    let inst = rr_instance(PrivacyParams::new(0.5, 1.0).unwrap());
    let t = build_tables(&inst).unwrap();
    for tt in 0..=t.mu.depth() {
        for h in t.mu.level(tt) {
            for b in 0..2 {
                assert_eq!(t.psi.get(b, h), t.phi.get(b, h));
            }
        }
    }
}

#[test]
fn identical_secrets_zero_control_and_min_xi() {
    let inst = constant_table_instance(PrivacyParams::new(1.0, 0.2).unwrap(), 11);
    let t = build_tables(&inst).unwrap();
    for tt in 0..=t.mu.depth() {
        for h in t.mu.level(tt) {
            for b in 0..2 {
                assert_eq!(t.control.l(b, h), 0.0);
                let want = t.mu.mu(b, h).min(t.control.l(0, h) + t.control.l(1, h));
                assert!((t.xi.get(b, h) - want).abs() < 1e-12);
            }
            assert_eq!(t.xi.get(0, h), t.xi.get(1, h));
        }
    }
}

#[test]
fn standard_suite_passes() {
    for inst in standard_instances(0).unwrap() {
        let (_, r) = check_instance(&inst).unwrap();
        assert!(r.passed(), "{}: {r:#?}", inst.name);
    }
}

#[test]
fn m_delta_table_matches_enumeration() {
    let (_, r) = check_instance(&m_delta_instance(0.5, 1.0).unwrap()).unwrap();
    assert!(r.mu_vs_enumeration < 1e-12);
}

/// Counts the messages reaching the wrapped mechanism.
#[derive(Clone)]
struct Counting {
    inner: MechanismHandle,
    count: Arc<AtomicUsize>,
}

impl Mechanism for Counting {
    fn step(&mut self, msg: &Message, rng: &mut StreamRng) -> concomp::Result<Message> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.step(msg, rng)
    }

    fn clone_box(&self) -> MechanismHandle {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        "counting".into()
    }
}

#[test]
fn sampled_runs_use_at_most_two_irr_messages() {
    let inst = random_table_instance(PrivacyParams::new(1.0, 0.3).unwrap(), 5);
    let t = build_tables(&inst).unwrap();
    let tables = Arc::new(Tables { mu: t.mu.clone(), phi: t.phi, psi: t.psi, depth: t.mu.depth() });
    let mut seen_two = false;
    for seed in 0..1000u64 {
        let b = (seed % 2) as u8;
        let count = Arc::new(AtomicUsize::new(0));
        let child = Box::new(Counting { inner: irr(inst.params, b), count: count.clone() });
        let mut sim = compose_post(build_irr_postprocessor(tables.clone()), child);
        let qs: Vec<Message> = (0..2).map(|i| Message::Int(((seed >> (i + 1)) & 1) as i64)).collect();
        let mut adv = scripted(qs);
        run_interaction(adv.as_mut(), sim.as_mut(), seed, 10).unwrap();
        let n = count.load(Ordering::Relaxed);
        assert!((1..=2).contains(&n), "seed {seed}: {n}");
        seen_two |= n == 2;
    }
    assert!(seen_two);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn control_below_mu_on_random_tables(seed in 0u64..10_000, eps in 0.1f64..3.0, delta in 0.0f64..1.0) {
        let inst = random_table_instance(PrivacyParams::new(eps, delta).unwrap(), seed);
        let (_, r) = check_instance(&inst).unwrap();
        prop_assert!(r.l_above_mu <= 1e-12);
        prop_assert!(r.l_dominance_violation <= 1e-12);
        prop_assert!(r.passed(), "{:#?}", r);
    }
}
