use std::collections::BTreeMap;
use std::sync::Arc;

use concomp::analysis::{enumerate_views, hockey_stick_delta, tv_distance, DiscretePmf};
use concomp::mechanisms::{m_delta, rr, Hss, HssConfig, NoiseSource, QueryFn};
use concomp::protocol::{run_interaction, scripted};
use concomp::verification::*;
use concomp::{chain, compose_post, CreationQuery, Message, PrivacyParams};
use proptest::prelude::*;

fn create(eps: f64, delta: f64) -> Message {
    Message::same(Message::create(CreationQuery::rr(PrivacyParams::new(eps, delta).unwrap())))
}

fn ask(a: i64, b: i64, index: usize) -> Message {
    Message::pair(Message::routed(Message::Int(a), index), Message::routed(Message::Int(b), index))
}

fn alphabet() -> Vec<Message> {
    let mut v = vec![create(0.0, 0.1), create(0.0, 0.2), create(1.0, 0.1), Message::Int(3)];
    for i in 1..=3 {
        for (a, b) in [(0, 0), (0, 1), (1, 1)] {
            v.push(ask(a, b, i));
        }
    }
    v
}

fn functions() -> Vec<VerificationFn> {
    let p = |e, d| PrivacyParams::new(e, d).unwrap();
    vec![
        VerificationFn::Suitable,
        vf_parallel_sparse(vec![p(0.0, 0.1), p(0.0, 0.2)]).unwrap(),
        vf_fixed_params(vec![p(0.0, 0.1), p(1.0, 0.1)]).unwrap(),
        vf_rr_budget(0.25).unwrap(),
        vf_fpc_wrap(VerificationFn::Suitable).unwrap(),
        vf_filter(Filter::Product { delta: 0.28 }).unwrap(),
        vf_filter(Filter::Budget { epsilon: 1.0, delta: 0.3 }).unwrap(),
        vf_sparse_by_mechanism(BTreeMap::from([("rr".to_string(), 1)])).unwrap(),
    ]
}

proptest! {
    #[test]
    fn verification_is_prefix_monotone(idx in prop::collection::vec(0usize..13, 0..8)) {
        let registry = Registry::standard();
        let letters = alphabet();
        let msgs: Vec<Message> = idx.iter().map(|&i| letters[i].clone()).collect();
        for f in functions() {
            let verdicts: Vec<bool> = (0..=msgs.len()).map(|n| f.accepts(&msgs[..n], &registry)).collect();
            for w in verdicts.windows(2) {
                prop_assert!(w[0] || !w[1], "{} accepted an extension of a rejected prefix", f.id());
            }
            prop_assert_eq!(f.accepts(&msgs, &registry), f.accepts(&msgs, &registry));
        }
    }

    #[test]
    fn verifier_with_always_is_transparent(delta in 0.0f64..=1.0, bits in prop::collection::vec((0i64..2, 0i64..2), 1..4)) {
        let registry = Arc::new(Registry::standard());
        let queries: Vec<Message> = bits.iter().map(|&(a, b)| Message::pair(Message::Int(a), Message::Int(b))).collect();
        for b in 0..2 {
            let plain = compose_post(make_identifier(b), m_delta(delta));
            let verified = compose_post(chain(make_verifier(VerificationFn::Always, registry.clone()), make_identifier(b)), m_delta(delta));
            let adv = scripted(queries.clone());
            let x = enumerate_views(adv.as_ref(), plain.as_ref(), 10).unwrap();
            let y = enumerate_views(adv.as_ref(), verified.as_ref(), 10).unwrap();
            prop_assert_eq!(x.pmf.len(), y.pmf.len());
            for (k, v) in x.pmf.iter() {
                prop_assert!((y.pmf.get(k) - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identifier_is_symmetric_on_equal_pairs(delta in 0.0f64..=1.0, bits in prop::collection::vec(0i64..2, 1..4)) {
        let queries: Vec<Message> = bits.iter().map(|&a| Message::same(Message::Int(a))).collect();
        let adv = scripted(queries);
        let v0 = enumerate_views(adv.as_ref(), compose_post(make_identifier(0), m_delta(delta)).as_ref(), 10).unwrap();
        let v1 = enumerate_views(adv.as_ref(), compose_post(make_identifier(1), m_delta(delta)).as_ref(), 10).unwrap();
        prop_assert_eq!(hockey_stick_delta(&v0.pmf, &v1.pmf, 0.0), 0.0);
    }

    #[test]
    fn hockey_stick_is_monotone_and_tv_at_zero(
        w0 in prop::collection::vec(0.0f64..1.0, 5),
        w1 in prop::collection::vec(0.0f64..1.0, 5),
        eps in prop::collection::vec(0.0f64..4.0, 4),
    ) {
        let p0 = normalized(&w0);
        let p1 = normalized(&w1);
        let mut eps = eps;
        eps.sort_by(f64::total_cmp);
        let ds: Vec<f64> = eps.iter().map(|&e| hockey_stick_delta(&p0, &p1, e)).collect();
        for w in ds.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15);
        }
        prop_assert!((hockey_stick_delta(&p0, &p1, 0.0) - tv_distance(&p0, &p1)).abs() < 1e-12);
        prop_assert_eq!(hockey_stick_delta(&p0, &p0, eps[0]), 0.0);
    }

    #[test]
    fn data_processing_inequality(
        w0 in prop::collection::vec(0.01f64..1.0, 4),
        w1 in prop::collection::vec(0.01f64..1.0, 4),
        eps in 0.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let p0 = normalized(&w0);
        let p1 = normalized(&w1);
        let before = hockey_stick_delta(&p0, &p1, eps);
        let mut rng = concomp::rng::stream_rng(seed, 0, 0);
        for _ in 0..50 {
            let k: Vec<Vec<f64>> = (0..4).map(|_| {
                let row: Vec<f64> = (0..3).map(|_| rand::RngExt::random::<f64>(&mut rng)).collect();
                let s: f64 = row.iter().sum();
                row.into_iter().map(|x| x / s).collect()
            }).collect();
            let push = |p: &DiscretePmf<usize>| {
                let mut out = DiscretePmf::new();
                for (x, px) in p.iter() {
                    for (y, kxy) in k[*x].iter().enumerate() {
                        out.add(y, px * kxy);
                    }
                }
                out
            };
            prop_assert!(hockey_stick_delta(&push(&p0), &push(&p1), eps) <= before + 1e-12);
        }
    }
}

fn normalized(w: &[f64]) -> DiscretePmf<usize> {
    let s: f64 = w.iter().sum::<f64>().max(1e-9);
    DiscretePmf::from_pairs(w.iter().enumerate().map(|(i, x)| (i, x / s)))
}

#[test]
fn distinct_pmfs_have_positive_divergence_at_every_epsilon() {
    let p0 = DiscretePmf::from_pairs([(0, 0.5), (1, 0.5)]);
    let p1 = DiscretePmf::from_pairs([(0, 0.4), (1, 0.6)]);
    for eps in [0.0, 0.1, 1.0, 10.0] {
        let d = hockey_stick_delta(&p0, &p1, eps).max(hockey_stick_delta(&p1, &p0, eps));
        assert!(d >= 0.0);
    }
    assert!(hockey_stick_delta(&p0, &p1, 0.0) > 0.0);
}

#[test]
fn same_seed_same_transcript() {
    let params = PrivacyParams::new(0.5, 0.1).unwrap();
    for seed in [0u64, 7, 123456789] {
        let run = || {
            let mut adv = scripted(vec![Message::Int(1)]);
            let mut m = rr(params);
            run_interaction(adv.as_mut(), m.as_mut(), seed, 4).unwrap()
        };
        assert_eq!(run(), run());
    }
    let cfg = HssConfig::new(1.0, 2, 16, QueryFn::Max);
    let stream: Vec<Message> = (0..16).map(|t| Message::Vector(vec![(t % 3 == 0) as i64, (t % 5 == 0) as i64])).collect();
    let run = || {
        let mut adv = scripted(stream.clone());
        let mut m: concomp::MechanismHandle = Box::new(Hss::new(cfg.clone(), NoiseSource::Seeded).unwrap());
        run_interaction(adv.as_mut(), m.as_mut(), 42, 40).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn sampling_matches_enumeration_for_m_delta() {
    let queries = vec![Message::Int(0), Message::Int(1)];
    let mech = m_delta(0.3);
    let adv = scripted(queries.clone());
    let exact = enumerate_views(adv.as_ref(), mech.as_ref(), 6).unwrap().pmf;
    let n = 20_000u64;
    let mut counts: BTreeMap<Vec<Message>, u64> = BTreeMap::new();
    for seed in 0..n {
        let mut a = scripted(queries.clone());
        let mut m = m_delta(0.3);
        let t = run_interaction(a.as_mut(), m.as_mut(), seed, 10).unwrap();
        *counts.entry(t.messages.into_iter().map(|(_, m)| m).collect()).or_default() += 1;
    }
    for (view, p) in exact.iter() {
        let f = *counts.get(view).unwrap_or(&0) as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-9);
        assert!((f - p).abs() <= 5.0 * se, "{view:?}: {f} vs {p}");
    }
    assert_eq!(counts.len(), exact.len());
}
