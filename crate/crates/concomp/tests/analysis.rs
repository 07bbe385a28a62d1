use concomp::analysis::*;
use concomp::mechanisms::{m_delta, rr};
use concomp::protocol::{run_interaction, scripted, Deterministic};
use concomp::verification::make_identifier;
use concomp::{compose_post, Message, PrivacyParams};

fn rr_pair(eps: f64, delta: f64) -> [DiscretePmf<View>; 2] {
    let p = PrivacyParams::new(eps, delta).unwrap();
    let adv = scripted(vec![Message::pair(Message::Int(0), Message::Int(1))]);
    [0, 1].map(|b| enumerate_views(adv.as_ref(), compose_post(make_identifier(b), rr(p)).as_ref(), 4).unwrap().pmf)
}

#[test]
fn fixed_guess_wins_half_the_time() {
    let adv = scripted(vec![Message::Guess(0)]);
    let g = run_distinguishing_game(&adv, |_| m_delta(0.5), 4000, 3, 4).unwrap();
    assert!(g.ci.0 <= 0.5 && 0.5 <= g.ci.1, "{:?}", g.ci);
}

#[test]
fn certain_exposure_always_wins() {
    let adv = a_delta(1.0, 3).unwrap();
    let g = run_distinguishing_game(&adv, |b| parallel_stack(1.0, b).unwrap(), 500, 9, 20).unwrap();
    assert_eq!(g.success_rate, 1.0);
    assert_eq!(g.ci.1, 1.0);
}

#[test]
fn a_delta_exposure_rate_at_half() {
    let adv = a_delta(0.5, 3).unwrap();
    let g = run_distinguishing_game(&adv, |b| parallel_stack(0.5, b).unwrap(), 10_000, 4, 20).unwrap();
    // Exposure 0.875 reveals b; otherwise the fixed guess is right half the time.
    let exposed_and_right = g.outcomes.iter().filter(|(b, t)| t.guess() == Some(*b) && t.answers().any(|a| *a == Message::Bottom)).count();
    let exposed = g.outcomes.iter().filter(|(_, t)| t.answers().any(|a| *a == Message::Bottom)).count();
    assert_eq!(exposed_and_right, exposed);
    let (lo, hi) = wilson(exposed as u64, g.trials, Z99);
    assert!(lo <= 0.875 && 0.875 <= hi, "({lo}, {hi})");
}

#[test]
fn mean_creations_is_one_over_delta() {
    let delta = 0.25;
    let n = 4000u64;
    let mut total = 0usize;
    for seed in 0..n {
        let mut adv = Deterministic(ADelta::new(delta, 10_000));
        let mut stack = parallel_stack(delta, (seed % 2) as u8).unwrap();
        run_interaction(&mut adv, stack.as_mut(), seed, 100_000).unwrap();
        total += adv.0.created();
    }
    let mean = total as f64 / n as f64;
    let se = (1.0 - delta).sqrt() / delta / (n as f64).sqrt();
    assert!((mean - 1.0 / delta).abs() <= 5.0 * se, "mean {mean}");
}

#[test]
fn rr_views_divergence_examples() {
    let [v0, v1] = rr_pair(3f64.ln(), 0.1);
    assert!((hockey_stick_delta(&v0, &v1, 3f64.ln()) - 0.1).abs() < 1e-12);
    let [z0, z1] = rr_pair(0.0, 0.3);
    assert!((tv_distance(&z0, &z1) - 0.3).abs() < 1e-12);
    let p0 = DiscretePmf::product(&vec![rr_pair(0.0, 0.2)[0].clone(); 3]);
    let p1 = DiscretePmf::product(&vec![rr_pair(0.0, 0.2)[1].clone(); 3]);
    assert!((hockey_stick_delta(&p0, &p1, 0.0) - 0.488).abs() < 1e-12);
}
