//! Hockey-stick divergence, total variation, and the improved basic composition bound.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::message::PrivacyParams;
use crate::verification::product_delta;
use crate::weight::Weight;

use super::pmf::DiscretePmf;

fn keys<'a, K: Ord + Clone, W: Weight>(p0: &'a DiscretePmf<K, W>, p1: &'a DiscretePmf<K, W>) -> BTreeSet<&'a K> {
    p0.support().chain(p1.support()).collect()
}

/// `Σ_x max(0, P(x) − w·R(x))` in the weight type.
pub fn one_sided_weighted<K: Ord + Clone, W: Weight>(p: &DiscretePmf<K, W>, r: &DiscretePmf<K, W>, w: &W) -> W {
    let mut acc = W::zero();
    for k in keys(p, r) {
        let d = p.get(k) - w.clone() * r.get(k);
        if d > W::zero() {
            acc = acc + d;
        }
    }
    acc
}

/// Smallest δ making the two distributions (ε, δ)-indistinguishable, with
/// `w = e^ε` supplied in the weight type (exact for rationals).
pub fn hockey_stick_weighted<K: Ord + Clone, W: Weight>(p0: &DiscretePmf<K, W>, p1: &DiscretePmf<K, W>, w: &W) -> W {
    let a = one_sided_weighted(p0, p1, w);
    let b = one_sided_weighted(p1, p0, w);
    if a >= b {
        a
    } else {
        b
    }
}

/// Smallest δ such that `P_b(S) ≤ e^ε P_{1−b}(S) + δ` for every event and both `b`.
pub fn hockey_stick_delta<K: Ord + Clone>(p0: &DiscretePmf<K>, p1: &DiscretePmf<K>, epsilon: f64) -> f64 {
    hockey_stick_weighted(p0, p1, &epsilon.exp())
}

pub fn tv_distance<K: Ord + Clone>(p0: &DiscretePmf<K>, p1: &DiscretePmf<K>) -> f64 {
    0.5 * keys(p0, p1).into_iter().map(|k| (p0.get(k) - p1.get(k)).abs()).sum::<f64>()
}

/// `(Σ ε_i, 1 − ∏ (1 − δ_i))`.
pub fn improved_basic(params: &[PrivacyParams]) -> Result<PrivacyParams> {
    let eps = params.iter().map(|p| p.epsilon).sum();
    let delta = product_delta(params.iter().map(|p| p.delta));
    PrivacyParams::new(eps, delta.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pmf(xs: &[(u8, f64)]) -> DiscretePmf<u8> {
        DiscretePmf::from_pairs(xs.iter().copied())
    }

    #[test]
    fn identical_is_zero() {
        let p = pmf(&[(0, 0.3), (1, 0.7)]);
        for eps in [0.0, 0.5, 2.0] {
            assert_eq!(hockey_stick_delta(&p, &p, eps), 0.0);
        }
    }

    #[test]
    fn disjoint_supports_have_tv_one() {
        let p = pmf(&[(0, 1.0)]);
        let q = pmf(&[(1, 1.0)]);
        assert_eq!(tv_distance(&p, &q), 1.0);
        assert_eq!(hockey_stick_delta(&p, &q, 3.0), 1.0);
    }

    #[test]
    fn improved_basic_examples() {
        let p = |e, d| PrivacyParams::new(e, d).unwrap();
        let out = improved_basic(&[p(0.5, 0.1), p(0.5, 0.2)]).unwrap();
        assert!((out.epsilon - 1.0).abs() < 1e-15);
        assert!((out.delta - 0.28).abs() < 1e-15);
        let empty = improved_basic(&[]).unwrap();
        assert_eq!((empty.epsilon, empty.delta), (0.0, 0.0));
        let pure = improved_basic(&[p(0.3, 0.0), p(0.4, 0.0)]).unwrap();
        assert_eq!(pure.delta, 0.0);
    }
}
