//! Finite probability mass functions keyed by ordered outcomes.

use std::collections::BTreeMap;

use crate::weight::Weight;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePmf<K: Ord, W = f64> {
    mass: BTreeMap<K, W>,
}

impl<K: Ord, W: Weight> Default for DiscretePmf<K, W> {
    fn default() -> Self {
        DiscretePmf { mass: BTreeMap::new() }
    }
}

impl<K: Ord + Clone, W: Weight> DiscretePmf<K, W> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn point(k: K) -> Self {
        let mut p = Self::new();
        p.add(k, W::one());
        p
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (K, W)>) -> Self {
        let mut p = Self::new();
        for (k, w) in pairs {
            p.add(k, w);
        }
        p
    }

    /// Adds mass to an outcome; zero masses are not stored.
    pub fn add(&mut self, k: K, w: W) {
        if w.is_zero() {
            return;
        }
        match self.mass.get_mut(&k) {
            Some(m) => *m = m.clone() + w,
            None => {
                self.mass.insert(k, w);
            }
        }
    }

    pub fn get(&self, k: &K) -> W {
        self.mass.get(k).cloned().unwrap_or_else(W::zero)
    }

    pub fn total(&self) -> W {
        self.mass.values().fold(W::zero(), |acc, w| acc + w.clone())
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.mass.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &W)> {
        self.mass.iter()
    }

    /// Total mass of the outcomes satisfying `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(&K) -> bool) -> W {
        self.mass.iter().filter(|(k, _)| pred(k)).fold(W::zero(), |acc, (_, w)| acc + w.clone())
    }

    /// Push-forward through `f`.
    pub fn map<K2: Ord + Clone>(&self, mut f: impl FnMut(&K) -> K2) -> DiscretePmf<K2, W> {
        DiscretePmf::from_pairs(self.mass.iter().map(|(k, w)| (f(k), w.clone())))
    }

    pub fn to_f64(&self) -> DiscretePmf<K, f64> {
        DiscretePmf { mass: self.mass.iter().map(|(k, w)| (k.clone(), w.to_f64())).collect() }
    }

    /// True when every mass is non-negative and the total is within `tol` of one.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.mass.values().all(|w| w.to_f64() >= 0.0) && (self.total().to_f64() - 1.0).abs() <= tol
    }

    /// Joint distribution of independent draws, keyed by the vector of outcomes.
    pub fn product(parts: &[DiscretePmf<K, W>]) -> DiscretePmf<Vec<K>, W> {
        let mut acc: DiscretePmf<Vec<K>, W> = DiscretePmf::point(Vec::new());
        for part in parts {
            let mut next: DiscretePmf<Vec<K>, W> = DiscretePmf::new();
            for (prefix, w) in acc.iter() {
                for (k, v) in part.iter() {
                    let mut key = prefix.clone();
                    key.push(k.clone());
                    next.add(key, w.clone() * v.clone());
                }
            }
            acc = next;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_accumulates_and_drops_zero() {
        let mut p: DiscretePmf<u8> = DiscretePmf::new();
        p.add(1, 0.25);
        p.add(1, 0.25);
        p.add(2, 0.0);
        p.add(3, 0.5);
        assert_eq!(p.len(), 2);
        assert_eq!(p.get(&1), 0.5);
        assert_eq!(p.get(&2), 0.0);
        assert!(p.is_normalized(1e-12));
    }

    #[test]
    fn product_multiplies() {
        let coin: DiscretePmf<u8> = DiscretePmf::from_pairs([(0, 0.25), (1, 0.75)]);
        let pp = DiscretePmf::product(&[coin.clone(), coin]);
        assert_eq!(pp.len(), 4);
        assert_eq!(pp.get(&vec![1, 1]), 0.5625);
        assert!(pp.is_normalized(1e-12));
    }
}
