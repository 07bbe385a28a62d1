//! Control functions `Lower_{t,T}` and `L_{t,T}` by backward recursion.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::table::{AnswerTable, Hist};

#[derive(Clone, Debug)]
pub struct ControlTables {
    pub t_max: usize,
    pub epsilon: f64,
    /// `Lower_{t,T}^b(h, q)` keyed by the reachable prefix `h` and query `q`.
    pub lower: [BTreeMap<(Hist, usize), f64>; 2],
    /// `L_{t,T}^b(h)` for reachable `h`, including the empty transcript.
    pub l: [BTreeMap<Hist, f64>; 2],
}

impl ControlTables {
    pub fn l(&self, b: usize, h: &Hist) -> f64 {
        self.l[b].get(h).copied().unwrap_or(0.0)
    }

    pub fn lower(&self, b: usize, h: &Hist, q: usize) -> f64 {
        self.lower[b].get(&(h.clone(), q)).copied().unwrap_or(0.0)
    }
}

/// `L_{T,T}^b = max(0, μ^b − e^ε μ^{1−b})`, and for `t < T`
/// `Lower_{t+1,T}(h, q) = Σ_a L_{t+1,T}(h, q, a)`, `L_{t,T}(h) = max_q Lower_{t+1,T}(h, q)`.
pub fn compute_l(mu: &AnswerTable, epsilon: f64, t_max: usize) -> Result<ControlTables> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("control functions need epsilon > 0".into()));
    }
    if t_max == 0 || t_max > mu.depth() {
        return Err(Error::InvalidParameter(format!("T = {t_max} outside 1..={}", mu.depth())));
    }
    let w = epsilon.exp();
    let mut out = ControlTables { t_max, epsilon, lower: [BTreeMap::new(), BTreeMap::new()], l: [BTreeMap::new(), BTreeMap::new()] };
    for h in mu.level(t_max) {
        for b in 0..2 {
            let v = (mu.mu(b, h) - w * mu.mu(1 - b, h)).max(0.0);
            out.l[b].insert(h.clone(), v);
        }
    }
    for t in (0..t_max).rev() {
        for h in mu.level(t) {
            for b in 0..2 {
                let mut best: f64 = 0.0;
                for q in 0..mu.queries.len() {
                    let s: f64 = mu.children(h, q).iter().map(|c| out.l(b, c)).sum();
                    out.lower[b].insert((h.clone(), q), s);
                    best = best.max(s);
                }
                out.l[b].insert(h.clone(), best);
            }
        }
    }
    Ok(out)
}
