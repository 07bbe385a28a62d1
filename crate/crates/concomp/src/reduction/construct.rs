//! The `ξ`, `φ` and `ψ` tables.
//!
//! For a fixed prefix and query, answers are visited in declared order. Each
//! answer's pair `(x0, x1)` solves a two-variable system: a box
//! `lo_b ≤ x_b ≤ hi_b` plus the coupling half-planes
//! `x_b − k·x_{1−b} ≤ D_b` with `k = e^{−ε}`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::control::ControlTables;
use super::table::{AnswerTable, Hist};

const FEAS_TOL: f64 = 1e-12;

/// `lo ≤ x ≤ hi` and `x_b − k·x_{1−b} ≤ d_b` for both `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSystem {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub d: [f64; 2],
    pub k: f64,
}

impl PairSystem {
    /// Maximizes `x_i`, then `x_j`. `None` when infeasible beyond tolerance.
    pub fn max_first(&self, i: usize) -> Option<[f64; 2]> {
        let j = 1 - i;
        let (k, d, lo, hi) = (self.k, self.d, self.lo, self.hi);
        if lo[j] > hi[j] + FEAS_TOL {
            return None;
        }
        // x_j ≥ (x_i − d_i)/k and x_j ≤ d_j + k·x_i must meet inside [lo_j, hi_j].
        let lower = lo[i].max((lo[j] - d[j]) / k);
        let upper = hi[i].min(d[i] + k * hi[j]).min((d[j] + d[i] / k) / (1.0 / k - k));
        if lower > upper + FEAS_TOL {
            return None;
        }
        let xi = upper.max(lower);
        let xj_lo = lo[j].max((xi - d[i]) / k);
        let xj = hi[j].min(d[j] + k * xi).max(xj_lo);
        let mut x = [0.0; 2];
        x[i] = xi;
        x[j] = xj;
        Some(x)
    }

    pub fn lex_max(&self) -> Option<[f64; 2]> {
        self.max_first(0)
    }

    /// Largest feasible `z` with `(z, z)` in the region.
    pub fn diagonal_max(&self) -> Option<f64> {
        let k = self.k;
        let mut z = self.hi[0].min(self.hi[1]);
        for b in 0..2 {
            z = z.min(self.d[b] / (1.0 - k));
        }
        let lo = self.lo[0].max(self.lo[1]);
        if lo > z + FEAS_TOL {
            None
        } else {
            Some(z.max(lo))
        }
    }

    /// True when no feasible point weakly dominates `(z, z)` with a strict gain.
    pub fn diagonal_is_maximal(&self, z: f64) -> bool {
        let tol = FEAS_TOL * z.abs().max(1.0);
        (0..2).all(|i| {
            let mut sub = *self;
            sub.lo[1 - i] = sub.lo[1 - i].max(z);
            sub.max_first(i).map_or(true, |x| x[i] <= z + tol)
        })
    }

    /// The diagonal point when it is maximal, otherwise the lexicographic maximum.
    pub fn select_balanced(&self) -> Option<[f64; 2]> {
        if let Some(z) = self.diagonal_max() {
            if self.diagonal_is_maximal(z) {
                return Some([z, z]);
            }
        }
        self.lex_max()
    }
}

#[derive(Clone, Debug, Default)]
pub struct PairTable {
    pub values: [BTreeMap<Hist, f64>; 2],
}

impl PairTable {
    pub fn get(&self, b: usize, h: &Hist) -> f64 {
        self.values[b].get(h).copied().unwrap_or(0.0)
    }

    fn set(&mut self, h: &Hist, x: [f64; 2]) {
        for b in 0..2 {
            self.values[b].insert(h.clone(), x[b]);
        }
    }
}

fn infeasible(what: &str, h: &Hist) -> Error {
    Error::Infeasible(format!("{what} system empty at transcript {h:?}; the table is not (ε,δ)-DP"))
}

/// Builds `ξ` and `φ` up to depth `ctl.t_max`.
pub fn compute_xi_phi(mu: &AnswerTable, ctl: &ControlTables, delta: f64) -> Result<(PairTable, PairTable)> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta {delta} outside [0, 1]")));
    }
    let k = (-ctl.epsilon).exp();
    let mut xi = PairTable::default();
    let mut phi = PairTable::default();
    phi.set(&Vec::new(), [1.0, 1.0]);
    for t in 1..=ctl.t_max {
        for h in mu.level(t - 1) {
            for q in 0..mu.queries.len() {
                let kids = mu.children(h, q);
                if delta == 0.0 {
                    // Pure case: the exposed branch is never taken.
                    for c in &kids {
                        xi.set(c, [ctl.l(0, c), ctl.l(1, c)]);
                        phi.set(c, [mu.mu(0, c), mu.mu(1, c)]);
                    }
                    continue;
                }
                let d = |c: &Hist| [0, 1].map(|b| mu.mu(b, c) - k * mu.mu(1 - b, c));
                let mut before = [0.0; 2];
                for (n, c) in kids.iter().enumerate() {
                    let after = [0, 1].map(|b| kids[n + 1..].iter().map(|x| ctl.l(b, x)).sum::<f64>());
                    let cap = ctl.l(0, c) + ctl.l(1, c);
                    let sys = PairSystem {
                        lo: [ctl.l(0, c), ctl.l(1, c)],
                        hi: [0, 1].map(|b| (delta * phi.get(b, h) - before[b] - after[b]).min(mu.mu(b, c)).min(cap).min(1.0)),
                        d: d(c),
                        k,
                    };
                    let x = sys.lex_max().ok_or_else(|| infeasible("xi", c))?;
                    xi.set(c, x);
                    before[0] += x[0];
                    before[1] += x[1];
                }
                let mut before = [0.0; 2];
                for (n, c) in kids.iter().enumerate() {
                    let after = [0, 1].map(|b| kids[n + 1..].iter().map(|x| xi.get(b, x)).sum::<f64>() / delta);
                    let sys = PairSystem {
                        lo: [xi.get(0, c) / delta, xi.get(1, c) / delta],
                        hi: [0, 1].map(|b| (phi.get(b, h) - before[b] - after[b]).min(1.0)),
                        d: d(c).map(|v| v / delta),
                        k,
                    };
                    let x = sys.select_balanced().ok_or_else(|| infeasible("phi", c))?;
                    phi.set(c, x);
                    before[0] += x[0];
                    before[1] += x[1];
                }
            }
        }
    }
    Ok((xi, phi))
}

/// `ψ_t^b = (e^ε μ^b − δ e^ε φ^b − μ^{1−b} + δ φ^{1−b}) / ((1−δ)(e^ε − 1))`, or `φ` when `δ = 1`.
pub fn compute_psi(mu: &AnswerTable, phi: &PairTable, epsilon: f64, delta: f64, t_max: usize) -> Result<PairTable> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("psi needs epsilon > 0".into()));
    }
    if delta == 1.0 {
        return Ok(phi.clone());
    }
    let w = epsilon.exp();
    let scale = 1.0 / ((1.0 - delta) * (w - 1.0));
    let mut psi = PairTable::default();
    psi.set(&Vec::new(), [1.0, 1.0]);
    for t in 1..=t_max {
        for h in mu.level(t) {
            let x = [0, 1].map(|b| {
                scale * (w * mu.mu(b, h) - delta * w * phi.get(b, h) - mu.mu(1 - b, h) + delta * phi.get(1 - b, h))
            });
            psi.set(h, x);
        }
    }
    Ok(psi)
}
