//! Privacy filters over adaptively chosen parameter sequences.

use serde::{Deserialize, Serialize};

use crate::message::PrivacyParams;

/// `a ≤ b` up to a few ulps, so a sum or product that lands exactly on the
/// budget is not rejected by rounding.
pub fn le_tol(a: f64, b: f64) -> bool {
    a <= b + 4.0 * f64::EPSILON * b.abs().max(1.0)
}

/// `1 − ∏(1 − δ_i)`.
pub fn product_delta(deltas: impl IntoIterator<Item = f64>) -> f64 {
    1.0 - deltas.into_iter().map(|d| 1.0 - d).product::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Filter {
    /// `Σε ≤ ε*` and `Σδ ≤ δ*`.
    Budget { epsilon: f64, delta: f64 },
    /// `1 − ∏(1−δ) ≤ δ*`; `ε` unconstrained.
    Product { delta: f64 },
}

impl Filter {
    pub fn id(&self) -> &'static str {
        match self {
            Filter::Budget { .. } => "budget",
            Filter::Product { .. } => "product",
        }
    }

    pub fn evaluate(&self, sigma: &[PrivacyParams]) -> bool {
        match self {
            Filter::Budget { epsilon, delta } => {
                le_tol(sigma.iter().map(|p| p.epsilon).sum(), *epsilon)
                    && le_tol(sigma.iter().map(|p| p.delta).sum(), *delta)
            }
            Filter::Product { delta } => le_tol(product_delta(sigma.iter().map(|p| p.delta)), *delta),
        }
    }
}

pub fn filter_eval(filter: &Filter, sigma: &[PrivacyParams]) -> bool {
    filter.evaluate(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(e: f64, d: f64) -> PrivacyParams {
        PrivacyParams::new(e, d).unwrap()
    }

    #[test]
    fn empty_sequence_passes() {
        assert!(Filter::Budget { epsilon: 0.0, delta: 0.0 }.evaluate(&[]));
        assert!(Filter::Product { delta: 0.0 }.evaluate(&[]));
    }

    #[test]
    fn budget_catches_epsilon_overrun() {
        let f = Filter::Budget { epsilon: 1.0, delta: 0.1 };
        assert!(!f.evaluate(&[p(0.6, 0.05), p(0.5, 0.0)]));
        assert!(f.evaluate(&[p(0.5, 0.05), p(0.5, 0.05)]));
    }

    #[test]
    fn product_accepts_exact_boundary() {
        let f = Filter::Product { delta: 0.28 };
        assert!(f.evaluate(&[p(0.0, 0.1), p(0.0, 0.2)]));
        assert!(!Filter::Product { delta: 0.279_999 }.evaluate(&[p(0.0, 0.1), p(0.0, 0.2)]));
    }
}
