//! Registered monotone histogram queries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryFn {
    Sum,
    Max,
    Coordinate(usize),
}

impl QueryFn {
    pub fn eval(&self, h: &[i64]) -> i64 {
        match self {
            QueryFn::Sum => h.iter().sum(),
            QueryFn::Max => h.iter().copied().max().unwrap_or(0),
            QueryFn::Coordinate(i) => h.get(*i).copied().unwrap_or(0),
        }
    }

    /// Changing one input step moves `h` by at most 1 per coordinate, so only
    /// queries that are 1-Lipschitz in `ℓ∞` qualify. `Sum` does only for `d = 1`.
    pub fn is_one_sensitive(&self, d: usize) -> bool {
        match self {
            QueryFn::Sum => d == 1,
            QueryFn::Max => true,
            QueryFn::Coordinate(i) => *i < d,
        }
    }
}

impl fmt::Display for QueryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryFn::Sum => write!(f, "sum"),
            QueryFn::Max => write!(f, "max"),
            QueryFn::Coordinate(i) => write!(f, "coord{i}"),
        }
    }
}

impl FromStr for QueryFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(QueryFn::Sum),
            "max" => Ok(QueryFn::Max),
            _ => s
                .strip_prefix("coord")
                .and_then(|i| i.parse().ok())
                .map(QueryFn::Coordinate)
                .ok_or_else(|| Error::UnknownId(s.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for q in [QueryFn::Sum, QueryFn::Max, QueryFn::Coordinate(3)] {
            assert_eq!(q.to_string().parse::<QueryFn>().unwrap(), q);
        }
        assert!("median".parse::<QueryFn>().is_err());
    }

    #[test]
    fn sensitivity_depends_on_dimension() {
        assert!(QueryFn::Sum.is_one_sensitive(1));
        assert!(!QueryFn::Sum.is_one_sensitive(2));
        assert!(QueryFn::Max.is_one_sensitive(4));
        assert!(!QueryFn::Coordinate(4).is_one_sensitive(4));
    }
}
