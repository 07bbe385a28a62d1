//! Verification functions, suitability, the certification registry, and the
//! verifier and identifier post-processors.

pub mod filter;
pub mod functions;
pub mod ipm;
pub mod registry;
pub mod relation;
pub mod suitability;

pub use filter::{filter_eval, le_tol, product_delta, Filter};
pub use functions::{
    vf_filter, vf_filter_rr, vf_fixed_mechs, vf_fixed_params, vf_fpc_wrap, vf_neighbor, vf_parallel_budget,
    vf_parallel_sparse, vf_rr_budget, vf_sparse_by_mechanism, VerificationFn,
};
pub use ipm::{make_identifier, make_verifier, Identifier, Verifier};
pub use registry::Registry;
pub use relation::NeighborRelation;
pub use suitability::{is_suitable, summarize, Reason, Summary, Verdict};
