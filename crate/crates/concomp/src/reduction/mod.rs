//! Finite-horizon reduction of an `(ε, δ)`-DP interactive mechanism to
//! post-processed interactive randomized response.

pub mod construct;
pub mod control;
pub mod instances;
pub mod postprocessor;
pub mod table;

pub use construct::{compute_psi, compute_xi_phi, PairSystem, PairTable};
pub use control::{compute_l, ControlTables};
pub use instances::{
    build_tables, check_instance, constant_table_instance, m_delta_instance, random_table_instance, rr_instance, standard_instances, Instance,
    ReductionReport, ReductionTables,
};
pub use postprocessor::{build_irr_postprocessor, max_interactions, IrrPostProcessor, Tables};
pub use table::{compute_mu, AnswerTable, Hist};
