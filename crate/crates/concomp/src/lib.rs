//! Message-passing model of continual differentially private mechanisms.
//!
//! Mechanisms are state machines that answer one message at a time. Interactive
//! post-processors (IPMs) sit between an adversary and a mechanism and can be
//! chained and composed. The crate ships the concrete mechanisms, the
//! verification functions used to restrict concurrent compositions, and exact
//! analysis tools (view enumeration, hockey-stick divergence, reduction tables).

pub mod analysis;
pub mod error;
pub mod mechanisms;
pub mod message;
pub mod protocol;
pub mod reduction;
pub mod rng;
pub mod verification;
pub mod weight;

pub use error::{Error, Result};
pub use message::{CreationQuery, Flag, Message, PrivacyParams};
pub use protocol::{
    chain, chain_all, compose_post, run_interaction, IpmHandle, Mechanism, MechanismHandle,
    Side, Transcript,
};
pub use weight::Weight;
