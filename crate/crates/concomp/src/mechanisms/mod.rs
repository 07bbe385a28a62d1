//! Concrete mechanisms.

pub mod counter;
pub mod ext_con_comp;
pub mod hss;
pub mod laplace;
pub mod m_delta;
pub mod noise;
pub mod query;
pub mod rr;
pub mod svt;

pub use counter::{BinaryCounter, DCounter};
pub use ext_con_comp::{ext_con_comp, ChildEvent, ExtConComp};
pub use hss::{GammaFn, Hss, HssConfig, HssController, XiFn};
pub use laplace::{laplace_int, LaplaceInt};
pub use m_delta::{m_delta, MDelta};
pub use noise::{round_half_up, NoiseSource};
pub use query::QueryFn;
pub use rr::{irr, irr_weighted, rr, rr_weighted, Irr, Rr};
pub use svt::Svt;
