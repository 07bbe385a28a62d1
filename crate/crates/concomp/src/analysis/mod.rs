//! Exact and Monte-Carlo privacy analysis.

pub mod counterexample;
pub mod divergence;
pub mod enumerate;
pub mod game;
pub mod histogram;
pub mod pmf;
pub mod structural;
pub mod templates;

pub use counterexample::{a_delta, analytic_success, enumerate_exposure, exposure_probability, parallel_stack, ADelta, ExposureCheck};
pub use divergence::{hockey_stick_delta, hockey_stick_weighted, improved_basic, tv_distance};
pub use enumerate::{enumerate_pair, enumerate_views, enumerate_views_with_budget, View, ViewStats, Views};
pub use game::{run_distinguishing_game, wilson, GameReport, Z99};
pub use histogram::{histogram_report, run_hss, zero_noise_reference, HistogramReport, HistogramStep};
pub use pmf::DiscretePmf;
pub use structural::{check_hss, check_structural_properties, hss_f_prime, random_event_neighbors, StructuralReport, Witness};
pub use templates::{composition_search, fixed_stack, rr_templates, CompositionReport, TreeAdversary};
