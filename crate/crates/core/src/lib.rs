//! Move-to-front search-cost laws: exact finite-list distributions,
//! large-list limits (transient and stationary), Monte Carlo simulators
//! and the statistics used to cross-validate them.

pub mod analytic;
pub mod exact;
pub mod numerics;
pub mod popularity;
pub mod simulate;
pub mod stats;
