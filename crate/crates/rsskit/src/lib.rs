//! Ranked set sampling toolkit.
//!
//! Ranked set sampling (RSS) draws sets of `H` units, ranks them cheaply on
//! an auxiliary variable, and measures exactly one unit per set at a
//! prescribed rank. The result is a rank-stratified sample that beats simple
//! random sampling of the same size whenever ranking carries information.
//! Designs may be balanced (equal quota per rank) or unbalanced, either by
//! intent or because measurements went missing.
//!
//! The crate covers the full workflow: selecting samples from a finite
//! population ([`sampling`]), generating synthetic rank-stratified data
//! ([`simulate`]), deciding how many more units each rank stratum needs
//! ([`allocate`]), and running mean, median, proportion, and AUC inference
//! that respects the rank strata ([`infer`]). [`numerics`] holds the
//! self-contained special functions and the seeded generator everything
//! else builds on.

pub mod allocate;
pub mod infer;
pub mod model;
pub mod numerics;
pub mod sampling;
pub mod simulate;

pub use model::{
    Allocation, Alternative, DesignReport, Kind, Method, PopulationFrame, PopulationRow,
    RssDataset, RssRecord, TestResult,
};
