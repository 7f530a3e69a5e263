//! Synthetic referendum panels and regression-discontinuity estimators.
//!
//! [`generate_panel`] simulates municipalities whose levy growth jumps when a
//! vote passes; [`sharp_rdd_poly`], [`fuzzy_rdd`] and [`local_linear_rdd`]
//! recover the planted effects, and [`neighbor_outcomes`] supports the
//! spillover regressions.

pub mod dgp;
pub mod error;
pub mod estimate;
pub mod montecarlo;
pub mod outcome;
pub mod panel;
pub mod report;

pub use dgp::{generate_panel, DgpParams};
pub use error::{Error, Result};
pub use estimate::{
    fuzzy_rdd, ik_bandwidth, local_linear_jump, local_linear_rdd, poly3_fuzzy, poly3_jump, sharp_rdd_poly, FirstStage,
    IkConstants, RddEstimate, Spec,
};
pub use montecarlo::{replicate, replication_seed, Coverage};
pub use outcome::{binned_scatter, build_sample, neighbor_outcomes, Field, OutcomeSpec, Sample, Source, Transform};
pub use panel::{DgpTruth, MunicipalityYear, Panel};
