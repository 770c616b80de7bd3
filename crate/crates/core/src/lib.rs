//! Multiresolution correlation analysis (MCA).
//!
//! The crate computes the correlation of a pair of covariates over every
//! quantile window of a third, sorting variable, and summarises the result as
//! a triangular grid of cells indexed by window center `alpha` and half-width
//! `beta`. Around that engine it provides:
//!
//! - [`data`]: the observation matrix, CSV ingestion, housekeeping
//!   normalization and rule-based compartments.
//! - [`correlation`]: Pearson and Spearman estimators with a t-test p-value.
//! - [`engine`]: window resolution and grid construction.
//! - [`grid_io`]: CSV and JSON records for exported grids.
//! - [`sde`]: Euler-Maruyama simulation of three-species activation and
//!   inhibition motifs, used as synthetic benchmark data.
//! - [`render`]: deterministic SVG output for MCA plots and scatter plots.

pub mod correlation;
pub mod data;
pub mod engine;
pub mod grid_io;
pub mod numfmt;
pub mod render;
pub mod sde;

pub use correlation::{CorrelationError, CorrelationResult, Method};
pub use data::{CompartmentRule, CsvOptions, DataError, DataMatrix, RuleKind};
pub use engine::{ActiveSet, EngineError, GridConfig, McaCell, McaGrid, SubpopulationWindow};
pub use sde::{ModelSpec, Motif, RepressionForm, SamplingPlan, SimError};
