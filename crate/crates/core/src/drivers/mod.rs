//! Driver catalog, structural-assumption audits and the sampling they use.

pub mod audit;
pub mod catalog;
pub mod qmc;

pub use audit::{
    audit, check_convexity, moment_report, render_audits, required_moment_order, validate_growth, AssumptionAudit, ConvexityMode,
    SamplingWindow, Verdict, Witness,
};
pub use catalog::{catalog_get, list_catalog, CatalogEntry, CatalogListing, Term};
