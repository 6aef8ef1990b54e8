//! Behavioural and attitudinal loyalty analytics for customer cohorts.
//!
//! The pipeline reads transaction or pre-aggregated RFM files
//! ([`data_model`]), codes each customer 1 to 5 on recency, frequency and
//! monetary value ([`rfm_engine`]), clusters the codes into a four-tier
//! customer pyramid ([`pyramid`]), and compares cohorts with the tests in
//! [`stats`]. [`synth`] produces seeded cohorts with known answers.

pub mod data_model;
pub mod error;
pub mod pyramid;
pub mod rfm_engine;
pub mod stats;
pub mod svg;
pub mod synth;

pub use error::{Error, Result, RowError};
