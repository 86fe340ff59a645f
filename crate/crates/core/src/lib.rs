//! Core of a single-blind human evaluation system for domain-specific
//! language models: capability taxonomy, QA bank, evaluation campaigns,
//! grade ledger, statistics and quality control.
//!
//! Statistics are generic over [`Scalar`]; use the aliases below for the
//! common instantiations.

pub mod analytics;
pub mod campaign;
pub mod fixtures;
pub mod grading;
pub mod ids;
pub mod qa_bank;
pub mod quality;
pub mod scalar;
pub mod store;
pub mod synth;
pub mod taxonomy;

pub use scalar::{format_fixed, Scalar};

/// Arbitrary-precision rational used wherever published values are compared.
pub type Exact = num_rational::BigRational;

pub type ExactReport = analytics::Report<Exact>;
pub type FloatReport = analytics::Report<f64>;
pub type ExactDisputeReport = quality::DisputeReport<Exact>;
pub type FloatDisputeReport = quality::DisputeReport<f64>;
pub type ExactFluctuation = quality::FluctuationBreakdown<Exact>;
pub type FloatFluctuation = quality::FluctuationBreakdown<f64>;
