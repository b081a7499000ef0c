//! Pseudo-relevance-feedback query expansion over equi-frequency partitions
//! of the top-ranked documents.
//!
//! The modules follow the flow of an experiment: [`text`] and [`corpus`] turn
//! raw TREC files into token streams, [`index`] ranks documents, [`partition`]
//! and [`scoring`] mine candidate terms from the feedback documents,
//! [`expansion`] picks a group of them, and [`evaluation`] measures the result.
//! [`pipeline`] wires everything together.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod expansion;
pub mod index;
pub mod partition;
pub mod pipeline;
pub mod scoring;
pub mod text;

pub use error::{Error, Result};
