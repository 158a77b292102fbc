//! Urban outdoor perception mining from geolocated social media text.
//!
//! The pipeline learns a dictionary of perception categories from review
//! text, uses it to label geolocated posts, clusters those posts per month
//! and compares the resulting perception strengths across neighborhoods.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod corpus_io;
pub mod dictionary;
pub mod embeddings;
pub mod error;
pub mod extract;
pub mod geo;
pub mod hdbscan;
pub mod preprocess;
pub mod sentiment;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{Error, Result};
