//! Explainability statistics computed from model dumps.
//!
//! * [`contribution`]: per-token source/target contributions from
//!   perturbation dumps and their corpus aggregates.
//! * [`curve`]: least-squares polynomial fits of contribution against
//!   relative target position.
//! * [`density`]: cosine similarity of sentence embeddings and Gaussian
//!   kernel density estimates over them.

pub mod contribution;
pub mod curve;
pub mod density;

use std::io::BufRead;

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

pub use contribution::{
    contribution_variance, corpus_mean_csr, perturbation_sigma, relative_source_contribution, MeanStd,
    PerturbationDump, DEFAULT_LAMBDA, DEFAULT_PERTURBATIONS,
};
pub use curve::{fit_polynomial, position_curve, position_points, PositionCurve, DEFAULT_DEGREE};
pub use density::{cosine, kde, linspace, SimilarityRecord, DEFAULT_BANDWIDTH};

/// Parses JSON Lines, skipping blank lines. Errors carry the 0-based line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<jsonl>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| Error::Json { line: line_no, source })?;
        out.push(value);
    }
    Ok(out)
}
