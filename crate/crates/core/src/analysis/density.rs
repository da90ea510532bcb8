use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BANDWIDTH: f64 = 0.06;

/// Sentence embeddings of a hypothesis and its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRecord {
    pub id: u64,
    pub hyp: Vec<f64>,
    #[serde(rename = "ref")]
    pub reference: Vec<f64>,
}

impl SimilarityRecord {
    pub fn cosine(&self) -> Result<f64> {
        cosine(&self.hyp, &self.reference).map_err(|e| Error::InvalidRecord {
            id: self.id,
            reason: e.to_string(),
        })
    }
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(u.len(), v.len()));
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite embedding component".into()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Gaussian kernel density estimate `f(x) = 1/(n h) * sum phi((x - s_i) / h)`
/// at each grid point.
pub fn kde(samples: &[f64], bandwidth: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    if !bandwidth.is_finite() || bandwidth <= 0.0 {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * PI).sqrt());
    Ok(grid
        .iter()
        .map(|&x| {
            let sum: f64 = samples
                .iter()
                .map(|&s| {
                    let z = (x - s) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .sum();
            norm * sum
        })
        .collect())
}

/// `points` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        _ => {
            let step = (end - start) / (points - 1) as f64;
            (0..points).map(|i| start + step * i as f64).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(cosine(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(cosine(&[1.0, -2.0], &[-1.0, 2.0]).unwrap(), -1.0, epsilon = 1e-15);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::ZeroVector)));
        assert!(matches!(cosine(&[1.0], &[1.0, 1.0]), Err(Error::DimensionMismatch(1, 2))));
    }

    #[test]
    fn single_kernel_peak() {
        let d = kde(&[0.0], 0.06, &[0.0]).unwrap();
        assert_abs_diff_eq!(d[0], 6.6490, epsilon = 1e-4);
        assert_abs_diff_eq!(d[0], 1.0 / (0.06 * (2.0 * PI).sqrt()), epsilon = 1e-9);
    }

    #[test]
    fn tails_vanish() {
        let d = kde(&[0.0], 0.06, &[-1.0, 1.0]).unwrap();
        assert!(d.iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn symmetric_pair_matches_single_sample() {
        let a = 0.13;
        let pair = kde(&[-a, a], 0.06, &[0.0]).unwrap();
        let single = kde(&[a], 0.06, &[0.0]).unwrap();
        assert_abs_diff_eq!(pair[0], single[0], epsilon = 1e-15);
    }

    #[test]
    fn kde_errors() {
        assert!(kde(&[], 0.06, &[0.0]).is_err());
        assert!(kde(&[0.0], 0.0, &[0.0]).is_err());
        assert!(kde(&[0.0], -1.0, &[0.0]).is_err());
    }

    #[test]
    fn record_json_uses_ref_key() {
        let r: SimilarityRecord = serde_json::from_str(r#"{"id":3,"hyp":[1.0,0.0],"ref":[1.0,0.0]}"#).unwrap();
        assert_eq!(r.cosine().unwrap(), 1.0);
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(-1.0, 1.0, 5);
        assert_eq!(g, [-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
