use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PERTURBATIONS: usize = 50;
pub const DEFAULT_LAMBDA: f64 = 0.01;

/// Population variance `(1/N) * sum (p_n - mean)^2`, computed in one
/// streaming pass.
pub fn contribution_variance(probs: &[f64]) -> Result<f64> {
    if probs.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: probs.len(),
        });
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        let delta = p - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (p - mean);
    }
    Ok((m2 / probs.len() as f64).max(0.0))
}

/// `c_s / (c_s + c_t)`, or `None` when both contributions are zero.
pub fn relative_source_contribution(c_s: f64, c_t: f64) -> Result<Option<f64>> {
    for c in [c_s, c_t] {
        if c < 0.0 || c.is_nan() {
            return Err(Error::NegativeContribution(c));
        }
    }
    let total = c_s + c_t;
    Ok((total > 0.0).then(|| c_s / total))
}

/// Noise scale for one embedding: `lambda * norm`.
pub fn perturbation_sigma(embedding_norm: f64, lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if embedding_norm < 0.0 || embedding_norm.is_nan() {
        return Err(Error::InvalidArgument(format!("negative embedding norm {embedding_norm}")));
    }
    Ok(lambda * embedding_norm)
}

/// Teacher-forced token probabilities under `N` source and `N` target-prefix
/// perturbations. Row `j` of each matrix belongs to token `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationDump {
    pub id: u64,
    pub tokens: Vec<String>,
    pub p_src: Vec<Vec<f64>>,
    pub p_tgt: Vec<Vec<f64>>,
}

impl PerturbationDump {
    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidDump {
            id: self.id,
            reason: reason.into(),
        }
    }

    /// Checks shapes and probability ranges; returns `N`.
    pub fn validate(&self) -> Result<usize> {
        let m = self.tokens.len();
        if self.p_src.len() != m || self.p_tgt.len() != m {
            return Err(self.invalid(format!(
                "{m} tokens but {} p_src rows and {} p_tgt rows",
                self.p_src.len(),
                self.p_tgt.len()
            )));
        }
        let n = self.p_src.first().map_or(0, Vec::len);
        for (j, (s, t)) in self.p_src.iter().zip(&self.p_tgt).enumerate() {
            if s.len() != n || t.len() != n {
                return Err(self.invalid(format!("row {j} width differs from N={n}")));
            }
            if let Some(p) = s.iter().chain(t).find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(self.invalid(format!("probability {p} outside [0, 1] at token {j}")));
            }
        }
        if m > 0 && n < 2 {
            return Err(self.invalid(format!("need at least 2 perturbations, got {n}")));
        }
        Ok(n)
    }

    /// Relative source contribution per token; `None` marks skipped tokens.
    pub fn csr(&self) -> Result<Vec<Option<f64>>> {
        self.validate()?;
        self.p_src
            .iter()
            .zip(&self.p_tgt)
            .map(|(s, t)| relative_source_contribution(contribution_variance(s)?, contribution_variance(t)?))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    /// Percent.
    pub mean: f64,
    /// Population standard deviation, percent.
    pub std: f64,
    pub tokens: usize,
    pub skipped: usize,
}

/// Mean and standard deviation of the relative source contribution over all
/// scorable tokens, in percent.
pub fn corpus_mean_csr(dumps: &[PerturbationDump]) -> Result<MeanStd> {
    let mut values = Vec::new();
    let mut skipped = 0;
    for dump in dumps {
        for v in dump.csr()? {
            match v {
                Some(v) => values.push(v),
                None => skipped += 1,
            }
        }
    }
    if values.is_empty() {
        return Err(Error::NoTokens);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(MeanStd {
        mean: 100.0 * mean,
        std: 100.0 * var.sqrt(),
        tokens: values.len(),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn variance_examples() {
        assert_abs_diff_eq!(contribution_variance(&[0.4, 0.6]).unwrap(), 0.01, epsilon = 1e-15);
        assert_eq!(contribution_variance(&[0.3; 7]).unwrap(), 0.0);
        assert_abs_diff_eq!(contribution_variance(&[0.0, 1.0]).unwrap(), 0.25, epsilon = 1e-15);
        assert!(matches!(contribution_variance(&[0.5]), Err(Error::TooFewValues { .. })));
    }

    #[test]
    fn csr_examples() {
        assert_abs_diff_eq!(relative_source_contribution(0.01, 0.03).unwrap().unwrap(), 0.25, epsilon = 1e-15);
        assert_eq!(relative_source_contribution(0.2, 0.0).unwrap(), Some(1.0));
        assert_eq!(relative_source_contribution(0.0, 0.0).unwrap(), None);
        assert!(relative_source_contribution(-0.1, 0.2).is_err());
    }

    #[test]
    fn sigma_examples() {
        assert_abs_diff_eq!(perturbation_sigma(10.0, 0.01).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(perturbation_sigma(0.0, 0.01).unwrap(), 0.0);
        assert_eq!(perturbation_sigma(1.0, 0.5).unwrap(), 0.5);
        assert!(perturbation_sigma(-1.0, 0.01).is_err());
        assert!(perturbation_sigma(1.0, 0.0).is_err());
    }

    fn dump_with(rows: &[(&[f64], &[f64])]) -> PerturbationDump {
        PerturbationDump {
            id: 0,
            tokens: (0..rows.len()).map(|i| format!("t{i}")).collect(),
            p_src: rows.iter().map(|r| r.0.to_vec()).collect(),
            p_tgt: rows.iter().map(|r| r.1.to_vec()).collect(),
        }
    }

    #[test]
    fn corpus_mean_examples() {
        // var([x - d, x + d]) = d^2: token 0 has equal variances (C_SR 0.5),
        // token 1 has 0.007 vs 0.003 (C_SR 0.7).
        let (ds, dt) = (0.007f64.sqrt(), 0.003f64.sqrt());
        let d = dump_with(&[
            (&[0.4, 0.6], &[0.4, 0.6]),
            (&[0.5 - ds, 0.5 + ds], &[0.5 - dt, 0.5 + dt]),
        ]);
        let stats = corpus_mean_csr(&[d]).unwrap();
        assert_abs_diff_eq!(stats.mean, 60.0, epsilon = 1e-9);
        assert_abs_diff_eq!(stats.std, 10.0, epsilon = 1e-9);

        let ones = dump_with(&[(&[0.1, 0.9], &[0.5, 0.5]), (&[0.2, 0.3], &[0.7, 0.7])]);
        let stats = corpus_mean_csr(&[ones]).unwrap();
        assert_eq!((stats.mean, stats.std), (100.0, 0.0));

        let skipped = dump_with(&[(&[0.5, 0.5], &[0.5, 0.5])]);
        assert!(matches!(corpus_mean_csr(&[skipped]), Err(Error::NoTokens)));
    }

    #[test]
    fn dump_validation() {
        let mut d = dump_with(&[(&[0.4, 0.6], &[0.4, 0.6])]);
        assert_eq!(d.validate().unwrap(), 2);
        d.p_src[0][0] = 1.2;
        assert!(d.validate().is_err());
        let narrow = dump_with(&[(&[0.4], &[0.4])]);
        assert!(narrow.validate().is_err());
        let mut ragged = dump_with(&[(&[0.4, 0.6], &[0.4, 0.6])]);
        ragged.p_tgt[0].push(0.1);
        assert!(ragged.validate().is_err());
    }
}
